"""Scikit-learn style front end for posterior cumulative hazard estimation."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .data import Dataset, risk_summary
from .estimators import StepEstimate, aalen_nelson, product_limit_survival
from .posterior import continuous_part_moments, posterior_fixed_moments, posterior_update
from .priors import PriorSpec, parse_prior
from .sampling import SamplerConfig, credible_interval, sample_chf_paths, sample_chf_values
from .validation import check_random_state, check_survival_data


class NTRSurvival(BaseEstimator):
    """Posterior of the cumulative hazard under a neutral-to-the-right prior.

    Parameters
    ----------
    prior : str or PriorSpec, default='alpha:a=1'
        Prior family, either a spec object or a string like ``'beta:c=1'``.
    draws : int, default=1000
        Monte Carlo draws used by the sampling methods.
    epsilon : float, optional
        Smallest simulated jump of the continuous posterior part.
    include_continuous : bool, default=True
        Include the continuous part in means, variances and draws.
    random_state : int, Generator or None

    Attributes
    ----------
    posterior_ : PosteriorLaw
    risk_ : RiskSummary
    event_times_ : ndarray
    """

    def __init__(self, prior="alpha:a=1", draws=1000, epsilon=None,
                 include_continuous=True, random_state=None):
        self.prior = prior
        self.draws = draws
        self.epsilon = epsilon
        self.include_continuous = include_continuous
        self.random_state = random_state

    def _prior_spec(self):
        if isinstance(self.prior, PriorSpec):
            return self.prior
        return parse_prior(self.prior)

    def _sampler_config(self):
        return SamplerConfig(epsilon=self.epsilon, draws=self.draws,
                             include_continuous=self.include_continuous)

    def fit(self, time, event=None):
        """Update the prior with right-censored observations.

        Parameters
        ----------
        time : array-like of shape (n,)
        event : array-like of shape (n,), optional
            1 for an observed death, 0 for censoring; all deaths when omitted.

        Returns
        -------
        self
        """
        time, event = check_survival_data(time, event)
        self._sampler_config()  # fail early on bad sampler settings
        self.data_ = Dataset(time, event)
        self.risk_ = risk_summary(self.data_)
        self.posterior_ = posterior_update(self._prior_spec(), self.risk_)
        self.event_times_ = np.asarray(self.risk_.event_times)
        self._rng = check_random_state(self.random_state)
        return self

    def predict_cumulative_hazard(self, t, return_var=False):
        """Posterior mean (and optionally variance) of ``A(t)``."""
        check_is_fitted(self, "posterior_")
        t = np.atleast_1d(np.asarray(t, dtype=float))
        mean, var = posterior_fixed_moments(self.posterior_, t)
        mean, var = np.array(mean, dtype=float), np.array(var, dtype=float)
        if self.include_continuous:
            cont = np.array([continuous_part_moments(self.posterior_, s) for s in t])
            mean += cont[:, 0]
            var += cont[:, 1]
        return (mean, var) if return_var else mean

    predict = predict_cumulative_hazard

    def predict_survival(self, t):
        """Survival function obtained by product integration of the posterior mean hazard jumps."""
        check_is_fitted(self, "posterior_")
        mean = self.posterior_.jump_mean
        jumps = StepEstimate(self.event_times_, np.cumsum(mean), jumps=mean)
        return product_limit_survival(jumps)(np.asarray(t, dtype=float))

    def sample_cumulative_hazard(self, t, draws=None):
        """Posterior draws of ``A`` at times ``t``, shape ``(draws, len(t))``."""
        check_is_fitted(self, "posterior_")
        return sample_chf_values(self.posterior_, t, self._sampler_config(), self._rng,
                                 draws=self.draws if draws is None else draws)

    def sample_paths(self, tau, draws=None):
        """Whole posterior sample paths on ``[0, tau]``."""
        check_is_fitted(self, "posterior_")
        return sample_chf_paths(self.posterior_, tau, self._sampler_config(), self._rng,
                                draws=self.draws if draws is None else draws)

    def credible_interval(self, t, level=0.9, draws=None):
        """Equal-tailed credible intervals for ``A(t)``; returns ``(low, high)`` arrays."""
        values = self.sample_cumulative_hazard(np.atleast_1d(t), draws)
        bounds = np.array([credible_interval(values[:, j], level) for j in range(values.shape[1])])
        return bounds[:, 0], bounds[:, 1]


class AalenNelsonEstimator(BaseEstimator):
    """Aalen-Nelson cumulative hazard and the matching Kaplan-Meier survival."""

    def fit(self, time, event=None):
        time, event = check_survival_data(time, event)
        self.risk_ = risk_summary(Dataset(time, event))
        self.estimate_ = aalen_nelson(self.risk_)
        self.survival_ = product_limit_survival(self.estimate_)
        return self

    def predict_cumulative_hazard(self, t):
        check_is_fitted(self, "estimate_")
        return self.estimate_(np.asarray(t, dtype=float))

    predict = predict_cumulative_hazard

    def predict_survival(self, t):
        check_is_fitted(self, "survival_")
        return self.survival_(np.asarray(t, dtype=float))
