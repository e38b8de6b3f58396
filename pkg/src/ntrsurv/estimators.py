"""Frequentist reference estimators and the limiting curves they imply."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from ._numerics import integrate
from .exceptions import DataError, NumericalError

HAZARD = "hazard"
SURVIVAL = "survival"


@dataclass(frozen=True, eq=False)
class StepEstimate:
    """A right-continuous step function with optional smooth drift.

    For ``kind='hazard'`` the value at ``t`` is ``start + sum of jumps up to t``.
    For ``kind='survival'`` the stored ``values`` are the survival levels right
    after each time, and ``drift`` (if present) multiplies them by
    ``exp(-drift(t))``.
    """

    times: np.ndarray
    values: np.ndarray
    kind: str = HAZARD
    drift_knots: np.ndarray = None
    drift_values: np.ndarray = None
    jumps: np.ndarray = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.shape != values.shape:
            raise ValueError("times and values must have the same shape")
        if self.kind not in (HAZARD, SURVIVAL):
            raise ValueError(f"kind must be {HAZARD!r} or {SURVIVAL!r}")
        if times.size > 1 and np.any(np.diff(times) < 0):
            raise ValueError("times must be ascending")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def start(self):
        return 0.0 if self.kind == HAZARD else 1.0

    @property
    def increments(self):
        # stored jumps avoid the round-off of differencing a cumulative sum
        if self.jumps is not None:
            return np.asarray(self.jumps, dtype=float)
        return np.diff(np.concatenate([[self.start], self.values]))

    def _drift(self, t):
        if self.drift_knots is None or len(self.drift_knots) == 0:
            return np.zeros_like(t)
        return np.interp(t, self.drift_knots, self.drift_values, left=0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        table = np.concatenate([[self.start], self.values])
        out = table[np.searchsorted(self.times, t, side="right")]
        if self.kind == SURVIVAL:
            out = out * np.exp(-self._drift(t))
        else:
            out = out + self._drift(t)
        return float(out) if out.ndim == 0 else out


def aalen_nelson(risk):
    """Aalen-Nelson estimate ``sum over t_i <= t of dN(t_i) / Y(t_i)``."""
    if risk.n == 0:
        raise DataError("aalen_nelson needs a nonempty risk summary")
    inc = np.asarray(risk.delta_n, dtype=float) / np.asarray(risk.y, dtype=float)
    return StepEstimate(np.array(risk.event_times, dtype=float), np.cumsum(inc), HAZARD, jumps=inc)


def product_limit_survival(path):
    """Survival function ``prod (1 - dA)`` of a pure-jump hazard path.

    Accepts a :class:`StepEstimate` of kind ``'hazard'`` or a sampled
    :class:`~ntrsurv.sampling.HazardPath`. A deterministic drift ``d`` carried
    by the path contributes the factor ``exp(-d(t))``.
    """
    if isinstance(path, StepEstimate):
        if path.kind != HAZARD:
            raise ValueError("product_limit_survival expects a hazard estimate")
        times, inc = path.times, path.increments
        knots, dvals = path.drift_knots, path.drift_values
    else:
        times, inc = path.times, path.sizes
        knots, dvals = path.drift_knots, path.drift_values
    if inc.size and np.max(inc) > 1.0:
        raise DataError(f"hazard increment {np.max(inc):.6g} exceeds 1")
    if inc.size and np.min(inc) < 0.0:
        raise DataError("hazard increments must be nonnegative")
    surv = np.cumprod(1.0 - inc)
    return StepEstimate(times, surv, SURVIVAL, knots, dvals)


def _check_horizon(model, t):
    t = float(t)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if not model.at_risk_probability(t) > 0:
        raise NumericalError(f"Q({t:g}) = 0: the horizon is not reachable")
    return t


def _rate_sum(model):
    return model.survival_rate + model.censoring_rate


def u_zero(model, t, method="closed"):
    """Limiting variance ``U_0(t) = int_0^t dA_0(s) / Q(s)``.

    ``method='closed'`` uses the exponential antiderivative
    ``lam_X (exp(r t) - 1) / r`` with ``r = lam_X + lam_C``; ``'quadrature'``
    integrates the hazard against ``1/Q`` numerically.
    """
    t = _check_horizon(model, t)
    if t == 0:
        return 0.0
    if method == "closed":
        r = _rate_sum(model)
        return float(model.survival_rate * math.expm1(r * t) / r)
    if method == "quadrature":
        val, _ = integrate(lambda s: model.hazard(s) / model.at_risk_probability(s),
                           0.0, t, epsabs=0.0, epsrel=1e-12)
        return float(val)
    raise ValueError(f"unknown method {method!r}")


def j_alpha(model, alpha, t, method="closed"):
    """Asymptotic bias curve ``alpha Gamma(alpha + 1) int_0^t dA_0(s) / Q(s)**alpha``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    t = _check_horizon(model, t)
    if t == 0:
        return 0.0
    g = float(gamma_fn(alpha + 1.0))
    if method == "closed":
        r = _rate_sum(model)
        return float(g * model.survival_rate * math.expm1(r * alpha * t) / r)
    if method == "quadrature":
        val, _ = integrate(lambda s: model.hazard(s) / model.at_risk_probability(s) ** alpha,
                           0.0, t, epsabs=0.0, epsrel=1e-12)
        return float(alpha * g * val)
    raise ValueError(f"unknown method {method!r}")


def kaplan_meier(times, events):
    """Textbook Kaplan-Meier estimate at the distinct event times.

    Written independently of the counting-process machinery, as a reference.
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    grid = np.unique(times[events])
    surv = []
    s = 1.0
    for u in grid:
        at_risk = int(np.sum(times >= u))
        died = int(np.sum((times == u) & events))
        s *= 1.0 - died / at_risk
        surv.append(s)
    return grid, np.array(surv)
