"""Conjugate posterior update for neutral-to-the-right priors.

Given a prior with Levy density ``f_s(x)``, the posterior cumulative hazard is
again a subordinator: a stochastically continuous part with density
``(1 - x)**Y(s) f_s(x)`` plus independent fixed jumps at each distinct event
time ``t_i`` whose size has density proportional to

    x**dN(t_i) (1 - x)**(Y(t_i) - dN(t_i)) f_{t_i}(x).

Moments of the fixed jumps are expressed through

    C_k(t) = int_0^1 x**k (1 - x)**y_plus g_t(x) dx,

which has a Beta-function closed form for the beta-type and alpha families.
"""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ._numerics import betaln, integrate, log_spaced_points
from .data import RiskSummary
from .exceptions import NumericalError, QuadratureError
from .priors import AlphaFamily, BetaProcess, PriorSpec

MAX_MOMENT = 4


@dataclass(frozen=True)
class BetaExact:
    """The jump size is ``Beta(shape1, shape2)``."""

    shape1: float
    shape2: float


@dataclass(frozen=True)
class BetaMixture:
    """The jump size is a finite mixture of Beta laws."""

    weights: Tuple[float, ...]
    shapes: Tuple[Tuple[float, float], ...]


@dataclass(frozen=True)
class Generic:
    """No closed form; moments and draws come from quadrature."""


GENERIC = Generic()


def _closed_log_ck(prior, t, y_plus, k):
    """Log of ``C_k`` in closed form, or ``None`` when the family has none."""
    y = np.asarray(y_plus, dtype=float)
    k = np.asarray(k, dtype=float)
    if isinstance(prior, AlphaFamily):
        a = prior.alpha
        return np.log(prior.weight) + np.logaddexp(betaln(k + 1.0, y + 1.0),
                                                   betaln(k + a + 1.0, y + 1.0))
    if isinstance(prior, BetaProcess):
        c = prior.concentration(t)
        return np.log(c) + betaln(k + 1.0, y + c)
    return None


def _quadrature_ck(prior, t, y_plus, ks):
    ks = np.asarray(ks, dtype=float).reshape(-1)
    y = float(y_plus)
    scale = 1.0 / (y + 1.0)
    # the mass of (1 - x)**y sits in an O(1/(y + 1)) neighbourhood of zero;
    # break there and at 50/(y + 1), beyond which only a tail remains
    points = log_spaced_points(scale) + [0.5, 1 - 1e-6]

    def integrand(x):
        base = np.exp(y * np.log1p(-x)) * prior.g(t, x)
        return x[None, :] ** ks[:, None] * base[None, :]

    try:
        val, _ = integrate(integrand, 0.0, 1.0, points=points, epsabs=0.0, epsrel=1e-12)
    except QuadratureError as exc:
        raise QuadratureError(f"C_k quadrature failed at t={t:g}, y_plus={y_plus}, "
                              f"k={ks.tolist()}: {exc}") from None
    return np.asarray(val)


def jump_moment_Ck(spec, t, y_plus, k, method="auto"):
    """``C_k(t) = int_0^1 x**k (1 - x)**y_plus g_t(x) dx``.

    Parameters
    ----------
    spec : PriorSpec
    t : float
        Time at which ``g_t`` is evaluated.
    y_plus : int
        Exponent of ``(1 - x)``; the risk set minus the deaths at ``t``.
    k : int or sequence of int
    method : {'auto', 'closed', 'quadrature'}
        ``auto`` uses the Beta-function closed form when the family has one.
    """
    if np.any(np.asarray(k) < 0) or y_plus < 0:
        raise ValueError("k and y_plus must be nonnegative")
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method != "quadrature":
        log_ck = _closed_log_ck(spec, t, y_plus, k)
        if log_ck is not None:
            out = np.exp(log_ck)
            return float(out) if np.ndim(out) == 0 else out
        if method == "closed":
            raise ValueError(f"{type(spec).__name__} has no closed form for C_k")
    out = _quadrature_ck(spec, t, y_plus, k)
    return float(out[0]) if np.ndim(k) == 0 else out


@dataclass(frozen=True, eq=False)
class JumpLaw:
    """Posterior law of the jump of ``A`` at an observed event time.

    ``moments[k]`` holds ``E[(dA)^k | data]`` for ``k = 0..4``; it is filled at
    construction and never changed afterwards.
    """

    location: float
    delta_n: int
    y_plus: int
    prior: PriorSpec = field(repr=False)
    closed_form: object
    moments: np.ndarray = field(repr=False)

    @property
    def y(self):
        return self.y_plus + self.delta_n

    def density(self, x):
        """Unnormalized density ``x**dN (1 - x)**(Y - dN) f_t(x)``."""
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return (x ** (self.delta_n - 1) * np.exp(self.y_plus * np.log1p(-x))
                    * self.prior.g_scaled(self.location, x))

    @property
    def mean(self):
        return float(self.moments[1])

    @property
    def variance(self):
        return float(self.moments[2] - self.moments[1] ** 2)


def _beta_raw_moments(a, b, kmax=MAX_MOMENT):
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    ks = np.arange(kmax + 1)
    return np.exp(betaln(a + ks, b) - betaln(a, b))


def _law_moments_generic(prior, t, d, y_plus):
    ks = np.arange(d - 1, d + MAX_MOMENT)
    ck = _quadrature_ck(prior, t, y_plus, ks)
    if not ck[0] > 0:
        raise NumericalError(f"jump law at t={t:g} is not normalizable")
    return ck / ck[0]


def jump_raw_moment(law, k):
    """``E[(dA(t_i))^k | data]``; equals ``C_k / C_0`` when there are no ties."""
    if not 0 <= k <= MAX_MOMENT:
        if k < 0:
            raise ValueError("k must be nonnegative")
        d = law.delta_n
        ck = _quadrature_ck(law.prior, law.location, law.y_plus, [d - 1, k + d - 1])
        return float(ck[1] / ck[0])
    return float(law.moments[k])


@dataclass(frozen=True, eq=False)
class PosteriorLaw:
    """Posterior of the cumulative hazard: fixed jumps plus a continuous part.

    The continuous part has Levy density ``(1 - x)**Y(s) f_s(x)``; use
    :meth:`continuous_density` to evaluate it.
    """

    prior: PriorSpec
    risk: RiskSummary
    fixed_jumps: Tuple[JumpLaw, ...]
    jump_mean: np.ndarray = field(repr=False)
    jump_var: np.ndarray = field(repr=False)
    # vectorized sampling description: kind 0 = beta / beta mixture, 1 = generic
    _kind: np.ndarray = field(repr=False)
    _mix: np.ndarray = field(repr=False)

    @property
    def event_times(self):
        return self.risk.event_times

    def continuous_density(self, s, x):
        y = self.risk.at_risk(s)
        x = np.asarray(x, dtype=float)
        return np.exp(y * np.log1p(-x)) * self.prior.levy_density(s, x)


def posterior_update(prior, risk=None):
    """Update ``prior`` with the counting-process summary ``risk``.

    With ``risk=None`` (or an empty summary) the result is the prior itself
    expressed as a posterior with no fixed jumps.
    """
    if risk is None:
        risk = RiskSummary.empty()
    q = risk.q
    t = np.asarray(risk.event_times, dtype=float)
    d = np.asarray(risk.delta_n, dtype=int)
    yp = np.asarray(risk.y_plus, dtype=int)
    # mixture table: columns w1, a1, b1, a2, b2 (w1 = 1 for a single Beta)
    mix = np.zeros((q, 5))
    kind = np.zeros(q, dtype=int)
    if isinstance(prior, AlphaFamily) and q:
        a = prior.alpha
        b = yp + 1.0
        l1 = betaln(d, b)
        l2 = betaln(d + a, b)
        w1 = 1.0 / (1.0 + np.exp(l2 - l1))
        mix[:] = np.column_stack([w1, d, b, d + a, b])
        moments = (w1[:, None] * _beta_raw_moments(d, b)
                   + (1.0 - w1)[:, None] * _beta_raw_moments(d + a, b))
        forms = [BetaMixture((float(w), float(1 - w)), ((float(di), float(bi)), (float(di + a), float(bi))))
                 for w, di, bi in zip(w1, d, b)]
    elif isinstance(prior, BetaProcess) and q:
        c = np.broadcast_to(prior.concentration(t), t.shape)
        b = yp + c
        mix[:] = np.column_stack([np.ones(q), d, b, d, b])
        moments = _beta_raw_moments(d, b)
        forms = [BetaExact(float(di), float(bi)) for di, bi in zip(d, b)]
    else:
        kind[:] = 1
        moments = np.array([_law_moments_generic(prior, ti, di, yi)
                            for ti, di, yi in zip(t, d, yp)]).reshape(q, MAX_MOMENT + 1)
        forms = [GENERIC] * q
    laws = []
    for i in range(q):
        m = moments[i].copy()
        m.setflags(write=False)
        laws.append(JumpLaw(float(t[i]), int(d[i]), int(yp[i]), prior, forms[i], m))
    mean = moments[:, 1].copy()
    var = np.maximum(moments[:, 2] - moments[:, 1] ** 2, 0.0)
    return PosteriorLaw(prior, risk, tuple(laws), mean, var, kind, mix)


def posterior_fixed_moments(post, t):
    """Posterior mean and variance of ``A_d(t)``, the sum of fixed jumps up to ``t``."""
    idx = np.searchsorted(post.event_times, np.asarray(t, dtype=float), side="right")
    cm = np.concatenate([[0.0], np.cumsum(post.jump_mean)])
    cv = np.concatenate([[0.0], np.cumsum(post.jump_var)])
    mean, var = cm[idx], cv[idx]
    if np.ndim(mean) == 0:
        return float(mean), float(var)
    return mean, var


def _ck_over_y(prior, s, ys, k):
    """``C_k`` at time ``s`` for an array of integer exponents ``ys``."""
    log_ck = _closed_log_ck(prior, s, ys, k)
    if log_ck is not None:
        return np.exp(log_ck)
    return np.array([float(_quadrature_ck(prior, s, y, [k])[0]) for y in np.ravel(ys)])


def continuous_part_moments(post, t):
    """Posterior mean and variance of ``A(t) - A_d(t)``.

    ``mean = int_0^t lambda(s) C_0(s; Y(s)) ds`` and
    ``var = int_0^t lambda(s) C_1(s; Y(s)) ds``, evaluated piecewise over the
    intervals on which the risk set is constant.
    """
    t = float(t)
    if t <= 0:
        return 0.0, 0.0
    prior = post.prior
    lo, hi, ys = post.risk.risk_intervals(t)
    if prior.time_homogeneous:
        lam = float(prior.intensity(0.0))
        uniq, inv = np.unique(ys, return_inverse=True)
        width = hi - lo
        m1 = _ck_over_y(prior, 0.0, uniq, 0)[inv]
        m2 = _ck_over_y(prior, 0.0, uniq, 1)[inv]
        return float(lam * np.sum(width * m1)), float(lam * np.sum(width * m2))
    closed = _closed_log_ck(prior, 0.0, 0, 0) is not None
    mean = var = 0.0
    for a, b, y in zip(lo, hi, ys):
        if b <= a:
            continue

        def integrand(s, _y=y):
            lam = np.broadcast_to(prior.intensity(s), s.shape)
            if closed:
                c0 = _ck_over_y(prior, s, _y, 0)
                c1 = _ck_over_y(prior, s, _y, 1)
            else:
                c0 = np.array([_quadrature_ck(prior, si, _y, [0])[0] for si in s])
                c1 = np.array([_quadrature_ck(prior, si, _y, [1])[0] for si in s])
            return np.stack([lam * c0, lam * c1])

        val, _ = integrate(integrand, a, b, epsabs=1e-13, epsrel=1e-11)
        mean += float(val[0])
        var += float(val[1])
    return mean, var
