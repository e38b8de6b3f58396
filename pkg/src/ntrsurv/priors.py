"""Neutral-to-the-right priors described by their Levy measure.

Every prior is stored in the normalized form

    nu(ds, dx) = x**-1 * g_s(x) * lambda(s) dx ds,   int_0^1 g_s(x) dx = 1,

so that ``lambda(s)`` is the prior mean hazard rate and ``g_s`` a probability
density on the jump sizes after weighting by ``x``.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._numerics import integrate
from .exceptions import ConfigError, QuadratureError

__all__ = [
    "PriorSpec", "BetaProcess", "DirichletInduced", "GammaProcess", "AlphaFamily",
    "CustomPrior", "ConditionReport", "eval_g", "gamma_normalizer", "prior_moments",
    "check_conditions", "parse_prior",
]


def _as_function(value, name):
    if callable(value):
        return value, False
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError(f"{name} must be finite")
    return (lambda t, _v=v: np.full(np.shape(t), _v, dtype=float)), True


def _check_unit(x):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)) or np.any(np.isnan(x)):
        raise ValueError("jump size x must lie in [0, 1]")
    return x


class PriorSpec:
    """Base class for Levy-measure priors.

    Subclasses implement :meth:`g` and :meth:`intensity` and may provide the
    analytic limit :meth:`q` of ``g_t(x)`` as ``x -> 0`` and the smoothness
    exponent ``alpha_smoothness`` of that limit.
    """

    label = "custom"
    time_homogeneous = False
    alpha_smoothness: Optional[float] = None

    def g(self, t, x):
        raise NotImplementedError

    def intensity(self, t):
        raise NotImplementedError

    def q(self, t):
        return None

    def g_scaled(self, t, x):
        """``lambda(t) * g_t(x)``, the x-weighted Levy density."""
        return self.intensity(t) * self.g(t, x)

    def levy_density(self, t, x):
        """``f_t(x) = g_t(x) * lambda(t) / x`` on ``(0, 1]``."""
        x = np.asarray(x, dtype=float)
        return self.g_scaled(t, x) / x

    def x_moment(self, t, k):
        """``int_0^1 x**k g_t(x) dx`` for a scalar ``t``."""
        val, _ = integrate(lambda x: x ** k * self.g(t, x), 0.0, 1.0,
                           points=[1e-6, 1e-3, 0.5, 1 - 1e-3, 1 - 1e-6])
        return float(val)

    def describe(self):
        return self.label


@dataclass(frozen=True)
class BetaProcess(PriorSpec):
    """Beta process with concentration ``c(t)`` and mean hazard rate ``lambda(t)``.

    ``g_t(x) = c(t) (1 - x)**(c(t) - 1)``. Both arguments accept either a
    positive scalar or a callable of time.
    """

    c: object = 1.0
    lam: object = 1.0
    _c_fn: Callable = field(init=False, repr=False, compare=False)
    _lam_fn: Callable = field(init=False, repr=False, compare=False)
    time_homogeneous: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c_fn, c_const = _as_function(self.c, "c")
        lam_fn, lam_const = _as_function(self.lam, "lam")
        if c_const and float(self.c) <= 0:
            raise ConfigError("beta process concentration c must be positive")
        if lam_const and float(self.lam) <= 0:
            raise ConfigError("beta process intensity lam must be positive")
        object.__setattr__(self, "_c_fn", c_fn)
        object.__setattr__(self, "_lam_fn", lam_fn)
        object.__setattr__(self, "time_homogeneous", c_const and lam_const)

    label = "beta"
    alpha_smoothness = 1.0

    def concentration(self, t):
        return np.asarray(self._c_fn(t), dtype=float)

    def g(self, t, x):
        x = _check_unit(x)
        c = self.concentration(t)
        with np.errstate(divide="ignore"):
            return c * np.power(1.0 - x, c - 1.0)

    def intensity(self, t):
        return np.asarray(self._lam_fn(t), dtype=float)

    def q(self, t):
        return self.concentration(t)

    def x_moment(self, t, k):
        # c B(k+1, c) = Gamma(k+1) Gamma(c+1) / Gamma(c+k+1)
        c = float(self.concentration(t))
        return float(math.exp(math.lgamma(k + 1) + math.lgamma(c + 1) - math.lgamma(c + k + 1)))

    def describe(self):
        if self.time_homogeneous:
            return f"beta:c={float(self.c):g},lam={float(self.lam):g}"
        return "beta"


class DirichletInduced(BetaProcess):
    """Beta process induced by a Dirichlet process prior on the distribution.

    With total mass ``a`` and base distribution ``H`` (hazard ``lambda_H``),
    the induced cumulative hazard is a beta process with
    ``c(t) = a (1 - H(t))`` and ``lambda(t) = lambda_H(t)``.

    Parameters
    ----------
    a : float
        Total mass of the Dirichlet base measure.
    base_rate : float, optional
        Rate of an exponential base distribution; used when ``base_hazard``
        and ``base_cdf`` are not given.
    base_hazard, base_cdf : callable, optional
        Hazard rate and c.d.f. of an arbitrary absolutely continuous base.
    """

    label = "dirichlet"

    def __init__(self, a=1.0, base_rate=1.0, base_hazard=None, base_cdf=None):
        a = float(a)
        if not a > 0:
            raise ConfigError("Dirichlet total mass a must be positive")
        if (base_hazard is None) != (base_cdf is None):
            raise ConfigError("give both base_hazard and base_cdf, or neither")
        if base_hazard is None:
            rate = float(base_rate)
            if not rate > 0:
                raise ConfigError("Dirichlet base rate must be positive")
            base_hazard = lambda t, _r=rate: np.full(np.shape(t), _r, dtype=float)
            base_cdf = lambda t, _r=rate: -np.expm1(-_r * np.asarray(t, dtype=float))
        else:
            rate = None
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "base_rate", rate)
        object.__setattr__(self, "base_cdf", base_cdf)
        super().__init__(c=lambda t: a * (1.0 - np.asarray(base_cdf(t), dtype=float)),
                         lam=base_hazard)

    def describe(self):
        if self.base_rate is not None:
            return f"dirichlet:a={self.a:g},rate={self.base_rate:g}"
        return "dirichlet"

    def __repr__(self):
        return f"DirichletInduced(a={self.a!r}, base_rate={self.base_rate!r})"


def gamma_normalizer(d):
    """``c(d) = 1 / int_0^1 x / (-log(1 - x)) (1 - x)**(d - 1) dx``.

    Finite and positive for every ``d > 0``.
    """
    d = float(d)
    if not d > 0:
        raise ConfigError("gamma process parameter d must be positive")
    val, _ = integrate(lambda x: _gamma_kernel(x, d), 0.0, 1.0,
                       points=[0.5, 1 - 1e-3, 1 - 1e-6, 1 - 1e-9], epsabs=1e-13, epsrel=1e-12)
    if not (val > 0 and math.isfinite(val)):
        raise QuadratureError(f"gamma normalizer quadrature failed for d={d}")
    return 1.0 / float(val)


def _gamma_kernel(x, d):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        l1 = np.log1p(-x)
        ratio = np.where(x > 1e-8, x / -l1, 1.0 - 0.5 * x)
        out = ratio * np.exp((d - 1.0) * l1)
    return np.where(x >= 1.0, 0.0 if d >= 1.0 else np.inf, out)


@dataclass(frozen=True)
class GammaProcess(PriorSpec):
    """Prior from a gamma process on ``-log(1 - F(t))`` with parameters ``(H, d)``.

    ``g_t(x) = c(d) x / (-log(1 - x)) (1 - x)**(d - 1)`` and
    ``lambda(t) = d h(t) / c(d)``; ``d`` and ``h`` are positive constants.
    """

    d: float = 1.0
    h: float = 1.0
    c: float = field(init=False, repr=False, compare=False)

    label = "gamma"
    time_homogeneous = True
    alpha_smoothness = 1.0

    def __post_init__(self):
        if not float(self.h) > 0:
            raise ConfigError("gamma process rate h must be positive")
        object.__setattr__(self, "c", gamma_normalizer(self.d))

    def g(self, t, x):
        x = _check_unit(x)
        val = self.c * _gamma_kernel(x, float(self.d))
        return np.broadcast_to(val, np.broadcast_shapes(np.shape(t), np.shape(x))).copy()

    def intensity(self, t):
        return np.full(np.shape(t), float(self.d) * float(self.h) / self.c)

    def q(self, t):
        return np.full(np.shape(t), self.c)

    def describe(self):
        return f"gamma:d={float(self.d):g},h={float(self.h):g}"


@dataclass(frozen=True)
class AlphaFamily(PriorSpec):
    """The prior with Levy measure ``x**-1 (1 + x**alpha) dx dt``.

    Stored normalized: ``lambda = (alpha + 2) / (alpha + 1)`` and
    ``g(x) = (1 + x**alpha) (alpha + 1) / (alpha + 2)``; the measure itself is
    unchanged. ``alpha`` controls the posterior convergence rate.
    """

    alpha: float = 1.0

    label = "alpha"
    time_homogeneous = True

    def __post_init__(self):
        a = float(self.alpha)
        if not (a > 0 and math.isfinite(a)):
            raise ConfigError("alpha must be positive and finite")
        object.__setattr__(self, "alpha", a)

    @property
    def alpha_smoothness(self):
        return self.alpha

    @property
    def weight(self):
        return (self.alpha + 1.0) / (self.alpha + 2.0)

    def g(self, t, x):
        x = _check_unit(x)
        val = (1.0 + x ** self.alpha) * self.weight
        return np.broadcast_to(val, np.broadcast_shapes(np.shape(t), np.shape(x))).copy()

    def intensity(self, t):
        return np.full(np.shape(t), 1.0 / self.weight)

    def q(self, t):
        return np.full(np.shape(t), self.weight)

    def x_moment(self, t, k):
        return self.weight * (1.0 / (k + 1.0) + 1.0 / (k + self.alpha + 1.0))

    def describe(self):
        return f"alpha:a={self.alpha:g}"


@dataclass(frozen=True)
class CustomPrior(PriorSpec):
    """A user-supplied ``(g, lambda)`` pair.

    ``g(t, x)`` must integrate to one in ``x`` for each ``t``. ``q`` and
    ``alpha`` are optional analytic metadata used by :func:`check_conditions`.
    """

    g_fn: Callable = None
    lam_fn: Callable = None
    q_fn: Optional[Callable] = None
    alpha: Optional[float] = None
    homogeneous: bool = False

    label = "custom"

    def g(self, t, x):
        x = _check_unit(x)
        return np.asarray(self.g_fn(t, x), dtype=float)

    def intensity(self, t):
        return np.asarray(self.lam_fn(t), dtype=float)

    def q(self, t):
        return None if self.q_fn is None else np.asarray(self.q_fn(t), dtype=float)

    @property
    def alpha_smoothness(self):
        return self.alpha

    @property
    def time_homogeneous(self):
        return self.homogeneous


def eval_g(spec, t, x):
    """Evaluate the normalized jump-size density ``g_t(x)``."""
    return spec.g(t, x)


def _integrate_time(fn, t):
    if t <= 0:
        return 0.0
    val, _ = integrate(fn, 0.0, float(t), epsabs=1e-12, epsrel=1e-11)
    return float(val)


def prior_moments(spec, t):
    """Prior mean and variance of ``A(t)``.

    ``E A(t) = int_0^t lambda``, ``Var A(t) = int_0^t lambda(s) int x g_s(x) dx ds``.
    """
    t = float(t)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return 0.0, 0.0
    if spec.time_homogeneous:
        lam = float(spec.intensity(0.0))
        return lam * t, lam * spec.x_moment(0.0, 1) * t
    mean = _integrate_time(lambda s: spec.intensity(s), t)
    var = _integrate_time(
        lambda s: np.array([float(spec.intensity(si)) * spec.x_moment(si, 1) for si in s]), t)
    return mean, var


@dataclass(frozen=True)
class ConditionReport:
    """Grid diagnostics for the three regularity conditions on a prior.

    These are numerical heuristics: a pass means nothing contradicting the
    condition was seen on the grid, not that the condition is proved.
    """

    a1_sup: float
    a2_alpha_hat: float
    a2_residual: float
    a3_min: float
    a3_max: float
    pass_a1: bool
    pass_a2: bool
    pass_a3: bool
    q_available: bool = True
    notes: str = ""

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def format(self):
        lines = [f"{k} = {v}" for k, v in self.as_dict().items() if k != "notes"]
        if self.notes:
            lines.append(f"notes = {self.notes}")
        return "\n".join(lines)


def _x_grid(m, depth):
    near0 = np.logspace(-depth, -1, m)
    mid = np.linspace(0.0, 1.0, m + 1)[:-1]
    near1 = 1.0 - np.logspace(-min(depth, 15), -1, m)
    return np.unique(np.concatenate([[0.0], near0, mid, near1]))


def _probe_q(spec, t):
    xs = np.array([1e-8, 1e-10, 1e-12])
    vals = np.array([float(spec.g(t, x)) for x in xs])
    if not np.all(np.isfinite(vals)):
        return None
    if abs(vals[-1] - vals[-2]) > 1e-6 * max(1.0, abs(vals[-1])):
        return None
    return vals[-1]


def check_conditions(spec, tau, grid=64, eps=0.1):
    """Numerically probe the regularity conditions of ``spec`` on ``[0, tau]``.

    A1: the grid supremum of ``(1 - x) g_t(x)``, recomputed on a 4x finer grid;
    it fails if the refinement grows the supremum by more than 5%.
    A2: a least-squares fit of ``log|g_t(x) - q(t)|`` on ``log x`` over 20
    log-spaced points in ``(1e-6, eps]`` estimates the smoothness exponent.
    A3: extrema of ``lambda`` on the time grid.
    """
    if grid < 32:
        raise ConfigError("check_conditions needs at least 32 grid points per axis")
    tau = float(tau)
    ts = np.linspace(0.0, tau, grid)
    interior = ts[1:-1] if grid > 2 else ts

    def sup_on(m, depth):
        xs = _x_grid(m, depth)
        xs = xs[xs < 1.0]
        best = 0.0
        for t in np.linspace(0.0, tau, m):
            with np.errstate(invalid="ignore", over="ignore"):
                v = (1.0 - xs) * spec.g(t, xs)
            best = max(best, float(np.nanmax(v)))
        return best

    a1 = sup_on(grid, 8)
    a1_fine = sup_on(4 * grid, 32)
    pass_a1 = bool(np.isfinite(a1_fine) and a1_fine <= 1.05 * a1 + 1e-12)

    xs = np.logspace(-6, math.log10(eps), 20)
    notes = []
    q_available = True
    slopes, residuals = [], []
    exact_zero = True
    for t in ts:
        qt = spec.q(t)
        if qt is None:
            qt = _probe_q(spec, t)
            if qt is None:
                q_available = False
                break
            notes.append("q estimated numerically")
        qt = float(qt)
        dev = np.abs(spec.g(t, xs) - qt)
        if np.all(dev <= 1e-13 * max(1.0, abs(qt))):
            continue
        exact_zero = False
        keep = dev > 0
        slope = np.polyfit(np.log(xs[keep]), np.log(dev[keep]), 1)[0]
        slopes.append(slope)
        residuals.append((t, qt))
    if not q_available:
        alpha_hat = float("nan")
        resid = float("nan")
        pass_a2 = False
        notes = ["q unavailable: no finite limit of g_t(x) as x -> 0"]
    elif exact_zero:
        alpha_hat = float("inf")
        resid = 0.0
        pass_a2 = True
        notes.append("g_t(x) equals q(t) near 0; any alpha works")
    else:
        alpha_hat = float(np.min(slopes))
        resid = 0.0
        for t, qt in residuals:
            resid = max(resid, float(np.max(np.abs(spec.g(t, xs) - qt) / xs ** alpha_hat)))
        qs = np.array([float(qt) for _, qt in residuals])
        pass_a2 = bool(alpha_hat > 0 and np.isfinite(resid) and np.all(qs > 0))

    lam = np.asarray(spec.intensity(interior), dtype=float)
    a3_min, a3_max = float(np.min(lam)), float(np.max(lam))
    pass_a3 = bool(a3_min > 0 and math.isfinite(a3_max))
    return ConditionReport(a1, alpha_hat, resid, a3_min, a3_max, pass_a1, pass_a2, pass_a3,
                           q_available, "; ".join(dict.fromkeys(notes)))


_PRIOR_PARAMS = {
    "beta": {"c": 1.0, "lam": 1.0},
    "dirichlet": {"a": 1.0, "rate": 1.0},
    "gamma": {"d": 1.0, "h": 1.0},
    "alpha": {"a": 1.0},
}


def parse_prior(text):
    """Build a prior from ``family:param=value[,param=value]``.

    Families are ``beta`` (c, lam), ``dirichlet`` (a, rate), ``gamma``
    (d, h) and ``alpha`` (a). Omitted parameters take the value 1.
    """
    text = str(text).strip()
    family, _, rest = text.partition(":")
    family = family.strip().lower()
    if family not in _PRIOR_PARAMS:
        raise ConfigError(f"unknown prior family {family!r}; expected one of "
                          f"{', '.join(_PRIOR_PARAMS)}")
    params = dict(_PRIOR_PARAMS[family])
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in params:
            raise ConfigError(f"prior {family!r}: unknown parameter {key!r}")
        try:
            params[key] = float(value)
        except ValueError:
            raise ConfigError(f"prior {family!r}: parameter {key} must be numeric") from None
    if family == "beta":
        return BetaProcess(c=params["c"], lam=params["lam"])
    if family == "dirichlet":
        return DirichletInduced(a=params["a"], base_rate=params["rate"])
    if family == "gamma":
        if not params["d"] > 0:
            raise ConfigError("gamma process parameter d must be positive")
        return GammaProcess(d=params["d"], h=params["h"])
    return AlphaFamily(alpha=params["a"])

