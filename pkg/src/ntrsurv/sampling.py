"""Posterior sample paths of the cumulative hazard.

Fixed jumps are drawn exactly (Beta or Beta-mixture laws) or by numerical
inversion of their CDF. The continuous part is simulated with jumps of size at
least ``epsilon``: proposals come from a Poisson process whose intensity
dominates ``(1 - x)**Y(s) f_s(x)`` on a few time cells and are thinned with
probability ``(1 - x)**(Y(s) - Y_cell)``. The expected mass of the jumps below
``epsilon`` can be added back as a deterministic drift.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._numerics import _GL_NODES, _GL_WEIGHTS, integrate
from .exceptions import ConfigError, DataError, NumericalError
from .posterior import BetaExact, BetaMixture

_GL4_NODES, _GL4_WEIGHTS = np.polynomial.legendre.leggauss(4)
_HOMOGENEOUS_CELLS = 16
_VARYING_CELLS = 64
_NEAR_ONE = 1e-14
_FIXED_CHUNK = 1 << 21


@dataclass(frozen=True)
class SamplerConfig:
    """Settings for posterior path simulation.

    Parameters
    ----------
    epsilon : float, optional
        Smallest simulated jump of the continuous part. ``None`` selects
        ``1e-6 / (max Y + 1)``; ``1`` switches the jump simulation off.
    draws : int
        Number of Monte Carlo paths ``M``.
    seed : int, optional
        Seed for :meth:`make_rng`.
    compensate_mean : bool
        Add the expected mass of the jumps below ``epsilon`` as a drift.
    inversion_grid : int
        Cells used to tabulate CDFs for numerical inversion.
    include_continuous : bool
        Simulate the continuous part at all.
    """

    epsilon: Optional[float] = None
    draws: int = 1000
    seed: Optional[int] = None
    compensate_mean: bool = True
    inversion_grid: int = 512
    include_continuous: bool = True

    def __post_init__(self):
        if self.epsilon is not None and not 0.0 < float(self.epsilon) <= 1.0:
            raise ConfigError("epsilon must lie in (0, 1]")
        if int(self.draws) != self.draws or self.draws < 1:
            raise ConfigError("draws must be a positive integer")
        if int(self.inversion_grid) != self.inversion_grid or self.inversion_grid < 2:
            raise ConfigError("inversion_grid must be an integer >= 2")

    def resolve_epsilon(self, risk):
        if self.epsilon is not None:
            return float(self.epsilon)
        top = int(np.max(risk.y)) if risk.q else risk.n
        return 1e-6 / (max(top, risk.n) + 1.0)

    def make_rng(self):
        return np.random.default_rng(self.seed)


@dataclass(frozen=True, eq=False)
class HazardPath:
    """A pure-jump cumulative hazard path, optionally with a deterministic drift.

    ``A(t) = sum of sizes at times <= t + drift(t)``; the drift is piecewise
    linear through ``(drift_knots, drift_values)`` and is zero when empty.
    """

    times: np.ndarray
    sizes: np.ndarray
    drift_knots: np.ndarray = field(default_factory=lambda: np.zeros(0))
    drift_values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        sizes = np.asarray(self.sizes, dtype=float)
        order = np.argsort(times, kind="stable")
        times, sizes = times[order], sizes[order]
        if sizes.size and (np.any(sizes <= 0) or np.any(sizes > 1)):
            raise ValueError("jump sizes must lie in (0, 1]")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(sizes)]))
        object.__setattr__(self, "drift_knots", np.asarray(self.drift_knots, dtype=float))
        object.__setattr__(self, "drift_values", np.asarray(self.drift_values, dtype=float))

    @property
    def jumps(self):
        return list(zip(self.times.tolist(), self.sizes.tolist()))

    def drift(self, t):
        t = np.asarray(t, dtype=float)
        if self.drift_knots.size == 0:
            return np.zeros_like(t)
        return np.interp(t, self.drift_knots, self.drift_values, left=0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self._cum[np.searchsorted(self.times, t, side="right")] + self.drift(t)
        return float(out) if out.ndim == 0 else out

    evaluate = __call__


# ---------------------------------------------------------------- fixed jumps

def _inversion_table(law, grid):
    cache = law.__dict__.setdefault("_tables", {})
    if grid in cache:
        return cache[grid]
    if grid < 2:
        raise ConfigError("inversion grid needs at least 2 cells")
    scale = 50.0 / (law.y_plus + law.delta_n + 1.0)
    split = min(scale, 0.5)
    n_body = grid - grid // 4
    n_tail = grid - n_body
    edges = np.concatenate([np.linspace(0.0, split, n_body + 1),
                            1.0 - np.geomspace(1.0 - split, _NEAR_ONE, max(n_tail, 1)),
                            [1.0]])
    edges = np.unique(edges)
    for _ in range(4):
        mass = _cell_masses(law.density, edges)
        if not np.all(np.isfinite(mass)):
            raise NumericalError(f"jump law at t={law.location:g}: density is not finite")
        total = mass.sum()
        if not total > 0:
            raise NumericalError(f"jump law at t={law.location:g}: density has no mass")
        heavy = np.flatnonzero(mass / total > 1.0 / 64.0)
        if heavy.size == 0:
            break
        extra = [np.linspace(edges[j], edges[j + 1], 9)[1:-1] for j in heavy]
        edges = np.unique(np.concatenate([edges] + extra))
    cdf = np.concatenate([[0.0], np.cumsum(mass)]) / total
    cache[grid] = (edges, cdf)
    return edges, cdf


def _cell_masses(density, edges):
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    x = (0.5 * (hi + lo))[:, None] + half[:, None] * _GL4_NODES
    return (density(x) * _GL4_WEIGHTS).sum(axis=1) * half


def _invert(edges, cdf, u):
    j = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, edges.size - 2)
    width = cdf[j + 1] - cdf[j]
    frac = np.where(width > 0, (u - cdf[j]) / np.where(width > 0, width, 1.0), 0.5)
    x = edges[j] + frac * (edges[j + 1] - edges[j])
    return np.clip(x, np.finfo(float).tiny, 1.0)


def sample_jumps(law, rng, size=None, inversion_grid=512):
    """Draw jump sizes from ``law``; ``size`` follows numpy conventions."""
    form = law.closed_form
    if isinstance(form, BetaExact):
        x = rng.beta(form.shape1, form.shape2, size=size)
    elif isinstance(form, BetaMixture):
        comp = rng.choice(len(form.weights), p=np.asarray(form.weights), size=size)
        shapes = np.asarray(form.shapes)
        x = rng.beta(shapes[comp, 0], shapes[comp, 1])
    else:
        edges, cdf = _inversion_table(law, inversion_grid)
        x = _invert(edges, cdf, rng.random(size))
    return np.clip(x, np.finfo(float).tiny, 1.0)


def sample_jump(law, rng, inversion_grid=512):
    """One draw of the jump size at ``law.location``."""
    return float(sample_jumps(law, rng, None, inversion_grid))


def _fixed_block(post, rng, draws, idx, grid):
    """``(draws, len(idx))`` matrix of independent fixed-jump draws."""
    kind = post._kind[idx]
    out = np.empty((draws, idx.size))
    closed = np.flatnonzero(kind == 0)
    if closed.size:
        w1, a1, b1, a2, b2 = post._mix[idx[closed]].T
        first = rng.random((draws, closed.size)) < w1
        x = rng.beta(np.where(first, a1, a2), np.where(first, b1, b2))
        out[:, closed] = np.clip(x, np.finfo(float).tiny, 1.0)
    for j in np.flatnonzero(kind == 1):
        out[:, j] = sample_jumps(post.fixed_jumps[idx[j]], rng, draws, grid)
    return out


def sample_fixed_part(post, rng, inversion_grid=512):
    """One posterior draw of the fixed-jump part ``A_d`` as a :class:`HazardPath`."""
    idx = np.arange(post.risk.q)
    sizes = _fixed_block(post, rng, 1, idx, inversion_grid)[0]
    return HazardPath(np.asarray(post.event_times, dtype=float), sizes)


# ----------------------------------------------------------- continuous part

@dataclass(frozen=True, eq=False)
class _ContinuousPlan:
    cell_lo: np.ndarray
    cell_hi: np.ndarray
    cell_y: np.ndarray
    cell_mass: np.ndarray
    log_edges: np.ndarray
    cdf: np.ndarray
    drift_knots: np.ndarray
    drift_values: np.ndarray


def _x_edges(eps, grid):
    n_tail = max(grid // 4, 1)
    n_body = grid - n_tail
    if eps < 0.5:
        body = np.geomspace(eps, 0.5, n_body + 1)
        tail = 1.0 - np.geomspace(0.5, _NEAR_ONE, n_tail + 1)[1:]
        return np.concatenate([body, tail])
    return 1.0 - np.geomspace(1.0 - eps, _NEAR_ONE, grid + 1)


def _row_masses(prior, s, y, edges):
    """Masses of ``x**-1 (1 - x)**y lambda g_s(x)`` on each cell, rows over ``(s, y)``.

    Cells below 1/2 are integrated in ``log x`` and cells above in
    ``log(1 - x)``, where the integrand is smooth even when ``g`` blows up at 1.
    """
    s = s[:, None, None]
    y = y[:, None, None]
    lam = np.asarray(prior.intensity(s[:, 0, 0]), dtype=float).reshape(-1, 1)
    lo, hi = edges[:-1], edges[1:]
    low = hi <= 0.5
    out = np.empty((s.shape[0], lo.size))
    if np.any(low):
        zl, zh = np.log(lo[low]), np.log(hi[low])
        half = 0.5 * (zh - zl)
        z = (0.5 * (zh + zl))[:, None] + half[:, None] * _GL4_NODES
        x = np.exp(z)
        vals = np.exp(y * np.log1p(-x)) * prior.g(s, x)
        out[:, low] = (vals * _GL4_WEIGHTS).sum(axis=-1) * half
    if np.any(~low):
        wl, wh = np.log1p(-lo[~low]), np.log1p(-hi[~low])
        half = 0.5 * (wl - wh)
        w = (0.5 * (wl + wh))[:, None] + half[:, None] * _GL4_NODES
        x = -np.expm1(w)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.exp((y + 1.0) * w) * prior.g(s, x) / x
        out[:, ~low] = (vals * _GL4_WEIGHTS).sum(axis=-1) * half
    return lam * out


def _small_jump_mass(prior, s, y, eps):
    """``lambda(s) int_0^eps (1 - x)**y g_s(x) dx`` for arrays ``s``, ``y``."""
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)

    def f(x):
        return np.exp(y[:, None] * np.log1p(-x)) * prior.g(s[:, None], x)

    val, _ = integrate(f, 0.0, eps, epsabs=1e-300, epsrel=1e-10)
    return np.asarray(prior.intensity(s), dtype=float) * val


def _plan(post, tau, eps, grid):
    cache = post.__dict__.setdefault("_plans", {})
    key = (float(tau), float(eps), int(grid))
    if key in cache:
        return cache[key]
    prior, risk = post.prior, post.risk
    ncell = _HOMOGENEOUS_CELLS if prior.time_homogeneous else _VARYING_CELLS
    bounds = np.linspace(0.0, tau, ncell + 1)
    lo, hi = bounds[:-1], bounds[1:]
    mid = 0.5 * (lo + hi)
    cell_y = np.asarray(risk.at_risk(hi), dtype=float)
    if eps < 1.0:
        edges = _x_edges(eps, grid)
        masses = _row_masses(prior, mid, cell_y, edges)
        if not np.all(np.isfinite(masses)):
            raise NumericalError("continuous-part intensity is not finite")
        row_total = masses.sum(axis=1)
        cdf = np.concatenate([np.zeros((ncell, 1)), np.cumsum(masses, axis=1)], axis=1)
        cdf /= np.where(row_total > 0, row_total, 1.0)[:, None]
        cell_mass = row_total * (hi - lo)
        log_edges = np.log(edges)
    else:
        cell_mass = np.zeros(ncell)
        cdf = np.zeros((ncell, 2))
        log_edges = np.zeros(2)

    # drift: expected mass of the jumps below eps, piecewise over risk intervals
    r_lo, r_hi, r_y = risk.risk_intervals(tau)
    width = r_hi - r_lo
    if prior.time_homogeneous:
        uniq, inv = np.unique(r_y, return_inverse=True)
        rate = _small_jump_mass(prior, np.zeros(uniq.size), uniq, min(eps, 1.0))[inv]
    else:
        rate = _small_jump_mass(prior, 0.5 * (r_lo + r_hi), r_y, min(eps, 1.0))
    knots = np.concatenate([[0.0], r_hi])
    values = np.concatenate([[0.0], np.cumsum(rate * width)])
    plan = _ContinuousPlan(lo, hi, cell_y, cell_mass, log_edges, cdf, knots, values)
    cache[key] = plan
    return plan


def _continuous_jumps(post, plan, rng, draws):
    """Accepted continuous jumps as ``(draw index, time, size)`` arrays."""
    total = float(plan.cell_mass.sum())
    if total <= 0:
        empty = np.zeros(0)
        return empty.astype(int), empty, empty
    counts = rng.poisson(total, size=draws)
    m = int(counts.sum())
    owner = np.repeat(np.arange(draws), counts)
    cum = np.cumsum(plan.cell_mass) / total
    cell = np.minimum(np.searchsorted(cum, rng.random(m), side="right"), cum.size - 1)
    times = plan.cell_lo[cell] + rng.random(m) * (plan.cell_hi[cell] - plan.cell_lo[cell])
    u = rng.random(m)
    ncell, nedge = plan.cdf.shape
    flat = (np.arange(ncell)[:, None] + plan.cdf[:, 1:]).ravel()
    pos = np.searchsorted(flat, cell + u, side="right") - cell * (nedge - 1)
    j = np.clip(pos, 0, nedge - 2)
    c_lo = plan.cdf[cell, j]
    c_hi = plan.cdf[cell, j + 1]
    width = c_hi - c_lo
    frac = np.where(width > 0, (u - c_lo) / np.where(width > 0, width, 1.0), 0.5)
    logx = plan.log_edges[j] + np.clip(frac, 0.0, 1.0) * (plan.log_edges[j + 1] - plan.log_edges[j])
    sizes = np.minimum(np.exp(logx), 1.0)
    extra = np.asarray(post.risk.at_risk(times), dtype=float) - plan.cell_y[cell]
    keep = rng.random(m) < np.exp(extra * np.log1p(-np.minimum(sizes, 1.0 - 1e-16)))
    return owner[keep], times[keep], sizes[keep]


def _resolve(post, tau, cfg):
    if not tau > 0:
        raise ValueError("tau must be positive")
    eps = cfg.resolve_epsilon(post.risk)
    return _plan(post, tau, eps, cfg.inversion_grid)


def sample_continuous_part(post, tau, cfg, rng):
    """One draw of the continuous part ``A - A_d`` on ``[0, tau]``."""
    if not cfg.include_continuous:
        return HazardPath(np.zeros(0), np.zeros(0))
    plan = _resolve(post, tau, cfg)
    _, times, sizes = _continuous_jumps(post, plan, rng, 1)
    if cfg.compensate_mean:
        return HazardPath(times, sizes, plan.drift_knots, plan.drift_values)
    return HazardPath(times, sizes)


def sample_chf_path(post, tau, cfg, rng):
    """Posterior draw of ``A`` on ``[0, tau]``: fixed jumps merged with the continuous part."""
    fixed = sample_fixed_part(post, rng, cfg.inversion_grid)
    keep = fixed.times <= tau
    cont = sample_continuous_part(post, tau, cfg, rng)
    return HazardPath(np.concatenate([fixed.times[keep], cont.times]),
                      np.concatenate([fixed.sizes[keep], cont.sizes]),
                      cont.drift_knots, cont.drift_values)


def sample_chf_paths(post, tau, cfg, rng, draws=None):
    """``draws`` independent posterior paths on ``[0, tau]``."""
    draws = cfg.draws if draws is None else int(draws)
    return [sample_chf_path(post, tau, cfg, rng) for _ in range(draws)]


def sample_chf_values(post, times, cfg, rng, draws=None):
    """Posterior draws of ``A`` evaluated at ``times``.

    Returns an array of shape ``(draws, len(times))``; this is the fast path
    used by the Monte Carlo studies and never materializes whole paths.
    """
    draws = cfg.draws if draws is None else int(draws)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size == 0:
        raise ValueError("times must be nonempty")
    order = np.argsort(times)
    sorted_t = times[order]
    tau = float(sorted_t[-1])
    buckets = np.zeros((draws, sorted_t.size + 1))

    ev = np.asarray(post.event_times, dtype=float)
    n_ev = int(np.searchsorted(ev, tau, side="right"))
    step = max(1, _FIXED_CHUNK // draws)
    for start in range(0, n_ev, step):
        idx = np.arange(start, min(start + step, n_ev))
        block = _fixed_block(post, rng, draws, idx, cfg.inversion_grid)
        where = np.searchsorted(sorted_t, ev[idx], side="left")
        cuts = np.flatnonzero(np.diff(np.concatenate([[-1], where])))
        sums = np.add.reduceat(block, cuts, axis=1)
        buckets[:, where[cuts]] += sums

    drift = np.zeros(sorted_t.size)
    if cfg.include_continuous and tau > 0:
        plan = _resolve(post, tau, cfg)
        owner, jt, js = _continuous_jumps(post, plan, rng, draws)
        where = np.searchsorted(sorted_t, jt, side="left")
        np.add.at(buckets, (owner, where), js)
        if cfg.compensate_mean:
            drift = np.interp(sorted_t, plan.drift_knots, plan.drift_values, left=0.0)
    values = np.cumsum(buckets[:, :-1], axis=1) + drift
    out = np.empty_like(values)
    out[:, order] = values
    return out


def credible_interval(values, level):
    """Equal-tailed interval from empirical quantiles.

    Uses linear interpolation between order statistics, with position
    ``h = (M - 1) p + 1`` for the ``p`` quantile of ``M`` values.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.size == 0:
        raise DataError("credible_interval needs at least one value")
    if not 0.0 < level < 1.0:
        raise ConfigError("level must lie in (0,1)")
    tail = 0.5 * (1.0 - level)
    lo, hi = np.quantile(values, [tail, 1.0 - tail], method="linear")
    return float(lo), float(hi)
