"""Quadrature and special-function helpers.

All Beta-function work in the package goes through :func:`betaln` so that
arguments in the tens of thousands (risk sets of large samples) never touch a
direct ratio of Gamma functions.
"""

import numpy as np
from scipy.special import gammaln

from .exceptions import QuadratureError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)

# Stirling series coefficients B_{2k} / (2k (2k - 1)), k = 1..5
_STIRLING = (1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0)
_STIRLING_MIN = 30.0
_ROUNDOFF = 50.0 * np.finfo(float).eps


def _stirling_tail(z):
    zi = 1.0 / z
    zi2 = zi * zi
    acc = np.zeros_like(z)
    term = zi
    for c in _STIRLING:
        acc = acc + c * term
        term = term * zi2
    return acc


def log_gamma_ratio(x, a):
    """Return ``log Gamma(x + a) - log Gamma(x)`` without cancellation.

    For ``x`` and ``x + a`` at least 30 the difference is formed from the
    Stirling series directly instead of subtracting two large log-Gammas.
    """
    x, a = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(a, dtype=float))
    s = x + a
    out = np.asarray(gammaln(s) - gammaln(x), dtype=float)
    big = (x >= _STIRLING_MIN) & (s >= _STIRLING_MIN)
    if np.any(big):
        xb, ab, sb = x[big], a[big], s[big]
        out = np.array(out, copy=True)
        out[big] = ((xb - 0.5) * np.log1p(ab / xb) + ab * np.log(sb) - ab
                    + _stirling_tail(sb) - _stirling_tail(xb))
    return out[()] if out.ndim == 0 else out


def betaln(a, b):
    """Logarithm of the Beta function, accurate for very unequal arguments."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    small = np.minimum(a, b)
    large = np.maximum(a, b)
    out = gammaln(small) - log_gamma_ratio(large, small)
    return out[()] if np.ndim(out) == 0 else out


def _gauss_legendre(f, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = (mid[:, None] + half[:, None] * _GL_NODES).ravel()
    fx = np.asarray(f(x), dtype=float)
    fx = fx.reshape(fx.shape[:-1] + (lo.size, _GL_NODES.size))
    return (fx * _GL_WEIGHTS).sum(axis=-1) * half


def integrate(f, a, b, *, points=None, epsabs=1e-10, epsrel=1e-10,
              max_rounds=400, max_intervals=20000):
    """Adaptive Gauss-Legendre quadrature of ``f`` over ``[a, b]``.

    ``f`` receives a 1-D array of abscissae and returns values whose last
    axis matches it; leading axes form a batch of integrands that share one
    partition of ``[a, b]``. Intervals are bisected until the summed
    10-point versus 2x10-point discrepancy of every batch member is below
    ``max(epsabs, epsrel * |value|)``.

    Parameters
    ----------
    f : callable
    a, b : float
        Finite integration limits, ``a < b``.
    points : sequence of float, optional
        Interior breakpoints for the initial partition, e.g. where the
        integrand has a kink or concentrates its mass.
    epsabs, epsrel : float
        Absolute and relative tolerances.

    Returns
    -------
    value, error : ndarray or float
        Integral estimate and its error estimate, shaped like the batch.

    Raises
    ------
    QuadratureError
        If the tolerance is not reached within ``max_rounds`` bisection
        rounds or ``max_intervals`` active intervals.
    """
    a = float(a)
    b = float(b)
    if not b > a:
        if b == a:
            probe = np.asarray(f(np.array([a])), dtype=float)
            zero = np.zeros(probe.shape[:-1])
            return (zero[()], zero[()]) if zero.ndim == 0 else (zero, zero)
        raise ValueError("integration limits must satisfy a < b")
    edges = [a, b]
    if points is not None:
        edges += [float(p) for p in np.ravel(points) if a < p < b]
    edges = np.unique(edges)
    lo, hi = edges[:-1], edges[1:]
    whole = _gauss_legendre(f, lo, hi)
    batch_shape = whole.shape[:-1]
    frozen_val = np.zeros(batch_shape)
    frozen_err = np.zeros(batch_shape)
    frozen_floor = np.zeros(batch_shape)
    span = b - a
    for _ in range(max_rounds):
        mid = 0.5 * (lo + hi)
        left = _gauss_legendre(f, lo, mid)
        right = _gauss_legendre(f, mid, hi)
        fine = left + right
        err = np.abs(whole - fine)
        # discrepancies at the level of rounding noise cannot be reduced further
        floor = _ROUNDOFF * (np.abs(left) + np.abs(right))
        value = frozen_val + fine.sum(axis=-1)
        total_err = frozen_err + err.sum(axis=-1)
        tol = np.maximum(epsabs, epsrel * np.abs(value))
        if not np.all(np.isfinite(value)):
            raise QuadratureError("integrand produced non-finite values")
        if np.all(total_err <= tol + frozen_floor + floor.sum(axis=-1)):
            return (value[()], total_err[()]) if value.ndim == 0 else (value, total_err)
        share = 0.5 * tol[..., None] * (hi - lo) / span
        ok = np.all(err <= np.maximum(share, floor), axis=tuple(range(err.ndim - 1)))
        frozen_val = frozen_val + fine[..., ok].sum(axis=-1)
        frozen_err = frozen_err + err[..., ok].sum(axis=-1)
        frozen_floor = frozen_floor + floor[..., ok].sum(axis=-1)
        keep = ~ok
        if keep.sum() * 2 > max_intervals:
            break
        lo_k, mid_k, hi_k = lo[keep], mid[keep], hi[keep]
        lo = np.concatenate([lo_k, mid_k])
        hi = np.concatenate([mid_k, hi_k])
        whole = np.concatenate([left[..., keep], right[..., keep]], axis=-1)
    raise QuadratureError(
        f"adaptive quadrature on [{a:g}, {b:g}] did not converge "
        f"(error estimate {np.max(total_err):.3g}, tolerance {np.min(tol):.3g})")


def log_spaced_points(scale, upper=1.0, factors=(1.0, 10.0, 50.0)):
    """Breakpoints ``factor * scale`` that fall strictly inside ``(0, upper)``."""
    return [f * scale for f in factors if 0.0 < f * scale < upper]
