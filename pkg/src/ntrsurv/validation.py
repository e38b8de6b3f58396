"""Input checks shared by the estimator classes."""

import numbers

import numpy as np

from .exceptions import DataError


def check_survival_data(time, event=None):
    """Validate follow-up times and event indicators.

    Returns float and bool arrays of equal length. ``event=None`` marks every
    observation as uncensored.
    """
    time = np.asarray(time, dtype=float)
    if time.ndim == 2 and time.shape[1] == 1:
        time = time[:, 0]
    if time.ndim != 1:
        raise DataError(f"time must be one-dimensional, got shape {time.shape}")
    if time.size == 0:
        raise DataError("at least one observation is required")
    if not np.all(np.isfinite(time)) or np.any(time < 0):
        raise DataError("times must be finite and nonnegative")
    if event is None:
        return time, np.ones(time.size, dtype=bool)
    event = np.asarray(event)
    if event.shape != time.shape:
        raise DataError(f"event has shape {event.shape}, expected {time.shape}")
    if event.dtype != bool:
        if not np.all(np.isin(event, (0, 1))):
            raise DataError("event indicators must be 0/1 or boolean")
        event = event.astype(bool)
    return time, event


def check_random_state(seed):
    """Turn ``None``, an int or a Generator into a :class:`numpy.random.Generator`."""
    if seed is None or isinstance(seed, (numbers.Integral, np.integer)):
        return np.random.default_rng(seed)
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    raise ValueError(f"{seed!r} cannot be used to seed a numpy Generator")
