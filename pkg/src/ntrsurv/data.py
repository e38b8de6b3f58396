"""Right-censored samples and their counting-process summaries."""

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError

CSV_HEADER = ("time", "event")


class TiedEventsWarning(UserWarning):
    """Several uncensored observations share one time point."""


@dataclass(frozen=True)
class CensoredObservation:
    """One observed pair ``(T, delta)``: follow-up time and death indicator."""

    time: float
    event: bool

    def __post_init__(self):
        t = float(self.time)
        if not math.isfinite(t) or t < 0:
            raise DataError(f"observation time must be finite and >= 0, got {self.time!r}")
        object.__setattr__(self, "time", t)
        object.__setattr__(self, "event", bool(self.event))


@dataclass(frozen=True, eq=False)
class Dataset:
    """An immutable sample of right-censored observations sorted by time.

    The sort is stable, so observations sharing a time keep their input order.
    Use :meth:`from_arrays` to build one from parallel arrays.
    """

    times: np.ndarray
    events: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        events = np.asarray(self.events).reshape(-1)
        if times.shape != events.shape:
            raise DataError("times and events must have the same length")
        if events.dtype != bool:
            if not np.all(np.isin(events, (0, 1))):
                raise DataError("event indicators must be 0/1 or boolean")
            events = events.astype(bool)
        if times.size and (not np.all(np.isfinite(times)) or np.any(times < 0)):
            raise DataError("observation times must be finite and >= 0")
        order = np.argsort(times, kind="stable")
        times = times[order]
        events = events[order]
        times.setflags(write=False)
        events.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "events", events)

    @classmethod
    def from_arrays(cls, times, events=None):
        times = np.asarray(times, dtype=float)
        if events is None:
            events = np.ones(times.shape, dtype=bool)
        return cls(times, events)

    @classmethod
    def from_observations(cls, observations):
        obs = list(observations)
        return cls(np.array([o.time for o in obs], dtype=float),
                   np.array([o.event for o in obs], dtype=bool))

    @property
    def n(self):
        return int(self.times.size)

    @property
    def observations(self):
        return tuple(CensoredObservation(t, e) for t, e in zip(self.times, self.events))

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (np.array_equal(self.times, other.times)
                and np.array_equal(self.events, other.events))

    __hash__ = None


@dataclass(frozen=True)
class GenerativeModel:
    """Exponential survival times censored by independent exponential times.

    Parameters
    ----------
    survival_rate : float
        Rate of the survival time ``X``; the true cumulative hazard is
        ``A_0(t) = survival_rate * t``.
    censoring_rate : float
        Rate of the censoring time ``C``; zero disables censoring.
    """

    survival_rate: float = 1.0
    censoring_rate: float = 0.25

    def __post_init__(self):
        if not (self.survival_rate > 0 and math.isfinite(self.survival_rate)):
            raise DataError("survival_rate must be positive and finite")
        if not (self.censoring_rate >= 0 and math.isfinite(self.censoring_rate)):
            raise DataError("censoring_rate must be nonnegative and finite")

    def cumulative_hazard(self, t):
        return self.survival_rate * np.asarray(t, dtype=float)

    def hazard(self, t):
        return np.full(np.shape(t), self.survival_rate, dtype=float)

    def at_risk_probability(self, t):
        """``Q(t) = P(T >= t)`` for the observed time ``T = min(X, C)``."""
        return np.exp(-(self.survival_rate + self.censoring_rate) * np.asarray(t, dtype=float))

    @property
    def event_probability(self):
        return self.survival_rate / (self.survival_rate + self.censoring_rate)


def generate_dataset(model, n, rng):
    """Draw ``n`` censored observations from ``model``.

    ``rng`` must be a :class:`numpy.random.Generator` owned by the caller.
    """
    if int(n) != n or n < 1:
        raise DataError(f"sample size must be a positive integer, got {n!r}")
    n = int(n)
    x = rng.exponential(1.0 / model.survival_rate, size=n)
    if model.censoring_rate > 0:
        c = rng.exponential(1.0 / model.censoring_rate, size=n)
    else:
        c = np.full(n, np.inf)
    return Dataset(np.minimum(x, c), x <= c)


@dataclass(frozen=True, eq=False)
class RiskSummary:
    """Counting-process view of a dataset on its distinct event times.

    Attributes
    ----------
    event_times : ndarray
        Distinct uncensored times ``t_1 < ... < t_q``.
    delta_n : ndarray of int
        Number of deaths at each event time.
    y : ndarray of int
        Risk-set size ``Y(t_i) = #{T_j >= t_i}``.
    y_plus : ndarray of int
        ``y - delta_n``.
    """

    event_times: np.ndarray
    delta_n: np.ndarray
    y: np.ndarray
    y_plus: np.ndarray
    n: int
    obs_times: np.ndarray = field(repr=False)
    obs_events: np.ndarray = field(repr=False)

    @classmethod
    def empty(cls):
        """A summary with no subjects, so that ``Y`` is identically zero."""
        e = np.zeros(0)
        i = np.zeros(0, dtype=int)
        return cls(e, i, i, i, 0, e, np.zeros(0, dtype=bool))

    @property
    def q(self):
        return int(self.event_times.size)

    def at_risk(self, t):
        """``Y(t)``: number of observations with ``T >= t``."""
        t = np.asarray(t, dtype=float)
        out = self.n - np.searchsorted(self.obs_times, t, side="left")
        return out if out.ndim else int(out)

    def deaths(self, t):
        """``N(t)``: number of uncensored observations with ``T <= t``."""
        t = np.asarray(t, dtype=float)
        cum = np.concatenate([[0], np.cumsum(self.delta_n)])
        out = cum[np.searchsorted(self.event_times, t, side="right")]
        return out if out.ndim else int(out)

    def risk_intervals(self, tau):
        """Partition ``[0, tau]`` into intervals on which ``Y`` is constant.

        Returns ``(lo, hi, y)``; ``Y(s) = y[j]`` for ``s`` in ``(lo[j], hi[j]]``.
        """
        tau = float(tau)
        cuts = np.unique(self.obs_times[self.obs_times < tau])
        cuts = cuts[cuts > 0]
        lo = np.concatenate([[0.0], cuts])
        hi = np.concatenate([cuts, [tau]])
        y = self.at_risk(hi)
        return lo, hi, np.asarray(y, dtype=int)


def risk_summary(data):
    """Summarize ``data`` into event times, death counts and risk sets.

    Warns with :class:`TiedEventsWarning` when some event time carries more
    than one death; the posterior update handles ties, but the asymptotic
    theory assumes a continuous cumulative hazard.
    """
    if data.n == 0:
        raise DataError("cannot summarize an empty dataset")
    times = data.times
    ev_times = times[data.events]
    event_times, delta_n = np.unique(ev_times, return_counts=True)
    y = data.n - np.searchsorted(times, event_times, side="left")
    if np.any(delta_n > 1):
        warnings.warn(f"{int(np.sum(delta_n > 1))} event time(s) carry tied deaths",
                      TiedEventsWarning, stacklevel=2)
    for arr in (event_times, delta_n, y):
        arr.setflags(write=False)
    y_plus = y - delta_n
    y_plus.setflags(write=False)
    return RiskSummary(event_times, delta_n.astype(int), y.astype(int), y_plus.astype(int),
                       data.n, times, data.events)


def empirical_Q(data, t):
    """Fraction of observations still at risk at ``t``: ``#{T_i >= t} / n``."""
    if data.n == 0:
        raise DataError("empirical_Q needs a nonempty dataset")
    t = np.asarray(t, dtype=float)
    out = (data.n - np.searchsorted(data.times, t, side="left")) / data.n
    return out if out.ndim else float(out)


def write_csv(data, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for t, e in zip(data.times, data.events):
            writer.writerow((f"{t:.17g}", int(e)))


def read_csv(path):
    """Read a ``time,event`` CSV file; errors name the offending line."""
    times, events = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise DataError(f"{path}: line 1: header must be exactly 'time,event'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
            raw_t, raw_e = (s.strip() for s in row)
            try:
                t = float(raw_t)
            except ValueError:
                raise DataError(f"{path}: line {lineno}: time {raw_t!r} is not numeric") from None
            if not math.isfinite(t) or t < 0:
                raise DataError(f"{path}: line {lineno}: time must be finite and >= 0")
            if raw_e not in ("0", "1"):
                raise DataError(f"{path}: line {lineno}: event must be 0 or 1, got {raw_e!r}")
            times.append(t)
            events.append(raw_e == "1")
    return Dataset(np.array(times, dtype=float), np.array(events, dtype=bool))


def dataset_io(path, mode, data=None):
    """Read (``mode='read'``) or write (``mode='write'``) a dataset CSV."""
    if mode == "read":
        return read_csv(path)
    if mode == "write":
        if data is None:
            raise DataError("write mode needs a dataset")
        write_csv(data, path)
        return None
    raise ValueError(f"mode must be 'read' or 'write', got {mode!r}")
