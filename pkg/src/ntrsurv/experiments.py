"""Monte Carlo studies of posterior coverage, limiting variance, bias and rate.

Every replication draws from its own stream, derived from
``(seed, n, prior, replication)`` with :class:`numpy.random.SeedSequence`, so
results do not depend on execution order or on the number of workers.
"""

import csv
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Tuple

import numpy as np

from .data import GenerativeModel, generate_dataset, risk_summary
from .estimators import aalen_nelson, j_alpha, u_zero
from .exceptions import ConfigError, DataError
from .posterior import continuous_part_moments, posterior_fixed_moments, posterior_update
from .priors import AlphaFamily, PriorSpec, parse_prior
from .sampling import SamplerConfig, credible_interval, sample_chf_values

REPORT_HEADER = ("n", "prior", "reps", "covered", "coverage", "se", "mean_width")


def as_prior(item):
    """Coerce a number (alpha-family exponent), a prior string or a spec."""
    if isinstance(item, PriorSpec):
        return item
    if isinstance(item, str):
        try:
            return AlphaFamily(float(item))
        except ValueError:
            return parse_prior(item)
    return AlphaFamily(float(item))


def prior_label(prior):
    if isinstance(prior, AlphaFamily):
        return f"alpha={prior.alpha:g}"
    return prior.describe()


def replication_rng(seed, n, label, rep):
    """Independent stream for one replication of one study cell."""
    code = zlib.crc32(label.encode("utf-8"))
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(n), code, int(rep)))
    return np.random.default_rng(ss)


def _run_indexed(fn, tasks, n_jobs):
    """Evaluate ``fn`` on each task, in parallel when ``n_jobs > 1``; order is kept."""
    if n_jobs is None or n_jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=int(n_jobs)) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * n_jobs))))


# ------------------------------------------------------------------ coverage

@dataclass(frozen=True)
class CoverageConfig:
    """Settings of the credible-interval coverage study.

    ``alphas`` holds alpha-family exponents or prior strings such as
    ``'beta:c=1'``.
    """

    sample_sizes: Tuple[int, ...] = (10, 100, 1000)
    alphas: Tuple = (0.25, 0.5, 1.0)
    reps: int = 500
    level: float = 0.9
    t_eval: float = 2.0
    model: GenerativeModel = field(default_factory=GenerativeModel)
    draws: int = 1000
    seed: int = 0
    include_continuous: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "alphas", tuple(self.alphas))
        if not self.sample_sizes or min(self.sample_sizes) < 1:
            raise ConfigError("sample sizes must be positive integers")
        if not self.alphas:
            raise ConfigError("alphas must be nonempty")
        if int(self.reps) != self.reps or self.reps < 1:
            raise ConfigError("reps must be a positive integer")
        if not 0.0 < self.level < 1.0:
            raise ConfigError("level must lie in (0,1)")
        if not (self.t_eval > 0 and math.isfinite(self.t_eval)):
            raise ConfigError("t_eval must be positive and finite")
        if not self.model.at_risk_probability(self.t_eval) > 0:
            raise ConfigError(f"Q(t_eval) = 0 at t_eval={self.t_eval:g}")
        if int(self.draws) != self.draws or self.draws < 1:
            raise ConfigError("draws must be a positive integer")
        for a in self.alphas:
            as_prior(a)

    @property
    def priors(self):
        return [as_prior(a) for a in self.alphas]


@dataclass(frozen=True)
class CoverageRow:
    n: int
    prior: str
    reps: int
    covered: int
    coverage: float
    se: float
    mean_width: float
    mean_sd: float = float("nan")


@dataclass(frozen=True)
class StudyResult:
    """Coverage rows keyed by ``(n, prior label)``."""

    rows: Tuple[CoverageRow, ...]
    level: float
    t_eval: float

    def row(self, n, prior):
        label = prior if isinstance(prior, str) and "=" in prior else prior_label(as_prior(prior))
        for r in self.rows:
            if r.n == n and r.prior == label:
                return r
        raise KeyError((n, label))

    def __len__(self):
        return len(self.rows)


def _coverage_task(args):
    cfg, n, prior, rep = args
    label = prior_label(prior)
    rng = replication_rng(cfg.seed, n, label, rep)
    data = generate_dataset(cfg.model, n, rng)
    truth = float(cfg.model.cumulative_hazard(cfg.t_eval))
    post = posterior_update(prior, risk_summary(data))
    scfg = SamplerConfig(draws=cfg.draws, include_continuous=cfg.include_continuous)
    values = sample_chf_values(post, [cfg.t_eval], scfg, rng)[:, 0]
    lo, hi = credible_interval(values, cfg.level)
    return lo <= truth <= hi, hi - lo, float(np.std(values, ddof=1)) if values.size > 1 else 0.0


def run_coverage_study(cfg):
    """Coverage of equal-tailed credible intervals for ``A(t_eval)``.

    For each ``(n, prior)`` cell and each replication: simulate data, update
    the prior, draw ``cfg.draws`` posterior values of ``A(t_eval)`` and check
    whether the interval contains the true cumulative hazard.
    """
    tasks = [(cfg, n, prior, rep)
             for n in cfg.sample_sizes for prior in cfg.priors for rep in range(cfg.reps)]
    out = _run_indexed(_coverage_task, tasks, cfg.n_jobs)
    rows = []
    se = math.sqrt(cfg.level * (1.0 - cfg.level) / cfg.reps)
    k = 0
    for n in cfg.sample_sizes:
        for prior in cfg.priors:
            cell = out[k:k + cfg.reps]
            k += cfg.reps
            covered = int(sum(c for c, _, _ in cell))
            rows.append(CoverageRow(n, prior_label(prior), cfg.reps, covered,
                                    covered / cfg.reps, se,
                                    float(np.mean([w for _, w, _ in cell])),
                                    float(np.mean([s for _, _, s in cell]))))
    return StudyResult(tuple(rows), cfg.level, cfg.t_eval)


# ---------------------------------------------------------------- BvM check

@dataclass(frozen=True)
class BvmRecord:
    """Variance and bias diagnostics at one sample size, averaged over replicates.

    ``sd_scaled`` is the posterior standard deviation of ``sqrt(n) A(t)``
    (Monte Carlo when draws were taken, otherwise from the moment formulas),
    to be compared with ``sqrt(U_0(t))``. ``bias_scaled`` is
    ``n**min(alpha, 1/2) (E[A_d(t) | data] - AN(t))`` with target ``J_alpha(t)``
    for ``alpha <= 1/2`` and 0 otherwise.
    """

    n: int
    prior: str
    reps: int
    t_eval: float
    sd_scaled: float
    sd_scaled_analytic: float
    sd_target: float
    bias_scaled: float
    bias_target: float
    bias_scale_exponent: float
    bias_per_rep: Tuple[float, ...] = ()
    sd_per_rep: Tuple[float, ...] = ()

    def as_dict(self):
        d = asdict(self)
        d.pop("bias_per_rep")
        d.pop("sd_per_rep")
        return d


def _bvm_task(args):
    n, prior, model, t_eval, cfg, seed, rep, moments_only = args
    rng = replication_rng(seed, n, "bvm:" + prior_label(prior), rep)
    data = generate_dataset(model, n, rng)
    risk = risk_summary(data)
    post = posterior_update(prior, risk)
    fm, fv = posterior_fixed_moments(post, t_eval)
    cm, cv = continuous_part_moments(post, t_eval) if cfg.include_continuous else (0.0, 0.0)
    analytic = math.sqrt(n * (fv + cv))
    if not moments_only:
        values = sample_chf_values(post, [t_eval], cfg, rng)[:, 0]
        sd = float(np.std(values, ddof=1)) * math.sqrt(n) if values.size > 1 else analytic
    else:
        sd = analytic
    return fm - float(aalen_nelson(risk)(t_eval)), sd, analytic


def run_bvm_diagnostic(n, prior, model=None, t_eval=2.0, cfg=None, reps=1, seed=0, n_jobs=1,
                       moments_only=False):
    """Compare posterior spread and centering with their asymptotic limits.

    ``moments_only=True`` skips Monte Carlo and uses the posterior moment
    formulas only; the bias statistic never needs draws.
    """
    model = GenerativeModel() if model is None else model
    cfg = SamplerConfig(draws=1000) if cfg is None else cfg
    prior = as_prior(prior)
    if int(n) != n or n < 1:
        raise ConfigError("n must be a positive integer")
    if int(reps) != reps or reps < 1:
        raise ConfigError("reps must be a positive integer")
    alpha = prior.alpha_smoothness
    if alpha is None:
        raise ConfigError(f"{prior_label(prior)}: the prior has no smoothness exponent near 0")
    tasks = [(int(n), prior, model, float(t_eval), cfg, seed, r, bool(moments_only))
             for r in range(int(reps))]
    out = _run_indexed(_bvm_task, tasks, n_jobs)
    expo = min(alpha, 0.5)
    bias = [n ** expo * b for b, _, _ in out]
    target = j_alpha(model, alpha, t_eval) if alpha <= 0.5 else 0.0
    return BvmRecord(int(n), prior_label(prior), int(reps), float(t_eval),
                     float(np.mean([s for _, s, _ in out])),
                     float(np.mean([a for _, _, a in out])),
                     math.sqrt(u_zero(model, t_eval)),
                     float(np.mean(bias)), float(target), expo,
                     tuple(bias), tuple(s for _, s, _ in out))


# ---------------------------------------------------------------- rate study

@dataclass(frozen=True)
class RateRow:
    prior: str
    n: int
    reps: int
    mean_iqr: float
    mean_radius: float
    mean_abs_shift: float


@dataclass(frozen=True)
class RateStudy:
    """Per-``n`` posterior widths and fitted log-log slopes per prior.

    ``slopes[label]`` maps ``'iqr'`` (the primary statistic), ``'radius'``
    (90% quantile of ``|A(t) - A_0(t)|`` under the posterior) and ``'shift'``
    (``|E[A(t) | data] - AN(t)|``) to least-squares slopes of log value
    against log n. ``expected[label]`` is ``-min(alpha, 1/2)``.
    """

    rows: Tuple[RateRow, ...]
    slopes: dict
    expected: dict


def _rate_task(args):
    n, prior, model, t_eval, draws, seed, rep = args
    rng = replication_rng(seed, n, "rate:" + prior_label(prior), rep)
    data = generate_dataset(model, n, rng)
    risk = risk_summary(data)
    post = posterior_update(prior, risk)
    values = sample_chf_values(post, [t_eval], SamplerConfig(draws=draws), rng)[:, 0]
    q1, q3 = np.quantile(values, [0.25, 0.75])
    truth = float(model.cumulative_hazard(t_eval))
    radius = float(np.quantile(np.abs(values - truth), 0.9))
    fm, _ = posterior_fixed_moments(post, t_eval)
    cm, _ = continuous_part_moments(post, t_eval)
    shift = abs(fm + cm - float(aalen_nelson(risk)(t_eval)))
    return float(q3 - q1), radius, shift


def _slope(ns, ys):
    ys = np.asarray(ys, dtype=float)
    if np.any(ys <= 0):
        return float("nan")
    return float(np.polyfit(np.log(ns), np.log(ys), 1)[0])


def run_rate_study(alphas, sample_sizes, reps=100, model=None, t_eval=2.0, seed=0,
                   draws=1000, n_jobs=1):
    """Fit the decay of the posterior interquartile width of ``A(t_eval)`` in n."""
    model = GenerativeModel() if model is None else model
    ns = sorted(int(n) for n in sample_sizes)
    if len(ns) < 3 or ns[-1] < 100 * ns[0]:
        raise ConfigError("rate study needs >= 3 sample sizes spanning >= 2 decades")
    if int(reps) != reps or reps < 1:
        raise ConfigError("reps must be a positive integer")
    priors = [as_prior(a) for a in alphas]
    rows, slopes, expected = [], {}, {}
    for prior in priors:
        label = prior_label(prior)
        tasks = [(n, prior, model, float(t_eval), int(draws), seed, r)
                 for n in ns for r in range(int(reps))]
        out = np.array(_run_indexed(_rate_task, tasks, n_jobs)).reshape(len(ns), int(reps), 3)
        means = out.mean(axis=1)
        for n, m in zip(ns, means):
            rows.append(RateRow(label, n, int(reps), *map(float, m)))
        slopes[label] = {"iqr": _slope(ns, means[:, 0]),
                         "radius": _slope(ns, means[:, 1]),
                         "shift": _slope(ns, means[:, 2])}
        a = prior.alpha_smoothness
        expected[label] = -min(a, 0.5) if a is not None else float("nan")
    return RateStudy(tuple(rows), slopes, expected)


# ------------------------------------------------------------------- reports

def band(level, reps):
    """Nominal level and the +/- 2 standard-error band around it."""
    half = 2.0 * math.sqrt(level * (1.0 - level) / reps)
    return level - half, level, level + half


def emit_report(result, fmt, path):
    """Write a coverage study as CSV or a self-contained SVG figure."""
    text = report_text(result, fmt)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def report_text(result, fmt):
    """The report as a string, in ``'csv'`` or ``'svg'`` format."""
    if not result.rows:
        raise DataError("refusing to write an empty report")
    if fmt == "csv":
        return _report_csv(result)
    if fmt == "svg":
        return _report_svg(result)
    raise ConfigError(f"unknown report format {fmt!r}")


def _report_csv(result):
    lines = [",".join(REPORT_HEADER)]
    for r in result.rows:
        lines.append(f"{r.n},{r.prior},{r.reps},{r.covered},{r.coverage:.6f},"
                     f"{r.se:.6f},{r.mean_width:.6f}")
    return "\n".join(lines) + "\n"


def read_report(path):
    """Parse a CSV written by :func:`emit_report` into a list of dicts."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_HEADER:
            raise DataError(f"{path}: unexpected header {reader.fieldnames}")
        rows = []
        for rec in reader:
            rows.append({"n": int(rec["n"]), "prior": rec["prior"], "reps": int(rec["reps"]),
                         "covered": int(rec["covered"]), "coverage": float(rec["coverage"]),
                         "se": float(rec["se"]), "mean_width": float(rec["mean_width"])})
    return rows


def _report_svg(result):
    labels = list(dict.fromkeys(r.prior for r in result.rows))
    pw, ph, pad = 240, 200, 40
    width = pad + len(labels) * (pw + pad)
    height = ph + 2 * pad
    level = result.level
    reps = result.rows[0].reps
    lo_band, _, hi_band = band(level, reps)
    covs = [r.coverage for r in result.rows] + [lo_band, hi_band]
    y_lo = max(0.0, min(covs) - 0.05)
    y_hi = min(1.0, max(covs) + 0.05)
    logs = [math.log10(r.n) for r in result.rows]
    x_lo, x_hi = min(logs) - 0.25, max(logs) + 0.25

    def sx(i, v):
        return pad + i * (pw + pad) + (v - x_lo) / (x_hi - x_lo) * pw

    def sy(v):
        return pad + (y_hi - v) / (y_hi - y_lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    for i, label in enumerate(labels):
        x0 = pad + i * (pw + pad)
        out.append(f'<rect x="{x0}" y="{pad}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
        out.append(f'<text x="{x0 + pw / 2:.1f}" y="{pad - 10}" text-anchor="middle">{label}</text>')
        for v in (lo_band, level, hi_band):
            out.append(f'<line x1="{x0}" x2="{x0 + pw}" y1="{sy(v):.2f}" y2="{sy(v):.2f}" '
                       f'stroke="black" stroke-width="1"/>')
        rows = sorted((r for r in result.rows if r.prior == label), key=lambda r: r.n)
        pts = " ".join(f"{sx(i, math.log10(r.n)):.2f},{sy(r.coverage):.2f}" for r in rows)
        out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-dasharray="2,3"/>')
        for r in rows:
            cx = sx(i, math.log10(r.n))
            out.append(f'<circle cx="{cx:.2f}" cy="{sy(r.coverage):.2f}" r="2.5" fill="black"/>')
            out.append(f'<text x="{cx:.2f}" y="{pad + ph + 14}" text-anchor="middle">{r.n}</text>')
        out.append(f'<text x="{x0 + pw / 2:.1f}" y="{pad + ph + 30}" text-anchor="middle">n (log scale)</text>')
    for v in (y_lo, level, y_hi):
        out.append(f'<text x="{pad - 4}" y="{sy(v) + 4:.2f}" text-anchor="end">{v:.2f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
