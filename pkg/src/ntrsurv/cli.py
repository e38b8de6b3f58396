"""Command-line interface.

Every subcommand reads its settings from one option table. Values come from
defaults, then an optional ``key = value`` config file, then command-line
flags, later sources winning. The effective configuration is echoed to
standard error before the work starts.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .data import GenerativeModel, generate_dataset, read_csv, risk_summary, write_csv
from .estimators import aalen_nelson
from .exceptions import ConfigError, DataError, NumericalError
from .experiments import (CoverageConfig, as_prior, report_text, run_bvm_diagnostic,
                          run_coverage_study, run_rate_study)
from .posterior import continuous_part_moments, posterior_fixed_moments, posterior_update
from .priors import check_conditions, parse_prior
from .sampling import SamplerConfig, sample_chf_paths

OUTPUT_DIR_ENV = "NTRSURV_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

SUBCOMMANDS = ("simulate", "fit", "sample", "coverage", "bvm-check", "rate-study", "conditions")


@dataclass(frozen=True)
class Option:
    key: str
    kind: str
    default: object
    help: str
    commands: tuple


def _opt(key, kind, default, help, *commands):
    return Option(key, kind, default, help, commands)


OPTIONS = (
    _opt("n", "ints", None, "sample size(s), comma separated",
         "simulate", "coverage", "bvm-check", "rate-study"),
    _opt("rates", "floats", "1,0.25", "survival and censoring rates",
         "simulate", "coverage", "bvm-check", "rate-study"),
    _opt("seed", "int", 0, "master random seed",
         "simulate", "sample", "coverage", "bvm-check", "rate-study"),
    _opt("out", "str", "-", "output path, '-' for standard output",
         "simulate", "fit", "sample", "coverage", "bvm-check", "rate-study", "conditions"),
    _opt("data", "str", None, "input CSV with columns time,event", "fit", "sample"),
    _opt("prior", "str", "alpha:a=1", "prior as family:param=value[,param=value]",
         "fit", "sample", "bvm-check", "conditions"),
    _opt("estimate-out", "str", "", "also write the Aalen-Nelson estimate (time,value) here", "fit"),
    _opt("tau", "float", 2.0, "time horizon", "sample", "conditions"),
    _opt("draws", "int", 1000, "posterior Monte Carlo draws",
         "sample", "coverage", "bvm-check", "rate-study"),
    _opt("epsilon", "float", None, "smallest simulated continuous-part jump", "sample"),
    _opt("compensate", "bool", True, "add the mean of the truncated jumps as drift", "sample"),
    _opt("alpha", "strs", "0.25,0.5,1", "alpha-family exponents or prior strings",
         "coverage", "rate-study"),
    _opt("reps", "int", None, "replications per cell", "coverage", "bvm-check", "rate-study"),
    _opt("level", "float", 0.9, "nominal credible level", "coverage"),
    _opt("t-eval", "float", 2.0, "evaluation time", "coverage", "bvm-check", "rate-study"),
    _opt("format", "str", "csv", "report format: csv or svg", "coverage"),
    _opt("continuous", "bool", True, "include the continuous posterior part", "coverage", "bvm-check"),
    _opt("jobs", "int", 1, "worker processes", "coverage", "bvm-check", "rate-study"),
    _opt("grid", "int", 64, "grid points per axis", "conditions"),
)
OPTION_BY_KEY = {o.key: o for o in OPTIONS}

# per-command defaults that differ from the table
COMMAND_DEFAULTS = {
    "simulate": {"n": "100"},
    "coverage": {"n": "10,100,1000", "reps": 500},
    "bvm-check": {"n": "5000", "reps": 1},
    "rate-study": {"n": "100,1000,10000", "reps": 100, "alpha": "0.25,1"},
}
REQUIRED = {"fit": ("data",), "sample": ("data",)}


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    options: dict


def options_for(command):
    return [o for o in OPTIONS if command in o.commands]


def _convert(key, kind, raw):
    if raw is None:
        return None
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "ints":
            return [int(v) for v in text.split(",") if v.strip()]
        if kind == "floats":
            return [float(v) for v in text.split(",") if v.strip()]
        if kind == "strs":
            return [v.strip() for v in text.split(",") if v.strip()]
        if kind == "bool":
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}") from None
    return text


def _split_prior_list(raw):
    """Split ``'0.25,beta:c=1,lam=2'`` into items, keeping parameter lists intact."""
    items = []
    for part in raw:
        if items and "=" in part and ":" not in part and ":" in items[-1]:
            items[-1] = items[-1] + "," + part
        else:
            items.append(part)
    return items


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"config file {path}: {exc.strerror}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
        values[key.strip().replace("_", "-")] = value.strip()
    return values


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ntrsurv",
        description="Posterior inference for the cumulative hazard under neutral-to-the-right priors.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for command in SUBCOMMANDS:
        p = sub.add_parser(command, help=f"{command} subcommand")
        p.add_argument("--config", default=None, help="key = value configuration file")
        for o in options_for(command):
            default = COMMAND_DEFAULTS.get(command, {}).get(o.key, o.default)
            p.add_argument(f"--{o.key}", dest=o.key.replace("-", "_"), default=None,
                           help=f"{o.help} (default: {default})")
    return parser


def parse_config(argv, file=None):
    """Merge defaults, config file and flags into a validated :class:`RunConfig`."""
    args = build_parser().parse_args(argv)
    command = args.subcommand
    allowed = {o.key: o for o in options_for(command)}
    merged = {k: COMMAND_DEFAULTS.get(command, {}).get(k, o.default) for k, o in allowed.items()}
    path = file if file is not None else args.config
    if path:
        for key, value in read_config_file(path).items():
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} for {command}")
            merged[key] = value
    for key in allowed:
        value = getattr(args, key.replace("-", "_"))
        if value is not None:
            merged[key] = value
    opts = {k: _convert(k, allowed[k].kind, v) for k, v in merged.items()}
    if "alpha" in opts:
        opts["alpha"] = _split_prior_list(opts["alpha"])
    for key in REQUIRED.get(command, ()):
        if not opts.get(key):
            raise ConfigError(f"missing required key {key!r} for {command}")
    _validate(command, opts)
    cfg = RunConfig(command, opts)
    print(f"# {command} " + " ".join(f"{k}={_show(v)}" for k, v in sorted(opts.items())),
          file=sys.stderr)
    return cfg


def _show(v):
    if isinstance(v, list):
        return ",".join(str(x) for x in v)
    return str(v)


def _validate(command, opts):
    if "level" in opts and not 0.0 < opts["level"] < 1.0:
        raise ConfigError("level must lie in (0,1)")
    if "n" in opts:
        if not opts["n"] or min(opts["n"]) < 1:
            raise ConfigError("n: sample sizes must be positive integers")
        if command in ("simulate", "bvm-check") and len(opts["n"]) != 1:
            raise ConfigError(f"n: {command} takes a single sample size")
    if "rates" in opts:
        r = opts["rates"]
        if len(r) != 2 or not r[0] > 0 or not r[1] >= 0:
            raise ConfigError("rates: expected survival_rate>0,censoring_rate>=0")
    for key in ("reps", "draws", "grid", "jobs"):
        if key in opts and opts[key] is not None and opts[key] < 1:
            raise ConfigError(f"{key} must be a positive integer")
    for key in ("tau", "t-eval"):
        if key in opts and not (opts[key] > 0 and math.isfinite(opts[key])):
            raise ConfigError(f"{key} must be positive and finite")
    if opts.get("epsilon") is not None and not 0.0 < opts["epsilon"] <= 1.0:
        raise ConfigError("epsilon must lie in (0, 1]")
    if "format" in opts and opts["format"] not in ("csv", "svg"):
        raise ConfigError("format must be csv or svg")
    if "prior" in opts:
        parse_prior(opts["prior"])
    if "alpha" in opts:
        for a in opts["alpha"]:
            as_prior(a)


# ------------------------------------------------------------------ outputs

def _resolve_out(path):
    if path in ("-", ""):
        return path
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _write_text(path, text):
    path = _resolve_out(path)
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror}") from None


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _model(opts):
    return GenerativeModel(*opts["rates"])


def _load(opts):
    try:
        return read_csv(opts["data"])
    except OSError as exc:
        raise DataError(f"cannot read {opts['data']}: {exc.strerror}") from None


def _g(x):
    return f"{x:.12g}"


# ----------------------------------------------------------------- handlers

def cmd_simulate(opts):
    rng = np.random.default_rng(opts["seed"])
    data = generate_dataset(_model(opts), opts["n"][0], rng)
    path = _resolve_out(opts["out"])
    if path == "-":
        rows = [(f"{t:.17g}", int(e)) for t, e in zip(data.times, data.events)]
        sys.stdout.write(_csv_text(("time", "event"), rows))
    else:
        write_csv(data, path)


def cmd_fit(opts):
    data = _load(opts)
    risk = risk_summary(data)
    post = posterior_update(parse_prior(opts["prior"]), risk)
    cum_mean, cum_var = posterior_fixed_moments(post, risk.event_times)
    rows = []
    for i, law in enumerate(post.fixed_jumps):
        cm, cv = continuous_part_moments(post, law.location)
        rows.append((f"{law.location:.17g}", law.delta_n, law.y, _g(law.mean), _g(law.variance),
                     _g(cum_mean[i] + cm), _g(cum_var[i] + cv)))
    _write_text(opts["out"], _csv_text(
        ("time", "deaths", "at_risk", "jump_mean", "jump_var", "chf_mean", "chf_var"), rows))
    if opts["estimate-out"]:
        est = aalen_nelson(risk)
        _write_text(opts["estimate-out"], _csv_text(
            ("time", "value"), [(f"{t:.17g}", _g(v)) for t, v in zip(est.times, est.values)]))


def cmd_sample(opts):
    data = _load(opts)
    post = posterior_update(parse_prior(opts["prior"]), risk_summary(data))
    cfg = SamplerConfig(epsilon=opts["epsilon"], draws=opts["draws"], seed=opts["seed"],
                        compensate_mean=opts["compensate"])
    paths = sample_chf_paths(post, opts["tau"], cfg, cfg.make_rng())
    rows = []
    for d, path in enumerate(paths):
        rows.extend((d, f"{t:.17g}", f"{s:.17g}") for t, s in zip(path.times, path.sizes))
    _write_text(opts["out"], _csv_text(("draw", "time", "jump_size"), rows))


def cmd_coverage(opts):
    cfg = CoverageConfig(sample_sizes=opts["n"], alphas=opts["alpha"], reps=opts["reps"],
                         level=opts["level"], t_eval=opts["t-eval"], model=_model(opts),
                         draws=opts["draws"], seed=opts["seed"],
                         include_continuous=opts["continuous"], n_jobs=opts["jobs"])
    result = run_coverage_study(cfg)
    _write_text(opts["out"], report_text(result, opts["format"]))


def cmd_bvm_check(opts):
    cfg = SamplerConfig(draws=opts["draws"], include_continuous=opts["continuous"])
    rec = run_bvm_diagnostic(opts["n"][0], opts["prior"], _model(opts), opts["t-eval"], cfg,
                             reps=opts["reps"], seed=opts["seed"], n_jobs=opts["jobs"])
    _write_text(opts["out"], json.dumps(rec.as_dict(), indent=2, sort_keys=True) + "\n")


def cmd_rate_study(opts):
    res = run_rate_study(opts["alpha"], opts["n"], reps=opts["reps"], model=_model(opts),
                         t_eval=opts["t-eval"], seed=opts["seed"], draws=opts["draws"],
                         n_jobs=opts["jobs"])
    rows = [(r.prior, r.n, r.reps, _g(r.mean_iqr), _g(r.mean_radius), _g(r.mean_abs_shift))
            for r in res.rows]
    text = _csv_text(("prior", "n", "reps", "mean_iqr", "mean_radius", "mean_abs_shift"), rows)
    for label, s in res.slopes.items():
        text += (f"# slope {label}: iqr={s['iqr']:.4f} radius={s['radius']:.4f} "
                 f"shift={s['shift']:.4f} expected={res.expected[label]:.4f}\n")
    _write_text(opts["out"], text)


def cmd_conditions(opts):
    report = check_conditions(parse_prior(opts["prior"]), opts["tau"], grid=opts["grid"])
    _write_text(opts["out"], report.format() + "\n")


HANDLERS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "sample": cmd_sample,
    "coverage": cmd_coverage,
    "bvm-check": cmd_bvm_check,
    "rate-study": cmd_rate_study,
    "conditions": cmd_conditions,
}


def dispatch(cfg):
    """Run the handler for ``cfg``; returns a process exit status."""
    try:
        HANDLERS[cfg.subcommand](cfg.options)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
