import json
import subprocess
import sys

import pytest

from ntrsurv import cli
from ntrsurv.exceptions import ConfigError


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_coverage_lists():
    cfg = cli.parse_config(["coverage", "--alpha", "0.25,1", "--n", "10,100,1000",
                            "--reps", "500", "--seed", "7"])
    assert cfg.options["alpha"] == ["0.25", "1"]
    assert cfg.options["n"] == [10, 100, 1000]
    assert cfg.options["reps"] == 500 and cfg.options["seed"] == 7


def test_level_out_of_range(capsys):
    with pytest.raises(ConfigError, match=r"level must lie in \(0,1\)"):
        cli.parse_config(["coverage", "--level", "1.5"])
    code, _, err = run(["coverage", "--level", "1.5"], capsys)
    assert code == 2 and "level must lie in (0,1)" in err


def test_precedence(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("# provenance\nseed = 1\nreps = 3  # small\n")
    cfg = cli.parse_config(["coverage", "--config", str(cfgfile), "--seed", "2"])
    assert cfg.options["seed"] == 2 and cfg.options["reps"] == 3


def test_config_file_unknown_key(tmp_path):
    cfgfile = tmp_path / "run.cfg"
    cfgfile.write_text("bogus = 1\n")
    with pytest.raises(ConfigError, match="bogus"):
        cli.parse_config(["coverage", "--config", str(cfgfile)])


def test_type_mismatch_names_key():
    with pytest.raises(ConfigError, match="reps"):
        cli.parse_config(["coverage", "--reps", "many"])


def test_missing_required_key():
    with pytest.raises(ConfigError, match="data"):
        cli.parse_config(["fit"])


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.parse_config(["coverage", "--nope", "1"])
    assert exc.value.code == 2


def test_simulate_fit_pipeline(tmp_path, capsys):
    d = tmp_path / "d.csv"
    code, _, err = run(["simulate", "--n", "100", "--rates", "1,0.25", "--seed", "3",
                        "--out", str(d)], capsys)
    assert code == 0 and "seed=3" in err
    lines = d.read_text().splitlines()
    assert lines[0] == "time,event" and len(lines) == 101
    post = tmp_path / "post.csv"
    est = tmp_path / "an.csv"
    code, _, _ = run(["fit", "--data", str(d), "--prior", "beta:c=1", "--out", str(post),
                      "--estimate-out", str(est)], capsys)
    assert code == 0
    assert post.read_text().startswith("time,deaths,at_risk,jump_mean,jump_var,chf_mean,chf_var")
    assert est.read_text().startswith("time,value")


def test_outputs_byte_identical(tmp_path, capsys):
    for name in ("a.csv", "b.csv"):
        assert run(["simulate", "--n", "30", "--seed", "5", "--out", str(tmp_path / name)], capsys)[0] == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    outs = []
    for name in ("p1.csv", "p2.csv"):
        run(["sample", "--data", str(tmp_path / "a.csv"), "--draws", "3", "--seed", "1",
             "--out", str(tmp_path / name)], capsys)
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].decode().startswith("draw,time,jump_size")


def test_conditions(capsys):
    code, out, _ = run(["conditions", "--prior", "alpha:a=0.25"], capsys)
    assert code == 0
    fields = dict(line.split(" = ") for line in out.strip().splitlines())
    assert abs(float(fields["a2_alpha_hat"]) - 0.25) < 0.05


def test_bvm_check_json(capsys):
    code, out, _ = run(["bvm-check", "--n", "300", "--draws", "200"], capsys)
    assert code == 0
    rec = json.loads(out)
    assert rec["n"] == 300 and rec["sd_target"] > 2.9


def test_coverage_svg_and_env_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
    code, _, _ = run(["coverage", "--n", "10,20", "--alpha", "1", "--reps", "3",
                      "--draws", "100", "--format", "svg", "--out", "cov.svg"], capsys)
    assert code == 0 and (tmp_path / "cov.svg").read_text().startswith("<svg")


def test_rate_study_output(capsys):
    code, out, _ = run(["rate-study", "--n", "10,100,1000", "--alpha", "1", "--reps", "2",
                        "--draws", "100"], capsys)
    assert code == 0 and "# slope alpha=1" in out


def test_exit_codes(tmp_path, capsys):
    assert run(["fit", "--data", str(tmp_path / "missing.csv")], capsys)[0] == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("time,event\nabc,1\n")
    code, _, err = run(["fit", "--data", str(bad)], capsys)
    assert code == 3 and "line 2" in err
    assert run(["conditions", "--prior", "weibull:k=1"], capsys)[0] == 2


def test_option_table_parity():
    # every key is in the help text of every subcommand that accepts it, and
    # every subcommand has a handler
    assert set(cli.HANDLERS) == set(cli.SUBCOMMANDS)
    parser = cli.build_parser()
    sub = next(a for a in parser._actions if a.dest == "subcommand")
    for command, p in sub.choices.items():
        text = p.format_help()
        for o in cli.options_for(command):
            assert f"--{o.key}" in text
        flags = {s for a in p._actions for s in a.option_strings if s.startswith("--")}
        assert flags == {f"--{o.key}" for o in cli.options_for(command)} | {"--help", "--config"}


class _Recorder(dict):
    def __init__(self, *a):
        super().__init__(*a)
        self.used = set()

    def __getitem__(self, key):
        self.used.add(key)
        return super().__getitem__(key)

    def get(self, key, default=None):
        self.used.add(key)
        return super().get(key, default)


def test_handlers_consume_every_option(tmp_path, monkeypatch):
    data = tmp_path / "d.csv"
    cli.main(["simulate", "--n", "20", "--out", str(data)])
    small = {
        "simulate": ["--n", "5"],
        "fit": ["--data", str(data), "--estimate-out", str(tmp_path / "e.csv")],
        "sample": ["--data", str(data), "--draws", "2"],
        "coverage": ["--n", "5,10", "--alpha", "1", "--reps", "2", "--draws", "20"],
        "bvm-check": ["--n", "50", "--draws", "20"],
        "rate-study": ["--n", "5,50,500", "--alpha", "1", "--reps", "1", "--draws", "20"],
        "conditions": ["--grid", "32"],
    }
    for command in cli.SUBCOMMANDS:
        cfg = cli.parse_config([command, "--out", str(tmp_path / f"{command}.out")] + small[command])
        rec = _Recorder(cfg.options)
        cli.HANDLERS[command](rec)
        assert rec.used == set(cfg.options), command


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "ntrsurv.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for command in cli.SUBCOMMANDS:
        assert command in out.stdout
