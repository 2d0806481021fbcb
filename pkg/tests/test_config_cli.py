import csv
import json
import math

import pytest

from radnls.cli import build_parser, run_command
from radnls.config import Config, ConfigError, keys, load_config, parse_config, parse_value
from radnls.report import DiagnosticsReport, emit_report


# --- configuration ----------------------------------------------------------------------

def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("# nothing here\n\n")
    cfg = load_config(p)
    assert cfg == Config() == load_config()
    assert (cfg.dimension, cfg.eps, cfg.grid.max_radius, cfg.grid.nodes, cfg.solver.dt) == (3, 0.01, 20.0, 512, 1e-3)


def test_epsilon_paper():
    cfg = parse_config("dimension = 4\nepsilon = paper\n")
    assert cfg.eps == 4.0**-10
    assert cfg.as_dict()["epsilon_value"] == 4.0**-10


def test_dimension_two_rejected():
    with pytest.raises(ConfigError, match="n >= 3"):
        parse_config("dimension = 2")


def test_unknown_key_reports_line(tmp_path):
    p = tmp_path / "typo.cfg"
    p.write_text("dimension = 3\n# comment\ngrid.nodez = 64\n")
    with pytest.raises(ConfigError, match=r"typo\.cfg:3: unknown key 'grid\.nodez'"):
        load_config(p)


@pytest.mark.parametrize("text,match", [
    ("grid.nodes = many", "bad value"),
    ("solver.scheme = rk4", "strang"),
    ("epsilon = 1.5", r"\(0, 1\)"),
    ("verify.eta_grid = 0.1, 2", "eta_grid"),
    ("sweep.dimensions = 3, 2", "n >= 3"),
    ("output.formats = csv, xml", "csv or json"),
    ("just words", "expected 'key = value'"),
])
def test_invalid_values(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_list_and_bool_parsing():
    cfg = parse_config("verify.n_list = 1, 2, 4\nsolver.dealias = yes\nsweep.dimensions = 3, 5\n"
                       "verify.weight_epsilons = 0.01\n")
    assert cfg.verify.n_list == (1.0, 2.0, 4.0)
    assert cfg.solver.dealias is True
    assert cfg.sweep.dimensions == (3, 5) and isinstance(cfg.sweep.dimensions[0], int)
    assert cfg.verify.weight_epsilons == (0.01,)


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.cfg")


def test_every_key_has_a_cli_flag():
    p = build_parser()
    args = p.parse_args(["simulate", "--grid.nodes", "64", "--epsilon", "paper"])
    assert args.set__grid__nodes == "64"
    assert len(keys()) > 40
    assert parse_value("grid.nodes", "64") == 64


# --- reports ------------------------------------------------------------------------------

def test_empty_report_json(tmp_path):
    paths = emit_report(DiagnosticsReport("empty"), tmp_path)
    data = json.loads((tmp_path / "empty.json").read_text())
    assert data["row_count"] == 0 and data["passed"] is True and "schema_version" in data
    assert {p.suffix for p in paths} == {".csv", ".json"}


def test_fail_rows_carry_both_sides():
    rep = DiagnosticsReport("x")
    with pytest.raises(ValueError):
        rep.add("FAIL", check="c")
    rep.check(False, "a <= b", 2.0, 1.0, check="c")
    assert rep.failures[0]["lhs"] == 2.0 and rep.failures[0]["rhs"] == 1.0


# --- commands -------------------------------------------------------------------------------

SMALL = ["--grid.nodes", "128", "--solver.t_end", "0.1"]


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_simulate_then_diagnose_mass_agrees(tmp_path):
    out = str(tmp_path)
    assert run_command(["simulate", "--out", out, *SMALL]) == 0
    assert (tmp_path / "trajectory.npz").exists()
    assert run_command(["diagnose", "--out", out, *SMALL, "--verify.n_list", "1, 8"]) == 0
    sim = [float(r["mass"]) for r in _rows(tmp_path / "simulate.csv") if r["mass"]]
    diag = [float(r["value"]) for r in _rows(tmp_path / "diagnose.csv") if r["quantity"] == "mass"]
    assert len(sim) == len(diag) == 11
    assert max(abs(a - b) / a for a, b in zip(sim, diag)) <= 1e-12
    assert (tmp_path / "diagnose_s_decay.csv").exists()
    assert json.loads((tmp_path / "simulate.json").read_text())["config"]["grid"]["nodes"] == 128


def test_verify_weights_defaults_pass(tmp_path):
    assert run_command(["verify-weights", "--out", str(tmp_path)]) == 0
    rows = [r for r in _rows(tmp_path / "verify_weights.csv") if r["status"] == "PASS"]
    assert len(rows) == 3 and all(float(r["lhs"]) > 0 for r in rows)


def test_verify_weights_failure_exit_one(tmp_path, capsys):
    # a floor above the minimum of every normalised quantity must fail
    assert run_command(["verify-weights", "--out", str(tmp_path), "--verify.weight_floor", "10"]) == 1
    assert "FAIL" in capsys.readouterr().err


def test_usage_and_config_errors_exit_two(tmp_path, capsys):
    assert run_command(["bogus"]) == 2
    assert run_command(["simulate", "--out", str(tmp_path), "--dimension", "2"]) == 2
    assert "n >= 3" in capsys.readouterr().err
    assert run_command(["diagnose", "--out", str(tmp_path / "nowhere")]) == 2
    assert run_command(["simulate", "--config", str(tmp_path / "missing.cfg")]) == 2


@pytest.mark.filterwarnings("ignore::radnls.grid.TruncationWarning")
def test_domain_breach_exit_two(tmp_path):
    # a wide ring on a small disc reaches the boundary shell
    argv = ["simulate", "--out", str(tmp_path), "--initial.profile", "ring_bump",
            "--initial.center", "3.0", "--grid.max_radius", "6", "--grid.nodes", "64",
            "--solver.t_end", "2"]
    assert run_command(argv) == 2


def test_verify_morawetz_from_checkpoint(tmp_path):
    out = str(tmp_path)
    assert run_command(["simulate", "--out", out, *SMALL]) == 0
    rc = run_command(["verify-morawetz", "--out", out, *SMALL,
                      "--checkpoint", str(tmp_path / "trajectory.npz")])
    assert rc == 0
    assert json.loads((tmp_path / "verify_morawetz.json").read_text())["summary"]["max_fd_residual"] <= 0.01


def test_sweep_groups_tagged(tmp_path):
    assert run_command(["sweep", "--out", str(tmp_path), "--workers", "2"]) == 0
    rows = _rows(tmp_path / "sweep.csv")
    groups = {(int(r["n"]), float(r["eps"])) for r in rows}
    assert groups == {(n, e) for n in (3, 4, 5) for e in (0.01, 0.05)}
    assert all(r["suite"] == "verify-weights" for r in rows)


@pytest.mark.slow
def test_appendix_csv_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["verify-appendix", "--verify.samples", "1", "--seed", "3"]
    # exit 1: the uncertainty sweep fails its spread and slope bounds (see README)
    assert run_command([*base, "--out", str(a)]) == 1
    assert run_command([*base, "--out", str(b), "--workers", "2"]) == 1
    names = sorted(p.name for p in a.glob("*.csv"))
    assert names and names == sorted(p.name for p in b.glob("*.csv"))
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()
