import json
import os
import subprocess
import sys

import pytest

from stokesblock.cli import build_parser, main
from stokesblock.report import ScenarioConfig


def run(*argv):
    return main(list(argv))


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["stability-report", "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--nu", "--v-star", "--side-a", "--side-b", "--n", "--tau", "--mu", "--seed", "--out"):
        assert flag in out
    assert "(default: 16)" in out and "(default: 1.0)" in out


def test_defaults_match_report_config():
    args = build_parser().parse_args(["stability-report"])
    cfg = ScenarioConfig()
    assert (args.nu, args.v_star, args.side_a, args.side_b, args.n, args.tau, args.seed) == \
        (cfg.nu, cfg.v_star, cfg.side_a, cfg.side_b, cfg.n, cfg.tau, cfg.seed)


def test_stability_report_and_round_trip(tmp_path):
    out = tmp_path / "r.json"
    assert run("stability-report", "--n", "6", "--nu", "1.5", "--v-star", "0.5",
               "--tau", "2", "--out", str(out)) == 0
    data = json.loads(out.read_text())
    again = tmp_path / "r2.json"
    argv = data["scenario"]["argv"] + ["--out", str(again)]
    assert run(*argv) == 0
    assert again.read_bytes() == out.read_bytes()


def test_usage_errors(tmp_path, capsys):
    assert run("spectrum", "--nu", "-1") == 1
    assert run("spectrum", "--n", "1") == 1
    assert run("stability-report", "--out", str(tmp_path / "missing" / "x.json")) == 1
    with pytest.raises(SystemExit) as exc:
        run("spectrum", "--bogus")
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        run("qnr", "--dims", "5")
    assert exc.value.code == 1


def test_spectrum_outputs(tmp_path):
    csv_path, js = tmp_path / "s.csv", tmp_path / "s.json"
    assert run("spectrum", "--n", "4", "--out", str(csv_path), "--json", str(js)) == 0
    assert csv_path.read_text().splitlines()[0] == "index,eigenvalue,residual"
    assert json.loads(js.read_text())["counts"] == [32, 1, 15]
    assert run("spectrum", "--n", "4", "--mu", "2.0") == 0


def test_angle_commands(tmp_path):
    assert run("angle", "--n", "5", "--out", str(tmp_path / "a.json")) == 0
    p = tmp_path / "a.csv"
    assert run("angle", "--n", "5", "--re-values", "0.5,1.9", "--out", str(p)) == 0
    assert len(p.read_text().splitlines()) == 3


def test_qnr_random_forms(tmp_path, capsys):
    out = tmp_path / "q.json"
    cloud = tmp_path / "c.csv"
    assert run("qnr", "--random-forms", "50", "--dims", "5,4", "--seed", "7",
               "--out", str(out), "--cloud", str(cloud)) == 0
    data = json.loads(out.read_text())
    assert data["n_forms"] == 50 and data["all_pass"]
    assert cloud.read_text().startswith("eig_low,eig_high,tag")
    assert "50/50" in capsys.readouterr().out


def test_qnr_stokes_form():
    assert run("qnr", "--n", "4", "--samples", "20") == 0


def test_diagram_and_lattice(tmp_path):
    svg, js = tmp_path / "f.svg", tmp_path / "d.json"
    assert run("diagram", "--nu", "1", "--v-star", "1", "--tau", "1", "--svg", str(svg),
               "--out", str(js)) == 0
    assert svg.read_text().startswith("<?xml")
    assert json.loads(js.read_text())["identities_hold"]
    lat = tmp_path / "l.json"
    assert run("lattice-check", "--out", str(lat)) == 0
    assert json.loads(lat.read_text())["pass"]


def test_sweep_command(tmp_path):
    out = tmp_path / "t.csv"
    assert run("sweep", "--axis", "nu", "--values", "1,2", "--n", "4", "--out", str(out)) == 0
    assert len(out.read_text().splitlines()) == 3


def test_console_script_exit_code(tmp_path):
    # the installed entry point and `python -m` both reach main()
    r = subprocess.run([sys.executable, "-m", "stokesblock.cli", "lattice-check"],
                       capture_output=True, text=True, env={**os.environ})
    assert r.returncode == 0
    assert "pass: True" in r.stdout
