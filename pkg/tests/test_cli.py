import csv
import io
import json
import math
import subprocess
import sys

import pytest

from zoomtherm import cli
from zoomtherm import equilibrium as eq
from zoomtherm.config import RunConfig, parse_text
from zoomtherm.errors import ConfigError, NumericalError


def run_main(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_pressure_json(capsys):
    code, out, _ = run_main(capsys, "pressure", "--base", "whole")
    doc = json.loads(out)
    assert code == 0
    assert doc["command"] == "pressure" and "schema_version" in doc
    assert doc["p_star"] == pytest.approx(math.log(2), abs=1e-9)


def test_geometric_pressure_on_half_base(capsys):
    code, out, _ = run_main(capsys, "pressure", "--potential", "geometric:t=1")
    assert code == 0
    assert json.loads(out)["p_star"] == pytest.approx(0.0, abs=1e-9)


def test_escape_json(capsys, frozen):
    code, out, _ = run_main(capsys, "escape", "--set", "escape.nmax=24")
    doc = json.loads(out)
    assert code == 0
    assert doc["rate"] == pytest.approx(frozen["golden_escape_rate"], abs=1e-3)


def test_equilibrium_reports_t0(capsys):
    code, out, _ = run_main(capsys, "equilibrium", "--potential", "geometric:t=-2",
                            "--set", "grid.depth=6")
    doc = json.loads(out)
    assert code == 0
    assert doc["t0"]["t0"] == pytest.approx(-1.0, abs=1e-9) and doc["t0"]["below_t0"]
    assert doc["entropy"] == pytest.approx(math.log(2), abs=1e-8)


def test_hyp_times_csv(capsys, frozen):
    code, out, _ = run_main(capsys, "hyp-times", "--map", "quadratic", "--set",
                            "map.params.a=2", "--set", "contraction.sigma=0.9",
                            "--set", "contraction.epsilon=0.1", "--set", "hyp.nmax=30")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["x0", "n", "is_hyperbolic", "frequency"]
    times = [int(r["n"]) for r in rows if r["is_hyperbolic"] == "1"]
    assert times == frozen["quadratic_times_x03"]


def test_exit_code_1_on_bad_input(capsys):
    assert run_main(capsys, "pressure", "--map", "nosuchmap")[0] == 1
    assert run_main(capsys, "pressure", "--set", "no.such.key=1")[0] == 1
    code, _, err = run_main(capsys, "hyp-times", "--map", "quadratic", "--set", "hyp.points=3")
    assert code == 1 and "outside" in err


def test_exit_code_2_on_numerical_failure(capsys, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("forced")
    monkeypatch.setattr(eq, "escape_rate", boom)
    code, _, err = run_main(capsys, "escape")
    assert code == 2 and "forced" in err


def test_out_file_and_repeatability(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert cli.main(["conformal", "--potential", "geometric:t=1", "--set", "grid.depth=6",
                         "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert json.loads(a.read_text())["total_mass"] == pytest.approx(2.0, abs=1e-9)


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# doubling, whole space\nscheme.base = whole\npotential.kind = geometric\n"
                   "potential.t = -1\n")
    code, out, _ = run_main(capsys, "pressure", "--config", str(cfg))
    assert code == 0
    assert json.loads(out)["p_star"] == pytest.approx(2 * math.log(2), abs=1e-9)


def test_config_parsing_errors():
    with pytest.raises(ConfigError):
        parse_text("a = 1\na = 2\n")
    with pytest.raises(ConfigError):
        parse_text("just words\n")
    with pytest.raises(ConfigError):
        RunConfig.from_pairs({"contraction.sigma": "1.5"})
    with pytest.raises(ConfigError):
        RunConfig.from_pairs({"nest.balls": "0.3"})
    with pytest.raises(ConfigError):
        RunConfig.from_pairs({"scheme.base": "0.5, 0.1"})
    cfg = RunConfig.from_pairs(parse_text("scheme.base = 0.25, 0.5  # comment\n"))
    assert cfg.base == (0.25, 0.5)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "zoomtherm.cli", "escape", "--set",
                          "escape.nmax=8"], capture_output=True, text=True, check=True)
    assert json.loads(res.stdout)["command"] == "escape"
