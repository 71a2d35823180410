import json
import numpy as np
import pytest

from plapfuchs.cli import main
from plapfuchs.errors import ScenarioParseError, UsageError
from plapfuchs.io import dumps, potential_from_text, potential_to_text, read_csv
from plapfuchs.plotdata import emit_from_run, emit_plotdata, fitted_curve
from plapfuchs.potentials import Potential, Shell
from plapfuchs.radial import classify_asymptotics, quotient_profile, radial_from_values
from plapfuchs.exponents import Params
from plapfuchs.numerics import log_grid
from plapfuchs.scenario import (BUILTIN, apply_overrides, builtin, dump_scenario, load_scenario, parse_scenario,
                                rerun_record, run)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def record(capsys):
    return json.loads(capsys.readouterr().out)


class TestScenarios:
    def test_exponent_table(self, tmp_path, capsys):
        assert main(["exponents", "--out", str(tmp_path)]) == 0
        rec = record(capsys)
        assert rec["checks"]["degenerate_at_hardy_constant"] is True
        cols, rows = read_csv(tmp_path / "exponents.csv")
        last = dict(zip(cols, rows[-1]))
        assert last["degenerate"] == "true"
        last = {c: float(last[c]) for c in ("lambda", "gamma_minus", "gamma_plus")}
        assert last["lambda"] == pytest.approx(rec["summary"]["hardy_constant"])
        assert last["gamma_minus"] == last["gamma_plus"] == pytest.approx(rec["summary"]["gamma_star"])

    def test_empty_potential_classify(self, tmp_path, capsys):
        assert main(["classify", "--out", str(tmp_path)]) == 0
        rec = record(capsys)
        assert rec["summary"]["class"] == "bounded-limit"
        assert rec["summary"]["constant"] == pytest.approx(2.0)

    def test_shell_dilation(self, tmp_path, capsys):
        assert main(["dilate", "--out", str(tmp_path)]) == 0
        rec = record(capsys)
        assert rec["summary"]["weak_fuchsian"] and rec["summary"]["stages_used"] == 2

    @pytest.mark.parametrize("name", sorted(n for n in BUILTIN if BUILTIN[n]["task"] not in
                                            ("harnack", "probe", "picone")))
    def test_fast_builtins_pass(self, name):
        assert run(builtin(name)).passed

    def test_yaml_scenario(self, tmp_path, capsys):
        path = write(tmp_path, "c.yaml", "name: mine\ntask: classify\nparams: {p: 2.0, d: 3}\n"
                     "settings: {source: fundamental, zeta: 0, expect: power, expect_exponent: -1.0}\n")
        assert main(["classify", "--scenario", path, "--out", str(tmp_path / "o")]) == 0
        assert record(capsys)["scenario"] == "mine"

    def test_potential_file(self, tmp_path, capsys):
        V = Potential(hardy_coeff=0.1, shells=(Shell(1.0, 2.0, 0.5, -2.0),))
        pot = write(tmp_path, "v.txt", potential_to_text(V))
        path = write(tmp_path, "s.yaml", f"task: solve-radial\nparams: {{p: 2.0, d: 3}}\n"
                     f"potential: {{file: {pot}}}\nsettings: {{b: 0.5, r_lo: 0.5, r_hi: 4.0}}\n")
        assert main(["solve-radial", "--scenario", path, "--out", str(tmp_path / "o")]) == 0
        assert record(capsys)["passed"]


class TestExitCodes:
    def test_failed_check(self, tmp_path, capsys):
        path = write(tmp_path, "c.yaml", "task: classify\nparams: {p: 2.5, d: 3}\n"
                     "settings: {source: constant, value: 2.0, zeta: 0, expect: power}\n")
        assert main(["classify", "--scenario", path, "--out", str(tmp_path / "o")]) == 5
        assert record(capsys)["checks"]["expected_class"] is False

    def test_task_mismatch(self, tmp_path, capsys):
        assert main(["kelvin", "--scenario", "hardy-exponents", "--out", str(tmp_path)]) == 2
        assert "not 'kelvin'" in capsys.readouterr().err

    def test_parse_error_position(self, tmp_path, capsys):
        path = write(tmp_path, "bad.yaml", "task: classify\nparams: {p: 2.5, d: 3\nsettings: {}\n")
        assert main(["classify", "--scenario", path]) == 2
        err = capsys.readouterr().err
        assert "line 3" in err and "column" in err

    def test_precondition(self, tmp_path, capsys):
        path = write(tmp_path, "p.yaml", "task: picone\nparams: {p: 2.0, d: 3}\n")
        assert main(["picone", "--scenario", path, "--out", str(tmp_path / "o")]) == 3

    def test_numeric_failure(self, tmp_path, capsys):
        path = write(tmp_path, "n.yaml", "task: solve-radial\nparams: {p: 2.0, d: 3}\n"
                     "potential: {hardy: 5.0}\nsettings: {b: 1.0, r_lo: 1.0, r_hi: 1.0e6}\n")
        assert main(["solve-radial", "--scenario", path, "--out", str(tmp_path / "o")]) == 4

    def test_unknown_tolerance(self, tmp_path):
        assert main(["exponents", "--tol", "nonsense=1", "--out", str(tmp_path)]) == 2

    def test_bad_tolerance_syntax(self):
        with pytest.raises(SystemExit) as exc:
            main(["exponents", "--tol", "exponent_residual"])
        assert exc.value.code == 2

    def test_seed_only_for_flux(self, tmp_path):
        assert main(["exponents", "--seed", "3", "--out", str(tmp_path)]) == 2


class TestParsing:
    @pytest.mark.parametrize("text", ["- a\n- b\n", "task: nope\n", "task: classify\nextra: 1\n",
                                      "params: {p: 2, d: 3}\n", "task: classify\nsettings: [1, 2]\n"])
    def test_rejects(self, text):
        with pytest.raises(ScenarioParseError):
            parse_scenario(text)

    def test_round_trip(self):
        for name in BUILTIN:
            sc = builtin(name)
            assert parse_scenario(dump_scenario(sc)).to_dict() == sc.to_dict()

    def test_unknown_reference(self):
        with pytest.raises(UsageError):
            load_scenario("/nonexistent/scenario.yaml")

    def test_overrides(self):
        sc = apply_overrides(builtin("hardy-radial"), grid=512, tolerances={"radial_power_error": 1e-3})
        assert sc.settings["n"] == 512 and sc.tolerances["radial_power_error"] == 1e-3
        assert builtin("hardy-radial").settings["n"] == 4096
        assert apply_overrides(builtin("flux-random"), seed=11).settings["seed"] == 11
        with pytest.raises(UsageError):
            apply_overrides(builtin("hardy-exponents"), grid=10)

    def test_tightened_tolerance_fails(self):
        sc = apply_overrides(builtin("hardy-radial"), grid=256, tolerances={"radial_power_error": 1e-12})
        rec = run(sc)
        assert not rec.passed and rec.checks["power_oracle"] is False


class TestArtifacts:
    def test_deterministic(self, tmp_path, capsys):
        for sub in ("a", "b"):
            assert main(["flux", "--out", str(tmp_path / sub)]) == 0
        names = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert "timing.json" in names and "record.json" in names
        for n in names:
            if n != "timing.json":
                assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()

    def test_rerun_record(self, tmp_path, capsys):
        assert main(["kelvin", "--out", str(tmp_path)]) == 0
        first = record(capsys)
        again = rerun_record(tmp_path / "record.json")
        # an in-memory rerun writes no artifacts; everything else must match
        first.pop("artifacts")
        redo = json.loads(dumps(again.to_dict()))
        assert redo.pop("artifacts") == []
        assert redo == first

    def test_json_format(self, tmp_path, capsys):
        assert main(["exponents", "--format", "json", "--out", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "exponents.json").read_text())
        assert doc["columns"][0] == "lambda" and len(doc["rows"]) == 21

    def test_batch(self, tmp_path, capsys):
        code = main(["classify", "--scenario", "empty-potential-classify", "--scenario", "fundamental-classify",
                     "--out", str(tmp_path), "--jobs", "2"])
        assert code == 0
        out = capsys.readouterr().out
        assert "empty-potential-classify: PASS" in out and "fundamental-classify: PASS" in out
        assert (tmp_path / "empty-potential-classify" / "record.json").exists()
        assert (tmp_path / "fundamental-classify" / "record.json").exists()

    def test_list(self, capsys):
        assert main(["list"]) == 0
        assert "hardy-harnack" in capsys.readouterr().out


class TestPotentialText:
    def test_round_trip(self):
        V = Potential(hardy_coeff=-0.25, shells=(Shell(0.0, 1.0, 1.0, -1.4), Shell(2.0, 3.0, 0.1, 0.0)),
                      sampled_r=(1.0, 2.0, 4.0), sampled_v=(0.5, 0.25, 1.0 / 3.0), angular="1 + 0.5*cos(theta)")
        W = potential_from_text(potential_to_text(V))
        assert W == V

    def test_error_position(self):
        with pytest.raises(ScenarioParseError) as exc:
            potential_from_text("hardy = 0.1\n[shell]\nr_lo = abc\n")
        assert exc.value.line == 3 and exc.value.column == 8
        with pytest.raises(ScenarioParseError) as exc:
            potential_from_text("hardy = 0.1\n[shell]\nr_lo = 1\n")
        assert "missing" in str(exc.value)


class TestPlotData:
    grid = log_grid(1e-4, 1.0)
    prm = Params(2.0, 3)

    def test_fitted_curve(self):
        sol = radial_from_values(self.grid, 1 + self.grid**-1.0, self.prm)
        rep = classify_asymptotics(sol, 0.0, self.prm)
        full, lead = fitted_curve(rep, self.grid)
        np.testing.assert_allclose(full, sol.v, rtol=1e-6)
        np.testing.assert_allclose(lead, self.grid**-1.0, rtol=1e-5)

    def test_overlay_and_quotient(self, tmp_path):
        sol = radial_from_values(self.grid, 1 + self.grid**-1.0, self.prm)
        rep = classify_asymptotics(sol, 0.0, self.prm)
        doc = emit_plotdata(rep, tmp_path / "o", solution=sol)
        assert doc["x"]["column"] == "log_r"
        qp = quotient_profile(sol, radial_from_values(self.grid, self.grid**-1.0, self.prm), 0.0)
        assert emit_plotdata(qp, tmp_path / "q")["kind"] == "quotient"
        with pytest.raises(UsageError):
            emit_plotdata(object(), tmp_path / "x")

    def test_from_run(self, tmp_path, capsys):
        main(["classify", "--out", str(tmp_path / "run")])
        capsys.readouterr()
        assert main(["emit", "--scenario", str(tmp_path / "run")]) == 0
        assert json.loads(capsys.readouterr().out)["kind"]
        assert (tmp_path / "run" / "plot" / "manifest.json").exists()
        main(["exponents", "--out", str(tmp_path / "e")])
        with pytest.raises(UsageError):
            emit_from_run(tmp_path / "e", tmp_path / "p")
