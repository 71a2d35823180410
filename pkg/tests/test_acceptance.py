"""The numbered acceptance criteria, each at its stated tolerance and runtime budget."""

import io

import pytest

from conftest import ACCEPTANCE_LINES
from plapfuchs.acceptance import BUDGETS, TOLERANCES, print_row, run_criterion, resolve_tolerances, tighten, \
    verify_suite
from plapfuchs.cli import main


@pytest.fixture(scope="module")
def suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance")
    stream = io.StringIO()
    summary = verify_suite(out, stream=stream)
    return summary, out, stream.getvalue()


@pytest.mark.parametrize("number", range(1, 14))
def test_criterion(suite, number):
    summary, out, _ = suite
    (res,) = [r for r in summary.results if r.number == number]
    line = io.StringIO()
    print_row(res, line)
    text = line.getvalue().rstrip()
    ACCEPTANCE_LINES.append(text)
    print(text)
    assert res.budget == BUDGETS[number]
    assert res.passed, text
    assert res.within_budget, text
    assert (out / f"criterion_{number:02d}.csv").exists()


def test_suite_outputs(suite):
    summary, out, printed = suite
    assert summary.passed
    assert sum(line.endswith("PASS") for line in printed.splitlines()) == 13 and "ALL PASS: 13/13" in printed
    assert (out / "suite.csv").exists() and (out / "timing.json").exists()


def test_tolerances_are_the_stated_ones():
    assert TOLERANCES["c1_residual"] == 1e-10 and TOLERANCES["c2_coalescence"] == 1e-6
    assert TOLERANCES["c3_final_error"] == 1e-6 and TOLERANCES["c3_order_factor"] == 2
    assert TOLERANCES["c4_exponent"] == 1e-3 and TOLERANCES["c5_exponent"] == 1e-4
    assert TOLERANCES["c6_residual"] == 1e-6 and TOLERANCES["c6_involution"] == 1e-12
    assert TOLERANCES["c7_gap"] == 1e-4 and TOLERANCES["c7_newtonian"] == 1e-8
    assert TOLERANCES["c8_spread"] == 1e-7 and TOLERANCES["c10_gap"] == 1e-3
    assert TOLERANCES["c11_final_ratio"] == 1.02 and TOLERANCES["c12_decay"] == 10


def test_tightened_tolerance_fails_row():
    # the exhaustion exponent lands within 1e-3 but not within 1e-5
    res = run_criterion(4, resolve_tolerances(tighten("c4_exponent")))
    assert not res.passed


def test_cli_exit_on_failure(tmp_path, capsys):
    code = main(["verify", "--criteria", "4", "--tol", "c4_exponent=1e-5", "--out", str(tmp_path)])
    assert code == 5
    assert "FAIL" in capsys.readouterr().out
    assert main(["verify", "--criteria", "1", "2", "--out", str(tmp_path / "ok")]) == 0


def test_unknown_tolerance_rejected(tmp_path):
    assert main(["verify", "--criteria", "1", "--tol", "c99=1", "--out", str(tmp_path)]) == 2
