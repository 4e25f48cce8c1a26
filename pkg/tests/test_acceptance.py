"""One test per acceptance criterion, at the pinned tolerances.

Every test prints a PASS/FAIL line; the lines are repeated in the terminal
summary (see conftest.py) so they survive output capture.
"""
import json

import pytest

from torusnf import checks

ACCEPTANCE_LINES: list[str] = []


def _run(number: int) -> checks.CheckResult:
    res = checks.run_check(number)
    line = res.line()
    summary = json.dumps(res.as_dict()["details"], sort_keys=True)
    if len(summary) > 400:
        summary = summary[:400] + "..."
    ACCEPTANCE_LINES.append(line)
    print(line)
    print("   ", summary)
    return res


def _assert(res: checks.CheckResult):
    assert res.passed, f"{res.line()}\n{json.dumps(res.as_dict()['details'], indent=1)[:3000]}"


def test_c01_exact_at_zero_potential():
    _assert(_run(1))


def test_c02_constant_shift():
    _assert(_run(2))


def test_c03_weyl_hermiticity():
    _assert(_run(3))


def test_c04_composition_symmetry():
    _assert(_run(4))


def test_c05_homological_residual():
    _assert(_run(5))


def test_c06_eigenvalue_asymptotics():
    _assert(_run(6))


@pytest.mark.slow
def test_c07_unbounded_perturbation():
    _assert(_run(7))


def test_c08_symmetry_splitting():
    _assert(_run(8))


def test_c09_density_census():
    _assert(_run(9))


def test_c10_layer_inclusion():
    _assert(_run(10))


def test_c11_conjugation_efficacy():
    _assert(_run(11))


def test_c12_quasimode_orthogonality():
    _assert(_run(12))


@pytest.mark.slow
def test_c13_floquet():
    _assert(_run(13))
