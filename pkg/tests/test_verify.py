import numpy as np
import pytest

from frac_oga.errors import ConfigError
from frac_oga.numerics.fracop import FractionalOrder, gl_coefficients
from frac_oga.verify import CHECKS, VerifyContext, format_report, run_checks

FAST_CHECKS = ["operator_exactness", "gl_closed_form", "gamma_identity", "forcing_consistency", "fdm_convergence"]


def test_fast_checks_pass() -> None:
    results = run_checks(FAST_CHECKS)
    assert [r.name for r in results] == FAST_CHECKS
    assert all(r.passed for r in results), format_report(results)
    assert all(r.seconds >= 0.0 for r in results)


def test_corrupted_recursion_fails_coefficient_check() -> None:
    def corrupted(order: FractionalOrder, n: int) -> np.ndarray:
        b = gl_coefficients(order, n)
        b[5] *= 1.001
        return b

    results = run_checks(["gl_closed_form", "gamma_identity"], VerifyContext(gl_coefficients=corrupted))
    assert [r.passed for r in results] == [False, True]
    report = format_report(results)
    assert "FAIL  gl_closed_form" in report
    assert "1/2 checks passed" in report


def test_unknown_check_name() -> None:
    with pytest.raises(ConfigError):
        run_checks(["missing"])


def test_all_acceptance_checks_registered() -> None:
    assert len(CHECKS) == 12


@pytest.mark.slow
def test_full_suite_passes() -> None:
    results = run_checks()
    assert all(r.passed for r in results), format_report(results)
