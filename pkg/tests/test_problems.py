import math

import numpy as np
import pytest

from frac_oga.errors import InputError
from frac_oga.numerics.fracop import FractionalOrder, Grid, assemble_operator
from frac_oga.numerics.metrics import linf
from frac_oga.numerics.problems import (
    ManufacturedProblem,
    exact_du,
    exact_u,
    fdm_solve,
    forcing,
    forcing_residual,
    gamma_fn,
)


def test_gamma_fn_known_values() -> None:
    assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-12)
    assert gamma_fn(5.0) == pytest.approx(24.0, rel=1e-12)
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert gamma_fn(0.75) * gamma_fn(0.25) == pytest.approx(math.pi * math.sqrt(2.0), rel=1e-12)


def test_gamma_fn_rejects_nonpositive() -> None:
    with pytest.raises(InputError):
        gamma_fn(0.0)
    with pytest.raises(InputError):
        gamma_fn(-1.5)


def test_gamma_reflection_identity() -> None:
    for alpha in (0.25, 0.5, 0.75):
        lhs = gamma_fn((1 + alpha) / 2) * gamma_fn((1 - alpha) / 2)
        assert lhs * math.cos(math.pi * alpha / 2) == pytest.approx(math.pi, rel=1e-10)


def test_gamma_reflection_identity_above_one() -> None:
    # (1 - alpha)/2 < 0, so shift it with Gamma(z) = Gamma(z + 1) / z.
    for alpha in (1.5, 1.9):
        z = (1 - alpha) / 2
        lhs = gamma_fn((1 + alpha) / 2) * gamma_fn(z + 1) / z
        assert lhs * math.cos(math.pi * alpha / 2) == pytest.approx(math.pi, rel=1e-10)


def test_exact_solution_values() -> None:
    assert exact_u(0.5) == 0.015625
    assert exact_u(0.0) == 0.0
    assert exact_u(1.0) == 0.0
    assert exact_du(0.5) == 0.0


def test_exact_du_matches_central_differences() -> None:
    x = np.linspace(0.05, 0.95, 37)
    step = 1e-6
    fd = (exact_u(x + step) - exact_u(x - step)) / (2 * step)
    assert np.max(np.abs(fd - exact_du(x))) <= 1e-8


def test_forcing_alpha2_is_minus_second_derivative() -> None:
    order = FractionalOrder(2.0)
    assert forcing(order, 0.5) == pytest.approx(0.375, abs=1e-12)
    x = np.linspace(0.0, 1.0, 101)
    minus_u2 = -(6 * x - 36 * x**2 + 60 * x**3 - 30 * x**4)
    assert np.max(np.abs(forcing(order, x) - minus_u2)) <= 1e-12


def test_forcing_is_symmetric() -> None:
    x = np.linspace(0.0, 1.0, 41)
    for alpha in (0.5, 1.5, 2.0):
        order = FractionalOrder(alpha)
        assert np.allclose(forcing(order, x), forcing(order, 1.0 - x), rtol=1e-12, atol=1e-12)


def test_forcing_matches_high_precision_evaluation() -> None:
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 35
    a = mpmath.mpf("1.5")
    x = mpmath.mpf("0.5")
    total = mpmath.mpf(0)
    for coeff, p in ((1, 3), (-3, 4), (3, 5), (-1, 6)):
        ratio = mpmath.gamma(p + 1) / mpmath.gamma(p + 1 - a)
        total += coeff * ratio * (x ** (p - a) + (1 - x) ** (p - a))
    expected = float(total / (2 * mpmath.cos(mpmath.pi * a / 2)))
    assert forcing(FractionalOrder(1.5), 0.5) == pytest.approx(expected, rel=1e-12)


def test_forcing_rejects_points_outside_unit_interval() -> None:
    with pytest.raises(InputError):
        forcing(FractionalOrder(1.5), 1.5)


def test_fdm_solve_round_trip() -> None:
    op = assemble_operator(FractionalOrder(1.5), Grid(64))
    w = np.sin(np.pi * op.grid.interior_points) + 0.1
    sol = fdm_solve(op, op.apply(w))
    assert np.allclose(sol.values, w, rtol=1e-10, atol=0.0)
    assert sol.backward_error <= 1e-10


def test_fdm_solve_dimension_mismatch() -> None:
    op = assemble_operator(FractionalOrder(2.0), Grid(8))
    with pytest.raises(InputError):
        fdm_solve(op, np.ones(8))


def _fdm_max_error(alpha: float, m: int) -> float:
    order = FractionalOrder(alpha)
    grid = Grid(m)
    problem = ManufacturedProblem(order)
    sol = fdm_solve(assemble_operator(order, grid), problem.f_on_grid(grid))
    return linf(problem.u_on_grid(grid) - sol.values)


def test_fdm_alpha2_second_order() -> None:
    errs = [_fdm_max_error(2.0, m) for m in (128, 256, 512)]
    for prev, cur in zip(errs, errs[1:]):
        assert math.log2(prev / cur) == pytest.approx(2.0, abs=0.2)


def test_fdm_alpha15_at_least_first_order() -> None:
    errs = [_fdm_max_error(1.5, m) for m in (128, 256, 512)]
    for prev, cur in zip(errs, errs[1:]):
        assert math.log2(prev / cur) >= 0.9


def test_forcing_residual_decreases_with_grid() -> None:
    problem = ManufacturedProblem(FractionalOrder(1.5))
    r256 = forcing_residual(assemble_operator(problem.order, Grid(256)), problem)
    r512 = forcing_residual(assemble_operator(problem.order, Grid(512)), problem)
    assert math.log2(r256 / r512) >= 0.8
