"""Manufactured fractional Poisson problem and the direct FDM oracle."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import gamma as _scipy_gamma

from frac_oga.errors import InputError, SingularOperatorError
from frac_oga.numerics.fracop import FractionalOrder, Grid, RieszOperator

_log = logging.getLogger("frac_oga.problems")

# Normwise backward error accepted from the oracle solve.
ORACLE_BACKWARD_TOL = 1e-10


def gamma_fn(z: float | np.ndarray) -> float | np.ndarray:
    """Gamma(z) for z > 0."""
    zz = np.asarray(z, dtype=np.float64)
    if np.any(~np.isfinite(zz)) or np.any(zz <= 0.0):
        raise InputError(f"gamma_fn is defined here for positive arguments only, got {z!r}")
    out = _scipy_gamma(zz)
    return float(out) if np.ndim(out) == 0 else out


def exact_u(x: float | np.ndarray) -> float | np.ndarray:
    """u(x) = x^3 (1-x)^3."""
    xx = np.asarray(x, dtype=np.float64)
    out = xx**3 * (1.0 - xx) ** 3
    return float(out) if np.ndim(out) == 0 else out


def exact_du(x: float | np.ndarray) -> float | np.ndarray:
    xx = np.asarray(x, dtype=np.float64)
    out = 3.0 * xx**2 * (1.0 - xx) ** 3 - 3.0 * xx**3 * (1.0 - xx) ** 2
    return float(out) if np.ndim(out) == 0 else out


# (coefficient c, power p) of u(x) = sum c * x^p; the mirrored terms in (1-x) are identical.
_U_TERMS: tuple[tuple[float, int], ...] = ((1.0, 3), (-3.0, 4), (3.0, 5), (-1.0, 6))


def forcing(order: FractionalOrder, x: float | np.ndarray) -> float | np.ndarray:
    """Right-hand side f of (-Delta)^(alpha/2) u = f for u = x^3 (1-x)^3.

    Each monomial x^p contributes Gamma(p+1)/Gamma(p+1-alpha) x^(p-alpha) from
    the left derivative, plus the mirrored right-derivative term in (1-x).
    """
    xx = np.asarray(x, dtype=np.float64)
    if np.any(xx < 0.0) or np.any(xx > 1.0):
        raise InputError("forcing is evaluated on [0, 1] only")
    a = order.alpha
    total = np.zeros_like(xx)
    for coeff, p in _U_TERMS:
        ratio = math.gamma(p + 1) / float(gamma_fn(p + 1 - a))
        total = total + coeff * ratio * (xx ** (p - a) + (1.0 - xx) ** (p - a))
    out = total / (2.0 * order.cos_factor)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ManufacturedProblem:
    order: FractionalOrder

    @property
    def alpha(self) -> float:
        return self.order.alpha

    def u(self, x: float | np.ndarray) -> float | np.ndarray:
        return exact_u(x)

    def du(self, x: float | np.ndarray) -> float | np.ndarray:
        return exact_du(x)

    def f(self, x: float | np.ndarray) -> float | np.ndarray:
        return forcing(self.order, x)

    def u_on_grid(self, grid: Grid) -> np.ndarray:
        return np.asarray(exact_u(grid.interior_points), dtype=np.float64)

    def du_on_grid(self, grid: Grid) -> np.ndarray:
        return np.asarray(exact_du(grid.interior_points), dtype=np.float64)

    def f_on_grid(self, grid: Grid) -> np.ndarray:
        return np.asarray(forcing(self.order, grid.interior_points), dtype=np.float64)


@dataclass(frozen=True, eq=False)
class FdmSolution:
    values: np.ndarray
    backward_error: float


def fdm_solve(op: RieszOperator, f_grid: np.ndarray) -> FdmSolution:
    """Dense direct solve of A u = f."""
    f = np.asarray(f_grid, dtype=np.float64)
    if f.ndim != 1 or f.shape[0] != op.size:
        raise InputError(f"right-hand side length {f.shape} does not match {op.size} interior nodes")

    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            values = scipy.linalg.solve(op.dense, f, assume_a="sym")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as e:
            raise SingularOperatorError(
                f"FDM operator is numerically singular for alpha={op.alpha:g}, M={op.grid.intervals}: {e}"
            ) from e

    residual = op.dense @ values - f
    scale = np.linalg.norm(op.dense, ord=np.inf) * np.linalg.norm(values, ord=np.inf) + np.linalg.norm(
        f, ord=np.inf
    )
    backward = float(np.linalg.norm(residual, ord=np.inf) / scale) if scale > 0.0 else 0.0
    if not np.all(np.isfinite(values)) or backward > ORACLE_BACKWARD_TOL:
        raise SingularOperatorError(
            f"FDM solve backward error {backward:.3e} exceeds {ORACLE_BACKWARD_TOL:g} "
            f"(alpha={op.alpha:g}, M={op.grid.intervals})"
        )

    _log.debug("fdm_solved alpha=%.6g M=%d backward_error=%.3e", op.alpha, op.grid.intervals, backward)
    values.flags.writeable = False
    return FdmSolution(values=values, backward_error=backward)


def forcing_residual(op: RieszOperator, problem: ManufacturedProblem) -> float:
    """max_j |(A u)(x_j) - f(x_j)| for the exact solution sampled on the grid."""
    grid = op.grid
    return float(np.max(np.abs(op.apply(problem.u_on_grid(grid)) - problem.f_on_grid(grid))))
