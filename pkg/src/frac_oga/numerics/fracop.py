"""Shifted Grunwald-Letnikov discretization of the 1D fractional Laplacian.

The operator acts on the interior nodes x_j = j/M (j = 1..M-1) of the unit
interval with homogeneous Dirichlet data. Both one-sided GL sums are truncated
at the boundary, which makes the matrix a full symmetric Toeplitz matrix whose
first row is stored; the dense realization is built on demand.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.special import gammaln, gammasgn

from frac_oga.errors import ConfigError, InputError

_log = logging.getLogger("frac_oga.fracop")

# Seed for the Rayleigh-quotient probe vectors; fixed so reports are reproducible.
_PROBE_SEED = 20240601


@dataclass(frozen=True)
class FractionalOrder:
    """Exponent alpha of (-Delta)^(alpha/2); 0 < alpha <= 2 and alpha != 1."""

    alpha: float

    def __post_init__(self) -> None:
        a = float(self.alpha)
        if not math.isfinite(a) or a <= 0.0 or a > 2.0:
            raise ConfigError("alpha", f"must lie in (0, 2], got {self.alpha!r}")
        if math.isclose(a, 1.0, rel_tol=0.0, abs_tol=1e-12):
            raise ConfigError(
                "alpha",
                "cos(pi*alpha/2) vanishes at alpha=1, so the operator scale is singular; "
                "choose alpha in (0, 1) or (1, 2]",
            )
        object.__setattr__(self, "alpha", a)

    @property
    def cos_factor(self) -> float:
        return math.cos(math.pi * self.alpha / 2.0)


@dataclass(frozen=True)
class Grid:
    """Uniform grid on (0, 1) with M intervals and M-1 interior nodes."""

    intervals: int

    def __post_init__(self) -> None:
        if isinstance(self.intervals, bool) or int(self.intervals) != self.intervals:
            raise ConfigError("grid_intervals", f"must be an integer, got {self.intervals!r}")
        if int(self.intervals) < 3:
            raise ConfigError("grid_intervals", f"must be >= 3, got {self.intervals}")
        object.__setattr__(self, "intervals", int(self.intervals))

    @property
    def h(self) -> float:
        return 1.0 / self.intervals

    @property
    def size(self) -> int:
        return self.intervals - 1

    @cached_property
    def interior_points(self) -> np.ndarray:
        x = np.arange(1, self.intervals, dtype=np.float64) / self.intervals
        x.flags.writeable = False
        return x


def gl_coefficients(order: FractionalOrder, n: int) -> np.ndarray:
    """B_0..B_n from B_0 = 1, B_k = (1 - (alpha+1)/k) * B_{k-1}."""
    if n < 0:
        raise InputError(f"coefficient count must be >= 0, got {n}")
    out = np.empty(n + 1, dtype=np.float64)
    out[0] = 1.0
    a1 = order.alpha + 1.0
    for k in range(1, n + 1):
        out[k] = (1.0 - a1 / k) * out[k - 1]
    return out


def gl_coefficients_closed_form(order: FractionalOrder, n: int) -> np.ndarray:
    """B_k = (-1)^k Gamma(alpha+1) / (Gamma(k+1) Gamma(alpha-k+1)) via log-gamma.

    Poles of Gamma(alpha-k+1) (integer alpha, k > alpha) give B_k = 0.
    """
    if n < 0:
        raise InputError(f"coefficient count must be >= 0, got {n}")
    a = order.alpha
    k = np.arange(n + 1, dtype=np.float64)
    denom_arg = a - k + 1.0
    pole = (denom_arg <= 0) & (denom_arg == np.floor(denom_arg))
    safe_arg = np.where(pole, 0.5, denom_arg)
    log_mag = gammaln(a + 1.0) - gammaln(k + 1.0) - gammaln(safe_arg)
    sign = np.where(k % 2 == 0, 1.0, -1.0) * gammasgn(a + 1.0) * gammasgn(safe_arg)
    return np.where(pole, 0.0, sign * np.exp(log_mag))


@dataclass(frozen=True, eq=False)
class RieszOperator:
    """Symmetric Toeplitz matrix A of the shifted-GL fractional Laplacian.

    `toeplitz_row[m]` is A_{ij} for |i-j| = m.
    """

    order: FractionalOrder
    grid: Grid
    scale: float
    toeplitz_row: np.ndarray

    @property
    def alpha(self) -> float:
        return self.order.alpha

    @property
    def size(self) -> int:
        return self.grid.size

    @cached_property
    def dense(self) -> np.ndarray:
        mat = scipy.linalg.toeplitz(self.toeplitz_row)
        mat.flags.writeable = False
        return mat

    def apply(self, v: np.ndarray) -> np.ndarray:
        return apply_operator(self, v)


def assemble_operator(order: FractionalOrder, grid: Grid) -> RieszOperator:
    m = grid.intervals
    b = gl_coefficients(order, m - 1)
    scale = 1.0 / (2.0 * order.cos_factor * grid.h**order.alpha)

    row = np.empty(m - 1, dtype=np.float64)
    row[0] = scale * 2.0 * b[1]
    if m - 1 > 1:
        row[1] = scale * (b[0] + b[2])
    if m - 1 > 2:
        row[2:] = scale * b[3:m]
    row.flags.writeable = False

    _log.debug("operator_assembled alpha=%.6g M=%d scale=%.6e t0=%.6e", order.alpha, m, scale, row[0])
    return RieszOperator(order=order, grid=grid, scale=scale, toeplitz_row=row)


def apply_operator(op: RieszOperator, v: np.ndarray) -> np.ndarray:
    vec = np.asarray(v, dtype=np.float64)
    if vec.ndim != 1 or vec.shape[0] != op.size:
        raise InputError(f"vector length {vec.shape} does not match {op.size} interior nodes")
    return op.dense @ vec


@dataclass(frozen=True)
class PositivityReport:
    min_rayleigh: float
    factorization_ok: bool
    negative_diagonal: bool
    trials: int


def positivity_probe(op: RieszOperator, trials: int = 16) -> PositivityReport:
    """Diagnose positive definiteness of A; never raises on an indefinite operator."""
    if trials < 1:
        raise InputError(f"trials must be >= 1, got {trials}")

    try:
        scipy.linalg.cho_factor(op.dense, lower=True, check_finite=True)
        factorization_ok = True
    except np.linalg.LinAlgError:
        factorization_ok = False

    rng = np.random.default_rng(_PROBE_SEED)
    probes = rng.standard_normal((int(trials), op.size))
    quotients = np.einsum("ij,ij->i", probes @ op.dense, probes) / np.einsum("ij,ij->i", probes, probes)

    report = PositivityReport(
        min_rayleigh=float(quotients.min()),
        factorization_ok=factorization_ok,
        negative_diagonal=bool(op.toeplitz_row[0] < 0.0),
        trials=int(trials),
    )
    if not factorization_ok:
        _log.warning(
            "operator_not_positive alpha=%.6g M=%d min_rayleigh=%.3e negative_diagonal=%s",
            op.alpha,
            op.grid.intervals,
            report.min_rayleigh,
            report.negative_diagonal,
        )
    return report
