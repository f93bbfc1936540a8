"""Discrete error norms, convergence orders and table rows.

Norms are unweighted sums over the interior nodes unless `h_weighted` is
requested: table magnitudes in the reference experiments grow like the square
root of the node count, which identifies the unweighted convention. The H1
column is the derivative-error seminorm only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from frac_oga.errors import InputError


class NormWeighting(str, Enum):
    RAW = "raw"
    H_WEIGHTED = "h_weighted"


def _as_vector(v: Sequence[float] | np.ndarray) -> np.ndarray:
    vec = np.asarray(v, dtype=np.float64).ravel()
    if vec.size == 0:
        raise InputError("norm of an empty vector is undefined")
    return vec


def raw_l2(v: Sequence[float] | np.ndarray) -> float:
    vec = _as_vector(v)
    return float(np.sqrt(np.sum(vec * vec)))


def linf(v: Sequence[float] | np.ndarray) -> float:
    return float(np.max(np.abs(_as_vector(v))))


def h1_seminorm(err_deriv_samples: Sequence[float] | np.ndarray) -> float:
    return raw_l2(err_deriv_samples)


class Order(NamedTuple):
    value: float
    defined: bool


def order_log2(prev_err: float, cur_err: float) -> Order:
    """log2(prev/cur); nonpositive or non-finite inputs give (0.0, False)."""
    if not (prev_err > 0.0 and cur_err > 0.0) or not (math.isfinite(prev_err) and math.isfinite(cur_err)):
        return Order(0.0, False)
    return Order(math.log2(prev_err / cur_err), True)


@dataclass(frozen=True)
class ErrorSample:
    """Errors of one iterate; orders are attached when a table is built."""

    n: int
    loss: float
    l2: float
    h1: float
    linf: float


COLUMNS: tuple[str, ...] = ("loss", "l2", "h1", "linf")


@dataclass(frozen=True)
class IterationRecord:
    n: int
    loss: float
    l2: float
    h1: float
    linf: float
    loss_order: float = 0.0
    l2_order: float = 0.0
    h1_order: float = 0.0
    linf_order: float = 0.0
    undefined_orders: tuple[str, ...] = field(default=())
    stagnated: bool = False


def measure(
    *,
    n: int,
    u_err: np.ndarray,
    du_err: np.ndarray,
    pde_residual: np.ndarray,
    h: float,
    weighting: NormWeighting = NormWeighting.RAW,
) -> ErrorSample:
    """Table errors from pointwise error samples at the interior nodes."""
    loss = raw_l2(pde_residual) ** 2
    l2 = raw_l2(u_err)
    h1 = h1_seminorm(du_err)
    if NormWeighting(weighting) is NormWeighting.H_WEIGHTED:
        loss *= h
        l2 *= math.sqrt(h)
        h1 *= math.sqrt(h)
    return ErrorSample(n=int(n), loss=loss, l2=l2, h1=h1, linf=linf(u_err))


def convergence_table(samples: Sequence[ErrorSample], stagnated_from: int | None = None) -> list[IterationRecord]:
    """Attach log2 orders between consecutive checkpoints; the first row gets 0."""
    rows: list[IterationRecord] = []
    prev: ErrorSample | None = None
    for s in samples:
        orders: dict[str, float] = {}
        undefined: list[str] = []
        for col in COLUMNS:
            if prev is None:
                orders[col] = 0.0
                continue
            o = order_log2(getattr(prev, col), getattr(s, col))
            orders[col] = o.value
            if not o.defined:
                undefined.append(col)
        rows.append(
            IterationRecord(
                n=s.n,
                loss=s.loss,
                l2=s.l2,
                h1=s.h1,
                linf=s.linf,
                loss_order=orders["loss"],
                l2_order=orders["l2"],
                h1_order=orders["h1"],
                linf_order=orders["linf"],
                undefined_orders=tuple(undefined),
                stagnated=stagnated_from is not None and s.n > stagnated_from,
            )
        )
        prev = s
    return rows


@dataclass(frozen=True)
class FdmRecord:
    """Direct-solve error against the exact solution on one grid."""

    intervals: int
    l2: float
    linf: float
    l2_order: float = 0.0
    linf_order: float = 0.0


def fdm_convergence_table(samples: Sequence[tuple[int, float, float]]) -> list[FdmRecord]:
    """(M, l2, linf) triples -> records; orders are normalized by log2 of the grid ratio."""
    rows: list[FdmRecord] = []
    for i, (m, l2, inf) in enumerate(samples):
        if i == 0:
            rows.append(FdmRecord(intervals=int(m), l2=l2, linf=inf))
            continue
        prev_m, prev_l2, prev_inf = samples[i - 1]
        refine = math.log2(m / prev_m) if m > prev_m > 0 else 1.0
        rows.append(
            FdmRecord(
                intervals=int(m),
                l2=l2,
                linf=inf,
                l2_order=order_log2(prev_l2, l2).value / refine,
                linf_order=order_log2(prev_inf, inf).value / refine,
            )
        )
    return rows
