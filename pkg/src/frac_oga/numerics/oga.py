"""Orthogonal greedy algorithm over the ReLU^k dictionary.

u_0 = 0. Each step scores every candidate against the discrete residual
A u_{n-1} - f, appends the argmax neuron and re-solves the full Galerkin
system G a = r with G_mk = g_m^T A g_k and r_k = f^T g_k.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
import scipy.linalg

from frac_oga.errors import ConfigError, DegenerateDictionaryError, InputError, Stagnation
from frac_oga.numerics.dictionary import DictionaryGrid, Neuron, deriv_on_grid, eval_on_grid, select
from frac_oga.numerics.fracop import FractionalOrder, Grid, RieszOperator, assemble_operator
from frac_oga.numerics.metrics import ErrorSample, IterationRecord, NormWeighting, convergence_table, measure
from frac_oga.numerics.problems import ManufacturedProblem

_log = logging.getLogger("frac_oga.oga")

DEFAULT_CONDITION_THRESHOLD = 1e12


def default_checkpoints(max_neurons: int) -> tuple[int, ...]:
    """Powers of two from 2 up to N_max, with N_max itself appended if missing."""
    n_max = int(max_neurons)
    points: list[int] = []
    p = 2
    while p <= n_max:
        points.append(p)
        p *= 2
    if not points or points[-1] != n_max:
        points.append(n_max)
    return tuple(points)


@dataclass(frozen=True, eq=False)
class SolveConfig:
    order: FractionalOrder
    grid: Grid
    dictionary: DictionaryGrid
    max_neurons: int
    checkpoints: tuple[int, ...] = ()
    condition_threshold: float = DEFAULT_CONDITION_THRESHOLD
    weighting: NormWeighting = NormWeighting.RAW

    def __post_init__(self) -> None:
        if int(self.max_neurons) < 1:
            raise ConfigError("max_neurons", f"must be >= 1, got {self.max_neurons}")
        cps = tuple(int(c) for c in self.checkpoints) or default_checkpoints(self.max_neurons)
        if any(c < 1 for c in cps):
            raise ConfigError("checkpoints", "must be positive neuron counts")
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ConfigError("checkpoints", f"must be strictly ascending, got {list(cps)}")
        if cps[-1] > int(self.max_neurons):
            raise ConfigError("checkpoints", f"last checkpoint {cps[-1]} exceeds max_neurons={self.max_neurons}")
        if not float(self.condition_threshold) > 1.0:
            raise ConfigError("condition_threshold", f"must be > 1, got {self.condition_threshold}")
        object.__setattr__(self, "checkpoints", cps)
        object.__setattr__(self, "max_neurons", int(self.max_neurons))
        object.__setattr__(self, "weighting", NormWeighting(self.weighting))

    @property
    def power(self) -> int:
        return self.dictionary.power


@dataclass(frozen=True, eq=False)
class OgaState:
    """Selected neurons g_1..g_n with coefficients and cached grid data."""

    neurons: tuple[Neuron, ...]
    indices: tuple[int, ...]
    coeffs: np.ndarray
    evals: np.ndarray
    gram: np.ndarray
    rhs: np.ndarray
    used_fallback: bool = False

    @classmethod
    def empty(cls, grid: Grid) -> "OgaState":
        m = grid.size
        return cls(
            neurons=(),
            indices=(),
            coeffs=np.zeros(0),
            evals=np.zeros((0, m)),
            gram=np.zeros((0, 0)),
            rhs=np.zeros(0),
        )

    @property
    def step(self) -> int:
        return len(self.neurons)

    def values(self) -> np.ndarray:
        """u_n at the interior nodes."""
        return self.coeffs @ self.evals

    def derivative(self, grid: Grid) -> np.ndarray:
        out = np.zeros(grid.size)
        for a, g in zip(self.coeffs, self.neurons):
            out += a * deriv_on_grid(g, grid)
        return out


@dataclass(frozen=True, eq=False)
class Projection:
    coeffs: np.ndarray
    used_fallback: bool
    rcond: float


def gram_matrix(evals: np.ndarray, op: RieszOperator) -> np.ndarray:
    """G_mk = evals_m^T A evals_k, recomputed from scratch."""
    e = np.atleast_2d(np.asarray(evals, dtype=np.float64))
    applied = np.vstack([op.apply(row) for row in e])
    # Upper triangle holds e_i^T (A e_k) for i <= k, the same products the bordered update forms.
    g = e @ applied.T
    return np.triu(g) + np.triu(g, 1).T


def _solve_galerkin(gram: np.ndarray, rhs: np.ndarray, condition_threshold: float) -> Projection:
    if not np.any(gram):
        raise DegenerateDictionaryError("Gram matrix is identically zero; selected neurons vanish on the grid")

    eig = np.linalg.eigvalsh(gram)
    top = float(np.max(np.abs(eig)))
    rcond = float(eig[0] / top) if top > 0.0 else 0.0

    if rcond > 1.0 / condition_threshold:
        try:
            factor = scipy.linalg.cho_factor(gram, lower=True)
            coeffs = scipy.linalg.cho_solve(factor, rhs)
            # One step of iterative refinement.
            coeffs = coeffs + scipy.linalg.cho_solve(factor, rhs - gram @ coeffs)
            return Projection(coeffs=coeffs, used_fallback=False, rcond=rcond)
        except np.linalg.LinAlgError:
            pass

    coeffs = scipy.linalg.lstsq(gram, rhs, lapack_driver="gelsd")[0]
    _log.warning("projection_fallback n=%d rcond=%.3e", gram.shape[0], rcond)
    return Projection(coeffs=coeffs, used_fallback=True, rcond=rcond)


def project(
    evals: np.ndarray,
    op: RieszOperator,
    f_grid: np.ndarray,
    *,
    gram: np.ndarray | None = None,
    condition_threshold: float = DEFAULT_CONDITION_THRESHOLD,
) -> Projection:
    """Galerkin coefficients for span{evals_1..evals_n} in the A inner product."""
    e = np.atleast_2d(np.asarray(evals, dtype=np.float64))
    if e.shape[0] < 1 or e.shape[1] != op.size:
        raise InputError(f"evaluations of shape {e.shape} do not fit {op.size} interior nodes")
    f = np.asarray(f_grid, dtype=np.float64)
    if f.shape != (op.size,):
        raise InputError(f"right-hand side length {f.shape} does not match {op.size} interior nodes")
    g = gram_matrix(e, op) if gram is None else np.asarray(gram, dtype=np.float64)
    return _solve_galerkin(g, e @ f, condition_threshold)


def residual(state: OgaState, op: RieszOperator, f_grid: np.ndarray) -> np.ndarray:
    """A u_n - f; equals -f at n = 0."""
    f = np.asarray(f_grid, dtype=np.float64)
    if f.shape != (op.size,):
        raise InputError(f"right-hand side length {f.shape} does not match {op.size} interior nodes")
    if state.step == 0:
        return -f
    return op.apply(state.values()) - f


def step(
    state: OgaState,
    op: RieszOperator,
    f_grid: np.ndarray,
    dictionary: DictionaryGrid,
    grid: Grid,
    *,
    condition_threshold: float = DEFAULT_CONDITION_THRESHOLD,
) -> OgaState:
    """One greedy step; raises Stagnation when the residual is invisible to the dictionary."""
    f = np.asarray(f_grid, dtype=np.float64)
    sel = select(dictionary, residual(state, op, f), grid)

    e_new = eval_on_grid(sel.neuron, grid)
    a_new = op.apply(e_new)
    n = state.step

    # Border the cached Gram matrix with the new row/column.
    gram = np.empty((n + 1, n + 1))
    gram[:n, :n] = state.gram
    col = state.evals @ a_new
    gram[:n, n] = col
    gram[n, :n] = col
    gram[n, n] = e_new @ a_new
    rhs = np.append(state.rhs, f @ e_new)

    proj = _solve_galerkin(gram, rhs, condition_threshold)
    new_state = OgaState(
        neurons=state.neurons + (sel.neuron,),
        indices=state.indices + (sel.index,),
        coeffs=proj.coeffs,
        evals=np.vstack([state.evals, e_new]),
        gram=gram,
        rhs=rhs,
        used_fallback=proj.used_fallback,
    )
    _log.debug(
        "oga_step n=%d index=%d omega=%d bias=%.6f score=%.6e fallback=%s",
        new_state.step,
        sel.index,
        sel.neuron.omega,
        sel.neuron.bias,
        sel.score,
        proj.used_fallback,
    )
    return new_state


def iterate(
    config: SolveConfig,
    problem: ManufacturedProblem,
    *,
    operator: RieszOperator | None = None,
    f_grid: np.ndarray | None = None,
) -> Iterator[OgaState]:
    """Yield the state after every greedy step; stops early on stagnation."""
    op = operator if operator is not None else assemble_operator(config.order, config.grid)
    f = problem.f_on_grid(config.grid) if f_grid is None else np.asarray(f_grid, dtype=np.float64)
    state = OgaState.empty(config.grid)
    for _ in range(config.max_neurons):
        try:
            state = step(
                state,
                op,
                f,
                config.dictionary,
                config.grid,
                condition_threshold=config.condition_threshold,
            )
        except Stagnation:
            _log.warning("oga_stagnated n=%d", state.step)
            return
        yield state


def measure_state(
    state: OgaState,
    op: RieszOperator,
    f_grid: np.ndarray,
    problem: ManufacturedProblem,
    *,
    n: int | None = None,
    weighting: NormWeighting = NormWeighting.RAW,
) -> ErrorSample:
    grid = op.grid
    u_n = state.values() if state.step else np.zeros(grid.size)
    return measure(
        n=state.step if n is None else n,
        u_err=problem.u_on_grid(grid) - u_n,
        du_err=problem.du_on_grid(grid) - state.derivative(grid),
        pde_residual=op.apply(u_n) - np.asarray(f_grid, dtype=np.float64),
        h=grid.h,
        weighting=weighting,
    )


def energy_error(op: RieszOperator, u_n: np.ndarray, oracle: np.ndarray) -> float:
    """(u_n - u~)^T A (u_n - u~)."""
    d = np.asarray(u_n, dtype=np.float64) - np.asarray(oracle, dtype=np.float64)
    return float(d @ op.apply(d))


@dataclass
class RunResult:
    records: list[IterationRecord]
    final_state: OgaState
    stagnated_at: int | None = None
    fallbacks: int = 0
    selected: list[int] = field(default_factory=list)


def run_detailed(
    config: SolveConfig,
    problem: ManufacturedProblem,
    *,
    operator: RieszOperator | None = None,
    f_grid: np.ndarray | None = None,
) -> RunResult:
    op = operator if operator is not None else assemble_operator(config.order, config.grid)
    f = problem.f_on_grid(config.grid) if f_grid is None else np.asarray(f_grid, dtype=np.float64)
    checkpoints = set(config.checkpoints)

    samples: list[ErrorSample] = []
    state = OgaState.empty(config.grid)
    fallbacks = 0
    for state in iterate(config, problem, operator=op, f_grid=f):
        fallbacks += int(state.used_fallback)
        if state.step in checkpoints:
            sample = measure_state(state, op, f, problem, weighting=config.weighting)
            samples.append(sample)
            _log.info(
                "checkpoint alpha=%.6g k=%d M=%d n=%d loss=%.3e l2=%.3e h1=%.3e linf=%.3e",
                config.order.alpha,
                config.power,
                config.grid.intervals,
                sample.n,
                sample.loss,
                sample.l2,
                sample.h1,
                sample.linf,
            )

    stagnated_at: int | None = None
    if state.step < config.max_neurons:
        stagnated_at = state.step
        # Frozen iterate fills the remaining checkpoints so the table stays rectangular.
        for cp in config.checkpoints:
            if cp > state.step:
                samples.append(measure_state(state, op, f, problem, n=cp, weighting=config.weighting))

    records = convergence_table(samples, stagnated_from=stagnated_at)
    return RunResult(
        records=records,
        final_state=state,
        stagnated_at=stagnated_at,
        fallbacks=fallbacks,
        selected=list(state.indices),
    )


def run(
    config: SolveConfig,
    problem: ManufacturedProblem,
    *,
    operator: RieszOperator | None = None,
    f_grid: np.ndarray | None = None,
) -> list[IterationRecord]:
    return run_detailed(config, problem, operator=operator, f_grid=f_grid).records

