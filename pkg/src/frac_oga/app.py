"""Experiment wiring: logging setup, single runs, sweeps and the FDM baseline study."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Final, Sequence

import numpy as np

from frac_oga.config import ExperimentConfig, SweepConfig
from frac_oga.errors import ConfigError
from frac_oga.export.tables import (
    IndexEntry,
    atomic_write_bytes,
    path_for_format,
    render_fdm_table,
    write_index,
    write_table,
)
from frac_oga.numerics.cache import LruCache
from frac_oga.numerics.fracop import (
    FractionalOrder,
    Grid,
    PositivityReport,
    RieszOperator,
    assemble_operator,
    positivity_probe,
)
from frac_oga.numerics.metrics import FdmRecord, IterationRecord, NormWeighting, fdm_convergence_table, linf, raw_l2
from frac_oga.numerics.oga import RunResult, run_detailed
from frac_oga.numerics.problems import FdmSolution, ManufacturedProblem, fdm_solve

_log = logging.getLogger("frac_oga.app")

LOG_LEVEL_ENV: Final[str] = "FRAC_OGA_LOG_LEVEL"
LOG_FORMAT: Final[str] = "%(asctime)s %(levelname)s %(name)s %(message)s"
DEFAULT_CACHE_ITEMS: Final[int] = 16


def resolve_log_level(level: str | None = None) -> int:
    name = (level or os.getenv(LOG_LEVEL_ENV) or "INFO").strip().upper()
    value = logging.getLevelName(name)
    if not isinstance(value, int):
        raise ConfigError("log_level", f"unknown logging level {name!r}; use DEBUG, INFO, WARNING or ERROR")
    return value


def setup_logging(level: str | None = None, log_file: Path | None = None) -> None:
    handlers: list[logging.Handler] = [logging.StreamHandler()]
    if log_file is not None:
        log_file = Path(log_file)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))

    logging.basicConfig(
        level=resolve_log_level(level),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )


@dataclass(frozen=True, eq=False)
class Discretization:
    """Everything that depends only on (alpha, M)."""

    problem: ManufacturedProblem
    operator: RieszOperator
    f_grid: np.ndarray
    positivity: PositivityReport


class ExperimentRunner:
    """Runs OGA experiments, sharing discretizations between cells with equal (alpha, M)."""

    def __init__(self, cache_items: int = DEFAULT_CACHE_ITEMS) -> None:
        self._discretizations: LruCache[tuple[float, int], Discretization] = LruCache(cache_items)
        self._oracles: LruCache[tuple[float, int], FdmSolution] = LruCache(cache_items)

    def discretization(self, alpha: float, grid_intervals: int) -> Discretization:
        def build() -> Discretization:
            order = FractionalOrder(alpha)
            grid = Grid(grid_intervals)
            op = assemble_operator(order, grid)
            problem = ManufacturedProblem(order)
            f_grid = problem.f_on_grid(grid)
            f_grid.flags.writeable = False
            return Discretization(problem=problem, operator=op, f_grid=f_grid, positivity=positivity_probe(op))

        return self._discretizations.get_or_compute((float(alpha), int(grid_intervals)), build)

    def oracle(self, alpha: float, grid_intervals: int) -> FdmSolution:
        disc = self.discretization(alpha, grid_intervals)
        return self._oracles.get_or_compute(
            (float(alpha), int(grid_intervals)),
            lambda: fdm_solve(disc.operator, disc.f_grid),
        )

    def run(self, config: ExperimentConfig) -> RunResult:
        solve_cfg = config.validate().to_solve_config()
        disc = self.discretization(config.alpha, config.grid_intervals)
        _log.info(
            "run_started alpha=%.6g k=%d M=%d max_neurons=%d candidates=%d",
            config.alpha,
            config.relu_power,
            config.grid_intervals,
            config.max_neurons,
            len(solve_cfg.dictionary),
        )
        result = run_detailed(solve_cfg, disc.problem, operator=disc.operator, f_grid=disc.f_grid)
        if result.stagnated_at is not None:
            _log.warning(
                "run_stagnated alpha=%.6g k=%d M=%d n=%d",
                config.alpha,
                config.relu_power,
                config.grid_intervals,
                result.stagnated_at,
            )
        return result


@dataclass
class ExperimentOutcome:
    records: list[IterationRecord]
    table_path: Path
    full_path: Path
    result: RunResult


def run_experiment(
    config: ExperimentConfig,
    *,
    out: Path | None = None,
    output_format: str | None = None,
    runner: ExperimentRunner | None = None,
) -> ExperimentOutcome:
    """Run one cell and write its table plus the full-precision sidecar."""
    runner = runner or ExperimentRunner()
    fmt = output_format or config.output_format
    result = runner.run(config)
    # An explicit --out is used verbatim; the config path follows the chosen format.
    path = Path(out) if out is not None else path_for_format(Path(config.output_path), fmt)
    table_path, full_path = write_table(path, result.records, fmt)
    return ExperimentOutcome(records=result.records, table_path=table_path, full_path=full_path, result=result)


@dataclass
class SweepOutcome:
    entries: list[IndexEntry]
    index_path: Path
    failures: dict[str, Exception] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_sweep(
    sweep: SweepConfig,
    out_dir: Path,
    *,
    workers: int | None = None,
    runner: ExperimentRunner | None = None,
) -> SweepOutcome:
    """Run every cell; failures are recorded and do not stop the remaining cells."""
    sweep = sweep.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    runner = runner or ExperimentRunner()
    cells = list(sweep.cells())
    n_workers = int(workers if workers is not None else sweep.workers)
    if n_workers < 1:
        raise ConfigError("workers", f"must be >= 1, got {n_workers}")

    def run_cell(cell: tuple[float, int, int]) -> tuple[str, Exception | None]:
        cfg = sweep.experiment(*cell)
        try:
            run_experiment(cfg, out=out_dir / cfg.output_path, runner=runner)
        except Exception as e:
            _log.error("cell_failed alpha=%.6g k=%d M=%d error=%s", cell[0], cell[1], cell[2], e)
            return cfg.output_path, e
        return cfg.output_path, None

    _log.info("sweep_started cells=%d workers=%d out_dir=%s", len(cells), n_workers, out_dir)
    if n_workers == 1:
        results = [run_cell(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=n_workers, thread_name_prefix="frac-oga-cell") as pool:
            results = list(pool.map(run_cell, cells))

    entries: list[IndexEntry] = []
    failures: dict[str, Exception] = {}
    for (alpha, k, m), (table, error) in zip(cells, results):
        status = "ok" if error is None else "failed"
        entries.append(IndexEntry(alpha=alpha, relu_power=k, grid_intervals=m, status=status, table=table))
        if error is not None:
            failures[table] = error

    index_path = write_index(out_dir, entries)
    _log.info("sweep_finished cells=%d failed=%d", len(cells), len(failures))
    return SweepOutcome(entries=entries, index_path=index_path, failures=failures)


def fdm_study(
    alpha: float,
    grids: Sequence[int],
    *,
    weighting: NormWeighting = NormWeighting.H_WEIGHTED,
    runner: ExperimentRunner | None = None,
) -> list[FdmRecord]:
    """Direct FDM solve against the exact solution on each grid.

    The l2 column is h-weighted by default so that it approximates the continuous
    L2 norm and its order is comparable across grids.
    """
    if not grids:
        raise ConfigError("grids", "must list at least one grid size")
    if any(b <= a for a, b in zip(grids, grids[1:])):
        raise ConfigError("grids", f"must be strictly ascending, got {list(grids)}")
    runner = runner or ExperimentRunner()
    samples: list[tuple[int, float, float]] = []
    for m in grids:
        disc = runner.discretization(alpha, m)
        err = disc.problem.u_on_grid(disc.operator.grid) - runner.oracle(alpha, m).values
        l2 = raw_l2(err)
        if NormWeighting(weighting) is NormWeighting.H_WEIGHTED:
            l2 *= float(np.sqrt(disc.operator.grid.h))
        samples.append((int(m), l2, linf(err)))
        _log.info("fdm_solved alpha=%.6g M=%d l2=%.3e linf=%.3e", alpha, m, samples[-1][1], samples[-1][2])
    return fdm_convergence_table(samples)


def write_fdm_study(path: Path, records: Sequence[FdmRecord], output_format: str = "csv") -> Path:
    path = Path(path)
    atomic_write_bytes(path, render_fdm_table(records, output_format).encode("utf-8"))
    _log.info("table_written path=%s rows=%d format=%s", path, len(records), output_format)
    return path
