import logging
from pathlib import Path

import pytest

from frac_oga.app import ExperimentRunner, fdm_study, resolve_log_level, run_experiment, run_sweep
from frac_oga.config import ExperimentConfig, SweepConfig
from frac_oga.errors import ConfigError


def test_resolve_log_level_prefers_argument_over_environment(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("FRAC_OGA_LOG_LEVEL", "debug")
    assert resolve_log_level() == logging.DEBUG
    assert resolve_log_level("warning") == logging.WARNING
    with pytest.raises(ConfigError):
        resolve_log_level("chatty")


def test_runner_shares_discretization_between_powers() -> None:
    runner = ExperimentRunner()
    a = runner.discretization(1.5, 50)
    b = runner.discretization(1.5, 50)
    assert a is b
    assert a.positivity.factorization_ok
    assert runner.oracle(1.5, 50) is runner.oracle(1.5, 50)


def test_run_experiment_writes_table_and_sidecar(tmp_path: Path) -> None:
    cfg = ExperimentConfig(alpha=2.0, relu_power=1, grid_intervals=100, max_neurons=4)
    outcome = run_experiment(cfg, out=tmp_path / "t.csv")
    lines = outcome.table_path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "N,loss,loss_order,l2,l2_order,h1,h1_order,linf,linf_order"
    assert [line.split(",")[0] for line in lines[1:]] == ["2", "4"]
    assert outcome.full_path == tmp_path / "t.full.csv"
    assert outcome.full_path.exists()


def test_run_experiment_default_path_follows_format(tmp_path: Path) -> None:
    cfg = ExperimentConfig(
        alpha=2.0, grid_intervals=32, max_neurons=2, output_path=str(tmp_path / "t.csv"), output_format="markdown"
    )
    outcome = run_experiment(cfg)
    assert outcome.table_path == tmp_path / "t.md"
    assert outcome.full_path == tmp_path / "t.full.csv"
    assert not (tmp_path / "t.csv").exists()

    explicit = run_experiment(cfg, out=tmp_path / "kept.csv")
    assert explicit.table_path == tmp_path / "kept.csv"
    assert explicit.table_path.read_text(encoding="utf-8").startswith("| N |")


def test_run_experiment_is_byte_reproducible(tmp_path: Path) -> None:
    cfg = ExperimentConfig(alpha=1.5, relu_power=1, grid_intervals=100, max_neurons=16)
    a = run_experiment(cfg, out=tmp_path / "a.csv").table_path.read_bytes()
    b = run_experiment(cfg, out=tmp_path / "b.csv").table_path.read_bytes()
    assert a == b


def test_single_cell_sweep_matches_run(tmp_path: Path) -> None:
    sweep = SweepConfig(alphas=(1.5,), relu_powers=(2,), grid_intervals=(64,), max_neurons=8)
    outcome = run_sweep(sweep, tmp_path / "sweep")
    assert outcome.ok
    cell = sweep.experiment(1.5, 2, 64)
    direct = run_experiment(cell, out=tmp_path / "direct.csv")
    assert (tmp_path / "sweep" / cell.output_path).read_bytes() == direct.table_path.read_bytes()
    assert outcome.index_path.read_text(encoding="utf-8").splitlines()[1] == "1.5,2,64,ok,table_alpha1.5_k2_M64.csv"


def test_parallel_sweep_matches_sequential(tmp_path: Path) -> None:
    sweep = SweepConfig(alphas=(2.0, 1.5), relu_powers=(1, 2), grid_intervals=(64,), max_neurons=8)
    seq = run_sweep(sweep, tmp_path / "seq", workers=1)
    par = run_sweep(sweep, tmp_path / "par", workers=4)
    assert [e.table for e in seq.entries] == [e.table for e in par.entries]
    for name in [e.table for e in seq.entries] + ["index.csv"]:
        assert (tmp_path / "seq" / name).read_bytes() == (tmp_path / "par" / name).read_bytes()


def test_sweep_records_failed_cells_and_continues(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    from frac_oga import app
    from frac_oga.errors import SingularOperatorError

    real = app.run_experiment

    def flaky(cfg: ExperimentConfig, **kw):
        if cfg.alpha == 0.5:
            raise SingularOperatorError("singular")
        return real(cfg, **kw)

    monkeypatch.setattr(app, "run_experiment", flaky)
    sweep = SweepConfig(alphas=(2.0, 0.5), relu_powers=(1,), grid_intervals=(32,), max_neurons=4)
    outcome = run_sweep(sweep, tmp_path)
    assert not outcome.ok
    assert [e.status for e in outcome.entries] == ["ok", "failed"]
    assert (tmp_path / "table_alpha2_k1_M32.csv").exists()
    assert isinstance(outcome.failures["table_alpha0.5_k1_M32.csv"], SingularOperatorError)


def test_fdm_study_alpha2_second_order() -> None:
    records = fdm_study(2.0, (128, 256, 512))
    assert [r.intervals for r in records] == [128, 256, 512]
    for r in records[1:]:
        assert r.linf_order == pytest.approx(2.0, abs=0.2)
        assert r.l2_order == pytest.approx(2.0, abs=0.2)


def test_fdm_study_rejects_bad_grids() -> None:
    with pytest.raises(ConfigError):
        fdm_study(2.0, ())
    with pytest.raises(ConfigError):
        fdm_study(2.0, (256, 128))
