import numpy as np
import pytest

from frac_oga.errors import ConfigError, DegenerateDictionaryError
from frac_oga.numerics.dictionary import DictionaryGrid, Neuron, eval_on_grid
from frac_oga.numerics.fracop import FractionalOrder, Grid, assemble_operator
from frac_oga.numerics.metrics import raw_l2
from frac_oga.numerics.oga import (
    OgaState,
    SolveConfig,
    default_checkpoints,
    energy_error,
    gram_matrix,
    iterate,
    project,
    residual,
    run,
    run_detailed,
    step,
)
from frac_oga.numerics.problems import ManufacturedProblem, fdm_solve


def _setup(alpha: float, m: int, max_neurons: int, power: int = 1, **kw) -> tuple[SolveConfig, ManufacturedProblem]:
    order = FractionalOrder(alpha)
    cfg = SolveConfig(
        order=order,
        grid=Grid(m),
        dictionary=DictionaryGrid(power=power),
        max_neurons=max_neurons,
        **kw,
    )
    return cfg, ManufacturedProblem(order)


def test_default_checkpoints() -> None:
    assert default_checkpoints(64) == (2, 4, 8, 16, 32, 64)
    assert default_checkpoints(48) == (2, 4, 8, 16, 32, 48)
    assert default_checkpoints(1) == (1,)


def test_solve_config_validation() -> None:
    with pytest.raises(ConfigError) as exc:
        _setup(2.0, 10, 0)
    assert exc.value.field == "max_neurons"
    with pytest.raises(ConfigError):
        _setup(2.0, 10, 8, checkpoints=(4, 2))
    with pytest.raises(ConfigError):
        _setup(2.0, 10, 8, checkpoints=(2, 16))
    with pytest.raises(ConfigError):
        _setup(2.0, 10, 8, condition_threshold=0.5)


def test_residual_of_empty_state_is_minus_f() -> None:
    cfg, problem = _setup(1.5, 20, 4)
    op = assemble_operator(cfg.order, cfg.grid)
    f = problem.f_on_grid(cfg.grid)
    assert np.array_equal(residual(OgaState.empty(cfg.grid), op, f), -f)


def test_bordered_gram_matches_scratch_recomputation() -> None:
    cfg, problem = _setup(1.5, 64, 10)
    op = assemble_operator(cfg.order, cfg.grid)
    states = list(iterate(cfg, problem, operator=op))
    final = states[-1]
    scratch = gram_matrix(final.evals, op)
    assert np.linalg.norm(final.gram - scratch) <= 1e-12 * np.linalg.norm(scratch)
    assert np.array_equal(final.gram, final.gram.T)


@pytest.mark.parametrize("alpha", [1.5, 2.0])
def test_galerkin_orthogonality_after_every_projection(alpha: float) -> None:
    cfg, problem = _setup(alpha, 100, 32)
    op = assemble_operator(cfg.order, cfg.grid)
    f = problem.f_on_grid(cfg.grid)
    f_norm = np.linalg.norm(f)
    for state in iterate(cfg, problem, operator=op, f_grid=f):
        r = op.apply(state.values()) - f
        bound = 1e-8 * f_norm * np.linalg.norm(state.evals, axis=1)
        assert np.all(np.abs(state.evals @ r) <= bound)


@pytest.mark.parametrize("alpha", [1.5, 2.0])
def test_energy_error_is_monotone(alpha: float) -> None:
    cfg, problem = _setup(alpha, 100, 24)
    op = assemble_operator(cfg.order, cfg.grid)
    f = problem.f_on_grid(cfg.grid)
    oracle = fdm_solve(op, f).values
    prev = energy_error(op, np.zeros(op.size), oracle)
    for state in iterate(cfg, problem, operator=op, f_grid=f):
        cur = energy_error(op, state.values(), oracle)
        assert cur <= prev * (1.0 + 1e-9) + 1e-14
        prev = cur


def test_project_falls_back_to_minimum_norm_on_singular_gram() -> None:
    op = assemble_operator(FractionalOrder(2.0), Grid(16))
    e = np.sin(np.pi * op.grid.interior_points)
    evals = np.vstack([e, e])
    proj = project(evals, op, np.ones(op.size))
    assert proj.used_fallback
    assert proj.coeffs[0] == pytest.approx(proj.coeffs[1], rel=1e-8)

    single = project(e[None, :], op, np.ones(op.size))
    assert not single.used_fallback
    assert proj.coeffs.sum() == pytest.approx(single.coeffs[0], rel=1e-8)


def test_project_rejects_all_zero_gram() -> None:
    op = assemble_operator(FractionalOrder(2.0), Grid(8))
    with pytest.raises(DegenerateDictionaryError):
        project(np.zeros((2, op.size)), op, np.ones(op.size))


def test_zero_forcing_stagnates_and_freezes_table() -> None:
    cfg, problem = _setup(2.0, 20, 8)
    result = run_detailed(cfg, problem, f_grid=np.zeros(cfg.grid.size))
    assert result.stagnated_at == 0
    assert [r.n for r in result.records] == [2, 4, 8]
    assert all(r.stagnated for r in result.records)
    assert len({r.l2 for r in result.records}) == 1


def test_run_small_table_shape() -> None:
    cfg, problem = _setup(2.0, 100, 4)
    records = run(cfg, problem)
    assert [r.n for r in records] == [2, 4]
    assert records[0].l2_order == 0.0
    assert records[1].l2 < records[0].l2


def test_run_is_deterministic() -> None:
    cfg, problem = _setup(1.5, 100, 16)
    a = run_detailed(cfg, problem)
    b = run_detailed(cfg, problem)
    assert a.selected == b.selected
    assert a.records == b.records


def test_alpha2_k2_small_grid_table_reaches_fdm_floor() -> None:
    cfg, problem = _setup(2.0, 100, 64, power=2)
    rows = {r.n: r for r in run(cfg, problem)}
    op = assemble_operator(cfg.order, cfg.grid)
    floor = raw_l2(problem.u_on_grid(cfg.grid) - fdm_solve(op, problem.f_on_grid(cfg.grid)).values)
    # 99 interior nodes put the discretization error near 2e-05, above 1e-5.
    assert 1e-5 < floor < 5e-5
    assert rows[64].l2 < rows[8].l2
    assert 0.5 <= rows[64].l2 / floor <= 1.5


@pytest.mark.slow
def test_alpha2_k1_fine_grid_table() -> None:
    cfg, problem = _setup(2.0, 1000, 64)
    rows = {r.n: r for r in run(cfg, problem)}
    l2 = [rows[n].l2 for n in (4, 8, 16, 32, 64)]
    assert all(b < a for a, b in zip(l2, l2[1:]))
    assert np.mean([rows[n].l2_order for n in (8, 16, 32, 64)]) >= 1.5
    assert rows[64].l2 <= 1e-3


@pytest.mark.slow
def test_alpha15_k1_fine_grid_table() -> None:
    cfg, problem = _setup(1.5, 1000, 32)
    rows = {r.n: r for r in run(cfg, problem)}
    assert rows[32].l2 <= 3e-3
    assert 0.7 <= np.log2(rows[8].h1 / rows[32].h1) / 2.0 <= 1.4


def test_project_onto_one_neuron_matches_scalar_formula() -> None:
    op = assemble_operator(FractionalOrder(1.5), Grid(32))
    e = eval_on_grid(Neuron(omega=1, bias=-0.3, power=2), op.grid)
    exact = project(e[None, :], op, op.apply(e))
    assert exact.coeffs.shape == (1,)
    assert exact.coeffs[0] == pytest.approx(1.0, rel=1e-12)

    f = np.cos(3.0 * op.grid.interior_points)
    expected = (f @ e) / (e @ op.apply(e))
    assert project(e[None, :], op, f).coeffs[0] == pytest.approx(expected, rel=1e-12)


def test_first_step_picks_brute_force_argmax() -> None:
    cfg, problem = _setup(1.5, 40, 1)
    op = assemble_operator(cfg.order, cfg.grid)
    f = problem.f_on_grid(cfg.grid)
    d = DictionaryGrid(bias_samples=129, power=2)
    state = step(OgaState.empty(cfg.grid), op, f, d, cfg.grid)

    scores = f @ d.evaluate_block(cfg.grid.interior_points, 0, len(d))
    assert state.indices == (int(np.argmax(np.abs(scores))),)
    e = state.evals[0]
    assert state.coeffs[0] == pytest.approx((f @ e) / (e @ op.apply(e)), rel=1e-10)


def test_iterates_match_dense_galerkin_solve() -> None:
    cfg, problem = _setup(1.5, 64, 8)
    op = assemble_operator(cfg.order, cfg.grid)
    f = problem.f_on_grid(cfg.grid)
    for state in iterate(cfg, problem, operator=op, f_grid=f):
        assert not state.used_fallback
        e = state.evals
        coeffs = np.linalg.solve(e @ op.dense @ e.T, e @ f)
        reference = coeffs @ e
        assert np.linalg.norm(state.values() - reference) <= 1e-10 * np.linalg.norm(reference)
