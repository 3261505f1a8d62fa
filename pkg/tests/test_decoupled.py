import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cavlab.decoupled import (DecoupledProblem, core_seed, el_residual, el_residual_norm,
                              energy_decoupled, gamma_test_pair, grad_decoupled,
                              minimize_decoupled, table1_sweep)
from cavlab.models import InfeasibleError, PenaltyModel, ogden_phi
from cavlab.optimize import grad_check
from cavlab.radial import RadialField, RadialGrid, affine_energy, energy_rad

PEN6 = PenaltyModel.from_eps2(1e-6, tau=3.0)


def random_state(seed, grid, lam=1.5):
    """Feasible perturbation of a mildly cavitated profile with a random phase."""
    rng = np.random.default_rng(seed)
    R = grid.nodes
    r = 0.5 * np.cbrt(0.5 + (lam ** 3 - 0.5) * R ** 3) + 0.5 * lam * R
    r[0] = 0.0
    r[1:-1] *= 1 + 2e-3 * rng.uniform(-1, 1, grid.m - 1)
    f = RadialField(grid, r)
    _, _, det, _, _ = f.cell_quantities()
    room = np.minimum(np.append(det, det[-1]), np.insert(det, 0, det[0]))
    # phases as minimizers have them: small, or past the well (v >= tau)
    f.v = rng.uniform(0.0, 0.05, grid.m + 1) * np.minimum(room, 1.0)
    big = room > 6.0
    f.v[big] = rng.uniform(3.0, np.minimum(0.6 * room[big], 6.0))
    f.v[-1] = 0.0
    assert f.is_feasible()
    return f


def test_reduction_to_classical(model, classical):
    f = classical.field
    total, parts = energy_decoupled(f, PEN6, model)
    assert total == energy_rad(f, model)
    assert parts.grad_v == 0 and parts.phi == 0


def test_affine_value(model, grid100):
    total, _ = energy_decoupled(RadialField.affine(grid100, 1.5), PEN6, model)
    assert total == pytest.approx(6.1054, rel=5e-4)


def test_infeasible(model, grid100):
    f = RadialField.affine(grid100, 1.5)
    f.v[:] = 10.0
    f.v[-1] = 0
    with pytest.raises(InfeasibleError):
        energy_decoupled(f, PEN6, model)


@pytest.mark.parametrize("seed", range(20))
def test_gradient_random_points(model, seed):
    grid = RadialGrid(40)
    f = random_state(seed, grid)
    pen = PenaltyModel.from_eps2(10.0 ** -(2 + seed % 5), tau=3.0)
    prob = DecoupledProblem(1.5, pen, model, grid)
    x = prob.pack(f)
    # floor 1e-4: components where -h' and phi' cancel sit below FD rounding
    assert grad_check(prob.objective, x, feasibility=prob.feasible, abs_floor=1e-4) < 1e-6


def test_gradient_layout(model, grid100):
    f = RadialField.affine(grid100, 1.5)
    g = grad_decoupled(f, PEN6, model)
    assert g.shape == (grid100.m - 1 + grid100.m,)


def test_affine_equilibrium_at_stress_free_stretch(model, grid100):
    lam = model.d0 ** (1 / 3)
    g = grad_decoupled(RadialField.affine(grid100, lam), PEN6, model)
    assert np.max(np.abs(g[:grid100.m - 1])) < 1e-12


def test_phi_free_v_gradient_at_zero(model, grid100):
    # at v = 0 the v-gradient is only the -h' term; it is independent of eps
    f = RadialField.affine(grid100, 1.5)
    g1 = grad_decoupled(f, PEN6, model)
    g2 = grad_decoupled(f, PenaltyModel.from_eps2(1e-10), model)
    np.testing.assert_allclose(g1, g2, rtol=0, atol=1e-14)


def test_subcritical(model, grid100):
    run = minimize_decoupled(1.0, PEN6, model, grid100)
    assert np.max(run.result.v) < 1e-6
    assert np.max(np.abs(run.result.r - grid100.nodes)) < 1e-4
    assert run.core_cells == 0


def test_core_seed(model, classical):
    seed = core_seed(classical.field, 2, model)
    assert seed.is_feasible()
    assert seed.r[0] == 0.0 and seed.r[-1] == 1.5
    assert np.all(seed.v[2:] == 0) and seed.v[0] > 0
    assert core_seed(RadialField.affine(classical.field.grid, 1.0), 1, model) is None
    with pytest.raises(ValueError):
        core_seed(classical.field, 0, model)


def test_warm_start_iterates_feasible(model, grid100):
    seen = []
    pen = PenaltyModel.from_eps2(1e-4)
    prob = DecoupledProblem(1.5, pen, model, grid100)
    from cavlab.optimize import minimize
    x0 = prob.pack(RadialField.affine(grid100, 1.5))
    minimize(prob.opt_problem(x0), max_iter=300, callback=lambda x, f: seen.append(x.copy()))
    assert seen and all(prob.unpack(x).is_feasible() for x in seen)


def test_el_residual_affine(model, grid100):
    for lam in (0.8, 1.5):
        res_r, res_v = el_residual(RadialField.affine(grid100, lam), PEN6, model)
        assert np.max(np.abs(res_r)) < 1e-9
        assert np.all(res_v == 0)


def test_el_residual_zero_where_v_zero(model, grid100):
    f = random_state(1, grid100)
    f.v[50:] = 0.0
    _, res_v = el_residual(f, PEN6, model)
    assert np.all(res_v[49:] == 0)


def test_gamma_pair_admissible(model, classical):
    pair = gamma_test_pair(0.1, 1.5, classical.field, model, PEN6)
    assert pair.field.r[-1] == 1.5 and pair.field.v[-1] == 0
    assert pair.field.r[0] == 0.0
    c = classical.field.r[10] / 0.1
    assert pair.tau == pytest.approx(c ** 3 - model.d0)
    assert pair.eta == pytest.approx(1e-5)
    assert pair.eps ** 4 == pytest.approx(0.1 ** 21, rel=1e-9)


def test_gamma_pair_errors(model, classical):
    with pytest.raises(ValueError):
        gamma_test_pair(0.6, 1.5, classical.field, model, PEN6)
    with pytest.raises(ValueError):
        gamma_test_pair(0.1, 1.5, classical.field, model, PEN6, beta1=3.0)
    with pytest.raises(ValueError):
        gamma_test_pair(0.105, 1.5, classical.field, model, PEN6)
    with pytest.raises(ValueError):
        gamma_test_pair(0.1, 1.4, classical.field, model, PEN6)


def test_table_records_failures(model):
    rows = table1_sweep(1.5, 3.0, [1e-3, -1.0], model, RadialGrid(20), core_cells=0)
    assert [r.eps2 for r in rows] == [1e-3, -1.0]
    assert rows[0].status == "ok" and rows[1].status == "failed"
    assert "eps" in rows[1].error


def test_large_eps_stays_affine(model, grid100):
    run = minimize_decoupled(1.5, PenaltyModel.from_eps2(1e-5), model, grid100)
    assert run.energy == pytest.approx(6.101645, rel=1e-2)
    assert run.energy <= affine_energy(1.5, model)
