import numpy as np
import pytest

from src.diagnostics.checks import (
    mapping_residual,
    mass,
    mass_drift,
    max_principle_check,
    nondiv_residual,
    observed_order,
    selfsim_distance,
    selfsim_fit,
)
from src.errors import DomainError, InsufficientDataError
from src.model.params import DivParams, NonDivParams
from src.model.selfsim import SelfSimilarSolution, sample_trajectory
from src.solver.grid import Grid, Snapshot, Trajectory

POROUS = DivParams(gamma0=1.0, m=0.0)
# gamma = 1/2, beta = 0 maps onto gamma0 = 1, m = 0 with q0 = 1
POROUS_NONDIV = NonDivParams(gamma=0.5, beta=0.0)


def _trajectory(grid, fields, times, params=POROUS):
    return Trajectory(params=params, grid=grid, snapshots=[Snapshot(t=t, values=v) for t, v in zip(times, fields)])


def test_mass_of_constant_field(small_grid):
    snapshot = Snapshot(t=0.0, values=np.full(small_grid.n_cells, 0.5))
    assert mass(snapshot, small_grid) == pytest.approx(0.5 * 2 * small_grid.x_max)


def test_mass_drift_is_relative(small_grid):
    base = np.full(small_grid.n_cells, 1.0)
    traj = _trajectory(small_grid, [base, 1.01 * base], [0.0, 1.0])
    np.testing.assert_allclose(mass_drift(traj), [0.0, 0.01])


def test_mass_drift_of_solver_run(porous_trajectory):
    assert mass_drift(porous_trajectory).max() <= 1e-8


def test_max_principle_holds_for_solver_run(porous_trajectory):
    verdict = max_principle_check(porous_trajectory)
    assert verdict.passed
    assert verdict.witness is None
    assert verdict.interior_min >= 0.0


def test_max_principle_constant_field_passes_with_equality(small_grid):
    field = np.full(small_grid.n_cells, 0.2)
    verdict = max_principle_check(_trajectory(small_grid, [field, field], [0.0, 1.0]))
    assert verdict.passed
    assert verdict.interior_min == verdict.boundary_min == 0.2


def test_max_principle_reports_witness(small_grid):
    later = np.zeros(small_grid.n_cells)
    later[100] = -1e-6
    traj = _trajectory(small_grid, [np.zeros(small_grid.n_cells), later], [0.0, 1.0])
    verdict = max_principle_check(traj)
    assert not verdict.passed
    assert verdict.witness == (pytest.approx(small_grid.cell_centers[100]), 1.0)
    assert verdict.to_dict()["interior_min"] == -1e-6


def test_selfsim_distance_of_exact_sample():
    grid = Grid(x_max=6.0, n_cells=600)
    s = SelfSimilarSolution.build(1.0, 0.0)
    traj = sample_trajectory(s, grid, [0.5, 1.0])
    assert selfsim_distance(traj, s, 1.0) < 1e-10


def test_selfsim_fit_recovers_time_shift():
    grid = Grid(x_max=6.0, n_cells=600)
    s = SelfSimilarSolution.build(1.0, 0.0)
    fit = selfsim_fit(sample_trajectory(s, grid, [1.0], t_shift=0.3), s, 1.0)
    assert fit.t_shift == pytest.approx(0.3, abs=1e-6)
    assert fit.distance < 1e-6


def test_selfsim_distance_of_zero_field_is_the_mass():
    grid = Grid(x_max=6.0, n_cells=600)
    traj = _trajectory(grid, [np.zeros(grid.n_cells)] * 2, [0.0, 1.0])
    assert selfsim_distance(traj, SelfSimilarSolution.build(1.0, 0.0), 1.0) == pytest.approx(1.0, abs=1e-3)


def test_nondiv_residual_vanishes_on_constant_field():
    u = np.full(20, 0.4)
    residual = nondiv_residual(u, np.zeros(20), 0.1, POROUS_NONDIV, time_factor=1.0)
    assert residual.shape == (18,)
    np.testing.assert_allclose(residual, 0.0, atol=1e-15)


def test_mapping_residual_of_zero_field(small_grid):
    zeros = [np.zeros(small_grid.n_cells)] * 3
    np.testing.assert_array_equal(mapping_residual(_trajectory(small_grid, zeros, [0.0, 0.5, 1.0]), POROUS_NONDIV), 0.0)


def test_mapping_residual_rejects_mismatched_exponents(porous_trajectory):
    with pytest.raises(DomainError):
        mapping_residual(porous_trajectory, NonDivParams(gamma=0.0, beta=1.0))


def test_mapping_residual_needs_three_snapshots(small_grid):
    zeros = [np.zeros(small_grid.n_cells)] * 2
    with pytest.raises(InsufficientDataError):
        mapping_residual(_trajectory(small_grid, zeros, [0.0, 1.0]), POROUS_NONDIV)


def test_mapping_residual_converges_on_exact_solution():
    s = SelfSimilarSolution.build(1.0, 0.0)
    spacings, residuals = [], []
    for n_cells in (150, 300, 600):
        grid = Grid(x_max=3.0, n_cells=n_cells)
        h = grid.dx
        times = [1.0 - 2 * h, 1.0 - h, 1.0, 1.0 + h, 1.0 + 2 * h]
        traj = sample_trajectory(s, grid, times)
        r = mapping_residual(traj, POROUS_NONDIV, rel_threshold=1e-3)
        spacings.append(h)
        residuals.append(r[traj.index_of(1.0)])
    assert residuals[0] > residuals[1] > residuals[2] > 0
    assert observed_order(spacings, residuals) >= 1.0


def test_observed_order_of_quadratic_errors():
    h = np.array([0.1, 0.05, 0.025])
    assert observed_order(h, 3.0 * h ** 2) == pytest.approx(2.0)


def test_observed_order_needs_positive_errors():
    with pytest.raises(InsufficientDataError):
        observed_order([0.1, 0.05], [1e-3, 0.0])
