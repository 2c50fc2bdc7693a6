import numpy as np
import pytest

from src.diagnostics.checks import selfsim_fit
from src.diagnostics.front import FrontTrace, detect_front, fit_front_exponent, localization_check, loglog_table
from src.errors import DomainError, InsufficientDataError
from src.model.params import DivParams
from src.model.selfsim import SelfSimilarSolution, front_position, sample_trajectory
from src.solver.grid import Grid, Schedule, Snapshot, Trajectory
from src.solver.solver1d import mound_ic, run

POROUS = DivParams(gamma0=1.0, m=0.0)


def _power_law_trace(nu, prefactor=2.0, t_shift=0.0):
    times = np.concatenate([[0.0], np.geomspace(0.1, 10.0, 12)])
    fronts = prefactor * (times + t_shift) ** nu
    return FrontTrace(times=times, x_front=fronts, threshold=1e-10)


def test_zero_field_has_zero_front(small_grid):
    snapshots = [Snapshot(t=t, values=np.zeros(small_grid.n_cells)) for t in (0.0, 0.5, 1.0)]
    trace = detect_front(Trajectory(params=POROUS, grid=small_grid, snapshots=snapshots))
    assert trace.x_front.tolist() == [0.0, 0.0, 0.0]
    assert trace.relative


def test_front_of_self_similar_sample():
    grid = Grid(x_max=6.0, n_cells=600)
    s = SelfSimilarSolution.build(1.0, 0.0)
    trace = detect_front(sample_trajectory(s, grid, [0.5, 1.0]))
    assert trace.x_front[0] == 0.0
    assert trace.x_front[-1] == pytest.approx(front_position(1.0, s), abs=2 * grid.dx)


def test_front_of_mound(small_grid):
    traj = Trajectory(params=POROUS, grid=small_grid, snapshots=[mound_ic(small_grid)])
    assert detect_front(traj).x_front[0] == pytest.approx(1.0, abs=2 * small_grid.dx)


def test_absolute_threshold_must_lie_below_maximum(small_grid):
    traj = Trajectory(params=POROUS, grid=small_grid, snapshots=[mound_ic(small_grid)])
    with pytest.raises(InsufficientDataError):
        detect_front(traj, threshold=1.0)
    with pytest.raises(DomainError):
        detect_front(traj, threshold=-1.0)
    trace = detect_front(traj, threshold=0.1)
    assert not trace.relative and trace.threshold == 0.1
    assert trace.x_front[0] < 1.0


def test_trace_is_monotone(porous_trajectory):
    trace = detect_front(porous_trajectory)
    assert np.all(np.diff(trace.x_front) >= 0)
    assert trace.x_front[-1] > trace.x_front[0]
    assert len(trace.rows()) == len(porous_trajectory.snapshots)


def test_fit_recovers_exact_power_law():
    fit = fit_front_exponent(_power_law_trace(0.25), 1.0, 10.0)
    assert fit.slope == pytest.approx(0.25, abs=1e-12)
    assert np.exp(fit.intercept) == pytest.approx(2.0, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.n_points >= 5
    assert fit.to_dict()["window"] == [1.0, 10.0]


def test_fit_with_time_shift():
    trace = _power_law_trace(0.3, t_shift=0.5)
    assert fit_front_exponent(trace, 1.0, 10.0, t_shift=0.5).slope == pytest.approx(0.3, abs=1e-12)
    assert fit_front_exponent(trace, 1.0, 10.0).slope < 0.3


def test_fit_needs_five_points():
    with pytest.raises(InsufficientDataError):
        fit_front_exponent(_power_law_trace(0.25), 5.0, 10.0)


def test_fit_rejects_zero_fronts_in_window():
    trace = FrontTrace(times=np.linspace(0.0, 1.0, 11), x_front=np.zeros(11), threshold=1e-10)
    with pytest.raises(InsufficientDataError):
        fit_front_exponent(trace, 0.1, 1.0)


def test_loglog_table_skips_initial_time():
    trace = _power_law_trace(1.0 / 3.0)
    rows = loglog_table(trace, nu=1.0 / 3.0, eta_f=2.0)
    assert len(rows) == len(trace.times) - 1
    t, x, log_t, log_x, log_theory = rows[-1]
    assert t == pytest.approx(10.0)
    assert log_t == pytest.approx(np.log(10.0))
    assert log_x == pytest.approx(log_theory)


def test_localization_passes_for_compact_support():
    grid = Grid(x_max=6.0, n_cells=600)
    traj = sample_trajectory(SelfSimilarSolution.build(1.0, 0.0), grid, [0.5, 1.0, 2.0])
    passed, worst, _ = localization_check(traj, detect_front(traj))
    assert passed
    assert worst == 0.0


def test_localization_flags_distant_mass(small_grid):
    values = mound_ic(small_grid).values.copy()
    values[-20] = 1e-6
    traj = Trajectory(params=POROUS, grid=small_grid, snapshots=[Snapshot(t=0.0, values=values)])
    trace = FrontTrace(times=np.array([0.0]), x_front=np.array([1.0]), threshold=1e-10)
    passed, worst, worst_t = localization_check(traj, trace)
    assert not passed
    assert worst == pytest.approx(1e-6 / values.max())
    assert worst_t == 0.0


@pytest.mark.slow
def test_shifted_front_exponent_of_porous_medium_run():
    grid = Grid(x_max=12.0, n_cells=2400)
    schedule = Schedule.log_spaced(t_end=10.0, n_snapshots=60, extra_times=(1.0,), dt_max=0.005)
    traj = run(mound_ic(grid), POROUS, grid, schedule)
    s = SelfSimilarSolution.build(1.0, 0.0)
    t_shift = selfsim_fit(traj, s, 10.0).t_shift
    fit = fit_front_exponent(detect_front(traj), 1.0, 10.0, t_shift=t_shift)
    assert fit.slope == pytest.approx(s.nu, rel=0.05)
