"""
Mass-conservative implicit finite differences for

    v_t = (v^gamma0 |v_x|^m v_x)_x    on [-x_max, x_max],  zero flux at both ends.

Each step is backward Euler in conservative form,

    v_i^new = v_i + (dt/dx) (F_{i+1/2} - F_{i-1/2}),    F_{i+1/2} = D_{i+1/2} (v_{i+1} - v_i) / dx,

solved by Picard iteration: the interface diffusivity D is lagged to the previous iterate while the
gradient stays implicit, so every iteration is one tridiagonal solve. The matrix has unit column sums
and non-positive off-diagonals, which gives exact discrete mass conservation and a non-negative update.
"""
import time
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg

from project_config.logger import get_logger
from project_config.settings import (
    BOUNDARY_GUARD_CELLS,
    BOUNDARY_GUARD_LEVEL,
    PICARD_MAX_ITERS,
    PICARD_TOL,
    UNDERSHOOT_TOL,
)
from src.errors import DomainError, NumericalError, StepFailure
from src.model.params import DivParams
from src.solver.grid import Grid, Schedule, Snapshot, StepStats, Trajectory

logger = get_logger(__name__, log_file="solver.log")

# relative size of the gradient regularization used for m < 0
GRADIENT_EPS = 1e-12


def mound_ic(grid: Grid, x0: float = 1.0) -> Snapshot:
    """
    Unit-mass inverted parabola (3 / (4 x0)) (1 - (x / x0)^2) on |x| <= x0, zero elsewhere.

    :param grid: Grid to sample on.
    :param x0: Support half-width, must lie inside the domain.
    """
    if not 0 < x0 < grid.x_max:
        raise DomainError(f"mound support x0={x0} must satisfy 0 < x0 < x_max={grid.x_max}")
    x = grid.cell_centers
    values = np.where(np.abs(x) <= x0, 0.75 / x0 * (1.0 - (x / x0) ** 2), 0.0)
    return Snapshot(t=0.0, values=values)


def point_source_ic(grid: Grid, width: float) -> Snapshot:
    """Narrow mound of half-width `width`, renormalized to unit discrete mass."""
    if not 2.0 * grid.dx <= width < grid.x_max / 4.0:
        raise DomainError(
            f"point source width {width} must satisfy 2 dx = {2.0 * grid.dx} <= width < x_max / 4 = {grid.x_max / 4.0}"
        )
    x = grid.cell_centers
    values = np.where(np.abs(x) <= width, 1.0 - (x / width) ** 2, 0.0)
    # symmetrize explicitly so the renormalization cannot break x -> -x symmetry
    values = 0.5 * (values + values[::-1])
    values = values / (values.sum() * grid.dx)
    return Snapshot(t=0.0, values=values)


def interface_diffusivity(
        v_left: np.ndarray,
        v_right: np.ndarray,
        dx: float,
        params: DivParams,
        scale: Optional[float] = None,
) -> np.ndarray:
    """
    D = ((vL + vR) / 2)^gamma0 |g|^m with g = (vR - vL) / dx.

    For m < 0 the gradient magnitude is shifted by 1e-12 * scale / dx, `scale` being the size of v
    (defaults to the largest of the inputs). For m >= 0 no regularization is applied.
    """
    v_left = np.asarray(v_left, dtype=float)
    v_right = np.asarray(v_right, dtype=float)
    g = (v_right - v_left) / dx
    diffusivity = (0.5 * (v_left + v_right)) ** params.gamma0
    if params.m != 0:
        magnitude = np.abs(g)
        if params.m < 0:
            if scale is None:
                scale = float(max(np.max(np.abs(v_left), initial=0.0), np.max(np.abs(v_right), initial=0.0)))
            magnitude = magnitude + GRADIENT_EPS * max(scale, np.finfo(float).tiny) / dx
        diffusivity = diffusivity * magnitude ** params.m
    return diffusivity


def interface_flux(v_left, v_right, dx: float, params: DivParams):
    """
    Flux v^gamma0 |v_x|^m v_x across the interface between two cells.

    :return: A float for scalar inputs, an array otherwise. Exactly 0 when both sides are 0.
    """
    g = (np.asarray(v_right, dtype=float) - np.asarray(v_left, dtype=float)) / dx
    flux = interface_diffusivity(v_left, v_right, dx, params) * g
    if np.ndim(flux) == 0:
        return float(flux)
    return flux


def _solve_conservative(coupling: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """
    Solve (I + A) w = rhs where A is the discrete zero-flux diffusion operator with interface
    couplings a_{i+1/2} = dt D_{i+1/2} / dx^2 (length n - 1).
    """
    n = rhs.size
    ab = np.zeros((3, n))
    ab[0, 1:] = -coupling
    ab[1, :] = 1.0
    ab[1, :-1] += coupling
    ab[1, 1:] += coupling
    ab[2, :-1] = -coupling
    return scipy.linalg.solve_banded((1, 1), ab, rhs, check_finite=False)


def _picard_solve(
        values: np.ndarray,
        dt: float,
        params: DivParams,
        grid: Grid,
        tol: float,
        max_iters: int,
) -> Tuple[np.ndarray, int, float, float]:
    """
    One backward-Euler step by Picard iteration.

    :return: (new values clamped to >= 0, iterations, final max-norm change, minimum before clamping).
    """
    dx = grid.dx
    scale = float(np.max(values, initial=0.0))
    iterate = values.copy()
    change = np.inf

    for iteration in range(1, max_iters + 1):
        diffusivity = interface_diffusivity(iterate[:-1], iterate[1:], dx, params, scale=scale)
        updated = _solve_conservative(dt * diffusivity / dx ** 2, values)
        if not np.all(np.isfinite(updated)):
            raise StepFailure(f"non-finite iterate at Picard iteration {iteration}", iterations=iteration)
        change = float(np.max(np.abs(updated - iterate)))
        iterate = updated
        if change < tol:
            break
    else:
        raise StepFailure(
            f"Picard iteration did not converge in {max_iters} iterations (last change {change:.3e})",
            residual=change,
            iterations=max_iters,
        )

    lowest = float(iterate.min())
    if lowest < -UNDERSHOOT_TOL:
        raise StepFailure(f"undershoot {lowest:.3e} below -{UNDERSHOOT_TOL:g}", residual=change, iterations=iteration)
    iterate[iterate < 0] = 0.0

    drift = abs(iterate.sum() - values.sum()) * dx
    if drift > tol * values.size:
        raise StepFailure(f"step changed the discrete mass by {drift:.3e}", residual=change, iterations=iteration)

    return iterate, iteration, change, lowest


def step(
        state: Snapshot,
        dt: float,
        params: DivParams,
        grid: Grid,
        tol: float = PICARD_TOL,
        max_iters: int = PICARD_MAX_ITERS,
) -> Snapshot:
    """
    Advance `state` by one backward-Euler step of size `dt`.

    :raises StepFailure: on Picard non-convergence or an undershoot below -1e-12.
    """
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    state.check_invariants()
    values, _, _, _ = _picard_solve(state.values, dt, params, grid, tol, max_iters)
    return Snapshot(t=state.t + dt, values=values)


def _check_boundary(snapshot: Snapshot, cells: int = BOUNDARY_GUARD_CELLS, level: float = BOUNDARY_GUARD_LEVEL):
    edges = np.concatenate([snapshot.values[:cells], snapshot.values[-cells:]])
    if np.max(edges) > level:
        raise NumericalError(
            f"solution reached the boundary at t={snapshot.t:.6g} (v={np.max(edges):.3e} within {cells} cells); "
            f"enlarge x_max"
        )


def run(
        ic: Snapshot,
        params: DivParams,
        grid: Grid,
        schedule: Schedule,
        guard_boundary: bool = True,
) -> Trajectory:
    """
    Integrate from `ic` to `schedule.t_end` with adaptive time steps.

    The step is halved after a failure and grown by `schedule.dt_growth` (up to `dt_max`) after a success.
    Every snapshot time is hit exactly.

    :param ic: Initial snapshot (t = 0).
    :param params: Divergence-form exponents; the solver works in the coefficient-free time variable.
    :param grid: Spatial grid matching `ic`.
    :param schedule: Time-stepping plan.
    :param guard_boundary: Abort when the solution comes within 5 cells of the boundary.
    :return: Trajectory with the initial state and one snapshot per scheduled time.
    """
    if ic.values.size != grid.n_cells:
        raise DomainError(f"initial condition has {ic.values.size} cells, grid has {grid.n_cells}")
    if ic.t != 0.0:
        raise DomainError(f"initial condition must be at t=0, got t={ic.t}")
    ic.check_invariants()
    if params.experimental:
        logger.warning(f"m={params.m} < 0: gradient-regularized run, results are experimental")

    dt_floor = 1e-12 * schedule.t_end
    started = time.perf_counter()
    logger.info(
        f"Starting run: gamma0={params.gamma0}, m={params.m}, n_cells={grid.n_cells}, "
        f"x_max={grid.x_max}, t_end={schedule.t_end}, {len(schedule.snapshot_times)} snapshots"
    )

    state = ic
    snapshots: List[Snapshot] = [ic]
    stats: List[StepStats] = []
    dt = schedule.dt_initial

    for target in schedule.snapshot_times:
        while state.t < target:
            remaining = target - state.t
            landing = dt >= remaining
            h = remaining if landing else dt
            try:
                values, iterations, change, lowest = _picard_solve(
                    state.values, h, params, grid, schedule.picard_tol, schedule.picard_max_iters
                )
            except StepFailure as e:
                dt = 0.5 * h
                logger.warning(f"Step failure at t={state.t:.6g} with dt={h:.3e}: {e}. Retrying with dt={dt:.3e}")
                if dt < dt_floor:
                    raise NumericalError(
                        f"time step underflow at t={state.t:.6g}: dt={dt:.3e} < {dt_floor:.3e} "
                        f"(last failure: {e}, residual {e.residual:.3e})"
                    ) from e
                continue

            state = Snapshot(t=target if landing else state.t + h, values=values)
            stats.append(StepStats(t=state.t, dt=h, iterations=iterations, residual=change, min_before_clamp=lowest))
            logger.debug(f"t={state.t:.6g} dt={h:.3e} picard={iterations} change={change:.3e}")
            if guard_boundary:
                _check_boundary(state)
            if not landing:
                dt = min(dt * schedule.dt_growth, schedule.dt_max)

        state.check_invariants()
        snapshots.append(state)

    logger.info(
        f"Run finished: {len(stats)} steps, {sum(s.iterations for s in stats)} Picard iterations "
        f"in {time.perf_counter() - started:.2f}s"
    )
    return Trajectory(params=params, grid=grid, snapshots=snapshots, solver_stats=stats)
