from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.optimize

from project_config.logger import get_logger
from src.errors import DomainError, InsufficientDataError
from src.model.params import NonDivParams, divergence_time_factor, map_v_to_u, to_divergence
from src.model.selfsim import SelfSimilarSolution, evaluate
from src.solver.grid import Grid, Snapshot, Trajectory

logger = get_logger(__name__, log_file="diagnostics.log")

MAX_PRINCIPLE_TOL = 1e-10


def mass(snapshot: Snapshot, grid: Grid) -> float:
    """Discrete mass sum(v_i) dx, the quantity the conservative scheme preserves."""
    return float(np.sum(snapshot.values) * grid.dx)


def mass_drift(traj: Trajectory) -> np.ndarray:
    """|M(t) - M(0)| / M(0) per snapshot (absolute drift when M(0) = 0)."""
    masses = np.array([mass(s, traj.grid) for s in traj.snapshots])
    reference = masses[0] if masses[0] != 0 else 1.0
    return np.abs(masses - masses[0]) / abs(reference)


@dataclass(frozen=True)
class MaxPrincipleVerdict:
    passed: bool
    interior_min: float
    boundary_min: float
    witness: Optional[Tuple[float, float]] = None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "interior_min": self.interior_min,
            "boundary_min": self.boundary_min,
            "witness": list(self.witness) if self.witness is not None else None,
        }


def max_principle_check(traj: Trajectory, tol: float = MAX_PRINCIPLE_TOL) -> MaxPrincipleVerdict:
    """
    Minimum principle on the discrete parabolic boundary.

    The boundary is every cell at t = 0 plus the two end cells at all times; the interior is every other
    cell at t > 0. Passes iff the interior minimum is not below the boundary minimum by more than `tol`.
    The witness is the (x, t) of the interior minimum when the check fails.
    """
    values = traj.values
    boundary_min = float(min(values[0].min(), values[:, 0].min(), values[:, -1].min()))
    if values.shape[0] < 2:
        return MaxPrincipleVerdict(True, boundary_min, boundary_min)

    interior = values[1:, 1:-1]
    k, i = np.unravel_index(np.argmin(interior), interior.shape)
    interior_min = float(interior[k, i])
    passed = interior_min >= boundary_min - tol
    witness = None
    if not passed:
        witness = (float(traj.grid.cell_centers[i + 1]), float(traj.times[k + 1]))
        logger.warning(f"minimum principle violated at x={witness[0]:.6g}, t={witness[1]:.6g}: {interior_min:.3e}")
    return MaxPrincipleVerdict(passed, interior_min, boundary_min, witness)


@dataclass(frozen=True)
class SelfSimFit:
    distance: float
    t_shift: float

    def to_dict(self) -> dict:
        return {"distance": self.distance, "t_shift": self.t_shift}


def _l1_distance(v: np.ndarray, grid: Grid, s: SelfSimilarSolution, t: float) -> float:
    return float(np.sum(np.abs(v - evaluate(grid.cell_centers, t, s))) * grid.dx)


def selfsim_fit(traj: Trajectory, s: SelfSimilarSolution, t: float, shift_range: Tuple[float, float] = (0.0, 2.0),
                n_scan: int = 41) -> SelfSimFit:
    """
    L1 distance between the snapshot at `t` and the closed form at t + t0, minimized over t0.

    A coarse scan over `shift_range` is followed by a bounded scalar minimization around the best scan point.
    """
    v = traj.at(t).values
    lo, hi = shift_range
    shifts = np.linspace(lo, hi, n_scan)
    shifts = shifts[t + shifts > 0]
    if shifts.size == 0:
        raise DomainError(f"no admissible time shift in {shift_range} for t={t}")

    distances = np.array([_l1_distance(v, traj.grid, s, t + shift) for shift in shifts])
    best = int(np.argmin(distances))
    best_shift, best_distance = float(shifts[best]), float(distances[best])

    if shifts.size > 1:
        bracket = (float(shifts[max(best - 1, 0)]), float(shifts[min(best + 1, shifts.size - 1)]))
        refined = scipy.optimize.minimize_scalar(
            lambda shift: _l1_distance(v, traj.grid, s, t + shift),
            bounds=bracket,
            method="bounded",
            options={"xatol": 1e-10},
        )
        if refined.success and refined.fun < best_distance:
            best_shift, best_distance = float(refined.x), float(refined.fun)
    return SelfSimFit(distance=best_distance, t_shift=best_shift)


def selfsim_distance(traj: Trajectory, s: SelfSimilarSolution, t: float) -> float:
    """Shift-minimized L1 distance to the self-similar solution at recorded time `t`."""
    return selfsim_fit(traj, s, t).distance


def nondiv_residual(
        u: np.ndarray,
        u_t: np.ndarray,
        dx: float,
        nondiv: NonDivParams,
        time_factor: float,
) -> np.ndarray:
    """
    tau0 c u_t' - (sigma2/2) u^gamma |u_x|^beta u_xx at the interior cells of one snapshot.

    `u_t` is the derivative in the time t' = c t in which the divergence equation is coefficient free,
    so the physical derivative is c = `time_factor` times it. |u_x|^beta u_xx is evaluated as (|u_x|^beta u_x)_x / (1 + beta)
    with fluxes at the cell interfaces.
    """
    gradient = np.diff(u) / dx
    flux = np.abs(gradient) ** nondiv.beta * gradient
    curvature_term = np.diff(flux) / dx / (1.0 + nondiv.beta)
    interior = u[1:-1]
    return nondiv.tau0 * time_factor * u_t[1:-1] - 0.5 * nondiv.sigma2 * interior ** nondiv.gamma * curvature_term


def mapping_residual(
        traj: Trajectory,
        nondiv: NonDivParams,
        rel_threshold: float = 1e-10,
) -> np.ndarray:
    """
    Max-norm of the non-divergence residual of u = v^(alpha+1) per snapshot.

    Time derivatives are second-order differences over the recorded times; the residual is evaluated only at
    cells whose 3-point stencil lies where u > 10 rel_threshold max u.

    :raises DomainError: if `nondiv` does not map onto the trajectory's exponents.
    """
    div = to_divergence(nondiv)
    if not (np.isclose(div.gamma0, traj.params.gamma0) and np.isclose(div.m, traj.params.m)):
        raise DomainError(
            f"non-divergence parameters map to gamma0={div.gamma0}, m={div.m}, "
            f"trajectory has gamma0={traj.params.gamma0}, m={traj.params.m}"
        )
    if len(traj.snapshots) < 3:
        raise InsufficientDataError("mapping residual needs at least 3 snapshots")

    # the trajectory lives in t' = c t; u_t = c u_t'
    time_factor = divergence_time_factor(nondiv)
    u = map_v_to_u(np.maximum(traj.values, 0.0), div.alpha)
    u_t = np.gradient(u, traj.times, axis=0)

    residuals = np.zeros(u.shape[0])
    for k in range(u.shape[0]):
        level = 10.0 * rel_threshold * float(u[k].max(initial=0.0))
        if level <= 0:
            continue
        above = u[k] > level
        stencil = above[:-2] & above[1:-1] & above[2:]
        if not np.any(stencil):
            continue
        r = nondiv_residual(u[k], u_t[k], traj.grid.dx, nondiv, time_factor)
        residuals[k] = float(np.max(np.abs(r[stencil])))
    return residuals


def observed_order(h: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(h)."""
    h = np.asarray(h, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if h.size < 2 or np.any(errors <= 0):
        raise InsufficientDataError("observed order needs at least two positive errors")
    slope, _ = np.polyfit(np.log(h), np.log(errors), 1)
    return float(slope)
