from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from project_config.logger import get_logger
from project_config.settings import FRONT_THRESHOLD
from src.errors import DomainError, InsufficientDataError
from src.solver.grid import Trajectory

logger = get_logger(__name__, log_file="diagnostics.log")

MIN_FIT_POINTS = 5


@dataclass(frozen=True, eq=False)
class FrontTrace:
    """
    Detected support radius per recorded time.

    :param threshold: Detection level. Relative to max v at each time when `relative` is true, absolute otherwise.
    """
    times: np.ndarray
    x_front: np.ndarray
    threshold: float
    relative: bool = True

    def rows(self):
        return list(zip(self.times.tolist(), self.x_front.tolist()))


@dataclass(frozen=True)
class FrontFit:
    """Least-squares line log x_f = slope log(t + t_shift) + intercept over `window`."""
    slope: float
    intercept: float
    r_squared: float
    window: Tuple[float, float]
    n_points: int
    t_shift: float = 0.0

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "window": list(self.window),
            "n_points": self.n_points,
            "t_shift": self.t_shift,
        }


def _outer_crossing(x: np.ndarray, v: np.ndarray, level: float) -> float:
    """Largest |x| where v crosses `level`, linearly interpolated between cells."""
    above = np.flatnonzero(v > level)
    if above.size == 0:
        return 0.0
    right, left = above[-1], above[0]

    if right + 1 < v.size:
        fraction = (v[right] - level) / (v[right] - v[right + 1])
        x_right = x[right] + fraction * (x[right + 1] - x[right])
    else:
        x_right = x[right]
    if left > 0:
        fraction = (v[left] - level) / (v[left] - v[left - 1])
        x_left = x[left] + fraction * (x[left - 1] - x[left])
    else:
        x_left = x[left]
    return float(max(abs(x_right), abs(x_left)))


def detect_front(traj: Trajectory, threshold: Optional[float] = None) -> FrontTrace:
    """
    Support radius x_f(t) of every snapshot.

    :param traj: Trajectory to scan.
    :param threshold: Absolute detection level. When omitted, 1e-10 times max v of each snapshot is used.
    :return: FrontTrace, made non-decreasing by a running maximum.
    """
    x = traj.grid.cell_centers
    values = traj.values
    if threshold is not None:
        if not threshold > 0:
            raise DomainError(f"front threshold must be positive, got {threshold}")
        global_max = float(values.max())
        if threshold >= global_max:
            raise InsufficientDataError(
                f"front threshold {threshold:.3e} is not below the field maximum {global_max:.3e}"
            )

    fronts = np.empty(len(traj.snapshots))
    for k, v in enumerate(values):
        level = threshold if threshold is not None else FRONT_THRESHOLD * float(v.max(initial=0.0))
        fronts[k] = _outer_crossing(x, v, level)

    monotone = np.maximum.accumulate(fronts)
    if np.any(monotone - fronts > traj.grid.dx):
        logger.warning("detected front receded by more than one cell; trace was made monotone")
    return FrontTrace(
        times=traj.times,
        x_front=monotone,
        threshold=threshold if threshold is not None else FRONT_THRESHOLD,
        relative=threshold is None,
    )


def fit_front_exponent(trace: FrontTrace, t_lo: float, t_hi: float, t_shift: float = 0.0) -> FrontFit:
    """
    Fit log x_f against log(t + t_shift) on [t_lo, t_hi]. The slope estimates the spreading exponent nu.

    :param t_shift: Virtual time origin; 0 gives the plain log-log fit.
    :raises InsufficientDataError: with fewer than 5 usable points in the window.
    """
    times = np.asarray(trace.times, dtype=float)
    fronts = np.asarray(trace.x_front, dtype=float)
    in_window = (times >= t_lo) & (times <= t_hi) & (times + t_shift > 0)
    if np.any(fronts[in_window] <= 0):
        raise InsufficientDataError(f"zero front position inside the fit window [{t_lo}, {t_hi}]")
    n_points = int(in_window.sum())
    if n_points < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"only {n_points} trace points in [{t_lo}, {t_hi}], need at least {MIN_FIT_POINTS}"
        )

    log_t = np.log(times[in_window] + t_shift)
    log_x = np.log(fronts[in_window])
    slope, intercept = np.polyfit(log_t, log_x, 1)

    predicted = slope * log_t + intercept
    ss_res = float(np.sum((log_x - predicted) ** 2))
    ss_tot = float(np.sum((log_x - log_x.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return FrontFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=float(min(max(r_squared, 0.0), 1.0)),
        window=(float(t_lo), float(t_hi)),
        n_points=n_points,
        t_shift=float(t_shift),
    )


def loglog_table(trace: FrontTrace, nu: float, eta_f: float, t_shift: float = 0.0) -> Sequence[Tuple[float, ...]]:
    """Rows (t, x_front, log t, log x_front, log x_theory) for t > 0, with x_theory = eta_f (t + t_shift)^nu."""
    rows = []
    for t, x in zip(trace.times, trace.x_front):
        if t <= 0:
            continue
        log_x = float(np.log(x)) if x > 0 else float("-inf")
        rows.append((float(t), float(x), float(np.log(t)), log_x, float(np.log(eta_f) + nu * np.log(t + t_shift))))
    return rows


def localization_check(traj: Trajectory, trace: FrontTrace, margin_cells: int = 10, level: float = 1e-10):
    """
    Worst ratio v / max v beyond x_f(t) + margin_cells dx over all snapshots.

    :return: (passed, worst ratio, time of the worst ratio)
    """
    x = np.abs(traj.grid.cell_centers)
    worst, worst_t = 0.0, float(traj.times[0])
    for t, v, front in zip(traj.times, traj.values, trace.x_front):
        peak = float(v.max(initial=0.0))
        if peak <= 0:
            continue
        outside = x > front + margin_cells * traj.grid.dx
        if not np.any(outside):
            continue
        ratio = float(v[outside].max()) / peak
        if ratio > worst:
            worst, worst_t = ratio, float(t)
    return worst < level, worst, worst_t
