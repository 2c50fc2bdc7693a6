from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence, Tuple

import numpy as np

from project_config.settings import (
    DT_GROWTH,
    DT_INITIAL,
    DT_MAX,
    FIRST_SNAPSHOT,
    N_SNAPSHOTS,
    PICARD_MAX_ITERS,
    PICARD_TOL,
    T_END,
    UNDERSHOOT_TOL,
)
from src.errors import DomainError
from src.model.params import DivParams


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred grid on [-x_max, x_max]."""
    x_max: float
    n_cells: int

    def __post_init__(self):
        if not self.x_max > 0:
            raise DomainError(f"x_max must be positive, got {self.x_max}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 16:
            raise DomainError(f"n_cells must be an integer >= 16, got {self.n_cells}")

    @property
    def dx(self) -> float:
        return 2.0 * self.x_max / self.n_cells

    @cached_property
    def cell_centers(self) -> np.ndarray:
        # offsets i - (n-1)/2 are exact, so the centres are symmetric to the last bit
        offsets = np.arange(self.n_cells) - 0.5 * (self.n_cells - 1)
        centers = self.dx * offsets
        centers.setflags(write=False)
        return centers

    def to_dict(self) -> dict:
        return {"x_max": self.x_max, "n_cells": self.n_cells, "dx": self.dx}


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Concentration v per cell at time t."""
    t: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def check_invariants(self, undershoot_tol: float = UNDERSHOOT_TOL) -> None:
        if not np.all(np.isfinite(self.values)):
            raise DomainError(f"snapshot at t={self.t} holds non-finite values")
        if self.values.size and self.values.min() < -undershoot_tol:
            raise DomainError(
                f"snapshot at t={self.t} has undershoot {self.values.min():.3e} below -{undershoot_tol:g}"
            )


@dataclass(frozen=True)
class Schedule:
    """
    Time-stepping plan of a run.

    :param t_end: Final time.
    :param dt_initial: First trial step.
    :param dt_max: Upper bound for the adaptive step.
    :param snapshot_times: Recorded times in (0, t_end]; the solver steps exactly onto each of them.
    :param picard_tol: Max-norm change that ends the Picard iteration.
    :param picard_max_iters: Picard iterations allowed before the step fails.
    :param dt_growth: Step growth factor after a successful step.
    """
    t_end: float = T_END
    dt_initial: float = DT_INITIAL
    dt_max: float = DT_MAX
    snapshot_times: Tuple[float, ...] = ()
    picard_tol: float = PICARD_TOL
    picard_max_iters: int = PICARD_MAX_ITERS
    dt_growth: float = DT_GROWTH

    def __post_init__(self):
        if not self.t_end > 0:
            raise DomainError(f"t_end must be positive, got {self.t_end}")
        if not 0 < self.dt_initial <= self.dt_max:
            raise DomainError(
                f"need 0 < dt_initial <= dt_max, got dt_initial={self.dt_initial}, dt_max={self.dt_max}"
            )
        if self.picard_max_iters < 1 or not self.picard_tol > 0:
            raise DomainError("picard_tol must be positive and picard_max_iters at least 1")
        times = tuple(sorted(set(float(t) for t in self.snapshot_times)))
        if not times:
            times = (float(self.t_end),)
        if times[0] <= 0 or times[-1] > self.t_end:
            raise DomainError(f"snapshot times must lie in (0, {self.t_end}], got [{times[0]}, {times[-1]}]")
        object.__setattr__(self, "snapshot_times", times)

    @classmethod
    def log_spaced(
            cls,
            t_end: float = T_END,
            n_snapshots: int = N_SNAPSHOTS,
            first_snapshot: float = FIRST_SNAPSHOT,
            extra_times: Sequence[float] = (),
            **kwargs,
    ) -> "Schedule":
        """
        Schedule recording `n_snapshots` log-spaced times in [first_snapshot, t_end], plus `extra_times` and t_end.
        """
        first = min(first_snapshot, t_end)
        times = np.geomspace(first, t_end, max(n_snapshots, 1)) if first < t_end else np.array([t_end])
        # land exactly on round numbers the diagnostics ask for
        requested = [float(t) for t in extra_times if 0 < t <= t_end]
        times = [float(t) for t in times] + requested + [float(t_end)]
        return cls(t_end=t_end, snapshot_times=tuple(times), **kwargs)

    def to_dict(self) -> dict:
        return {
            "t_end": self.t_end,
            "dt_initial": self.dt_initial,
            "dt_max": self.dt_max,
            "dt_growth": self.dt_growth,
            "picard_tol": self.picard_tol,
            "picard_max_iters": self.picard_max_iters,
            "snapshot_times": list(self.snapshot_times),
        }


@dataclass(frozen=True)
class StepStats:
    t: float
    dt: float
    iterations: int
    residual: float
    min_before_clamp: float

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "dt": self.dt,
            "iterations": self.iterations,
            "residual": self.residual,
            "min_before_clamp": self.min_before_clamp,
        }


@dataclass
class Trajectory:
    params: DivParams
    grid: Grid
    snapshots: List[Snapshot]
    solver_stats: List[StepStats] = field(default_factory=list)

    def __post_init__(self):
        if not self.snapshots:
            raise DomainError("a trajectory needs at least one snapshot")
        times = self.times
        if times[0] != 0.0:
            raise DomainError(f"first snapshot must be at t=0, got {times[0]}")
        if np.any(np.diff(times) <= 0):
            raise DomainError("snapshot times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    @property
    def values(self) -> np.ndarray:
        """Array of shape (n_snapshots, n_cells)."""
        return np.vstack([s.values for s in self.snapshots])

    def index_of(self, t: float, rtol: float = 1e-12) -> int:
        matches = np.flatnonzero(np.isclose(self.times, t, rtol=rtol, atol=rtol))
        if matches.size == 0:
            raise DomainError(f"t={t} is not a recorded snapshot time")
        return int(matches[0])

    def at(self, t: float) -> Snapshot:
        return self.snapshots[self.index_of(t)]

    @property
    def min_before_clamp(self) -> float:
        mins = [s.min_before_clamp for s in self.solver_stats]
        return min(mins) if mins else float(self.values.min())

    def summary(self, mass_drift: Optional[float] = None) -> dict:
        """Plain-data summary: parameters, grid, per-step stats and the final mass drift."""
        return {
            "params": {
                "gamma0": self.params.gamma0,
                "m": self.params.m,
                "q0": self.params.q0,
                "alpha": self.params.alpha,
            },
            "grid": self.grid.to_dict(),
            "n_snapshots": len(self.snapshots),
            "n_steps": len(self.solver_stats),
            "picard_iterations": int(sum(s.iterations for s in self.solver_stats)),
            "min_before_clamp": self.min_before_clamp,
            "steps": [s.to_dict() for s in self.solver_stats],
            "mass_drift": mass_drift,
        }
