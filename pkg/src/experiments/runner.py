"""
Experiment orchestration: one function per mode, each writing its artifacts into the experiment's output directory
and returning the mode-specific part of summary.json.
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from project_config.logger import get_logger
from project_config.settings import OUTPUT_DIR
from src.diagnostics.checks import (
    mapping_residual,
    mass_drift,
    max_principle_check,
    observed_order,
    selfsim_fit,
)
from src.diagnostics.degiorgi import DeGiorgiConfig, degiorgi_energies
from src.diagnostics.front import detect_front, fit_front_exponent, localization_check, loglog_table
from src.errors import AcceptanceFailure, DegDiffError, DomainError, InsufficientDataError
from src.experiments.config import ExperimentConfig
from src.experiments.writers import write_csv, write_json
from src.model.params import DivParams
from src.model.selfsim import (
    SelfSimilarSolution,
    exponent_nu,
    first_integral_residual,
    front_constant_quadrature,
    profile_table,
)
from src.solver.grid import Grid, Schedule, Snapshot, Trajectory
from src.solver.solver1d import mound_ic, point_source_ic, run

logger = get_logger(__name__, log_file="experiments.log")


@dataclass(frozen=True)
class ExperimentResult:
    exit_status: int
    output_dir: Path
    summary: dict


def output_dir_for(config: ExperimentConfig) -> Path:
    if config.output_dir is not None:
        return Path(config.output_dir)
    return Path(OUTPUT_DIR) / config.mode


def initial_condition(config: ExperimentConfig, grid: Grid) -> Snapshot:
    if config.ic.kind == "point_source":
        return point_source_ic(grid, config.ic.width)
    return mound_ic(grid, config.ic.x0)


def simulate(config: ExperimentConfig, params: Optional[DivParams] = None, extra_times: Sequence[float] = ()) -> Trajectory:
    """
    Solver run described by `config`. The fit window ends are always recorded.

    :param params: Exponents replacing the ones in `config`.
    """
    params = config.div_params() if params is None else params
    grid = config.grid.build()
    schedule = config.schedule.build(extra_times=tuple(config.fit_window) + tuple(extra_times))
    return run(initial_condition(config, grid), params, grid, schedule)


def self_similar_or_none(params: DivParams) -> Optional[SelfSimilarSolution]:
    """The closed-form solution, or None for exponents without one (gamma0 + m <= 0)."""
    try:
        return SelfSimilarSolution.from_params(params)
    except DomainError as e:
        logger.info(f"No self-similar solution for gamma0={params.gamma0}, m={params.m}: {e}")
        return None


def time_records(times: Sequence[float], factor: float) -> list:
    """Each recorded solver time t' with the physical time t = t' / factor."""
    return [{"t_prime": float(t), "t": float(t) / factor} for t in times]


def _recorded(traj: Trajectory, t: float) -> bool:
    try:
        traj.index_of(t)
        return True
    except DomainError:
        return False


def analyse_front(traj: Trajectory, config: ExperimentConfig, s: Optional[SelfSimilarSolution]) -> dict:
    """
    Front trace, raw and shifted exponent fits and the localization check of a trajectory.

    The shifted fit uses the virtual time origin of the L1 self-similar fit at the end of the window.
    Fits that lack data are reported as None.
    """
    t_lo, t_hi = config.fit_window
    trace = detect_front(traj, config.front_threshold)
    result = {"trace": trace, "raw_fit": None, "shifted_fit": None, "t_shift": None, "selfsim": {}}

    try:
        result["raw_fit"] = fit_front_exponent(trace, t_lo, t_hi)
    except InsufficientDataError as e:
        logger.warning(f"Raw front fit skipped: {e}")

    if s is not None:
        for t in (t_lo, t_hi):
            if t > 0 and _recorded(traj, t):
                result["selfsim"][t] = selfsim_fit(traj, s, t)
        if t_hi in result["selfsim"]:
            result["t_shift"] = result["selfsim"][t_hi].t_shift
            try:
                result["shifted_fit"] = fit_front_exponent(trace, t_lo, t_hi, t_shift=result["t_shift"])
            except InsufficientDataError as e:
                logger.warning(f"Shifted front fit skipped: {e}")

    passed, worst, worst_t = localization_check(traj, trace)
    result["localization"] = {"passed": passed, "worst_ratio": worst, "worst_t": worst_t}
    return result


def _front_summary(analysis: dict, s: Optional[SelfSimilarSolution], nu: float) -> dict:
    return {
        "nu_theory": nu,
        "eta_f": s.eta_f if s is not None else None,
        "raw_fit": analysis["raw_fit"].to_dict() if analysis["raw_fit"] else None,
        "shifted_fit": analysis["shifted_fit"].to_dict() if analysis["shifted_fit"] else None,
        "t_shift": analysis["t_shift"],
        "selfsim_distance": {format(t, "g"): fit.to_dict() for t, fit in analysis["selfsim"].items()},
        "localization": analysis["localization"],
    }


def write_front_artifacts(out: Path, analysis: dict, s: Optional[SelfSimilarSolution]) -> None:
    trace = analysis["trace"]
    write_csv(out / "front_trace.csv", ["t", "x_front"], trace.rows())
    if s is not None:
        t_shift = analysis["t_shift"] or 0.0
        write_csv(
            out / "front_loglog.csv",
            ["t", "x_front", "log_t", "log_x_front", "log_x_theory"],
            loglog_table(trace, s.nu, s.eta_f, t_shift=t_shift),
        )


def write_snapshots(path: Path, traj: Trajectory) -> None:
    x = traj.grid.cell_centers
    rows = ((snapshot.t, xi, vi) for snapshot in traj.snapshots for xi, vi in zip(x, snapshot.values))
    write_csv(path, ["t", "x", "v"], rows)


def _params_summary(config: ExperimentConfig) -> dict:
    div = config.div_params()
    payload = {"gamma0": div.gamma0, "m": div.m, "q0": div.q0, "alpha": div.alpha}
    if config.has_nondivergence_input:
        nondiv = config.nondiv_params()
        payload["nondivergence"] = {
            "gamma": nondiv.gamma,
            "beta": nondiv.beta,
            "sigma2": nondiv.sigma2,
            "tau0": nondiv.tau0,
        }
    payload["time_factor"] = config.time_factor()
    return payload


def _trajectory_summary(traj: Trajectory, out: Path) -> dict:
    drift = mass_drift(traj)
    summary = traj.summary(mass_drift=float(drift.max()))
    steps = summary.pop("steps")
    write_csv(
        out / "solver_steps.csv",
        ["t", "dt", "iterations", "residual", "min_before_clamp"],
        ([s["t"], s["dt"], s["iterations"], s["residual"], s["min_before_clamp"]] for s in steps),
    )
    summary["max_principle"] = max_principle_check(traj).to_dict()
    return summary


def run_simulate(config: ExperimentConfig, out: Path) -> dict:
    params = config.div_params()
    traj = simulate(config)
    s = self_similar_or_none(params)
    analysis = analyse_front(traj, config, s)

    write_snapshots(out / "snapshots.csv", traj)
    write_front_artifacts(out, analysis, s)
    return {
        "params": _params_summary(config),
        "trajectory": _trajectory_summary(traj, out),
        "times": time_records(traj.times, config.time_factor()),
        "front": _front_summary(analysis, s, exponent_nu(params.gamma0, params.m)),
    }


def run_front_fit(config: ExperimentConfig, out: Path) -> dict:
    params = config.div_params()
    traj = simulate(config)
    s = self_similar_or_none(params)
    analysis = analyse_front(traj, config, s)
    if analysis["raw_fit"] is None:
        t_lo, t_hi = config.fit_window
        raise InsufficientDataError(f"not enough recorded times in the fit window [{t_lo}, {t_hi}]")

    write_front_artifacts(out, analysis, s)
    return {
        "params": _params_summary(config),
        "times": time_records(traj.times, config.time_factor()),
        "front": _front_summary(analysis, s, exponent_nu(params.gamma0, params.m)),
    }


def run_selfsim(config: ExperimentConfig, out: Path) -> dict:
    params = config.div_params()
    s = SelfSimilarSolution.from_params(params)
    table = profile_table(s, config.profile_points)
    write_csv(out / "selfsim_profile.csv", ["xi", "f", "f_prime"], table.tolist())

    xi = np.linspace(0.0, 0.999, 1002)[1:-1]
    residual = np.abs(first_integral_residual(xi, params.gamma0, params.m))
    return {
        "params": _params_summary(config),
        "selfsim": s.to_dict(),
        "eta_f_quadrature": front_constant_quadrature(params.gamma0, params.m),
        "first_integral_max_residual": float(residual.max()),
    }


def mapping_study(config: ExperimentConfig) -> dict:
    """
    Mapping residual at t_eval under simultaneous refinement: dx by each configured factor k, dt by k ** dt_power.

    Every level records t_eval - dt, t_eval and t_eval + dt with a fixed step dt, so the central time difference
    at t_eval is taken over exactly one step on each side.
    """
    settings = config.mapping
    params = config.div_params()
    nondiv = config.nondiv_params()
    rows, spacings, residuals = [], [], []
    for factor in settings.refinement:
        grid = Grid(x_max=config.grid.x_max, n_cells=settings.base_cells * factor)
        dt = settings.dt / factor ** settings.dt_power
        t_eval = settings.t_eval
        if not t_eval - dt > 0:
            raise DomainError(f"mapping.t_eval={t_eval} must exceed the step {dt}")
        schedule = Schedule(
            t_end=t_eval + dt,
            dt_initial=dt,
            dt_max=dt,
            snapshot_times=(t_eval - dt, t_eval, t_eval + dt),
            picard_tol=config.schedule.picard_tol,
            picard_max_iters=config.schedule.picard_max_iters,
        )
        traj = run(initial_condition(config, grid), params, grid, schedule)
        residual = mapping_residual(traj, nondiv, rel_threshold=settings.mask_level / 10.0)[traj.index_of(t_eval)]
        logger.info(f"mapping residual at refinement {factor}: {residual:.3e}")
        rows.append([factor, grid.n_cells, dt, residual])
        spacings.append(grid.dx)
        residuals.append(residual)
    return {"rows": rows, "order": observed_order(spacings, residuals), "residuals": residuals}


def run_verify_mapping(config: ExperimentConfig, out: Path) -> dict:
    study = mapping_study(config)
    write_csv(out / "mapping_residual.csv", ["refinement", "n_cells", "dt", "residual"], study["rows"])
    return {
        "params": _params_summary(config),
        "mapping": {"observed_order": study["order"], "residuals": study["residuals"]},
    }


def degiorgi_config(config: ExperimentConfig) -> DeGiorgiConfig:
    settings = config.degiorgi
    return DeGiorgiConfig(
        theta=settings.theta,
        r=settings.r,
        n_max=settings.n_max,
        nondiv=config.nondiv_params(),
        support_radius=settings.support_radius,
    )


def localized_time(traj: Trajectory, cfg: DeGiorgiConfig, threshold: Optional[float] = None) -> float:
    """Largest recorded t > 0 whose front lies inside B_{r_1}."""
    trace = detect_front(traj, threshold)
    inside = (trace.times > 0) & (trace.x_front < cfg.radius(1))
    if not np.any(inside):
        raise InsufficientDataError(f"the front is beyond r_1={cfg.radius(1):.6g} at every recorded time")
    return float(trace.times[inside].max())


def run_degiorgi(config: ExperimentConfig, out: Path) -> dict:
    cfg = degiorgi_config(config)
    traj = simulate(config)
    T = config.degiorgi.T if config.degiorgi.T is not None else localized_time(traj, cfg, config.front_threshold)
    report = degiorgi_energies(traj, cfg, T)
    write_json(out / "degiorgi.json", report.to_dict())
    write_csv(out / "front_trace.csv", ["t", "x_front"], detect_front(traj, config.front_threshold).rows())
    return {"params": _params_summary(config), "degiorgi": report.to_dict()}


def run_acceptance(config: ExperimentConfig, out: Path) -> dict:
    from src.experiments.acceptance import acceptance_suite

    report = acceptance_suite(config, out)
    result = {"acceptance": report}
    if not report["passed"]:
        failed = [c["id"] for c in report["criteria"] if c["status"] == "fail"]
        error = AcceptanceFailure(f"acceptance criteria failed: {failed}")
        result.update({"error": error.to_dict(), "exit_status": error.exit_status})
    return result


MODE_HANDLERS: Dict[str, Callable[[ExperimentConfig, Path], dict]] = {
    "simulate": run_simulate,
    "selfsim": run_selfsim,
    "front-fit": run_front_fit,
    "verify-mapping": run_verify_mapping,
    "degiorgi": run_degiorgi,
    "acceptance": run_acceptance,
}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """
    Run one experiment and write its artifacts plus summary.json.

    Errors of the degdiff hierarchy are recorded in summary.json under `error` with `status: failed`;
    the returned exit status is 0 on success and the error's exit status otherwise.
    """
    out = output_dir_for(config)
    out.mkdir(parents=True, exist_ok=True)
    logger.info(f"Running experiment mode={config.mode} into {out}")

    recorded_config = config.to_dict()
    recorded_config.pop("output_dir", None)
    summary = {"mode": config.mode, "config": recorded_config}
    try:
        summary.update(MODE_HANDLERS[config.mode](config, out))
        exit_status = summary.pop("exit_status", 0)
        summary["status"] = "ok" if exit_status == 0 else "failed"
    except DegDiffError as e:
        logger.error(f"Experiment mode={config.mode} failed: {e}")
        exit_status = e.exit_status
        summary.update({"status": "failed", "error": e.to_dict()})
    except Exception as e:
        logger.exception(f"Unexpected error in experiment mode={config.mode}: {str(e)}")
        raise

    summary["exit_status"] = exit_status
    write_json(out / "summary.json", summary)
    logger.info(f"Experiment mode={config.mode} finished with exit status {exit_status}")
    return ExperimentResult(exit_status=exit_status, output_dir=out, summary=summary)
