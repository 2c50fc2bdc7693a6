"""
Experiment configuration: YAML text -> validated ExperimentConfig.

Parsing uses the ruamel round-trip loader, which rejects duplicate keys and remembers the line of every key,
so validation errors can point at the offending line of the file.
"""
import copy
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from ruamel.yaml import YAML
from ruamel.yaml.error import MarkedYAMLError, YAMLError

from project_config.logger import get_logger
from project_config.settings import (
    DT_GROWTH,
    DT_INITIAL,
    DT_MAX,
    FIRST_SNAPSHOT,
    FIT_WINDOW,
    N_CELLS,
    N_SNAPSHOTS,
    PICARD_MAX_ITERS,
    PICARD_TOL,
    PROFILE_POINTS,
    T_END,
    WORKERS,
    X_MAX,
)
from src.errors import ConfigError
from src.model.params import (
    DivParams,
    NonDivParams,
    divergence_time_factor,
    rescale_time,
    to_divergence,
    to_nondivergence,
)
from src.solver.grid import Grid, Schedule

logger = get_logger(__name__, log_file="experiments.log")

MODES = ("simulate", "selfsim", "front-fit", "verify-mapping", "degiorgi", "acceptance")
Mode = Literal["simulate", "selfsim", "front-fit", "verify-mapping", "degiorgi", "acceptance"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSettings(_Section):
    x_max: float = X_MAX
    n_cells: int = N_CELLS

    def build(self) -> Grid:
        return Grid(x_max=self.x_max, n_cells=self.n_cells)


class ScheduleSettings(_Section):
    t_end: float = T_END
    dt_initial: float = DT_INITIAL
    dt_max: float = DT_MAX
    dt_growth: float = DT_GROWTH
    n_snapshots: int = N_SNAPSHOTS
    first_snapshot: float = FIRST_SNAPSHOT
    snapshot_times: Optional[List[float]] = None
    picard_tol: float = PICARD_TOL
    picard_max_iters: int = PICARD_MAX_ITERS

    def build(self, extra_times: Sequence[float] = ()) -> Schedule:
        """Explicit `snapshot_times` win over the log-spaced default; `extra_times` are added either way."""
        options = dict(
            dt_initial=self.dt_initial,
            dt_max=self.dt_max,
            dt_growth=self.dt_growth,
            picard_tol=self.picard_tol,
            picard_max_iters=self.picard_max_iters,
        )
        if self.snapshot_times is not None:
            times = [t for t in list(self.snapshot_times) + list(extra_times) if 0 < t <= self.t_end]
            return Schedule(t_end=self.t_end, snapshot_times=tuple(times), **options)
        return Schedule.log_spaced(
            t_end=self.t_end,
            n_snapshots=self.n_snapshots,
            first_snapshot=self.first_snapshot,
            extra_times=extra_times,
            **options,
        )


class InitialCondition(_Section):
    kind: Literal["mound", "point_source"] = "mound"
    x0: float = 1.0
    width: Optional[float] = None

    @model_validator(mode="after")
    def _width_for_point_source(self):
        if self.kind == "point_source" and self.width is None:
            raise ValueError("point_source initial condition needs 'width'")
        return self


class DeGiorgiSettings(_Section):
    theta: float = 1.0
    r: float = 2.2
    n_max: int = 6
    support_radius: float = 1.0
    T: Optional[float] = None


class MappingSettings(_Section):
    refinement: List[int] = Field(default_factory=lambda: [1, 2, 4])
    base_cells: int = 300
    t_eval: float = 1.0
    dt: float = 4.0e-3
    # dt is refined by factor ** dt_power while dx is refined by factor
    dt_power: int = Field(default=2, ge=1)
    mask_level: float = 1.0e-2


class ExperimentConfig(_Section):
    """
    One experiment. Exponents come either in divergence form (gamma0, m, q0) or in non-divergence form
    (gamma, beta, sigma2, tau0, drift); the latter is mapped automatically.
    """
    mode: Mode
    gamma0: Optional[float] = None
    m: Optional[float] = None
    q0: Optional[float] = None
    gamma: Optional[float] = None
    beta: Optional[float] = None
    sigma2: float = 2.0
    tau0: float = 1.0
    drift: float = 0.0
    grid: GridSettings = Field(default_factory=GridSettings)
    schedule: ScheduleSettings = Field(default_factory=ScheduleSettings)
    ic: InitialCondition = Field(default_factory=InitialCondition)
    output_dir: Optional[str] = None
    front_threshold: Optional[float] = None
    fit_window: Tuple[float, float] = FIT_WINDOW
    profile_points: int = PROFILE_POINTS
    degiorgi: DeGiorgiSettings = Field(default_factory=DeGiorgiSettings)
    mapping: MappingSettings = Field(default_factory=MappingSettings)
    workers: int = WORKERS

    @model_validator(mode="after")
    def _one_parameter_family(self):
        divergent = self.gamma0 is not None or self.m is not None or self.q0 is not None
        nondivergent = self.gamma is not None or self.beta is not None
        if divergent and nondivergent:
            raise ValueError("give either gamma0/m/q0 or gamma/beta, not both")
        if self.mode != "acceptance" and not (divergent or nondivergent):
            raise ValueError(f"mode '{self.mode}' needs exponents: gamma0 and m, or gamma and beta")
        if divergent and (self.gamma0 is None or self.m is None):
            raise ValueError("divergence-form input needs both gamma0 and m")
        if nondivergent and (self.gamma is None or self.beta is None):
            raise ValueError("non-divergence input needs both gamma and beta")
        if not self.fit_window[0] < self.fit_window[1]:
            raise ValueError(f"fit_window must be increasing, got {list(self.fit_window)}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        return self

    @property
    def has_nondivergence_input(self) -> bool:
        return self.gamma is not None

    def nondiv_params(self) -> NonDivParams:
        """Non-divergence parameters as given, or recovered from the divergence exponents."""
        if self.has_nondivergence_input:
            return NonDivParams(gamma=self.gamma, beta=self.beta, sigma2=self.sigma2, tau0=self.tau0, drift=self.drift)
        return to_nondivergence(self.div_params(), sigma2=self.sigma2, tau0=self.tau0)

    def div_params(self) -> DivParams:
        if self.has_nondivergence_input:
            return to_divergence(self.nondiv_params())
        return DivParams(gamma0=self.gamma0, m=self.m, q0=1.0 if self.q0 is None else self.q0)

    def time_factor(self) -> float:
        """Factor c of t' = c t, t' being the coefficient-free time the solver integrates in."""
        if self.has_nondivergence_input:
            return divergence_time_factor(self.nondiv_params())
        return rescale_time(1.0, self.div_params().q0)

    def validate_domain(self) -> "ExperimentConfig":
        """Run every parameter through its module invariants before anything is computed."""
        self.grid.build()
        self.schedule.build()
        if self.gamma0 is not None or self.gamma is not None:
            self.div_params()
        return self

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _yaml_scalar(text: str) -> Any:
    return YAML(typ="safe").load(text)


def _to_plain(node: Any) -> Any:
    """Strip ruamel round-trip types down to dict / list / float / int / str."""
    if isinstance(node, dict):
        return {str(key): _to_plain(value) for key, value in node.items()}
    if isinstance(node, (list, tuple)):
        return [_to_plain(value) for value in node]
    if isinstance(node, bool):
        return bool(node)
    if isinstance(node, int):
        return int(node)
    if isinstance(node, float):
        return float(node)
    if isinstance(node, str):
        return str(node)
    return node


def apply_overrides(payload: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """
    Apply dotted-path overrides of the form key.path=value; values are parsed as YAML scalars.

    :raises ConfigError: on a malformed override or a path through a non-mapping.
    """
    for item in overrides or ():
        key, sep, raw = item.partition("=")
        parts = [segment for segment in key.strip().split(".") if segment]
        if not sep or not parts:
            raise ConfigError(f"invalid override '{item}', expected key.path=value", key=key.strip() or None)
        target = payload
        for segment in parts[:-1]:
            if target.get(segment) is None:
                target[segment] = {}
            target = target[segment]
            if not isinstance(target, dict):
                raise ConfigError(f"override '{item}' traverses a non-mapping", key=key.strip())
        try:
            target[parts[-1]] = _yaml_scalar(raw)
        except YAMLError as e:
            raise ConfigError(f"override '{item}' has an unparsable value: {e}", key=key.strip()) from e
    return payload


def _line_of(document: Any, location: Sequence[Any]) -> Optional[int]:
    """1-based line of the key at `location` in the round-trip document, when it was present in the file."""
    node = document
    line = None
    for part in location:
        if not isinstance(node, dict) or part not in node:
            break
        try:
            line = node.lc.key(part)[0] + 1
        except (AttributeError, KeyError, TypeError):
            return line
        node = node[part]
    return line


def parse_config(text: str, overrides: Sequence[str] = (), output_dir: Optional[str] = None) -> ExperimentConfig:
    """
    Parse and validate an experiment configuration.

    :param text: YAML document.
    :param overrides: key.path=value strings applied after the document is read.
    :param output_dir: Output directory replacing `output_dir` from the document.
    :return: Fully validated ExperimentConfig with defaults filled in.
    :raises ConfigError: on YAML syntax errors, duplicate or unknown keys and invalid values.
    :raises DomainError: when the parameters violate a model invariant.
    """
    yaml = YAML(typ="rt")
    try:
        document = yaml.load(text)
    except MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark is not None else None
        raise ConfigError(f"malformed config: {e.problem}", line=line) from e
    except YAMLError as e:
        raise ConfigError(f"malformed config: {e}") from e

    if document is None:
        document = {}
    if not isinstance(document, dict):
        raise ConfigError("config must be a mapping at the top level", line=1)

    return config_from_dict(_to_plain(document), overrides=overrides, output_dir=output_dir, document=document)


def config_from_dict(
        payload: Dict[str, Any],
        overrides: Sequence[str] = (),
        output_dir: Optional[str] = None,
        document: Any = None,
) -> ExperimentConfig:
    """
    Validate an already parsed mapping, e.g. a JSON request body.

    :param document: Round-trip YAML document the payload came from, used to locate errors by line.
    """
    payload = apply_overrides(copy.deepcopy(dict(payload)), overrides)
    if output_dir is not None:
        payload["output_dir"] = str(output_dir)

    try:
        config = ExperimentConfig.model_validate(payload)
    except ValidationError as e:
        first = e.errors()[0]
        location = [part for part in first["loc"] if isinstance(part, str)]
        key = ".".join(str(part) for part in first["loc"]) or None
        logger.warning(f"Config validation failed with {e.error_count()} error(s); first: {first['msg']} at {key}")
        line = _line_of(document, location) if document is not None else None
        raise ConfigError(first["msg"], key=key, line=line) from e

    return config.validate_domain()


def load_config(path: Path, overrides: Sequence[str] = (), output_dir: Optional[str] = None) -> ExperimentConfig:
    """Read a YAML file and parse it with `parse_config`."""
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config file {source}: {e.strerror}") from e
    logger.info(f"Loading experiment config from {source}")
    return parse_config(text, overrides=overrides, output_dir=output_dir)
