from pathlib import Path
from typing import Any, Dict, Optional

from fastapi import Depends, FastAPI, HTTPException, Query
from pydantic import BaseModel

from project_config.logger import get_logger
from project_config.settings import OUTPUT_DIR, PROFILE_POINTS
from src.api.auth import simple_auth
from src.errors import ConfigError, DegDiffError
from src.experiments.config import config_from_dict
from src.experiments.runner import run_experiment
from src.experiments.writers import to_jsonable
from src.model.selfsim import SelfSimilarSolution, profile_table

app = FastAPI(title="degdiff")
logger = get_logger(__name__, log_file="api.log")

API_OUTPUT_DIR = Path(OUTPUT_DIR) / "api"


def confined_output_dir(requested: Any, mode: Any) -> Path:
    """
    Output directory of an API request: `requested` relative to API_OUTPUT_DIR, or API_OUTPUT_DIR/<mode>.

    :raises ConfigError: if `requested` is absolute or leaves API_OUTPUT_DIR.
    """
    root = API_OUTPUT_DIR.resolve()
    if not requested:
        return root / str(mode or "unknown")
    relative = Path(str(requested))
    target = (root / relative).resolve()
    if relative.is_absolute() or target == root or not target.is_relative_to(root):
        raise ConfigError(f"output_dir must be a subdirectory of the API output directory, got '{requested}'",
                          key="output_dir")
    return target


class ExperimentResponse(BaseModel):
    exit_status: int
    output_dir: str
    summary: Dict[str, Any]


@app.post("/experiments/", response_model=ExperimentResponse)
def run_experiment_endpoint(payload: Dict[str, Any], authorized: bool = Depends(simple_auth)):
    """
    Run one experiment described by an ExperimentConfig JSON body and return its summary.

    `output_dir`, when given, is a relative path below the API output directory.

    Request Body:
    {
        "mode": "selfsim",
        "gamma0": 1.0,
        "m": 0.0
    }

    **Response**
    - **200**: The experiment ran; `exit_status` and `summary.status` tell whether it succeeded.
    - **422**: The configuration or its parameters are invalid, or `output_dir` leaves the API output directory.
    """
    logger.info(f"Received experiment request: mode={payload.get('mode')}")
    try:
        output_dir = confined_output_dir(payload.get("output_dir"), payload.get("mode"))
        config = config_from_dict(payload, output_dir=str(output_dir))
    except DegDiffError as e:
        logger.warning(f"Rejected experiment configuration: {e}")
        raise HTTPException(status_code=422, detail=e.to_dict())

    try:
        result = run_experiment(config)
    except Exception as e:
        logger.exception(f"Error running experiment mode={config.mode}: {str(e)}")
        raise HTTPException(status_code=500, detail=f"Error running experiment: {str(e)}")

    logger.info(f"Experiment mode={config.mode} finished with exit status {result.exit_status}")
    return ExperimentResponse(
        exit_status=result.exit_status,
        output_dir=str(result.output_dir),
        summary=to_jsonable(result.summary),
    )


@app.get("/selfsim/profile")
def selfsim_profile(
        gamma0: float,
        m: float,
        points: Optional[int] = Query(default=PROFILE_POINTS, ge=2),
        authorized: bool = Depends(simple_auth),
):
    """
    Constants and profile table of the unit-mass self-similar solution.

    **Response**
    - **200**: `{"solution": {nu, eta_f, V, ...}, "profile": [[xi, f, f_prime], ...]}`; f' at a singular front is null.
    - **422**: No self-similar solution exists for these exponents.
    """
    try:
        s = SelfSimilarSolution.build(gamma0, m)
        table = profile_table(s, points)
    except DegDiffError as e:
        logger.warning(f"Self-similar profile rejected for gamma0={gamma0}, m={m}: {e}")
        raise HTTPException(status_code=422, detail=e.to_dict())

    return {"solution": s.to_dict(), "profile": to_jsonable(table)}


@app.get("/health/api-health")
async def api_health_check(authorized: bool = Depends(simple_auth)):
    """
    Liveness check endpoint.

    This endpoint returns a 200 status code if the service is running.

    **Response**
    - **200**: Service is alive.
    """
    return {"status": "API is alive"}
