import contextlib
import logging
import time
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse
from pydantic import BaseModel

from tick_drift import __version__, settings
from tick_drift.duration_models import AcdParams, DurationModel, classify_limit, describe_model, simulate_acd
from tick_drift.errors import ConfigError, TickDriftError
from tick_drift.experiments import ExperimentConfig, run_experiment
from tick_drift.stochastic_kernels import RandomStream

logger = logging.getLogger(__name__)

EXPERIMENT_KINDS = ("simulate", "classify", "rate", "ttest", "s2", "leverage")


# --- Global State ---
class AppState:
    started_at: Optional[float] = None
    kernels_ready: bool = False


state = AppState()


# --- Lifespan Manager ---
@contextlib.asynccontextmanager
async def lifespan(app: FastAPI):
    settings.configure_logging()
    print("--- Starting Tick Drift Server ---")
    state.started_at = time.time()
    try:
        print(" > Compiling ACD kernel...")
        simulate_acd(AcdParams(omega=0.1, alpha=0.1, beta=0.8), 16, RandomStream(0), burnin=0)
        state.kernels_ready = True
        print(" > [SUCCESS] Kernels ready.")
    except Exception as e:
        print(f" > [WARNING] Kernel warm-up failed: {e}")
    yield


app = FastAPI(title="Tick Drift Lab", version=__version__, lifespan=lifespan)


@app.get("/", response_class=HTMLResponse)
async def serve_index():
    kinds = ", ".join(EXPERIMENT_KINDS)
    return HTMLResponse(
        "<h1>Tick Drift Lab API is running.</h1>"
        f"<p>POST /api/classify or /api/experiments/{{kind}} with kind in: {kinds}</p>"
    )


class ClassifyRequest(BaseModel):
    model: DurationModel


def _json_float(value):
    if value is None or not np.isfinite(value):
        return None
    return float(value)


@app.post("/api/classify")
def classify(request: ClassifyRequest):
    try:
        limit = classify_limit(request.model)
    except TickDriftError as e:
        raise HTTPException(status_code=422, detail=f"{type(e).__name__}: {e}")
    return {
        "model": describe_model(request.model),
        "gamma": limit.gamma,
        "family": limit.family.value,
        "label": limit.label(),
        "order": limit.order,
        "hurst": limit.hurst,
        "index": limit.index,
        "scale_known": limit.scale_known,
        "limit_variance": _json_float(limit.limit_variance),
    }


@app.post("/api/experiments/{kind}")
def experiment(kind: str, config: ExperimentConfig):
    if kind not in EXPERIMENT_KINDS:
        raise HTTPException(status_code=404, detail=f"Unknown experiment '{kind}'. Choose from {EXPERIMENT_KINDS}.")
    if config.replicates > settings.API_MAX_REPLICATES:
        raise HTTPException(
            status_code=400,
            detail=f"replicates={config.replicates} exceeds the API limit of {settings.API_MAX_REPLICATES}; use the CLI for larger runs.",
        )
    try:
        report = run_experiment(kind, config)
    except ConfigError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except TickDriftError as e:
        raise HTTPException(status_code=422, detail=f"{type(e).__name__}: {e}")

    rows = [{**row, "value": _json_float(row["value"]), "std_error": _json_float(row["std_error"])} for row in report.rows]
    return {
        "kind": kind,
        "scenario_id": config.scenario_id,
        "summary": report.summary,
        "rows": rows,
        "wall_time_seconds": round(report.wall_time, 3),
    }


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__, "kernels_ready": state.kernels_ready}
