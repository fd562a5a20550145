"""HTTP service exposing the analysis handlers.

The service is a thin wrapper: every analysis endpoint calls the same
handler the CLI uses in-process.  Artifacts are returned inline in the
response body so a remote client can persist them wherever it likes.
"""

from __future__ import annotations

from typing import Dict, List

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict

from . import __version__
from .cli import (
    ALL_KINDS,
    RunOptions,
    Scenario,
    list_bundled,
    load_bundled,
    run_analysis,
)
from .errors import ResetLabError, ScenarioError, UnsupportedConfigurationError


class HealthResponse(BaseModel):
    status: str
    version: str


class ScenarioListResponse(BaseModel):
    scenarios: List[str]


class AnalysisRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    scenario: Scenario
    options: RunOptions = RunOptions()


class AnalysisResponse(BaseModel):
    summary: dict
    artifacts: Dict[str, str]
    exit_code: int


def create_app() -> FastAPI:
    app = FastAPI(title="reset-lab", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/scenarios", response_model=ScenarioListResponse)
    def scenarios() -> ScenarioListResponse:
        return ScenarioListResponse(scenarios=list_bundled())

    @app.get("/scenarios/{name}")
    def scenario_detail(name: str) -> dict:
        try:
            sc = load_bundled(name)
        except ScenarioError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return sc.model_dump(mode="json")

    @app.post("/analyses/{kind}", response_model=AnalysisResponse)
    def analyze(kind: str, request: AnalysisRequest) -> AnalysisResponse:
        if kind not in ALL_KINDS:
            raise HTTPException(
                status_code=404,
                detail=f"unknown analysis kind {kind!r}; expected one of {list(ALL_KINDS)}",
            )
        try:
            result = run_analysis(kind, request.scenario, request.options)
        except UnsupportedConfigurationError as exc:
            return AnalysisResponse(
                summary={"error": str(exc)}, artifacts={}, exit_code=4
            )
        except (ScenarioError, ResetLabError) as exc:
            return AnalysisResponse(
                summary={"error": str(exc)}, artifacts={}, exit_code=1
            )
        return AnalysisResponse(
            summary=result.summary, artifacts=result.artifacts, exit_code=result.exit_code
        )

    return app


app = create_app()
