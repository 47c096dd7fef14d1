"""HTTP service exposing scoring, benchmark fitting, synthesis, validation.

Request/response schemas mirror the CLI's JSON contract; the CLI can
run the same operations in-process or post these models to a running
service (``uvicorn fsep.service:app``). Bundle and manifest paths in
requests are resolved on the server's filesystem.
"""

from __future__ import annotations

import time
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .bundle import read_bundle, read_manifest, validate_bundle
from .errors import FsepError
from .harness import run_benchmark, score_bundle
from .synth import SyntheticConfig, write_suite

MetricName = Literal[
    "dispersion",
    "dispersion-unweighted",
    "compactness",
    "confscore",
    "entropy",
    "atc",
    "frechet",
    "mmd",
    "kmeans-dispersion",
]
LabelSource = Literal["pseudo", "true"]


class ScoreRequest(BaseModel):
    bundle: str
    metric: MetricName
    reference: str | None = None
    labels: LabelSource = "pseudo"
    seed: int = 0


class ScoreResponse(BaseModel):
    metric: str
    value: float
    degenerate: bool
    seconds: float


class FitRequest(BaseModel):
    manifest: str
    metrics: list[MetricName] = Field(min_length=1)
    seed: int = 0
    labels: LabelSource = "pseudo"
    csv: str | None = None
    threads: int | None = None


class RegressionFitModel(BaseModel):
    slope: float
    intercept: float
    r2: float
    spearman: float
    n_points: int


class FitResponse(BaseModel):
    fits: dict[str, RegressionFitModel]
    raw_spearman: dict[str, float | None]


class SynthRequest(BaseModel):
    out: str
    k: int = 10
    d: int = 64
    train_n: int = 200
    test_m: int = 2000
    sigma: float = 1.0
    mean_scale: float = 4.0
    families: int = 5
    severities: int = 5
    noise: float = 0.6
    drift: float = 0.4
    imbalance: float = 1.0
    seed: int = 0


class SynthResponse(BaseModel):
    out: str
    manifest: str
    bundles: int


class ValidateRequest(BaseModel):
    bundle: str


class ValidateResponse(BaseModel):
    violations: list[str]


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str = __version__


app = FastAPI(title="fsep", version=__version__)


@app.exception_handler(FsepError)
async def fsep_error_handler(_: Request, exc: FsepError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse()


@app.post("/score", response_model=ScoreResponse)
def score(req: ScoreRequest) -> ScoreResponse:
    start = time.perf_counter()
    bundle = read_bundle(req.bundle)
    reference = read_bundle(req.reference) if req.reference else None
    result = score_bundle(
        bundle, req.metric, reference=reference, label_source=req.labels, seed=req.seed
    )
    return ScoreResponse(
        metric=req.metric,
        value=result.value,
        degenerate=result.degenerate,
        seconds=time.perf_counter() - start,
    )


@app.post("/fit", response_model=FitResponse)
def fit(req: FitRequest) -> FitResponse:
    manifest_path = Path(req.manifest)
    manifest = read_manifest(manifest_path)
    report = run_benchmark(
        manifest,
        req.metrics,
        seed=req.seed,
        label_source=req.labels,
        base_dir=manifest_path.parent,
        threads=req.threads,
    )
    if req.csv:
        Path(req.csv).write_text(report.to_csv(), encoding="utf-8")
    return FitResponse(
        fits={m: RegressionFitModel(**f.to_json_dict()) for m, f in report.fits.items()},
        raw_spearman=report.raw_spearman,
    )


@app.post("/synth", response_model=SynthResponse)
def synth(req: SynthRequest) -> SynthResponse:
    cfg = SyntheticConfig(
        k=req.k,
        d=req.d,
        train_per_class=req.train_n,
        test_m=req.test_m,
        sigma=req.sigma,
        mean_scale=req.mean_scale,
        families=req.families,
        severities=req.severities,
        noise_scale=req.noise,
        drift_scale=req.drift,
        imbalance=req.imbalance,
        seed=req.seed,
    )
    layout = write_suite(cfg, req.out)
    return SynthResponse(
        out=str(layout.out_dir),
        manifest=str(layout.manifest_path),
        bundles=len(layout.bundle_dirs),
    )


@app.post("/validate", response_model=ValidateResponse)
def validate(req: ValidateRequest) -> ValidateResponse:
    return ValidateResponse(violations=validate_bundle(req.bundle))


def get_app() -> FastAPI:
    return app
