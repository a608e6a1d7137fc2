"""
FastAPI application entry point.

Wires up the service layer and exposes the QFP design endpoints:
``POST /metrics``, ``POST /spectra``, ``POST /bsa``, ``GET /jitter``,
``POST /validate`` and ``POST /synthesize``.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware

from app import __version__
from app.config import COMPUTATIONAL_BINS
from app.exceptions import NotDiscriminableError, QfpError
from app.schemas import (
    BellKind,
    BsaRequest,
    BsaResponse,
    JitterResponse,
    MetricsRequest,
    MetricsResponse,
    QfpConfig,
    SolutionDocument,
    SpectraRequest,
    SpectraResponse,
    SpectrumLine,
    SynthesizeRequest,
    ValidationReport,
)
from app.services import metrics_engine, qfp_engine, synthesis_engine, two_photon_engine
from app.services.validation_engine import validate_solution

app = FastAPI(
    title="Frequency-bin Bell State Analyzer Designer",
    version=__version__,
)

# -- CORS (allow all origins for local / dev usage) -------------------------
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)


# -- Shared pipeline ---------------------------------------------------------

def _compose(config: QfpConfig) -> qfp_engine.ModeTransform:
    try:
        return qfp_engine.compose_qfp(config)
    except QfpError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def _run_bsa(payload: BsaRequest) -> BsaResponse:
    kind = BellKind.parse(payload.state)
    w = _compose(payload.config)
    target = metrics_engine.target_unitary(payload.config.encoding)
    pattern = two_photon_engine.coincidence_pattern(w, two_photon_engine.bell_state(kind, target))

    counts = None
    measured = pattern
    if payload.counts is not None:
        counts = two_photon_engine.poisson_sample_counts(pattern, payload.counts, payload.seed)
        measured = counts

    accuracy = None
    notice = None
    try:
        accuracy = two_photon_engine.discrimination_accuracy(measured, kind)
    except NotDiscriminableError as exc:
        notice = str(exc)

    return BsaResponse(pattern=pattern, counts=counts, accuracy=accuracy, notice=notice)


# -- Routes ------------------------------------------------------------------

@app.post("/metrics", response_model=MetricsResponse)
async def metrics(payload: MetricsRequest):
    """Gate metrics of a QFP configuration against its target."""
    config = payload.config
    if payload.target_encoding is not None:
        config = config.model_copy(update={"encoding": payload.target_encoding})
    w = _compose(config)
    target = metrics_engine.target_unitary(config.encoding)
    try:
        gate = metrics_engine.gate_metrics(w, target)
    except QfpError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return MetricsResponse(
        metrics=gate,
        max_element_amplitude=metrics_engine.max_element_amplitude(w),
        eom1_peak_rad=qfp_engine.peak_deviation(config.eom1),
        eom2_peak_rad=qfp_engine.peak_deviation(config.eom2),
    )


@app.post("/spectra", response_model=SpectraResponse)
async def spectra(payload: SpectraRequest):
    """Classical output spectra for monochromatic inputs."""
    if payload.all_inputs:
        inputs = list(COMPUTATIONAL_BINS)
    elif payload.input_bin is not None:
        inputs = [payload.input_bin]
    else:
        raise HTTPException(status_code=400, detail="Give input_bin or set all_inputs.")

    w = _compose(payload.config)
    result: dict[str, list[SpectrumLine]] = {}
    for b in inputs:
        try:
            spectrum = qfp_engine.classical_spectrum(w, b)
        except QfpError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        result[str(b)] = [
            SpectrumLine(bin=m, offset_ghz=m * w.grid.spacing_ghz, power=p)
            for m, p in sorted(spectrum.items())
        ]
    return SpectraResponse(spectra=result)


@app.post("/bsa", response_model=BsaResponse)
async def bsa(payload: BsaRequest):
    """Coincidence pattern and discrimination accuracy for a Bell-state input."""
    try:
        return _run_bsa(payload)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.get("/jitter", response_model=JitterResponse)
async def jitter(
    spacing_ghz: float = Query(..., gt=0),
    jitter_ps: float | None = Query(None, ge=0),
    phase_rad: float | None = Query(None, ge=0),
):
    """Convert between detector jitter and phase uncertainty."""
    if (jitter_ps is None) == (phase_rad is None):
        raise HTTPException(status_code=400, detail="Give exactly one of jitter_ps or phase_rad.")
    delta_omega = 2.0 * math.pi * spacing_ghz * 1e9
    if jitter_ps is not None:
        phase_rad = metrics_engine.jitter_phase_bound(delta_omega, jitter_ps * 1e-12)
    else:
        jitter_ps = metrics_engine.required_jitter(delta_omega, phase_rad) * 1e12
    return JitterResponse(spacing_ghz=spacing_ghz, jitter_ps=jitter_ps, phase_rad=phase_rad)


@app.post("/validate", response_model=ValidationReport)
async def validate(payload: SolutionDocument):
    """Recompute and check a stored solution."""
    return validate_solution(payload)


@app.post("/synthesize", response_model=SolutionDocument)
def synthesize(payload: SynthesizeRequest):
    """Run a particle swarm search with the caller's budget."""
    try:
        problem = synthesis_engine.SynthesisProblem.from_spec(payload.problem)
        if payload.harmonics is not None:
            result = synthesis_engine.constrained_synthesize(problem, payload.pso, payload.harmonics)
        else:
            result = synthesis_engine.synthesize(problem, payload.pso)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return result.to_document()
