"""Shared fixtures: grids, targets and the committed golden solutions."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from app.schemas import FrequencyGrid
from app.services import export_engine
from app.services.synthesis_engine import SynthesisResult

SOLUTIONS_DIR = Path(__file__).resolve().parent.parent / "solutions"

# name -> synth arguments that regenerate it
GOLDEN_RUNS: dict[str, str] = {
    "adjacent": "--encoding adjacent",
    "interleaved": "--encoding interleaved",
    "adjacent_h2": "--encoding adjacent --harmonics 2",
}


@pytest.fixture
def grid() -> FrequencyGrid:
    return FrequencyGrid()


@pytest.fixture
def small_grid() -> FrequencyGrid:
    """Window -3..4 (8 modes), small enough for the Fock oracle."""
    return FrequencyGrid.with_guard(2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture(params=["adjacent", "interleaved"])
def encoding(request) -> str:
    return request.param


def golden_path(name: str) -> Path:
    path = SOLUTIONS_DIR / name / "solution.json"
    if not path.exists():
        pytest.fail(
            f"golden solution {path} is missing; regenerate it with "
            f"`python -m app.cli synth {GOLDEN_RUNS[name]} --out solutions/{name}`"
        )
    return path


def _golden(name: str) -> SynthesisResult:
    return SynthesisResult.from_document(export_engine.load_solution(golden_path(name)))


@pytest.fixture(scope="session")
def adjacent_solution() -> SynthesisResult:
    return _golden("adjacent")


@pytest.fixture(scope="session")
def interleaved_solution() -> SynthesisResult:
    return _golden("interleaved")


@pytest.fixture(scope="session")
def adjacent_second_harmonic() -> SynthesisResult:
    return _golden("adjacent_h2")


@pytest.fixture
def adjacent_solution_path() -> Path:
    return golden_path("adjacent")
