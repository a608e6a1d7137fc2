"""
Export engine.

Reads and writes every artifact of the toolkit: canonical JSON documents
(configs, solutions, reports, patterns, manifests) and fixed-precision CSV
tables built with pandas.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Mapping, TypeVar

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from app import __version__
from app.config import COINCIDENCE_PAIRS
from app.exceptions import ConfigError
from app.schemas import (
    CoincidenceCounts,
    CoincidencePattern,
    ProblemSpec,
    PsoParams,
    QfpConfig,
    RunManifest,
    SolutionDocument,
)
from app.services.qfp_engine import ModeTransform
from app.utils.canonical import canonical_dumps, complex_matrix_to_json, format_float

CSV_FLOAT_FORMAT = "%.17g"
MANIFEST_NAME = "manifest.json"

M = TypeVar("M", bound=BaseModel)


# -- JSON ------------------------------------------------------------------------

def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    return obj


def write_json(path: str | Path, obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_dumps(to_jsonable(obj)), encoding="utf-8")
    return path


def read_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def load_model(path: str | Path, model: type[M]) -> M:
    """Parse *path* into *model*, naming offending fields on failure."""
    data = read_json(path)
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ConfigError.from_validation(str(path), exc) from None


def load_problem(path: str | Path) -> ProblemSpec:
    return load_model(path, ProblemSpec)


def load_pso(path: str | Path) -> PsoParams:
    return load_model(path, PsoParams)


def load_solution(path: str | Path) -> SolutionDocument:
    return load_model(path, SolutionDocument)


def load_manifest(path: str | Path) -> RunManifest:
    return load_model(path, RunManifest)


def load_config(path: str | Path) -> QfpConfig:
    """A bare QfpConfig document, or the ``config`` of a solution file."""
    data = read_json(path)
    if isinstance(data, dict) and "config" in data:
        data = data["config"]
    try:
        return QfpConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError.from_validation(str(path), exc) from None


# -- CSV ------------------------------------------------------------------------

def write_csv(frame: pd.DataFrame, path: str | Path, header: bool = True) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(
        path,
        index=False,
        header=header,
        float_format=CSV_FLOAT_FORMAT,
        lineterminator="\n",
    )
    return path


def trace_frame(trace: Iterable[float]) -> pd.DataFrame:
    values = list(trace)
    return pd.DataFrame({"iteration": range(1, len(values) + 1), "best_cost": values})


def spectrum_frame(w: ModeTransform, spectrum: dict[int, float], input_bin: int) -> pd.DataFrame:
    bins = sorted(spectrum)
    return pd.DataFrame({
        "input_bin": [input_bin] * len(bins),
        "bin": bins,
        "offset_ghz": [b * w.grid.spacing_ghz for b in bins],
        "power": [spectrum[b] for b in bins],
    })


def pattern_frame(pattern: CoincidencePattern, assignment: dict[str, int]) -> pd.DataFrame:
    rows = []
    for a, b in COINCIDENCE_PAIRS:
        label = f"{a}{b}"
        rows.append({
            "pair": label,
            "bin_a": assignment[a],
            "bin_b": assignment[b],
            "probability": pattern.probs.get(label, 0.0),
        })
    return pd.DataFrame(rows)


def counts_frame(counts: CoincidenceCounts) -> pd.DataFrame:
    labels = [f"{a}{b}" for a, b in COINCIDENCE_PAIRS]
    return pd.DataFrame({"pair": labels, "count": [counts.counts.get(k, 0) for k in labels]})


# -- Mode transforms -----------------------------------------------------------------

def transform_to_json(w: ModeTransform) -> dict[str, Any]:
    return {
        "grid": w.grid.model_dump(mode="json"),
        "computational_bins": list(w.computational_bins),
        "assignment": dict(w.assignment),
        "matrix": complex_matrix_to_json(w.matrix),
    }


def transform_frame(w: ModeTransform) -> pd.DataFrame:
    """Row-major matrix with ``re,im`` text cells."""
    cells = [
        [f"{format_float(z.real)},{format_float(z.imag)}" for z in row]
        for row in np.asarray(w.matrix)
    ]
    return pd.DataFrame(cells)


def export_transform(w: ModeTransform, out_dir: str | Path, stem: str = "transform") -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    return (
        write_json(out_dir / f"{stem}.json", transform_to_json(w)),
        write_csv(transform_frame(w), out_dir / f"{stem}.csv", header=False),
    )


# -- Manifests ------------------------------------------------------------------------

def write_manifest(
    out_dir: str | Path,
    command: str,
    inputs: Iterable[str | Path] = (),
    seed: int | None = None,
    wall_time_s: float = 0.0,
    arguments: Mapping[str, Any] | None = None,
) -> RunManifest:
    """Write the single ``manifest.json`` of *out_dir*.

    *arguments* holds every option the run was given, so the run can be repeated.
    """
    manifest = RunManifest(
        command=command,
        inputs=[str(p) for p in inputs],
        out_dir=str(out_dir),
        seed=seed,
        arguments=dict(arguments or {}),
        version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        wall_time_s=wall_time_s,
    )
    write_json(Path(out_dir) / MANIFEST_NAME, manifest)
    return manifest
