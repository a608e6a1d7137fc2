"""
Target unitaries and gate metrics.

Provides the interleaved and adjacent Hadamard-pair targets, the modal
fidelity / success probability / cost of a synthesized transform, and
the timing-jitter phase bound for spectrally distinct photons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from app.config import BIN_ASSIGNMENTS, COMPUTATIONAL_BINS, DEGENERATE_POWER, FIDELITY_CLAMP
from app.exceptions import BinAssignmentError, DegenerateResultError
from app.schemas import ComplexMatrix, Encoding, GateMetrics, TargetDocument
from app.services.qfp_engine import ModeTransform
from app.utils.canonical import complex_matrix_from_json

_H = 1.0 / math.sqrt(2.0)

# Rows / columns follow the frequency order (a₋₁, a₀, a₁, a₂).
_TARGET_MATRICES: dict[Encoding, np.ndarray] = {
    Encoding.INTERLEAVED: _H * np.array(
        [[1, 1, 0, 0], [1, -1, 0, 0], [0, 0, 1, 1], [0, 0, 1, -1]], dtype=complex
    ),
    Encoding.ADJACENT: _H * np.array(
        [[1, 0, 1, 0], [0, 1, 0, 1], [1, 0, -1, 0], [0, 1, 0, -1]], dtype=complex
    ),
}


@dataclass(frozen=True, eq=False)
class TargetUnitary:
    encoding: Encoding
    matrix: np.ndarray
    bin_assignment: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (4, 4):
            raise ValueError(f"target must be 4x4, got {matrix.shape}")
        if not np.allclose(matrix.conj().T @ matrix, np.eye(4), atol=1e-12):
            raise ValueError("target matrix is not unitary")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "encoding", Encoding(self.encoding))
        assignment = dict(self.bin_assignment) or dict(BIN_ASSIGNMENTS[self.encoding.value])
        object.__setattr__(self, "bin_assignment", assignment)

    def to_document(self) -> TargetDocument:
        return TargetDocument(
            encoding=self.encoding,
            matrix=ComplexMatrix(re=self.matrix.real.tolist(), im=self.matrix.imag.tolist()),
        )

    @classmethod
    def from_document(cls, doc: TargetDocument) -> "TargetUnitary":
        return cls(
            encoding=doc.encoding,
            matrix=complex_matrix_from_json(doc.matrix.model_dump()),
        )


def target_unitary(encoding: Encoding | str) -> TargetUnitary:
    """The Hadamard-pair BSA unitary for *encoding*."""
    enc = Encoding(encoding)
    return TargetUnitary(encoding=enc, matrix=_TARGET_MATRICES[enc].copy())


def identity_target(encoding: Encoding | str = Encoding.ADJACENT) -> TargetUnitary:
    return TargetUnitary(encoding=Encoding(encoding), matrix=np.eye(4, dtype=complex))


# -- Metrics ------------------------------------------------------------------

def _check_alignment(w: ModeTransform, target: TargetUnitary) -> None:
    if tuple(w.computational_bins) != tuple(COMPUTATIONAL_BINS):
        raise BinAssignmentError(
            f"transform computational bins {list(w.computational_bins)} "
            f"differ from {list(COMPUTATIONAL_BINS)}"
        )
    if dict(w.assignment) != dict(target.bin_assignment):
        raise BinAssignmentError(
            f"transform assignment {dict(w.assignment)} does not match "
            f"{target.encoding.value} assignment {dict(target.bin_assignment)}"
        )


def batch_costs(
    blocks: np.ndarray,
    target: np.ndarray,
    floor: float = FIDELITY_CLAMP,
) -> np.ndarray:
    """
    Cost C = P·log10(max(1 - F, floor)) for a stack of 4×4 blocks of shape ``(S, 4, 4)``.

    Blocks with vanishing success probability score 0 (the worst value).
    """
    power = np.sum(np.abs(blocks) ** 2, axis=(-2, -1)) / 4.0
    overlap = np.abs(np.sum(blocks.conj() * target, axis=(-2, -1))) ** 2
    safe = np.where(power < DEGENERATE_POWER, 1.0, power)
    fidelity = np.minimum(overlap / (16.0 * safe), 1.0)
    cost = power * np.log10(np.maximum(1.0 - fidelity, floor))
    return np.where(power < DEGENERATE_POWER, 0.0, cost)


def block_metrics(block: np.ndarray, target: np.ndarray) -> GateMetrics:
    """Modal fidelity, success probability and cost of a 4×4 block."""
    power = float(np.real(np.trace(block.conj().T @ block))) / 4.0
    if power < DEGENERATE_POWER:
        raise DegenerateResultError(
            f"success probability {power:.3g} is too small for a defined fidelity"
        )
    overlap = abs(np.trace(block.conj().T @ target)) ** 2
    fidelity = min(float(overlap) / (16.0 * power), 1.0)
    cost = power * math.log10(max(1.0 - fidelity, FIDELITY_CLAMP))
    return GateMetrics(fidelity=fidelity, success_prob=power, cost=cost)


def floored_cost(metrics: GateMetrics, floor: float) -> float:
    """Cost of *metrics* with the infidelity floored at *floor* instead of the clamp."""
    return metrics.success_prob * math.log10(max(1.0 - metrics.fidelity, floor, FIDELITY_CLAMP))


def gate_metrics(w: ModeTransform, target: TargetUnitary) -> GateMetrics:
    """Score the computational block of *w* against *target*."""
    _check_alignment(w, target)
    return block_metrics(w.computational_submatrix(), target.matrix)


def max_element_amplitude(w: ModeTransform) -> float:
    """Largest |W_ij| over the computational block."""
    return float(np.max(np.abs(w.computational_submatrix())))


# -- Timing jitter ------------------------------------------------------------

def jitter_phase_bound(delta_omega: float, delta_t: float) -> float:
    """Phase uncertainty Δω·Δt (rad) for detection-time uncertainty Δt."""
    if delta_omega <= 0 or delta_t < 0:
        raise ValueError("frequency difference must be positive and jitter non-negative")
    return delta_omega * delta_t


def required_jitter(delta_omega: float, phase: float) -> float:
    """Timing resolution Δt (s) at which the phase uncertainty reaches *phase*."""
    if delta_omega <= 0 or phase < 0:
        raise ValueError("frequency difference must be positive and phase non-negative")
    return phase / delta_omega


def heralded_phase(delta_omega: float, delta_t: float) -> complex:
    """Extra phase factor exp(iΔωΔt) on the heralded state."""
    return complex(np.exp(1j * delta_omega * delta_t))


def jitter_table(
    spacings_ghz: Iterable[float],
    jitters_ps: Iterable[float],
) -> list[dict[str, float]]:
    """Phase uncertainty for every (spacing, jitter) combination."""
    jitters = list(jitters_ps)
    rows: list[dict[str, float]] = []
    for spacing in spacings_ghz:
        delta_omega = 2.0 * math.pi * spacing * 1e9
        for jitter in jitters:
            rows.append({
                "spacing_ghz": float(spacing),
                "jitter_ps": float(jitter),
                "phase_rad": jitter_phase_bound(delta_omega, jitter * 1e-12),
            })
    return rows
