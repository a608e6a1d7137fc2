"""
Quantum frequency processor engine.

Builds the mode transformations of the individual QFP elements on a
truncated frequency-bin lattice and composes them into the full
EOM → pulse shaper → EOM operator.

Convention: an EOM driven with temporal phase φ(t) maps input bin n to
output bin m with amplitude ``d[m - n]``, where

    d_j = (1/T) ∫₀ᵀ exp(iφ(t)) exp(-i j Δω t) dt

so that a_out[m] = Σ_n d[m - n] a_in[n].  The coefficients are taken from
an FFT of exp(iφ) sampled uniformly over one RF period.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Protocol

import numpy as np
import scipy.linalg

from app.config import (
    BIN_ASSIGNMENTS,
    COLUMN_NORM_SLACK,
    COMPUTATIONAL_BINS,
    FFT_SAMPLES,
    PEAK_SAMPLES,
)
from app.exceptions import GridMismatchError, QfpError, WindowError
from app.schemas import Encoding, FrequencyGrid, QfpConfig, RfDrive, ShaperMask

logger = logging.getLogger(__name__)


class _HasBlock(Protocol):
    matrix: np.ndarray
    bin_assignment: Mapping[str, int]


@dataclass(frozen=True, eq=False)
class ModeTransform:
    """Complex (output bin, input bin) matrix over a grid window."""

    grid: FrequencyGrid
    matrix: np.ndarray
    computational_bins: tuple[int, ...] = COMPUTATIONAL_BINS
    assignment: Mapping[str, int] = field(
        default_factory=lambda: dict(BIN_ASSIGNMENTS[Encoding.ADJACENT.value])
    )

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=complex)
        n = self.grid.size
        if matrix.shape != (n, n):
            raise WindowError(
                f"matrix shape {matrix.shape} does not match window dimension {n}"
            )
        outside = [b for b in self.computational_bins if not self.grid.contains(b)]
        if outside:
            raise WindowError(f"computational bins {outside} lie outside the window")
        norms = np.linalg.norm(matrix, axis=0)
        if np.any(norms > 1.0 + COLUMN_NORM_SLACK):
            worst = int(np.argmax(norms))
            raise QfpError(
                f"column for bin {self.grid.bins[worst]} has norm {norms[worst]:.12g} > 1"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "computational_bins", tuple(self.computational_bins))
        object.__setattr__(self, "assignment", dict(self.assignment))

    @property
    def computational_indices(self) -> list[int]:
        return [self.grid.index(b) for b in self.computational_bins]

    def computational_submatrix(self) -> np.ndarray:
        """The 4×4 block W acting on the computational bins (frequency order)."""
        idx = self.computational_indices
        return self.matrix[np.ix_(idx, idx)]

    def column_norms(self) -> np.ndarray:
        return np.linalg.norm(self.matrix, axis=0)

    def interior_column_norms(self, guard: int) -> np.ndarray:
        """Column norms of inputs at least *guard* bins from either window edge."""
        lo = guard
        hi = self.grid.size - guard
        return self.column_norms()[lo:hi] if hi > lo else np.empty(0)

    def element(self, out_bin: int, in_bin: int) -> complex:
        return complex(self.matrix[self.grid.index(out_bin), self.grid.index(in_bin)])


# -- RF drive sampling ------------------------------------------------------

def _phase_grid(samples: int) -> np.ndarray:
    """Δω·t over one period at *samples* uniform points."""
    return 2.0 * np.pi * np.arange(samples) / samples


def harmonic_phase(
    amps: np.ndarray,
    phases: np.ndarray,
    harmonics: np.ndarray,
    samples: int,
) -> np.ndarray:
    """
    Vectorised φ(t) = Σ_k m_k sin(k Δω t + θ_k).

    *amps* and *phases* have shape ``(..., H)`` matching ``harmonics``;
    the result has shape ``(..., samples)``.
    """
    x = _phase_grid(samples)
    arg = np.asarray(harmonics)[:, None] * x[None, :] + np.asarray(phases)[..., :, None]
    return np.sum(np.asarray(amps)[..., :, None] * np.sin(arg), axis=-2)


def temporal_phase(drive: RfDrive, samples: int = FFT_SAMPLES) -> np.ndarray:
    """φ(t) of *drive* at ``samples`` points spanning one period T."""
    if not drive.tones:
        return np.zeros(samples)
    return harmonic_phase(
        np.array([t.amp_rad for t in drive.tones]),
        np.array([t.phase_rad for t in drive.tones]),
        np.array([t.k for t in drive.tones]),
        samples,
    )


def peak_deviation(drive: RfDrive, samples: int = PEAK_SAMPLES) -> float:
    """max_t |φ(t)| by dense sampling over one period."""
    return float(np.max(np.abs(temporal_phase(drive, samples))))


def sideband_coefficients(phase_samples: np.ndarray) -> np.ndarray:
    """Fourier coefficients d_j of exp(iφ), index j taken modulo the sample count."""
    n_s = phase_samples.shape[-1]
    return np.fft.fft(np.exp(1j * phase_samples), axis=-1) / n_s


def _check_sampling(samples: int, grid: FrequencyGrid) -> None:
    if samples < 2 * grid.size:
        raise WindowError(
            f"{samples} FFT samples alias on a window of dimension {grid.size}; "
            f"need at least {2 * grid.size}"
        )
    if samples & (samples - 1):
        raise QfpError(f"FFT sample count must be a power of two, got {samples}")


def eom_matrices(phase_samples: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    """
    Toeplitz EOM matrices for a batch of sampled temporal phases.

    *phase_samples* has shape ``(..., n_s)``; returns ``(..., N, N)`` with
    ``E[m, n] = d[m - n]``.
    """
    n_s = phase_samples.shape[-1]
    _check_sampling(n_s, grid)
    d = sideband_coefficients(phase_samples)
    offsets = np.subtract.outer(np.arange(grid.size), np.arange(grid.size))
    return d[..., offsets % n_s]


def _assignment(encoding: Encoding | str) -> dict[str, int]:
    return dict(BIN_ASSIGNMENTS[Encoding(encoding).value])


# -- Element operators --------------------------------------------------------

def build_eom_operator(
    drive: RfDrive,
    grid: FrequencyGrid,
    samples: int = FFT_SAMPLES,
    encoding: Encoding | str = Encoding.ADJACENT,
) -> ModeTransform:
    """Toeplitz scattering matrix of a phase modulator driven by *drive*."""
    _check_sampling(samples, grid)
    d = sideband_coefficients(temporal_phase(drive, samples))
    j = np.arange(grid.size)
    matrix = scipy.linalg.toeplitz(d[j], d[(-j) % samples])
    return ModeTransform(grid=grid, matrix=matrix, assignment=_assignment(encoding))


def shaper_diagonal(mask: ShaperMask, grid: FrequencyGrid) -> np.ndarray:
    diag = np.ones(grid.size, dtype=complex)
    for entry in mask.entries:
        if not grid.contains(entry.bin):
            logger.debug("shaper entry for bin %d lies outside the window", entry.bin)
            continue
        diag[grid.index(entry.bin)] = entry.amp * np.exp(1j * entry.phase_rad)
    return diag


def build_shaper_operator(
    mask: ShaperMask,
    grid: FrequencyGrid,
    encoding: Encoding | str = Encoding.ADJACENT,
) -> ModeTransform:
    """Diagonal line-by-line shaper: amplitude·exp(i·phase) on each bin."""
    return ModeTransform(
        grid=grid,
        matrix=np.diag(shaper_diagonal(mask, grid)),
        assignment=_assignment(encoding),
    )


def compose_transforms(
    first: ModeTransform,
    shaper: ModeTransform,
    last: ModeTransform,
) -> ModeTransform:
    """E₂·S·E₁ in signal-flow order."""
    if not (first.grid == shaper.grid == last.grid):
        raise GridMismatchError("QFP elements must share one frequency grid")
    return ModeTransform(
        grid=first.grid,
        matrix=last.matrix @ shaper.matrix @ first.matrix,
        computational_bins=first.computational_bins,
        assignment=first.assignment,
    )


def _samples_for(grid: FrequencyGrid) -> int:
    samples = FFT_SAMPLES
    while samples < 2 * grid.size:
        samples *= 2
    return samples


def compose_qfp(config: QfpConfig, samples: int | None = None) -> ModeTransform:
    """Full three-element QFP transformation for *config*."""
    grid = config.grid
    samples = samples or _samples_for(grid)
    return compose_transforms(
        build_eom_operator(config.eom1, grid, samples, config.encoding),
        build_shaper_operator(config.shaper, grid, config.encoding),
        build_eom_operator(config.eom2, grid, samples, config.encoding),
    )


def single_eom_transform(
    drive: RfDrive,
    grid: FrequencyGrid,
    encoding: Encoding | str = Encoding.ADJACENT,
) -> ModeTransform:
    """A lone phase modulator treated as a probabilistic frequency mixer."""
    return build_eom_operator(drive, grid, _samples_for(grid), encoding)


def ideal_transform(target: _HasBlock, grid: FrequencyGrid) -> ModeTransform:
    """Identity on the window with *target* embedded on the computational bins."""
    matrix = np.eye(grid.size, dtype=complex)
    idx = [grid.index(b) for b in COMPUTATIONAL_BINS]
    matrix[np.ix_(idx, idx)] = target.matrix
    return ModeTransform(grid=grid, matrix=matrix, assignment=target.bin_assignment)


# -- Derived quantities --------------------------------------------------------

def classical_spectrum(w: ModeTransform, input_bin: int) -> dict[int, float]:
    """Output power per bin for a unit-power monochromatic input on *input_bin*."""
    if not w.grid.contains(input_bin):
        raise WindowError(
            f"input bin {input_bin} outside window [{w.grid.window_lo}, {w.grid.window_hi}]"
        )
    column = w.matrix[:, w.grid.index(input_bin)]
    return {b: float(abs(a) ** 2) for b, a in zip(w.grid.bins, column)}


def window_convergence(config: QfpConfig, factor: int = 2) -> float:
    """Largest change of the computational block when the guard band grows by *factor*."""
    guard = config.grid.guard_bins
    wider = config.model_copy(update={"grid": config.grid.regrown(max(guard * factor, guard + 1))})
    base = compose_qfp(config).computational_submatrix()
    grown = compose_qfp(wider).computational_submatrix()
    return float(np.max(np.abs(base - grown)))
