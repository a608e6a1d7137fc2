"""
Two-photon engine.

Propagates two-photon Fock states through a mode transformation, builds
the frequency-bin Bell states, predicts the six-pair coincidence pattern
and scores Bell-state discrimination.

Transfer convention: the classical mode transform M (a_out = M a_in) moves
an input photon in bin n to output bin p with amplitude M[p, n], i.e. each
input creation operator becomes a†_n → Σ_p M[p, n] a†_p.  M is the complex
conjugate of the matrix expressing input annihilation operators in terms
of output ones, so this is the creation-operator transfer T used below.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from app.config import COINCIDENCE_PAIRS, CORRECT_PAIRS, FOCK_ORACLE_MAX_MODES
from app.exceptions import DegenerateResultError, NotDiscriminableError, WindowError
from app.schemas import AccuracyReport, BellKind, CoincidenceCounts, CoincidencePattern
from app.services.metrics_engine import TargetUnitary
from app.services.qfp_engine import ModeTransform

_SQRT2 = math.sqrt(2.0)

Pair = tuple[int, int]


def _canonical(j: int, k: int) -> Pair:
    return (j, k) if j <= k else (k, j)


def pair_label(a: str, b: str) -> str:
    return f"{a}{b}"


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    """Amplitudes on |1_j 1_k⟩ (j < k) and |2_j⟩ (j = k), keyed by canonical pairs."""

    amplitudes: Mapping[Pair, complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        canonical: dict[Pair, complex] = {}
        for (j, k), amp in self.amplitudes.items():
            key = _canonical(int(j), int(k))
            if key in canonical:
                raise ValueError(f"duplicate amplitude for pair {key}")
            canonical[key] = complex(amp)
        object.__setattr__(self, "amplitudes", canonical)

    @property
    def norm(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    @property
    def support(self) -> set[int]:
        return {b for pair in self.amplitudes for b in pair}

    def amplitude(self, j: int, k: int) -> complex:
        return self.amplitudes.get(_canonical(j, k), 0j)

    def inner(self, other: "TwoPhotonState") -> complex:
        """⟨self|other⟩."""
        return complex(sum(
            np.conj(a) * other.amplitude(*pair) for pair, a in self.amplitudes.items()
        ))


# -- Bell states -----------------------------------------------------------------

def bell_state(kind: BellKind | str, target: TargetUnitary) -> TwoPhotonState:
    """Ψ± ∝ |A₀B₁⟩ ± |A₁B₀⟩ and Φ± ∝ |A₀B₀⟩ ± |A₁B₁⟩ on the target's bins."""
    kind = BellKind.parse(kind) if isinstance(kind, str) else kind
    bins = target.bin_assignment
    a0, a1, b0, b1 = bins["A0"], bins["A1"], bins["B0"], bins["B1"]
    if kind in (BellKind.PSI_PLUS, BellKind.PSI_MINUS):
        first, second = (a0, b1), (a1, b0)
    else:
        first, second = (a0, b0), (a1, b1)
    # the minus states carry the π phase on the term containing B0
    sign = -1.0 if kind in (BellKind.PSI_MINUS, BellKind.PHI_MINUS) else 1.0
    if b0 in first:
        first_amp, second_amp = sign / _SQRT2, 1.0 / _SQRT2
    else:
        first_amp, second_amp = 1.0 / _SQRT2, sign / _SQRT2
    return TwoPhotonState({
        _canonical(*first): first_amp,
        _canonical(*second): second_amp,
    })


def apply_phase(state: TwoPhotonState, bin_index: int, phase: float) -> TwoPhotonState:
    """Imprint exp(i·phase) per photon occupying *bin_index*."""
    factor = np.exp(1j * phase)
    return TwoPhotonState({
        pair: amp * factor ** sum(1 for b in pair if b == bin_index)
        for pair, amp in state.amplitudes.items()
    })


# -- Propagation ------------------------------------------------------------------

def _check_support(w: ModeTransform, state: TwoPhotonState) -> None:
    outside = sorted(b for b in state.support if not w.grid.contains(b))
    if outside:
        raise WindowError(
            f"state occupies bins {outside} outside window "
            f"[{w.grid.window_lo}, {w.grid.window_hi}]"
        )


def _symmetric_matrix(w: ModeTransform, state: TwoPhotonState) -> np.ndarray:
    """X with X[j,k] = X[k,j] = c_jk (j < k) and X[j,j] = √2·c_jj."""
    x = np.zeros((w.grid.size, w.grid.size), dtype=complex)
    for (j, k), amp in state.amplitudes.items():
        a, b = w.grid.index(j), w.grid.index(k)
        if a == b:
            x[a, a] = _SQRT2 * amp
        else:
            x[a, b] = amp
            x[b, a] = amp
    return x


def propagate_amplitudes(w: ModeTransform, state: TwoPhotonState) -> np.ndarray:
    """
    Output amplitudes as an upper-triangular array over window indices.

    A[p, q] (p < q) multiplies |1_p 1_q⟩ and A[p, p] multiplies |2_p⟩.
    """
    _check_support(w, state)
    t = w.matrix
    b = t @ _symmetric_matrix(w, state) @ t.T
    out = np.triu(b)
    out[np.diag_indices_from(out)] /= _SQRT2
    return out


def propagate_two_photon(w: ModeTransform, state: TwoPhotonState) -> TwoPhotonState:
    """Two-photon state after the transform *w*."""
    out = propagate_amplitudes(w, state)
    bins = w.grid.bins
    rows, cols = np.nonzero(out)
    return TwoPhotonState({
        (bins[p], bins[q]): complex(out[p, q]) for p, q in zip(rows, cols)
    })


# -- Fock-space oracle ------------------------------------------------------------

def two_photon_basis(modes: int) -> list[Pair]:
    """Canonical pair ordering of the N(N+1)/2 two-photon Fock states."""
    return [(j, k) for j in range(modes) for k in range(j, modes)]


def _create(state: dict[tuple[int, ...], complex], column: np.ndarray) -> dict[tuple[int, ...], complex]:
    """Apply Σ_p column[p]·a†_p to a Fock superposition."""
    result: dict[tuple[int, ...], complex] = {}
    for occupation, amp in state.items():
        for p, coeff in enumerate(column):
            if coeff == 0:
                continue
            raised = list(occupation)
            raised[p] += 1
            key = tuple(raised)
            result[key] = result.get(key, 0j) + amp * coeff * math.sqrt(raised[p])
    return result


def fock_oracle(w: ModeTransform) -> np.ndarray:
    """
    Induced transformation on the two-photon Fock basis, built by letting the
    transformed creation operators act on the vacuum.  Small windows only.
    """
    n = w.grid.size
    if n > FOCK_ORACLE_MAX_MODES:
        raise WindowError(
            f"Fock oracle supports at most {FOCK_ORACLE_MAX_MODES} modes, window has {n}"
        )
    basis = two_photon_basis(n)
    position = {pair: i for i, pair in enumerate(basis)}
    oracle = np.zeros((len(basis), len(basis)), dtype=complex)
    vacuum = {tuple([0] * n): 1.0 + 0j}
    for col, (j, k) in enumerate(basis):
        state = _create(_create(vacuum, w.matrix[:, j]), w.matrix[:, k])
        norm = _SQRT2 if j == k else 1.0
        for occupation, amp in state.items():
            occupied = [p for p, c in enumerate(occupation) for _ in range(c)]
            oracle[position[(occupied[0], occupied[1])], col] += amp / norm
    return oracle


def state_vector(w: ModeTransform, state: TwoPhotonState) -> np.ndarray:
    """Amplitudes of *state* in the :func:`two_photon_basis` order of *w*'s window."""
    _check_support(w, state)
    basis = two_photon_basis(w.grid.size)
    bins = w.grid.bins
    return np.array([state.amplitude(bins[j], bins[k]) for j, k in basis], dtype=complex)


# -- Coincidences -------------------------------------------------------------------

def coincidence_pattern(w: ModeTransform, state: TwoPhotonState) -> CoincidencePattern:
    """Six cross-bin coincidence probabilities plus everything else as residual."""
    out = propagate_amplitudes(w, state)
    probs_all = np.abs(out) ** 2
    bins = w.assignment
    probs: dict[str, float] = {}
    counted = 0.0
    for a, b in COINCIDENCE_PAIRS:
        p, q = sorted((w.grid.index(bins[a]), w.grid.index(bins[b])))
        probs[pair_label(a, b)] = float(probs_all[p, q])
        counted += probs_all[p, q]
    total = float(np.sum(probs_all))
    return CoincidencePattern(
        probs=probs,
        residual=max(total - counted, 0.0),
        lost=max(state.norm - total, 0.0),
    )


def discrimination_accuracy(
    pattern: CoincidencePattern | CoincidenceCounts,
    input_kind: BellKind | str,
) -> AccuracyReport:
    """N_C / (N_C + N_I) for a Ψ± input."""
    kind = BellKind.parse(input_kind) if isinstance(input_kind, str) else input_kind
    if not kind.discriminable:
        raise NotDiscriminableError(
            f"{kind.value} is not discriminable by a linear-optical analyzer"
        )
    other = BellKind.PSI_MINUS if kind is BellKind.PSI_PLUS else BellKind.PSI_PLUS
    values = pattern.counts if isinstance(pattern, CoincidenceCounts) else pattern.probs
    n_correct = float(sum(values.get(label, 0) for label in CORRECT_PAIRS[kind.value]))
    n_incorrect = float(sum(values.get(label, 0) for label in CORRECT_PAIRS[other.value]))
    total = n_correct + n_incorrect
    if total <= 0:
        raise DegenerateResultError("no correct or incorrect events; accuracy undefined")
    accuracy = n_correct / total
    std_error = (
        math.sqrt(accuracy * (1.0 - accuracy) / total)
        if isinstance(pattern, CoincidenceCounts)
        else 0.0
    )
    return AccuracyReport(
        input_label=kind.value,
        n_correct=n_correct,
        n_incorrect=n_incorrect,
        accuracy=accuracy,
        std_error=std_error,
    )


def poisson_sample_counts(
    pattern: CoincidencePattern,
    total_pairs: float,
    rng_seed: int,
) -> CoincidenceCounts:
    """Independent Poisson counts with mean total_pairs·p per coincidence pair."""
    if total_pairs <= 0:
        raise ValueError("total_pairs must be positive")
    rng = np.random.default_rng(rng_seed)
    labels = [pair_label(a, b) for a, b in COINCIDENCE_PAIRS]
    means = np.array([pattern.probs.get(label, 0.0) for label in labels]) * total_pairs
    draws = rng.poisson(means)
    return CoincidenceCounts(
        counts={label: int(c) for label, c in zip(labels, draws)},
        total_pairs=total_pairs,
        seed=rng_seed,
    )


def random_state(bins: list[int], rng: np.random.Generator) -> TwoPhotonState:
    """Normalised random superposition over all pairs of *bins*."""
    pairs = list(itertools.combinations_with_replacement(sorted(bins), 2))
    amps = rng.normal(size=len(pairs)) + 1j * rng.normal(size=len(pairs))
    amps /= np.linalg.norm(amps)
    return TwoPhotonState(dict(zip(pairs, amps)))
