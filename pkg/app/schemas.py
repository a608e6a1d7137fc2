"""
Pydantic schemas for every document the toolkit reads or writes:
QFP configurations, metrics, coincidence data, synthesis inputs/outputs,
run manifests and the HTTP request / response bodies.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.config import (
    AMPLITUDE_MAX_RAD,
    COMPUTATIONAL_BINS,
    DEFAULT_CENTER_THZ,
    DEFAULT_FREE_HARMONICS,
    DEFAULT_GUARD_BINS,
    DEFAULT_SHAPER_DESIGN_BINS,
    DEFAULT_SPACING_GHZ,
    PSO_COGNITIVE,
    PSO_INERTIA,
    PSO_ITERATIONS,
    PSO_RESTARTS,
    PSO_SEED,
    PSO_SOCIAL,
    PSO_STALL_ITERATIONS,
    PSO_SWARM_SIZE,
    SEARCH_FIDELITY_FLOOR,
)

TWO_PI = 2.0 * math.pi


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class Encoding(str, Enum):
    INTERLEAVED = "interleaved"
    ADJACENT = "adjacent"


class BellKind(str, Enum):
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"

    @classmethod
    def parse(cls, label: str) -> "BellKind":
        """Accept ``psi+``, ``Psi+`` or ``Ψ+`` style labels."""
        normalized = (
            label.strip().lower().replace("ψ", "psi").replace("φ", "phi")
        )
        try:
            return cls(normalized)
        except ValueError:
            allowed = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown Bell state '{label}'. Allowed: {allowed}") from None

    @property
    def discriminable(self) -> bool:
        return self in (BellKind.PSI_PLUS, BellKind.PSI_MINUS)


# -- Frequency grid ----------------------------------------------------------

class FrequencyGrid(_Frozen):
    spacing_ghz: float = Field(
        default=DEFAULT_SPACING_GHZ,
        gt=0,
        description="Bin spacing Δω/2π in GHz.",
    )
    center_thz: float = Field(
        default=DEFAULT_CENTER_THZ,
        description="Center frequency ω₀/2π in THz.",
    )
    window: tuple[int, int] = Field(
        default=(
            COMPUTATIONAL_BINS[0] - DEFAULT_GUARD_BINS,
            COMPUTATIONAL_BINS[-1] + DEFAULT_GUARD_BINS,
        ),
        description="Inclusive mode-index window [lo, hi].",
    )

    @model_validator(mode="after")
    def _check_window(self) -> "FrequencyGrid":
        lo, hi = self.window
        if lo >= hi:
            raise ValueError(f"window lower bound {lo} must be below upper bound {hi}")
        if lo > min(COMPUTATIONAL_BINS) or hi < max(COMPUTATIONAL_BINS):
            raise ValueError(
                f"window [{lo}, {hi}] must contain the computational bins {list(COMPUTATIONAL_BINS)}"
            )
        return self

    @classmethod
    def with_guard(
        cls,
        guard: int = DEFAULT_GUARD_BINS,
        spacing_ghz: float = DEFAULT_SPACING_GHZ,
        center_thz: float = DEFAULT_CENTER_THZ,
    ) -> "FrequencyGrid":
        if guard < 0:
            raise ValueError("guard bins cannot be negative")
        return cls(
            spacing_ghz=spacing_ghz,
            center_thz=center_thz,
            window=(min(COMPUTATIONAL_BINS) - guard, max(COMPUTATIONAL_BINS) + guard),
        )

    def regrown(self, guard: int) -> "FrequencyGrid":
        """Same spacing and center with a new guard band."""
        return FrequencyGrid.with_guard(guard, self.spacing_ghz, self.center_thz)

    @property
    def spacing(self) -> float:
        """Angular bin spacing Δω in rad/s."""
        return TWO_PI * self.spacing_ghz * 1e9

    @property
    def center(self) -> float:
        """Angular center frequency ω₀ in rad/s."""
        return TWO_PI * self.center_thz * 1e12

    @property
    def period(self) -> float:
        """RF period T = 2π/Δω in seconds."""
        return TWO_PI / self.spacing

    @property
    def window_lo(self) -> int:
        return self.window[0]

    @property
    def window_hi(self) -> int:
        return self.window[1]

    @property
    def size(self) -> int:
        return self.window_hi - self.window_lo + 1

    @property
    def bins(self) -> list[int]:
        return list(range(self.window_lo, self.window_hi + 1))

    @property
    def guard_bins(self) -> int:
        return min(min(COMPUTATIONAL_BINS) - self.window_lo, self.window_hi - max(COMPUTATIONAL_BINS))

    def contains(self, n: int) -> bool:
        return self.window_lo <= n <= self.window_hi

    def index(self, n: int) -> int:
        """Array index of mode *n*."""
        return n - self.window_lo


# -- Devices ------------------------------------------------------------------

class Tone(_Frozen):
    k: int = Field(..., ge=1, description="Harmonic of the bin spacing.")
    amp_rad: float = Field(..., ge=0, description="Modulation index m_k in radians.")
    phase_rad: float = Field(default=0.0, ge=0, lt=TWO_PI, description="RF phase θ_k.")


class RfDrive(_Frozen):
    tones: list[Tone] = Field(default_factory=list)

    @field_validator("tones")
    @classmethod
    def _distinct_harmonics(cls, tones: list[Tone]) -> list[Tone]:
        ks = [t.k for t in tones]
        if len(ks) != len(set(ks)):
            raise ValueError(f"harmonics must be distinct, got {ks}")
        return tones

    def amplitude(self, k: int) -> float:
        """Modulation index on harmonic *k* (0 when the tone is absent)."""
        return next((t.amp_rad for t in self.tones if t.k == k), 0.0)


class MaskEntry(_Frozen):
    bin: int
    phase_rad: float = 0.0
    amp: float = Field(default=1.0, ge=0, le=1)

    @field_validator("phase_rad")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("phase must be finite")
        return value


class ShaperMask(_Frozen):
    entries: list[MaskEntry] = Field(default_factory=list)

    @field_validator("entries")
    @classmethod
    def _unique_bins(cls, entries: list[MaskEntry]) -> list[MaskEntry]:
        bins = [e.bin for e in entries]
        if len(bins) != len(set(bins)):
            raise ValueError("shaper mask lists a bin more than once")
        return entries

    def lookup(self) -> dict[int, MaskEntry]:
        return {e.bin: e for e in self.entries}

    @property
    def phase_only(self) -> bool:
        return all(e.amp == 1.0 for e in self.entries)


class QfpConfig(_Frozen):
    grid: FrequencyGrid = Field(default_factory=FrequencyGrid)
    eom1: RfDrive = Field(default_factory=RfDrive)
    shaper: ShaperMask = Field(default_factory=ShaperMask)
    eom2: RfDrive = Field(default_factory=RfDrive)
    encoding: Encoding = Encoding.ADJACENT


class ComplexMatrix(_Frozen):
    re: list[list[float]]
    im: list[list[float]]

    @model_validator(mode="after")
    def _same_shape(self) -> "ComplexMatrix":
        if [len(r) for r in self.re] != [len(r) for r in self.im]:
            raise ValueError("real and imaginary parts differ in shape")
        return self


class TargetDocument(_Frozen):
    encoding: Encoding
    matrix: ComplexMatrix


# -- Metrics ------------------------------------------------------------------

class GateMetrics(_Frozen):
    fidelity: float = Field(..., ge=0, le=1)
    success_prob: float = Field(..., ge=0, le=1 + 1e-9)
    cost: float = Field(..., le=0)


# -- Two-photon results ---------------------------------------------------------

class CoincidencePattern(_Frozen):
    probs: dict[str, float]
    residual: float = Field(..., ge=0)
    lost: float = Field(default=0.0, ge=0)

    @field_validator("probs")
    @classmethod
    def _non_negative(cls, probs: dict[str, float]) -> dict[str, float]:
        bad = [k for k, v in probs.items() if v < 0]
        if bad:
            raise ValueError(f"negative probabilities for {bad}")
        return probs


class CoincidenceCounts(_Frozen):
    counts: dict[str, int]
    total_pairs: float = Field(..., gt=0)
    seed: int


class AccuracyReport(_Frozen):
    input_label: str
    n_correct: float = Field(..., ge=0)
    n_incorrect: float = Field(..., ge=0)
    accuracy: float = Field(..., ge=0, le=1)
    std_error: float = Field(..., ge=0)


# -- Synthesis ------------------------------------------------------------------

class PsoParams(_Frozen):
    swarm_size: int = Field(default=PSO_SWARM_SIZE, ge=2)
    iterations: int = Field(default=PSO_ITERATIONS, ge=1)
    inertia: float = Field(default=PSO_INERTIA, gt=0, lt=1)
    cognitive: float = Field(default=PSO_COGNITIVE, gt=0)
    social: float = Field(default=PSO_SOCIAL, gt=0)
    restarts: int = Field(default=PSO_RESTARTS, ge=1)
    rng_seed: int = Field(default=PSO_SEED, ge=0)
    stall_iterations: int = Field(default=PSO_STALL_ITERATIONS, ge=0)


class ProblemSpec(_Frozen):
    encoding: Encoding = Encoding.ADJACENT
    grid: FrequencyGrid = Field(default_factory=FrequencyGrid)
    free_harmonics: list[int] = Field(default_factory=lambda: list(DEFAULT_FREE_HARMONICS))
    shaper_design_bins: tuple[int, int] = DEFAULT_SHAPER_DESIGN_BINS
    amplitude_max_rad: float = Field(default=AMPLITUDE_MAX_RAD, gt=0)
    fidelity_floor: float = Field(default=SEARCH_FIDELITY_FLOOR, gt=0, lt=1)

    @field_validator("free_harmonics")
    @classmethod
    def _positive_distinct(cls, ks: list[int]) -> list[int]:
        if any(k < 1 for k in ks):
            raise ValueError("harmonics must be positive integers")
        if len(ks) != len(set(ks)):
            raise ValueError("harmonics must be distinct")
        return sorted(ks)


class SolutionDocument(_Frozen):
    config: QfpConfig
    target: TargetDocument
    metrics: GateMetrics
    trace: list[float] = Field(default_factory=list)
    seed: int = 0
    restart: int = 0
    restart_costs: list[float] = Field(default_factory=list)
    flags: list[str] = Field(default_factory=list)
    pso: PsoParams | None = None
    fidelity_floor: float | None = Field(default=None, gt=0, lt=1)


class RunManifest(_Frozen):
    command: str
    inputs: list[str] = Field(default_factory=list)
    out_dir: str
    seed: int | None = None
    arguments: dict[str, Any] = Field(default_factory=dict)
    version: str
    timestamp: str
    wall_time_s: float = Field(default=0.0, ge=0)


class ValidationCheck(_Frozen):
    name: str
    passed: bool
    detail: str = ""


class ValidationReport(_Frozen):
    passed: bool
    checks: list[ValidationCheck]
    metrics: GateMetrics | None = None
    quality: str | None = None

    @property
    def failed(self) -> list[ValidationCheck]:
        return [c for c in self.checks if not c.passed]


# -- HTTP bodies ------------------------------------------------------------------

class MetricsRequest(BaseModel):
    config: QfpConfig
    target_encoding: Encoding | None = Field(
        default=None,
        description="Target to score against; defaults to the config's encoding.",
    )


class MetricsResponse(BaseModel):
    metrics: GateMetrics
    max_element_amplitude: float
    eom1_peak_rad: float
    eom2_peak_rad: float


class SpectraRequest(BaseModel):
    config: QfpConfig
    input_bin: int | None = None
    all_inputs: bool = Field(
        default=False,
        description="Emit one spectrum per computational input bin.",
    )


class SpectrumLine(BaseModel):
    bin: int
    offset_ghz: float
    power: float


class SpectraResponse(BaseModel):
    spectra: dict[str, list[SpectrumLine]]


class BsaRequest(BaseModel):
    config: QfpConfig
    state: str = Field(default="psi+", description="psi+, psi-, phi+ or phi-.")
    counts: int | None = Field(default=None, gt=0, description="Mean pair number to sample.")
    seed: int = Field(default=0, ge=0)


class BsaResponse(BaseModel):
    pattern: CoincidencePattern
    counts: CoincidenceCounts | None = None
    accuracy: AccuracyReport | None = None
    notice: str | None = None


class JitterResponse(BaseModel):
    spacing_ghz: float
    jitter_ps: float
    phase_rad: float


class SynthesizeRequest(BaseModel):
    problem: ProblemSpec = Field(default_factory=ProblemSpec)
    pso: PsoParams = Field(default_factory=PsoParams)
    harmonics: list[int] | None = Field(
        default=None,
        description="Restrict both EOMs to this harmonic subset.",
    )
