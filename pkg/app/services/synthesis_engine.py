"""
Synthesis engine.

Searches EOM tone amplitudes/phases and pulse-shaper bin phases with a
global-best particle swarm so that the composed QFP approximates a target
unitary, minimising C = P·log10(1 - F).  The search floors 1 - F at the
problem's fidelity floor; past that point only success probability pays.

Phase coordinates are periodic and wrap; amplitudes are clipped to their
box.  Particles whose personal best stalls in the worse half of the swarm
are scattered again from their own stream.

The swarm is evaluated as one vectorised batch per iteration and every
particle draws its random coefficients from its own stream spawned from
the run seed, so results do not depend on evaluation order.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from app.config import (
    AMPLITUDE_MAX_RAD,
    COMPUTATIONAL_BINS,
    DEFAULT_FREE_HARMONICS,
    DEFAULT_SHAPER_DESIGN_BINS,
    FFT_SAMPLES,
    PHASE_MAX_RAD,
    PSO_VELOCITY_FRACTION,
    REPORT_SAMPLES,
    SEARCH_FIDELITY_FLOOR,
)
from app.exceptions import WindowError
from app.schemas import (
    FrequencyGrid,
    GateMetrics,
    MaskEntry,
    ProblemSpec,
    PsoParams,
    QfpConfig,
    RfDrive,
    ShaperMask,
    SolutionDocument,
    Tone,
)
from app.services.metrics_engine import (
    TargetUnitary,
    batch_costs,
    floored_cost,
    gate_metrics,
    max_element_amplitude,
    target_unitary,
)
from app.services.qfp_engine import (
    compose_qfp,
    eom_matrices,
    harmonic_phase,
    peak_deviation,
    temporal_phase,
)

logger = logging.getLogger(__name__)

SHAPER_ONLY_FLAG = "shaper_only"
REPORT_HARMONICS = 4


@dataclass(frozen=True, eq=False)
class SynthesisProblem:
    target: TargetUnitary
    grid: FrequencyGrid = field(default_factory=FrequencyGrid)
    free_harmonics: tuple[int, ...] = DEFAULT_FREE_HARMONICS
    shaper_design_bins: tuple[int, int] = DEFAULT_SHAPER_DESIGN_BINS
    amplitude_max: float = AMPLITUDE_MAX_RAD
    fidelity_floor: float = SEARCH_FIDELITY_FLOOR

    def __post_init__(self) -> None:
        harmonics = tuple(sorted(int(k) for k in self.free_harmonics))
        if any(k < 1 for k in harmonics) or len(set(harmonics)) != len(harmonics):
            raise ValueError(f"free harmonics must be distinct positive integers, got {harmonics}")
        lo, hi = self.shaper_design_bins
        if lo > hi:
            raise ValueError(f"shaper design range [{lo}, {hi}] is empty")
        if not (self.grid.contains(lo) and self.grid.contains(hi)):
            raise WindowError(
                f"shaper design range [{lo}, {hi}] exceeds window "
                f"[{self.grid.window_lo}, {self.grid.window_hi}]"
            )
        if self.amplitude_max <= 0:
            raise ValueError("amplitude bound must be positive")
        if not 0 < self.fidelity_floor < 1:
            raise ValueError(f"fidelity floor must lie in (0, 1), got {self.fidelity_floor}")
        object.__setattr__(self, "free_harmonics", harmonics)
        object.__setattr__(self, "shaper_design_bins", (int(lo), int(hi)))

    @classmethod
    def from_spec(cls, spec: ProblemSpec, target: TargetUnitary | None = None) -> "SynthesisProblem":
        return cls(
            target=target or target_unitary(spec.encoding),
            grid=spec.grid,
            free_harmonics=tuple(spec.free_harmonics),
            shaper_design_bins=spec.shaper_design_bins,
            amplitude_max=spec.amplitude_max_rad,
            fidelity_floor=spec.fidelity_floor,
        )

    def restricted(self, harmonics: tuple[int, ...] | list[int] | set[int]) -> "SynthesisProblem":
        return SynthesisProblem(
            target=self.target,
            grid=self.grid,
            free_harmonics=tuple(harmonics),
            shaper_design_bins=self.shaper_design_bins,
            amplitude_max=self.amplitude_max,
            fidelity_floor=self.fidelity_floor,
        )

    @property
    def gauge_bin(self) -> int:
        """Shaper bin whose phase is pinned to 0 (bin A0)."""
        return self.target.bin_assignment["A0"]


class ParameterCodec:
    """
    Bounded real vector ↔ QfpConfig.

    Layout: [eom1 amps, eom1 phases, eom2 amps, eom2 phases, shaper phases],
    one entry per free harmonic / free shaper bin.  The gauge bin is left out.
    Amplitudes are clipped to their bounds; phases are periodic and wrap
    into [0, 2π).
    """

    def __init__(self, problem: SynthesisProblem) -> None:
        self.problem = problem
        self.harmonics = np.array(problem.free_harmonics, dtype=int)
        lo, hi = problem.shaper_design_bins
        self.shaper_bins = [b for b in range(lo, hi + 1) if b != problem.gauge_bin]
        self._shaper_idx = np.array(
            [problem.grid.index(b) for b in self.shaper_bins], dtype=int
        )
        h = len(self.harmonics)
        amp_hi = np.full(h, problem.amplitude_max)
        ph_hi = np.full(h, PHASE_MAX_RAD)
        self.upper = np.concatenate([amp_hi, ph_hi, amp_hi, ph_hi, np.full(len(self.shaper_bins), PHASE_MAX_RAD)])
        self.lower = np.zeros_like(self.upper)
        self.periodic = np.ones(self.upper.size, dtype=bool)
        self.periodic[0:h] = False
        self.periodic[2 * h:3 * h] = False

    @property
    def dimension(self) -> int:
        return int(self.upper.size)

    def _split(self, x: np.ndarray) -> tuple[np.ndarray, ...]:
        h = len(self.harmonics)
        return (
            x[..., 0:h],
            x[..., h:2 * h],
            x[..., 2 * h:3 * h],
            x[..., 3 * h:4 * h],
            x[..., 4 * h:],
        )

    def clip(self, x: np.ndarray) -> np.ndarray:
        """Clip amplitudes into their box and wrap phases into [0, 2π)."""
        x = np.asarray(x, dtype=float)
        wrapped = np.mod(x, PHASE_MAX_RAD)
        # mod of a tiny negative value rounds up to exactly 2π
        wrapped = np.where(wrapped >= PHASE_MAX_RAD, 0.0, wrapped)
        return np.where(self.periodic, wrapped, np.clip(x, self.lower, self.upper))

    def displacement(self, to: np.ndarray, origin: np.ndarray) -> np.ndarray:
        """``to - origin``, taking the shorter way round on phase coordinates."""
        delta = to - origin
        wrapped = np.mod(delta + np.pi, PHASE_MAX_RAD) - np.pi
        return np.where(self.periodic, wrapped, delta)

    def _drive(self, amps: np.ndarray, phases: np.ndarray) -> RfDrive:
        return RfDrive(tones=[
            Tone(k=int(k), amp_rad=float(a), phase_rad=float(p))
            for k, a, p in zip(self.harmonics, amps, phases)
        ])

    def decode(self, vector: np.ndarray) -> QfpConfig:
        x = np.asarray(vector, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"expected a vector of length {self.dimension}, got {x.shape}")
        x = self.clip(x)
        a1, p1, a2, p2, shaper = self._split(x)
        mask = ShaperMask(entries=[
            MaskEntry(bin=b, phase_rad=float(p))
            for b, p in zip(self.shaper_bins, shaper)
        ])
        return QfpConfig(
            grid=self.problem.grid,
            eom1=self._drive(a1, p1),
            shaper=mask,
            eom2=self._drive(a2, p2),
            encoding=self.problem.target.encoding,
        )

    def _encode_drive(self, drive: RfDrive, name: str) -> tuple[list[float], list[float]]:
        extra = [t.k for t in drive.tones if t.k not in self.harmonics and t.amp_rad > 0]
        if extra:
            raise ValueError(f"{name} uses harmonics {extra} outside the search space")
        by_k = {t.k: t for t in drive.tones}
        amps = [by_k[k].amp_rad if k in by_k else 0.0 for k in self.harmonics]
        phases = [by_k[k].phase_rad if k in by_k else 0.0 for k in self.harmonics]
        return amps, phases

    def encode(self, config: QfpConfig) -> np.ndarray:
        a1, p1 = self._encode_drive(config.eom1, "eom1")
        a2, p2 = self._encode_drive(config.eom2, "eom2")
        lookup = config.shaper.lookup()
        shaper = [lookup[b].phase_rad if b in lookup else 0.0 for b in self.shaper_bins]
        return np.array(a1 + p1 + a2 + p2 + shaper, dtype=float)

    def batch_blocks(self, positions: np.ndarray) -> np.ndarray:
        """Computational 4×4 blocks for a ``(S, D)`` swarm."""
        grid = self.problem.grid
        x = self.clip(positions)
        a1, p1, a2, p2, shaper = self._split(x)
        comp = [grid.index(b) for b in COMPUTATIONAL_BINS]
        e1 = eom_matrices(harmonic_phase(a1, p1, self.harmonics, FFT_SAMPLES), grid)[:, :, comp]
        e2 = eom_matrices(harmonic_phase(a2, p2, self.harmonics, FFT_SAMPLES), grid)[:, comp, :]
        phases = np.zeros((x.shape[0], grid.size))
        phases[:, self._shaper_idx] = shaper
        return e2 @ (np.exp(1j * phases)[:, :, None] * e1)

    def batch_costs(self, positions: np.ndarray, floor: float | None = None) -> np.ndarray:
        """Costs of a ``(S, D)`` swarm; *floor* replaces the metric clamp when given."""
        blocks = self.batch_blocks(positions)
        if floor is None:
            return batch_costs(blocks, self.problem.target.matrix)
        return batch_costs(blocks, self.problem.target.matrix, floor)


def parameter_vector_codec(problem: SynthesisProblem):
    """``(encode, decode)`` pair for *problem*'s search space."""
    codec = ParameterCodec(problem)
    return codec.encode, codec.decode


# -- Particle swarm ----------------------------------------------------------

@dataclass(frozen=True)
class _SwarmOutcome:
    position: np.ndarray
    cost: float
    trace: tuple[float, ...]


def _run_swarm(codec: ParameterCodec, params: PsoParams, seed: int) -> _SwarmOutcome:
    dim = codec.dimension
    lo, hi = codec.lower, codec.upper
    floor = codec.problem.fidelity_floor
    if dim == 0:
        cost = float(codec.batch_costs(np.zeros((1, 0)), floor)[0])
        return _SwarmOutcome(np.zeros(0), cost, tuple([cost] * params.iterations))

    width = hi - lo
    vmax = PSO_VELOCITY_FRACTION * width
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(params.swarm_size)]

    def scatter(i: int) -> tuple[np.ndarray, np.ndarray]:
        rng = streams[i]
        return lo + rng.random(dim) * width, vmax * (2.0 * rng.random(dim) - 1.0)

    initial = [scatter(i) for i in range(params.swarm_size)]
    x = np.stack([position for position, _ in initial])
    v = np.stack([velocity for _, velocity in initial])
    cost = codec.batch_costs(x, floor)
    pbest, pcost = x.copy(), cost.copy()
    stall = np.zeros(params.swarm_size, dtype=int)
    g = int(np.argmin(pcost))
    gbest, gcost = pbest[g].copy(), float(pcost[g])

    trace: list[float] = []
    for _ in range(params.iterations):
        r = np.stack([rng.random((2, dim)) for rng in streams])
        v = (
            params.inertia * v
            + params.cognitive * r[:, 0] * codec.displacement(pbest, x)
            + params.social * r[:, 1] * codec.displacement(gbest, x)
        )
        v = np.clip(v, -vmax, vmax)
        moved = x + v
        x = codec.clip(moved)
        # amplitudes stopped by a bound lose their velocity
        v = np.where(codec.periodic | (x == moved), v, 0.0)
        cost = codec.batch_costs(x, floor)

        improved = cost < pcost
        pbest[improved] = x[improved]
        pcost[improved] = cost[improved]
        stall = np.where(improved, 0, stall + 1)

        if params.stall_iterations:
            stale = (stall >= params.stall_iterations) & (pcost > np.median(pcost))
            stale[int(np.argmin(pcost))] = False
            idx = np.flatnonzero(stale)
            if idx.size:
                for i in idx:
                    x[i], v[i] = scatter(int(i))
                pbest[idx] = x[idx]
                pcost[idx] = codec.batch_costs(x[idx], floor)
                stall[idx] = 0

        g = int(np.argmin(pcost))
        if pcost[g] < gcost:
            gbest, gcost = pbest[g].copy(), float(pcost[g])
        trace.append(gcost)

    return _SwarmOutcome(gbest, gcost, tuple(trace))


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    best_config: QfpConfig
    metrics: GateMetrics
    target: TargetUnitary
    trace: tuple[float, ...] = ()
    seed_used: int = 0
    wall_time: float = 0.0
    restart: int = 0
    restart_costs: tuple[float, ...] = ()
    flags: tuple[str, ...] = ()
    params: PsoParams | None = None
    fidelity_floor: float | None = None

    def to_document(self) -> SolutionDocument:
        return SolutionDocument(
            config=self.best_config,
            target=self.target.to_document(),
            metrics=self.metrics,
            trace=list(self.trace),
            seed=self.seed_used,
            restart=self.restart,
            restart_costs=list(self.restart_costs),
            flags=list(self.flags),
            pso=self.params,
            fidelity_floor=self.fidelity_floor,
        )

    @classmethod
    def from_document(cls, doc: SolutionDocument) -> "SynthesisResult":
        return cls(
            best_config=doc.config,
            metrics=doc.metrics,
            target=TargetUnitary.from_document(doc.target),
            trace=tuple(doc.trace),
            seed_used=doc.seed,
            restart=doc.restart,
            restart_costs=tuple(doc.restart_costs),
            flags=tuple(doc.flags),
            params=doc.pso,
            fidelity_floor=doc.fidelity_floor,
        )


def evaluate_config(config: QfpConfig, target: TargetUnitary) -> SynthesisResult:
    """Wrap a hand-made configuration as a result (no search trace)."""
    return SynthesisResult(
        best_config=config,
        metrics=gate_metrics(compose_qfp(config), target),
        target=target,
    )


def synthesize(
    problem: SynthesisProblem,
    pso_params: PsoParams | None = None,
    flags: tuple[str, ...] = (),
) -> SynthesisResult:
    """
    Best of ``restarts`` seeded swarms; restart r uses seed ``rng_seed + r``.

    Swarms minimise the cost with the infidelity floored at
    ``problem.fidelity_floor``; ``restart_costs`` and ``trace`` hold that
    search cost while ``metrics`` carries the clamped gate metrics.
    """
    params = pso_params or PsoParams()
    codec = ParameterCodec(problem)
    start = time.perf_counter()

    best: _SwarmOutcome | None = None
    best_restart = 0
    restart_costs: list[float] = []
    for r in range(params.restarts):
        seed = params.rng_seed + r
        outcome = _run_swarm(codec, params, seed)
        restart_costs.append(outcome.cost)
        logger.info(
            "restart %d/%d (seed %d): best cost %.6f", r + 1, params.restarts, seed, outcome.cost
        )
        if best is None or outcome.cost < best.cost:
            best, best_restart = outcome, r

    config = codec.decode(best.position)
    metrics = gate_metrics(compose_qfp(config), problem.target)
    wall_time = time.perf_counter() - start
    logger.info(
        "synthesis finished in %.1fs: F=%.9f P=%.6f search cost %.6f (restart %d)",
        wall_time, metrics.fidelity, metrics.success_prob,
        floored_cost(metrics, problem.fidelity_floor), best_restart,
    )
    return SynthesisResult(
        best_config=config,
        metrics=metrics,
        target=problem.target,
        trace=best.trace,
        seed_used=params.rng_seed + best_restart,
        wall_time=wall_time,
        restart=best_restart,
        restart_costs=tuple(restart_costs),
        flags=tuple(flags),
        params=params,
        fidelity_floor=problem.fidelity_floor,
    )


def constrained_synthesize(
    problem: SynthesisProblem,
    pso_params: PsoParams | None,
    constraint: tuple[int, ...] | list[int] | set[int],
) -> SynthesisResult:
    """Synthesis with both EOMs limited to the harmonic subset *constraint*."""
    harmonics = tuple(sorted(set(constraint)))
    unknown = set(harmonics) - set(problem.free_harmonics)
    if unknown:
        raise ValueError(
            f"harmonics {sorted(unknown)} are not in the problem's free set {list(problem.free_harmonics)}"
        )
    flags: tuple[str, ...] = ()
    if not harmonics and not np.allclose(problem.target.matrix, np.eye(4)):
        logger.warning("no RF tones allowed: searching the shaper alone")
        flags = (SHAPER_ONLY_FLAG,)
    return synthesize(problem.restricted(harmonics), pso_params, flags)


# -- Reporting ----------------------------------------------------------------

def _harmonic_content(trace: np.ndarray) -> dict[str, float]:
    """Sine amplitude of each harmonic present in a sampled φ(t)."""
    spectrum = np.fft.rfft(trace) / trace.size
    return {str(k): float(2.0 * abs(spectrum[k])) for k in range(1, REPORT_HARMONICS + 1)}


def solution_report(result: SynthesisResult) -> dict:
    """Data behind a figure of the solution: RF traces, shaper phases, matrix, metrics."""
    config = result.best_config
    grid = config.grid
    w = compose_qfp(config)
    block = w.computational_submatrix()
    phi1 = temporal_phase(config.eom1, REPORT_SAMPLES)
    phi2 = temporal_phase(config.eom2, REPORT_SAMPLES)
    t = np.arange(REPORT_SAMPLES) / REPORT_SAMPLES
    lookup = config.shaper.lookup()

    shaper = []
    for b in grid.bins:
        entry = lookup.get(b)
        shaper.append({
            "bin": b,
            "phase_rad": entry.phase_rad if entry else 0.0,
            "amp": entry.amp if entry else 1.0,
        })

    return {
        "encoding": config.encoding.value,
        "t_over_period": t.tolist(),
        "t_ps": (t * grid.period * 1e12).tolist(),
        "eom1_phase": phi1.tolist(),
        "eom2_phase": phi2.tolist(),
        "eom1_peak_rad": peak_deviation(config.eom1),
        "eom2_peak_rad": peak_deviation(config.eom2),
        "eom1_harmonics": _harmonic_content(phi1),
        "eom2_harmonics": _harmonic_content(phi2),
        "eom1_tones": [tone.model_dump() for tone in config.eom1.tones],
        "eom2_tones": [tone.model_dump() for tone in config.eom2.tones],
        "shaper": shaper,
        "computational_bins": list(w.computational_bins),
        "matrix": {
            "amplitude": np.abs(block).tolist(),
            "phase": np.angle(block).tolist(),
        },
        "max_element_amplitude": max_element_amplitude(w),
        "metrics": result.metrics.model_dump(),
        "flags": list(result.flags),
    }
