"""
Configuration module for the frequency-bin Bell state analyzer toolkit.

Centralizes the default frequency grid, computational-bin assignments,
numerical sampling settings, particle swarm defaults and the tolerances
used when validating stored solutions.
"""

import math

# ---------------------------------------------------------------------------
# Frequency grid – experimental defaults (20 GHz bins around 192.2 THz)
# ---------------------------------------------------------------------------
DEFAULT_SPACING_GHZ: float = 20.0
DEFAULT_CENTER_THZ: float = 192.2

# Mode indices n of the four computational bins, in frequency order
COMPUTATIONAL_BINS: tuple[int, ...] = (-1, 0, 1, 2)

# Spectator bins kept on each side of the computational block
DEFAULT_GUARD_BINS: int = 14

# ---------------------------------------------------------------------------
# Encoding → logical bin assignment
# ---------------------------------------------------------------------------
BIN_LABELS: tuple[str, ...] = ("A0", "A1", "B0", "B1")

BIN_ASSIGNMENTS: dict[str, dict[str, int]] = {
    "interleaved": {"A0": -1, "A1": 1, "B0": 0, "B1": 2},
    "adjacent": {"A0": -1, "A1": 0, "B0": 1, "B1": 2},
}

# The six detector combinations, in reporting order
COINCIDENCE_PAIRS: tuple[tuple[str, str], ...] = (
    ("A0", "A1"),
    ("A0", "B0"),
    ("A0", "B1"),
    ("A1", "B0"),
    ("A1", "B1"),
    ("B0", "B1"),
)

# Pairs that flag each distinguishable Bell state
CORRECT_PAIRS: dict[str, tuple[str, ...]] = {
    "psi+": ("A0A1", "B0B1"),
    "psi-": ("A0B1", "A1B0"),
}

# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------
FFT_SAMPLES: int = 1024       # samples of exp(i*phi) per RF period
PEAK_SAMPLES: int = 4096      # dense search for max |phi(t)|
REPORT_SAMPLES: int = 1024    # phi(t) trace length in solution reports

# ---------------------------------------------------------------------------
# Gate metrics
# ---------------------------------------------------------------------------
FIDELITY_CLAMP: float = 1e-12
DEGENERATE_POWER: float = 1e-15

# ---------------------------------------------------------------------------
# Particle swarm defaults
# ---------------------------------------------------------------------------
PSO_SWARM_SIZE: int = 50
PSO_ITERATIONS: int = 600
PSO_INERTIA: float = 0.729
PSO_COGNITIVE: float = 1.494
PSO_SOCIAL: float = 1.494
PSO_RESTARTS: int = 5
PSO_SEED: int = 0
PSO_VELOCITY_FRACTION: float = 0.5  # velocity clamp as a fraction of box width
PSO_STALL_ITERATIONS: int = 60      # iterations without a personal-best gain before reseeding

# Infidelity below which the search stops rewarding fidelity and trades for P
SEARCH_FIDELITY_FLOOR: float = 1e-6

AMPLITUDE_MAX_RAD: float = 5.0
PHASE_MAX_RAD: float = 2.0 * math.pi
DEFAULT_FREE_HARMONICS: tuple[int, ...] = (1, 2)
DEFAULT_SHAPER_DESIGN_BINS: tuple[int, int] = (-6, 9)

# ---------------------------------------------------------------------------
# Validation tolerances
# ---------------------------------------------------------------------------
COLUMN_NORM_SLACK: float = 1e-9
INTERIOR_NORM_FLOOR: float = 1e-6
CONVERGENCE_TOL: float = 1e-8
METRIC_TOL: float = 1e-12
DEFAULT_MIN_FIDELITY: float = 1.0 - 1e-5

# ---------------------------------------------------------------------------
# Quality grades keyed on -log10(1 - F) (lower-bound inclusive)
# ---------------------------------------------------------------------------
QUALITY_THRESHOLDS: list[tuple[float, str]] = [
    (5.0, "EXCELLENT - MATCHES TARGET"),
    (3.0, "GOOD - MINOR DEVIATION"),
    (2.0, "FAIR - REVIEW SETTINGS"),
    (0.0, "POOR - NOT A VALID GATE"),
]

# ---------------------------------------------------------------------------
# Two-photon oracle
# ---------------------------------------------------------------------------
FOCK_ORACLE_MAX_MODES: int = 12
