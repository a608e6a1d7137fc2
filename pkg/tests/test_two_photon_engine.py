"""Tests for two-photon propagation, the Fock oracle and Bell-state analysis."""

import math

import numpy as np
import pytest
from scipy.stats import unitary_group

from app.exceptions import DegenerateResultError, NotDiscriminableError, WindowError
from app.schemas import BellKind, CoincidenceCounts, CoincidencePattern, FrequencyGrid
from app.services.metrics_engine import target_unitary
from app.services.qfp_engine import ModeTransform, ideal_transform
from app.services.two_photon_engine import (
    TwoPhotonState,
    apply_phase,
    bell_state,
    coincidence_pattern,
    discrimination_accuracy,
    fock_oracle,
    poisson_sample_counts,
    propagate_two_photon,
    random_state,
    state_vector,
)

H = 1 / math.sqrt(2)
ALL_KINDS = list(BellKind)


def _random_transform(rng: np.random.Generator, guard: int, scale: float = 1.0) -> ModeTransform:
    grid = FrequencyGrid.with_guard(guard)
    u = unitary_group.rvs(grid.size, random_state=int(rng.integers(2**31)))
    return ModeTransform(grid=grid, matrix=scale * u)


def _hadamard_on_first_pair() -> ModeTransform:
    grid = FrequencyGrid(window=(-1, 2))
    m = np.eye(4, dtype=complex)
    m[:2, :2] = H * np.array([[1, 1], [1, -1]])
    return ModeTransform(grid=grid, matrix=m)


class TestBellStates:
    def test_psi_plus_adjacent(self):
        state = bell_state("psi+", target_unitary("adjacent"))
        assert state.amplitude(-1, 2) == pytest.approx(H)
        assert state.amplitude(0, 1) == pytest.approx(H)
        assert state.norm == pytest.approx(1.0)

    def test_minus_sign_on_b0_term(self, encoding):
        target = target_unitary(encoding)
        b0 = target.bin_assignment["B0"]
        plus = bell_state("psi+", target)
        minus = bell_state("psi-", target)
        flipped = apply_phase(plus, b0, math.pi)
        for pair, amp in minus.amplitudes.items():
            assert flipped.amplitude(*pair) == pytest.approx(amp)

    def test_orthonormal(self, encoding):
        target = target_unitary(encoding)
        states = [bell_state(kind, target) for kind in ALL_KINDS]
        gram = np.array([[a.inner(b) for b in states] for a in states])
        np.testing.assert_allclose(gram, np.eye(4), atol=1e-15)

    def test_greek_labels(self):
        target = target_unitary("adjacent")
        assert bell_state("Ψ-", target).amplitudes == bell_state("psi-", target).amplitudes

    def test_unknown_label(self):
        with pytest.raises(ValueError):
            bell_state("chi+", target_unitary("adjacent"))


class TestPropagation:
    def test_identity_leaves_state(self, grid, encoding):
        target = target_unitary(encoding)
        state = bell_state("psi-", target)
        out = propagate_two_photon(ModeTransform(grid=grid, matrix=np.eye(grid.size)), state)
        for pair, amp in state.amplitudes.items():
            assert out.amplitude(*pair) == pytest.approx(amp)
        assert out.norm == pytest.approx(1.0)

    def test_hong_ou_mandel(self):
        w = _hadamard_on_first_pair()
        out = propagate_two_photon(w, TwoPhotonState({(-1, 0): 1.0}))
        assert abs(out.amplitude(-1, 0)) < 1e-15
        assert abs(out.amplitude(-1, -1)) ** 2 == pytest.approx(0.5)
        assert abs(out.amplitude(0, 0)) ** 2 == pytest.approx(0.5)

    def test_hong_ou_mandel_oracle(self):
        w = _hadamard_on_first_pair()
        vec = state_vector(w, TwoPhotonState({(-1, 0): 1.0}))
        out = fock_oracle(w) @ vec
        # basis order (0,0), (0,1), ...
        assert abs(out[1]) < 1e-15
        assert abs(out[0]) ** 2 == pytest.approx(0.5)

    def test_psi_plus_through_ideal_analyzer(self, small_grid):
        target = target_unitary("adjacent")
        out = propagate_two_photon(ideal_transform(target, small_grid), bell_state("psi+", target))
        a0, a1, b0, b1 = (target.bin_assignment[k] for k in ("A0", "A1", "B0", "B1"))
        assert out.amplitude(a0, a1) == pytest.approx(H)
        assert out.amplitude(b0, b1) == pytest.approx(-H)
        assert out.norm == pytest.approx(1.0)

    def test_state_outside_window(self, small_grid):
        w = ModeTransform(grid=small_grid, matrix=np.eye(small_grid.size))
        with pytest.raises(WindowError):
            propagate_two_photon(w, TwoPhotonState({(0, 30): 1.0}))

    def test_norm_conserved_by_unitary(self, rng):
        for _ in range(10):
            w = _random_transform(rng, guard=int(rng.integers(0, 5)))
            state = random_state([-1, 0, 1, 2], rng)
            assert propagate_two_photon(w, state).norm == pytest.approx(1.0, abs=1e-12)

    def test_linearity(self, rng):
        w = _random_transform(rng, guard=3)
        s1 = random_state([-1, 0, 1, 2], rng)
        s2 = random_state([-2, 0, 3], rng)
        alpha, beta = 0.6 - 0.2j, -0.3 + 0.7j
        pairs = set(s1.amplitudes) | set(s2.amplitudes)
        combined = TwoPhotonState({p: alpha * s1.amplitude(*p) + beta * s2.amplitude(*p) for p in pairs})
        lhs = state_vector(w, propagate_two_photon(w, combined))
        rhs = (
            alpha * state_vector(w, propagate_two_photon(w, s1))
            + beta * state_vector(w, propagate_two_photon(w, s2))
        )
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestFockOracle:
    def test_identity(self, small_grid):
        w = ModeTransform(grid=small_grid, matrix=np.eye(small_grid.size))
        oracle = fock_oracle(w)
        np.testing.assert_allclose(oracle, np.eye(oracle.shape[0]), atol=1e-15)

    def test_unitary_for_unitary_transform(self, rng):
        w = _random_transform(rng, guard=4)
        oracle = fock_oracle(w)
        np.testing.assert_allclose(oracle.conj().T @ oracle, np.eye(oracle.shape[0]), atol=1e-10)

    def test_rejects_large_window(self, grid):
        with pytest.raises(WindowError):
            fock_oracle(ModeTransform(grid=grid, matrix=np.eye(grid.size)))

    def test_agrees_with_propagation(self, rng):
        for i in range(50):
            w = _random_transform(rng, guard=i % 5, scale=1.0 if i % 2 else 0.9)
            bins = w.grid.bins
            state = random_state(list(rng.choice(bins, size=min(4, len(bins)), replace=False)), rng)
            via_oracle = fock_oracle(w) @ state_vector(w, state)
            direct = state_vector(w, propagate_two_photon(w, state))
            assert np.max(np.abs(via_oracle - direct)) <= 1e-10


class TestCoincidencePatterns:
    @pytest.mark.parametrize("kind, correct", [("psi+", ("A0A1", "B0B1")), ("psi-", ("A0B1", "A1B0"))])
    def test_psi_signatures(self, small_grid, encoding, kind, correct):
        target = target_unitary(encoding)
        pattern = coincidence_pattern(ideal_transform(target, small_grid), bell_state(kind, target))
        for label, p in pattern.probs.items():
            assert p == pytest.approx(0.5 if label in correct else 0.0, abs=1e-15)
        assert pattern.residual == pytest.approx(0.0, abs=1e-15)

    def test_phi_states_bunch(self, small_grid, encoding):
        target = target_unitary(encoding)
        w = ideal_transform(target, small_grid)
        plus = coincidence_pattern(w, bell_state("phi+", target))
        minus = coincidence_pattern(w, bell_state("phi-", target))
        for label in plus.probs:
            assert plus.probs[label] == pytest.approx(minus.probs[label], abs=1e-12)
            assert plus.probs[label] == pytest.approx(0.0, abs=1e-15)
        assert plus.residual == pytest.approx(1.0)

    def test_encodings_equivalent(self, small_grid):
        for kind in ALL_KINDS:
            patterns = []
            for enc in ("adjacent", "interleaved"):
                target = target_unitary(enc)
                patterns.append(coincidence_pattern(ideal_transform(target, small_grid), bell_state(kind, target)))
            for label in patterns[0].probs:
                assert patterns[0].probs[label] == pytest.approx(patterns[1].probs[label], abs=1e-15)

    def test_loss_is_reported(self, small_grid):
        target = target_unitary("adjacent")
        w = ModeTransform(
            grid=small_grid,
            matrix=0.9 * ideal_transform(target, small_grid).matrix,
            assignment=target.bin_assignment,
        )
        pattern = coincidence_pattern(w, bell_state("psi+", target))
        assert pattern.lost == pytest.approx(1 - 0.9**4)


class TestAccuracy:
    def test_counts_formula(self):
        counts = CoincidenceCounts(
            counts={"A0A1": 500, "B0B1": 481, "A0B1": 10, "A1B0": 9, "A0B0": 3, "A1B1": 0},
            total_pairs=1000,
            seed=0,
        )
        report = discrimination_accuracy(counts, "psi+")
        assert report.accuracy == pytest.approx(0.981)
        assert report.n_correct == 981
        assert report.n_incorrect == 19
        assert report.std_error == pytest.approx(math.sqrt(0.981 * 0.019 / 1000))

    def test_ideal_pattern_is_perfect(self, small_grid):
        target = target_unitary("adjacent")
        w = ideal_transform(target, small_grid)
        for kind in ("psi+", "psi-"):
            report = discrimination_accuracy(coincidence_pattern(w, bell_state(kind, target)), kind)
            assert report.accuracy == pytest.approx(1.0)
            assert report.std_error == 0.0

    def test_swapped_labels_score_zero(self, small_grid):
        target = target_unitary("adjacent")
        pattern = coincidence_pattern(ideal_transform(target, small_grid), bell_state("psi+", target))
        assert discrimination_accuracy(pattern, "psi-").accuracy == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("kind", ["phi+", "phi-"])
    def test_phi_not_discriminable(self, kind):
        pattern = CoincidencePattern(probs={"A0A1": 0.5}, residual=0.5)
        with pytest.raises(NotDiscriminableError):
            discrimination_accuracy(pattern, kind)

    def test_no_events(self):
        pattern = CoincidencePattern(probs={"A0B0": 0.2}, residual=0.8)
        with pytest.raises(DegenerateResultError):
            discrimination_accuracy(pattern, "psi+")


class TestPoissonCounts:
    PATTERN = CoincidencePattern(
        probs={"A0A1": 0.5, "A0B0": 0.0, "A0B1": 0.0, "A1B0": 0.0, "A1B1": 0.0, "B0B1": 0.5},
        residual=0.0,
    )

    def test_deterministic_for_seed(self):
        a = poisson_sample_counts(self.PATTERN, 20000, 7)
        b = poisson_sample_counts(self.PATTERN, 20000, 7)
        assert a == b

    def test_zero_probability_pairs_stay_empty(self):
        counts = poisson_sample_counts(self.PATTERN, 20000, 1)
        assert counts.counts["A0B0"] == 0
        assert counts.counts["A1B0"] == 0

    def test_mean_tracks_probability(self):
        draws = [poisson_sample_counts(self.PATTERN, 1000, seed).counts["A0A1"] for seed in range(1000)]
        # standard error of the mean is sqrt(500 / 1000)
        assert np.mean(draws) == pytest.approx(500, abs=3 * math.sqrt(500 / 1000))

    def test_non_positive_total(self):
        with pytest.raises(ValueError):
            poisson_sample_counts(self.PATTERN, 0, 1)
