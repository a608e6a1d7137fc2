"""Tests for target unitaries, gate metrics and the jitter bound."""

import math

import numpy as np
import pytest

from app.exceptions import BinAssignmentError, DegenerateResultError
from app.services.metrics_engine import (
    TargetUnitary,
    batch_costs,
    block_metrics,
    floored_cost,
    gate_metrics,
    heralded_phase,
    identity_target,
    jitter_phase_bound,
    jitter_table,
    max_element_amplitude,
    required_jitter,
    target_unitary,
)
from app.services.qfp_engine import ModeTransform, ideal_transform
from app.services.validation_engine import quality_grade

H = 1 / math.sqrt(2)


def _scaled(w: ModeTransform, factor: complex) -> ModeTransform:
    return ModeTransform(grid=w.grid, matrix=factor * w.matrix, assignment=w.assignment)


class TestTargets:
    def test_interleaved_matrix(self):
        expected = H * np.array([[1, 1, 0, 0], [1, -1, 0, 0], [0, 0, 1, 1], [0, 0, 1, -1]])
        np.testing.assert_array_equal(target_unitary("interleaved").matrix, expected)

    def test_adjacent_matrix(self):
        expected = H * np.array([[1, 0, 1, 0], [0, 1, 0, 1], [1, 0, -1, 0], [0, 1, 0, -1]])
        np.testing.assert_array_equal(target_unitary("adjacent").matrix, expected)

    def test_unitary(self, encoding):
        u = target_unitary(encoding).matrix
        np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-15)

    def test_bin_assignment(self):
        assert target_unitary("interleaved").bin_assignment == {"A0": -1, "A1": 1, "B0": 0, "B1": 2}
        assert target_unitary("adjacent").bin_assignment == {"A0": -1, "A1": 0, "B0": 1, "B1": 2}

    def test_non_unitary_rejected(self):
        with pytest.raises(ValueError):
            TargetUnitary(encoding="adjacent", matrix=0.5 * np.eye(4))

    def test_document_round_trip(self, encoding):
        target = target_unitary(encoding)
        again = TargetUnitary.from_document(target.to_document())
        np.testing.assert_array_equal(again.matrix, target.matrix)
        assert again.bin_assignment == target.bin_assignment


class TestGateMetrics:
    def test_ideal_gate(self, grid, encoding):
        target = target_unitary(encoding)
        m = gate_metrics(ideal_transform(target, grid), target)
        assert m.fidelity == pytest.approx(1.0, abs=1e-15)
        assert m.success_prob == pytest.approx(1.0, abs=1e-15)
        assert m.cost == pytest.approx(-12.0)

    def test_uniform_loss_keeps_fidelity(self, grid):
        target = target_unitary("adjacent")
        m = gate_metrics(_scaled(ideal_transform(target, grid), 0.9), target)
        assert m.fidelity == pytest.approx(1.0, abs=1e-12)
        assert m.success_prob == pytest.approx(0.81)

    def test_global_phase_invariance(self, grid):
        target = target_unitary("interleaved")
        m = gate_metrics(_scaled(ideal_transform(target, grid), np.exp(0.7j)), target)
        assert m.fidelity == pytest.approx(1.0, abs=1e-12)

    def test_identity_against_hadamard(self, grid):
        target = target_unitary("adjacent")
        m = gate_metrics(ideal_transform(identity_target(), grid), target)
        # Tr(U) = 0 for the Hadamard pair
        assert m.fidelity == pytest.approx(0.0, abs=1e-15)
        assert m.cost == pytest.approx(0.0, abs=1e-12)

    def test_cost_increases_as_fidelity_drops(self):
        u = target_unitary("adjacent").matrix
        costs = []
        for delta in (0.1, 0.5, 1.0, 2.0, 3.0):
            block = u @ np.diag([1, 1, 1, np.exp(1j * delta)])
            costs.append(block_metrics(block, u).cost)
        assert costs == sorted(costs)
        assert len(set(costs)) == len(costs)

    def test_misaligned_assignment(self, grid):
        w = ideal_transform(target_unitary("adjacent"), grid)
        with pytest.raises(BinAssignmentError):
            gate_metrics(w, target_unitary("interleaved"))

    def test_degenerate_power(self, grid):
        target = target_unitary("adjacent")
        w = ModeTransform(grid=grid, matrix=np.zeros((grid.size, grid.size)))
        with pytest.raises(DegenerateResultError):
            gate_metrics(w, target)

    def test_batch_costs_match_single(self, rng):
        u = target_unitary("interleaved").matrix
        blocks = 0.15 * (rng.normal(size=(6, 4, 4)) + 1j * rng.normal(size=(6, 4, 4)))
        costs = batch_costs(blocks, u)
        for block, cost in zip(blocks, costs):
            assert cost == pytest.approx(block_metrics(block, u).cost, abs=1e-12)

    def test_batch_costs_degenerate_scores_zero(self):
        u = target_unitary("adjacent").matrix
        assert batch_costs(np.zeros((1, 4, 4)), u)[0] == 0.0

    def test_floor_caps_the_reward_for_fidelity(self):
        u = target_unitary("adjacent").matrix
        ideal = 0.9 * u
        assert batch_costs(ideal[None], u)[0] == pytest.approx(-12 * 0.81)
        assert batch_costs(ideal[None], u, 1e-6)[0] == pytest.approx(-6 * 0.81)

    def test_floored_cost(self):
        m = block_metrics(0.9 * target_unitary("interleaved").matrix, target_unitary("interleaved").matrix)
        assert floored_cost(m, 1e-6) == pytest.approx(-6 * 0.81)
        # below the metric clamp the clamp still applies
        assert floored_cost(m, 1e-20) == pytest.approx(m.cost)


class TestElementAmplitude:
    def test_ideal(self, grid, encoding):
        w = ideal_transform(target_unitary(encoding), grid)
        assert max_element_amplitude(w) == pytest.approx(H)

    def test_scaled_by_success_probability(self, grid):
        w = _scaled(ideal_transform(target_unitary("adjacent"), grid), math.sqrt(0.9739))
        assert max_element_amplitude(w) == pytest.approx(0.6978, abs=5e-5)


class TestJitter:
    def test_half_period_gives_pi(self):
        delta_omega = 2 * math.pi * 10e9
        assert required_jitter(delta_omega, math.pi) == pytest.approx(50e-12)
        assert jitter_phase_bound(delta_omega, 50e-12) == pytest.approx(math.pi)

    def test_wider_spacing(self):
        assert required_jitter(2 * math.pi * 20e9, math.pi) == pytest.approx(25e-12)

    def test_zero_jitter(self):
        assert jitter_phase_bound(2 * math.pi * 20e9, 0.0) == 0.0

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            jitter_phase_bound(0.0, 1e-12)
        with pytest.raises(ValueError):
            required_jitter(1.0, -0.1)

    def test_heralded_phase_is_unit_modulus(self):
        z = heralded_phase(2 * math.pi * 20e9, 12.5e-12)
        assert abs(z) == pytest.approx(1.0)
        assert z == pytest.approx(1j)

    def test_table(self):
        rows = jitter_table([10.0, 20.0], [0.0, 25.0])
        assert len(rows) == 4
        assert rows[-1]["phase_rad"] == pytest.approx(math.pi)


@pytest.mark.parametrize(
    "fidelity, grade",
    [
        (1.0, "EXCELLENT - MATCHES TARGET"),
        (1 - 1e-6, "EXCELLENT - MATCHES TARGET"),
        (1 - 1e-4, "GOOD - MINOR DEVIATION"),
        (0.995, "FAIR - REVIEW SETTINGS"),
        (0.5, "POOR - NOT A VALID GATE"),
    ],
)
def test_quality_grade(fidelity, grade):
    assert quality_grade(fidelity) == grade
