"""Tests for canonical JSON and CSV artifacts."""

import json
import math

import numpy as np
import pandas as pd
import pytest

from app.exceptions import ConfigError
from app.schemas import QfpConfig, RfDrive, Tone
from app.services import export_engine
from app.services.metrics_engine import identity_target, target_unitary
from app.services.qfp_engine import compose_qfp, ideal_transform
from app.services.synthesis_engine import evaluate_config
from app.services.two_photon_engine import bell_state, coincidence_pattern, poisson_sample_counts
from app.utils.canonical import canonical_dumps, complex_matrix_from_json, complex_matrix_to_json, format_float


class TestCanonicalJson:
    def test_keys_sorted_and_floats_marked(self):
        text = canonical_dumps({"b": 1.0, "a": [2, 0.1]})
        assert text.index('"a"') < text.index('"b"')
        assert "1.0" in text
        assert "0.10000000000000001" in text
        assert text.endswith("\n")

    def test_seventeen_digits_round_trip(self):
        value = math.pi / 3
        assert float(format_float(value)) == value

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            canonical_dumps({"x": float("nan")})

    def test_complex_matrix(self, rng):
        m = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        np.testing.assert_array_equal(complex_matrix_from_json(complex_matrix_to_json(m)), m)


class TestDocuments:
    def test_solution_byte_identical(self, tmp_path):
        config = QfpConfig(eom1=RfDrive(tones=[Tone(k=2, amp_rad=0.8283, phase_rad=1.0)]))
        doc = evaluate_config(config, target_unitary("adjacent")).to_document()
        first = export_engine.write_json(tmp_path / "a.json", doc)
        second = export_engine.write_json(tmp_path / "b.json", export_engine.load_solution(first))
        assert first.read_bytes() == second.read_bytes()

    def test_load_config_from_solution(self, tmp_path):
        config = QfpConfig(encoding="interleaved")
        doc = evaluate_config(config, identity_target("interleaved")).to_document()
        path = export_engine.write_json(tmp_path / "solution.json", doc)
        assert export_engine.load_config(path) == config

    def test_malformed_config_names_field(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"eom1": {"tones": [{"k": 0, "amp_rad": 1.0}]}}))
        with pytest.raises(ConfigError, match=r"eom1\.tones\.0\.k"):
            export_engine.load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            export_engine.load_problem(tmp_path / "nope.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{")
        with pytest.raises(ConfigError, match="invalid JSON"):
            export_engine.load_pso(path)


class TestCsv:
    def test_trace(self, tmp_path):
        path = export_engine.write_csv(export_engine.trace_frame([-0.5, -1.25]), tmp_path / "trace.csv")
        assert path.read_text() == "iteration,best_cost\n1,-0.5\n2,-1.25\n"

    def test_pattern_and_counts(self, tmp_path, small_grid):
        target = target_unitary("adjacent")
        w = ideal_transform(target, small_grid)
        pattern = coincidence_pattern(w, bell_state("psi+", target))
        frame = export_engine.pattern_frame(pattern, w.assignment)
        assert list(frame["pair"]) == ["A0A1", "A0B0", "A0B1", "A1B0", "A1B1", "B0B1"]
        assert frame.loc[0, "bin_a"] == -1 and frame.loc[0, "bin_b"] == 0

        counts = poisson_sample_counts(pattern, 1000, 0)
        path = export_engine.write_csv(export_engine.counts_frame(counts), tmp_path / "counts.csv")
        back = pd.read_csv(path)
        assert back["count"].sum() == sum(counts.counts.values())

    def test_spectrum_frame(self):
        w = compose_qfp(QfpConfig())
        frame = export_engine.spectrum_frame(w, {0: 1.0, 1: 0.0}, 0)
        assert list(frame.columns) == ["input_bin", "bin", "offset_ghz", "power"]
        assert frame.loc[1, "offset_ghz"] == 20.0

    def test_transform_export(self, tmp_path, small_grid):
        w = ideal_transform(target_unitary("interleaved"), small_grid)
        json_path, csv_path = export_engine.export_transform(w, tmp_path)
        doc = json.loads(json_path.read_text())
        np.testing.assert_array_equal(complex_matrix_from_json(doc["matrix"]), w.matrix)
        rows = csv_path.read_text().splitlines()
        assert len(rows) == small_grid.size
        assert rows[0].startswith('"1.0,0.0"')


def test_manifest(tmp_path):
    manifest = export_engine.write_manifest(
        tmp_path, "synth", inputs=["p.json"], seed=4, wall_time_s=1.5,
        arguments={"encoding": "adjacent", "iterations": 12, "harmonics": None},
    )
    saved = json.loads((tmp_path / export_engine.MANIFEST_NAME).read_text())
    assert saved["command"] == "synth"
    assert saved["seed"] == 4
    assert saved["timestamp"] == manifest.timestamp
    assert saved["arguments"] == {"encoding": "adjacent", "harmonics": None, "iterations": 12}
    assert export_engine.load_manifest(tmp_path / export_engine.MANIFEST_NAME) == manifest
