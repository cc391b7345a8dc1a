import json
import math

import numpy as np
import pytest

pb = pytest.importorskip("pitchbench")


def test_ssim_identity_and_symmetry():
    rng = np.random.default_rng(0)
    x = rng.random((24, 36))
    y = rng.random((24, 36))
    assert abs(pb.ssim(x, x) - 1.0) < 1e-9
    assert abs(pb.ssim(x, y) - pb.ssim(y, x)) < 1e-12
    c1 = 0.01**2
    closed = (2 * 0.2 * 0.8 + c1) / (0.2**2 + 0.8**2 + c1)
    assert pb.ssim(np.full((24, 36), 0.2), np.full((24, 36), 0.8)) == pytest.approx(closed, abs=1e-9)
    assert pb.ssim(x, y, window="uniform") != pb.ssim(x, y)
    with pytest.raises(pb.PitchbenchError):
        pb.ssim(x, np.zeros((12, 18)))


def test_labels_and_staying_rule():
    prev = np.full((10, 10), 0.2)
    prev.flat[:50] = 0.8
    curr = np.full((10, 10), 0.2)
    curr.flat[:58] = 0.8
    assert pb.area_fraction(prev) == 0.5
    assert pb.heuristic_label(prev, curr) == "P"
    assert pb.heuristic_label(curr, prev) == "B"
    assert pb.heuristic_label(prev, prev) == "S"
    assert pb.apply_staying_rule([0.94, 0.05, 0.01]) == ("S", pytest.approx(0.94))
    assert pb.apply_staying_rule([0.02, 0.96, 0.02]) == ("B", pytest.approx(0.96))


def test_control_field_symmetry():
    field = pb.control_field([("A", 40.0, 34.0, 0, 0), ("D", 65.0, 34.0, 0, 0)])
    assert field.shape == (24, 36)
    assert field.min() >= 0.0 and field.max() <= 1.0
    swapped = pb.control_field([("D", 40.0, 34.0, 0, 0), ("A", 65.0, 34.0, 0, 0)])
    np.testing.assert_allclose(field + swapped, 1.0, atol=1e-12)


def test_two_zone_epv():
    m = np.zeros((4, 4))
    m[0, 1] = 0.5
    m[0, 3] = 0.5
    m[1, 2] = 0.4
    m[1, 3] = 0.6
    m[2, 2] = m[3, 3] = 1.0
    values, residual = pb.solve_epv(m, 1, 2)
    assert values == pytest.approx([0.2, 0.4], abs=1e-12)
    assert residual < 1e-9


def test_small_pipeline_runs_and_is_deterministic(tmp_path):
    config = tmp_path / "small.toml"
    config.write_text(
        "\n".join(
            [
                "seed = 5",
                "[synth]",
                "n_possessions = 60",
                "[pass_model]",
                "n_passes = 500",
                "[classifier]",
                "epochs = 1",
                "pairs_per_class = 30",
                "[cvrnn]",
                "epochs = 1",
                "max_train_sequences = 40",
                "max_test_sequences = 10",
            ]
        )
    )
    a, b = tmp_path / "a", tmp_path / "b"
    pb.run_stage("all", config=str(config), out=str(a))
    pb.run_stage("all", config=str(config), out=str(b))
    assert pb.sha256_file(str(a / "manifest.json")) == pb.sha256_file(str(b / "manifest.json"))
    report = (a / "reports" / "report.md").read_text()
    assert "0.95" in report

    model = pb.Cvrnn.load(str(a / "models" / "cvrnn_full.cvrn"))
    assert model.variant == "full"
    first = np.full((24, 36), 0.5)
    seq = model.predict(first, "PPS")
    assert seq.shape == (4, 24, 36)
    assert np.all((seq >= 0) & (seq <= 1))
    np.testing.assert_array_equal(seq[0], first)
    rec = model.reconstruct(seq, "PPS")
    assert rec.shape == seq.shape

    ablation = (a / "reports" / "ablation.csv").read_text().splitlines()
    assert ablation[0].startswith("variant,")
    summary = json.loads((a / "reports" / "ssim_full.json").read_text())
    assert math.isfinite(summary["reconstruction_mean"])


def test_missing_stage_raises(tmp_path):
    with pytest.raises(pb.PitchbenchError, match="MissingModel"):
        pb.run_stage("build-maps", out=str(tmp_path))
