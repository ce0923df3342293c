"""Smoke tests for the python bindings and the CLI binary."""

import os
import subprocess

import numpy as np
import pytest

import relmap


def test_toy_model_shapes():
    net = relmap.make_toy_base_model(0)
    assert list(net.input_shape) == [3, 16, 16]
    assert net.output_shape() == [1]
    assert "conv2d" in net.layer_kinds()
    assert net.num_layers == 9


def test_forward_and_explain_conserve():
    net = relmap.make_toy_base_model(0)
    rng = np.random.RandomState(7)
    x = rng.rand(3, 16, 16)

    out = relmap.forward(net, x)
    assert out.shape == (1,)
    assert np.isfinite(out[0])

    # the toy base model is bias-free, so the raw alpha-beta pass conserves
    result = relmap.explain(net, x, renormalize=False)
    assert result["score"] == pytest.approx(out[0])
    assert result["heatmap"].shape == (3, 16, 16)
    assert result["max_rel_drift"] <= 1e-9
    assert result["heatmap"].sum() == pytest.approx(result["score"], rel=1e-9)


def test_model_roundtrip(tmp_path):
    net = relmap.make_toy_base_model(3)
    relmap.save_model(net, tmp_path / "m.json")
    loaded = relmap.load_model(tmp_path / "m.json")
    x = np.full((3, 16, 16), 0.25)
    assert relmap.forward(loaded, x)[0] == pytest.approx(relmap.forward(net, x)[0], rel=1e-6)


def test_redistribute_primitives():
    out = relmap.redistribute_maxpool(np.array([1.0, 3.0, 2.0, 0.0]), 5.0)
    assert out.tolist() == [0.0, 5.0, 0.0, 0.0]

    z = np.array([[3.0], [1.0]])
    shares = relmap.redistribute_linear(z, np.array([4.0]), rule="epsilon", epsilon=0.0)
    assert shares == pytest.approx([3.0, 1.0])


def test_render_and_occlude():
    rel = np.zeros((4, 4))
    img = relmap.render(rel)
    assert img.shape == (4, 4, 3)
    assert (img == 255).all()  # all-neutral

    rel[1, 2] = 1.0
    img = relmap.render(rel)
    assert img[1, 2].tolist() == [255, 0, 0]

    base = np.full((8, 8, 3), 0.5)
    occluded = relmap.occlude(base, "rectangle", (0, 0, 4, 4), fill=(0.0, 0.0, 0.0))
    assert occluded[0, 0].tolist() == [0.0, 0.0, 0.0]
    assert occluded[7, 7].tolist() == [0.5, 0.5, 0.5]

    assert relmap.rescale_score(5.0) == 0.5


@pytest.mark.skipif("RELMAP_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_end_to_end(tmp_path):
    cli = os.environ["RELMAP_CLI"]
    toy = tmp_path / "toy"
    run = subprocess.run(
        [cli, "make-toy", "--out", str(toy), "--samples", "8", "--seed", "1"],
        capture_output=True, text=True)
    assert run.returncode == 0, run.stderr
    assert (toy / "base_model.json").exists()
    assert (toy / "manifest.json").exists()

    out = tmp_path / "explain"
    run = subprocess.run(
        [cli, "explain", "--model", str(toy / "base_model.json"),
         "--image", str(toy / "images" / "toy_0000.ppm"), "--out", str(out)],
        capture_output=True, text=True)
    assert run.returncode == 0, run.stderr
    assert (out / "heatmap.ppm").exists()
    assert (out / "conservation.json").exists()

    run = subprocess.run(
        [cli, "validate", "--model", str(toy / "base_model.json")],
        capture_output=True, text=True)
    assert run.returncode == 0, run.stdout + run.stderr
    assert "[PASS]" in run.stdout
