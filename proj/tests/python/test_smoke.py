"""Smoke tests for the python bindings: import, small numeric identities, and a
micro end-to-end run on a throwaway scene."""

import json
import math
import os

import numpy as np
import pytest

import mifmap


def test_morton_roundtrip():
    assert mifmap.morton_encode(0, 0, 0) == 0
    assert mifmap.morton_encode(1, 1, 1) == 7
    for i, j, k in [(5, 3, 9), (1000, 2000, 3000), (2**21 - 1, 0, 17)]:
        assert mifmap.morton_decode(mifmap.morton_encode(i, j, k)) == (i, j, k)


def test_loss_identities():
    assert mifmap.loss_surface([0.0, 0.0]) == 0.0
    assert mifmap.loss_surface([1.0, -1.0]) == 1.0
    assert mifmap.loss_sign([0.0], [0.7], 100.0) == 1.0
    t5 = math.tanh(5.0)
    assert mifmap.loss_sign([0.05], [0.05], 100.0) == pytest.approx(1 - t5 * t5)
    assert mifmap.loss_mono([[1.0, 0.0, -1.0]], 100.0) == pytest.approx(0.0, abs=1e-12)
    assert mifmap.loss_mono([[0.0, 0.0]], 100.0) == 1.0
    assert mifmap.loss_eikonal(np.array([[1.0, 0.0, 0.0]])) == 0.0
    assert mifmap.loss_eikonal(np.array([[2.0, 0.0, 0.0]])) == 1.0
    assert mifmap.sigmoid_alpha(0.0, 100.0) == 0.0


def test_marching_cubes_sphere():
    n = 33
    xs = np.linspace(-1.2, 1.2, n)
    grid = np.zeros((n, n, n))
    for i, x in enumerate(xs):
        for j, y in enumerate(xs):
            grid[i, j, :] = np.sqrt(x * x + y * y + xs**2) - 1.0
    verts, tris = mifmap.marching_cubes(grid, np.array([-1.2, -1.2, -1.2]),
                                        xs[1] - xs[0])
    assert len(tris) > 0
    radii = np.linalg.norm(verts, axis=1)
    spacing = xs[1] - xs[0]
    assert radii.min() > 1.0 - spacing
    assert radii.max() < 1.0 + spacing


def test_nearest_and_downsample():
    target = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    d = mifmap.nearest_distances(np.array([[0.25, 0.0, 0.0]]), target)
    assert d[0] == pytest.approx(0.25)
    pts = np.array([[0.01, 0.0, 0.0], [0.02, 0.0, 0.0], [0.30, 0.0, 0.0]])
    down = mifmap.voxel_downsample(pts, 0.05)
    assert down.shape == (2, 3)


SCENE = {
    "name": "smoke",
    "primitives": [
        {"type": "sphere", "center": [0, 0, 0], "radius": 1.0},
        {"type": "plane", "normal": [0, 0, -1], "offset": 2.0},
    ],
    "poses": [{"position": [3.0, 0.0, 0.5]}, {"position": [-3.0, 0.0, 0.5]}],
    "scanner": {
        "azimuth_count": 180,
        "elevation_min_deg": -45,
        "elevation_max_deg": 20,
        "elevation_count": 24,
        "max_range": 20.0,
        "seed": 5,
    },
    "mesh_bounds": {"min": [-4, -4, -2.1], "max": [4, 4, 2]},
    "reference_spacing": 0.05,
}

CONFIG = {
    "seed": 3,
    "preprocess": {"min_range": 0.5, "max_range": 20.0, "voxel": 0.05, "outlier_k": 10},
    "sampler": {"m_free": 3, "m_surf": 2, "m_occ": 1, "gamma": 0.5, "theta": 0.2},
    "octree": {"leaf_voxel": 0.25, "levels": 2, "latent_dim": 4},
    "decoder": {"hidden_width": 32, "hidden_layers": 2, "posenc_frequencies": 4},
    "train": {"batch_rays": 8, "iterations": 120, "log_every": 0},
    "mesh": {"spacing": 0.12},
    "metrics": {"sample_resolution": 0.05},
}


def test_scene_sdf():
    scene_json = json.dumps(SCENE)
    vals = mifmap.scene_sdf(scene_json, np.array([[2.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    assert vals[0] == pytest.approx(1.0)
    assert vals[1] == pytest.approx(-1.0)


def test_micro_pipeline(tmp_path):
    scene_path = tmp_path / "scene.json"
    scene_path.write_text(json.dumps(SCENE))
    out_dir = tmp_path / "run"
    result = mifmap.pipeline(str(scene_path), str(out_dir),
                             config_json=json.dumps(CONFIG))
    assert os.path.exists(result["mesh_file"])
    assert os.path.exists(result["checkpoint_file"])
    assert 0.0 <= result["fscore"] <= 1.0
    assert 0.0 <= result["mono_rate"] <= 1.0

    # The checkpoint is queryable as a field.
    vals = mifmap.evaluate_checkpoint(result["checkpoint_file"],
                                      np.array([[0.0, 0.0, 0.0], [2.5, 0.0, 0.5]]))
    assert vals.shape == (2,)
    assert np.isfinite(vals).all()

    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["command"] == "pipeline"
    assert "config_hash" in manifest
