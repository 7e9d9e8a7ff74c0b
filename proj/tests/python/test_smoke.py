import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "..", "python"))

voroudf = pytest.importorskip("voroudf")


def test_presets_listed():
    names = voroudf.preset_names()
    assert len(names) >= 5
    assert "sphere" in names and "two-disks" in names


def test_field_eval():
    field = voroudf.preset_field("sphere")
    value, gradient, valid = field.eval(np.array([2.0, 0.0, 0.0]))
    assert value == pytest.approx(1.0)
    assert valid
    np.testing.assert_allclose(gradient, [1.0, 0.0, 0.0], atol=1e-12)
    lo, hi = field.domain()
    assert (lo < hi).all()


def test_reconstruct_sphere_small():
    field = voroudf.preset_field("sphere")
    cfg = voroudf.ReconConfig(seed_count=60, threads=2, rng_seed=3)
    vertices, faces, manifest = voroudf.reconstruct(field, cfg)
    assert vertices.shape[1] == 3 and faces.shape[1] == 3
    assert len(faces) > 20
    radii = np.linalg.norm(vertices, axis=1)
    np.testing.assert_allclose(radii, 1.0, atol=1e-3)
    assert manifest["counters"]["seeds"] == 60
    assert manifest["config"]["seed_count"] == 60
    assert faces.min() >= 0 and faces.max() < len(vertices)


def test_evaluate_self_is_zero():
    field = voroudf.preset_field("sphere")
    cfg = voroudf.ReconConfig(seed_count=40, threads=2, rng_seed=7)
    vertices, faces, _ = voroudf.reconstruct(field, cfg)
    report = voroudf.evaluate((vertices, faces), (vertices, faces), n_samples=2000)
    assert report["cd_x1e3"] == 0.0
    assert report["hd_pct_diag"] == 0.0
    assert report["td"] == 0
    assert report["tq"] > 0.0


def test_mesh_roundtrip(tmp_path):
    vertices = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    faces = np.array([[0, 1, 2]], dtype=np.int32)
    path = str(tmp_path / "tri.obj")
    voroudf.write_mesh(vertices, faces, path)
    rv, rf = voroudf.read_mesh(path)
    np.testing.assert_allclose(rv, vertices)
    np.testing.assert_array_equal(rf, faces)
    assert voroudf.euler_characteristic(vertices, faces) == 1


def test_bad_config_rejected():
    with pytest.raises(voroudf.VoroudfError):
        voroudf.ReconConfig(seed_count=1)
    with pytest.raises(voroudf.VoroudfError):
        voroudf.ReconConfig(not_a_key=5)
