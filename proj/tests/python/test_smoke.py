import json

import numpy as np
import pytest
from scipy.stats import qmc

import videograph as vg

DESK = {"T": 16, "N": 8, "H": 1, "W": 1, "C": 16, "num_embedding_layers": 1,
        "classifier_hidden": 16, "num_classes": 4, "seed": 3}


def test_shape_inference_accepts_dict_and_text():
    stages = vg.shape_inference(DESK)
    assert stages == vg.shape_inference(json.dumps(DESK))
    assert stages[-1][1] == (4,)


def test_sobol_matches_scipy():
    ours = vg.sobol(63, 5)
    ref = qmc.Sobol(d=5, scramble=False).random(64)[1:]
    np.testing.assert_array_equal(ours, ref)


def test_map_and_errors():
    scores = np.array([[0.9, 0.1], [0.1, 0.8]])
    assert vg.mean_average_precision(scores, np.eye(2)) == 1.0
    with pytest.raises(vg.ShapeError):
        vg.mean_average_precision(scores, np.ones((3, 2)))


def test_model_forward():
    model = vg.Model(DESK)
    x = np.random.default_rng(0).standard_normal((4, 16, 1, 1, 16))
    s = model.scores(x, train=True)
    assert s.shape == (4, 4)
    np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_array_equal(s, model.scores(x, train=True))
    with pytest.raises(vg.ShapeError):
        model.scores(np.zeros((4, 15, 1, 1, 16)), train=True)


def test_feature_file_round_trip(tmp_path):
    # Stored as binary32, so start from float32-representable values.
    a = np.random.default_rng(1).standard_normal((3, 1, 2, 5)).astype(np.float32).astype(np.float64)
    vg.write_feature_file(tmp_path / "a.vgft", a)
    np.testing.assert_array_equal(vg.read_feature_file(tmp_path / "a.vgft"), a)


def test_extraction_and_layout():
    z1 = np.random.default_rng(2).random((2, 4, 3, 5))
    g = vg.extract_activity_graph(z1, 1)
    edges = np.asarray(g["edge_weights"])
    assert edges.shape == (4, 4)
    np.testing.assert_allclose(edges, edges.T)
    pos = vg.force_layout(g["node_importance"], edges, 100, 0)
    assert pos.shape == (4, 2) and np.isfinite(pos).all()


def test_cli_in_process():
    code, out, err = vg.cli("shapes", "--config", "/nonexistent.json")
    assert code == 2 and err
    code, _, err = vg.cli("nope")
    assert code == 2 and err


def test_gradient_suite_passes():
    assert all(ok for _, _, ok in vg.gradient_suite(4))
