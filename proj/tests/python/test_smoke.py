import math

import numpy as np
import pytest

delayrecon = pytest.importorskip("delayrecon")


def test_simulate_shapes():
    times, states = delayrecon.simulate("lorenz63", 50, n_transient=100)
    assert states.shape == (50, 3)
    assert times.shape == (50,)
    assert np.all(np.isfinite(states))


def test_noise_is_seeded():
    _, states = delayrecon.simulate("rossler", 200, n_transient=0)
    a = delayrecon.add_gaussian_noise(states, [0.1, 0.1, 0.1], 3)
    b = delayrecon.add_gaussian_noise(states, [0.1, 0.1, 0.1], 3)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, states)


def test_delay_embed_backward():
    rows, offset = delayrecon.delay_embed(np.arange(6.0), 2, 3)
    assert offset == 4
    assert rows.tolist() == [[4.0, 2.0, 0.0], [5.0, 3.0, 1.0]]


def test_point_mass_discrepancy():
    mu = np.array([[0.0, 0.0]])
    nu = np.array([[3.0, 4.0]])
    assert delayrecon.mmd_squared(mu, nu) == pytest.approx(10.0, abs=1e-12)
    g = delayrecon.mmd_squared(np.zeros((1, 1)), np.full((1, 1), 3.0), kernel="gaussian", sigma=1.0)
    assert g == pytest.approx(2 * (1 - math.exp(-4.5)), abs=1e-12)


def test_balanced_clusters():
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(103, 2))
    labels, centers, sse = delayrecon.constrained_kmeans(pts, 10, 1)
    counts = np.bincount(labels, minlength=10)
    assert set(counts.tolist()) <= {10, 11}
    assert centers.shape == (10, 2)
    assert sse[-1] > 0
    assert all(b <= a for a, b in zip(sse, sse[1:]))


def test_pod_reconstructs_full_rank():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(12, 5))
    mean, modes, eig = delayrecon.pod_basis(x, 5)
    assert np.allclose(modes.T @ modes, np.eye(5), atol=1e-10)
    coeffs = (x - mean) @ modes
    assert np.allclose(coeffs @ modes.T + mean, x, atol=1e-10)
    assert np.all(np.diff(eig) <= 0)


def test_dmat_round_trip(tmp_path):
    a = np.arange(6.0).reshape(2, 3)
    path = tmp_path / "m.dmat"
    delayrecon.save_dmat(str(path), [("a", a)])
    back = delayrecon.load_dmat(str(path))
    assert back[0][0] == "a"
    assert np.array_equal(back[0][1], a)
    assert path.read_bytes()[:4] == b"DMAT"


def test_config_errors_are_value_errors():
    with pytest.raises(ValueError):
        delayrecon.run_experiment({"trian.lr": "1"})


def test_small_experiment_is_reproducible():
    cfg = {
        "preset": "lorenz63",
        "sim.transient": "500",
        "sim.pool": "2000",
        "sim.test": "200",
        "sample.n_train": "100",
        "cells": "4",
        "network.hidden": "8",
        "train.steps": "10",
    }
    m1, losses = delayrecon.run_experiment(cfg)
    m2, _ = delayrecon.run_experiment(cfg)
    assert m1 == m2
    assert len(losses["pointwise"]) == 10
    assert m1["test_mse_measure"] > 0
