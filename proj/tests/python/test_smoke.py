"""End-to-end smoke tests for the Python bindings."""

import math

import numpy as np
import pytest

import spdddpm


def diag(*entries):
    return np.diag(np.asarray(entries, dtype=float))


def test_validate_spd():
    out = spdddpm.validate_spd(np.eye(3))
    assert np.array_equal(out, np.eye(3))
    with pytest.raises(spdddpm.SpdError):
        spdddpm.validate_spd(diag(1.0, -1.0))
    with pytest.raises(spdddpm.SpdError):
        spdddpm.validate_spd(np.array([[1.0, 0.5], [0.4, 1.0]]))


def test_group_algebra():
    assert np.allclose(spdddpm.oplus(diag(2, 1), diag(3, 1)), diag(6, 1), atol=1e-12)
    assert np.allclose(spdddpm.odot(2.0, diag(3, 1)), diag(9, 1), atol=1e-12)
    x = spdddpm.mat_exp(np.array([[0.3, 0.1], [0.1, -0.2]]))
    assert np.allclose(spdddpm.ominus(x, x), np.eye(2), atol=1e-12)
    assert np.allclose(spdddpm.mat_pow(diag(4, 1), 0.5), diag(2, 1), atol=1e-12)
    assert np.allclose(spdddpm.mat_exp(spdddpm.mat_log(x)), x, atol=1e-9)


def test_metric_and_volume():
    assert spdddpm.dist_affine(np.eye(2), np.eye(2)) == 0.0
    assert spdddpm.dist_affine(np.eye(2), diag(math.e**2, 1)) == pytest.approx(2.0, abs=1e-10)
    assert spdddpm.dist_frobenius(np.eye(2), 2 * np.eye(2)) == pytest.approx(math.sqrt(2))
    assert spdddpm.volume_density(2 * np.eye(2)) == pytest.approx(0.125)
    a = np.array([[1.0, 0.4], [0.2, 1.3]])
    x, y = diag(2, 1), diag(1, 3)
    assert spdddpm.dist_affine(
        spdddpm.group_action(x, a), spdddpm.group_action(y, a)
    ) == pytest.approx(spdddpm.dist_affine(x, y), abs=1e-10)


def test_normalizer_and_radial_cdf():
    assert spdddpm.normalizer_zeta(0.5, 1) == pytest.approx(math.sqrt(2 * math.pi) * 0.5)
    sigma = 0.5
    want = 2 * math.pi**2 * sigma**2 * math.exp(sigma**2 / 4) * math.erf(sigma / 2)
    assert spdddpm.normalizer_zeta(sigma, 2) == pytest.approx(want, rel=1e-8)
    with pytest.raises(spdddpm.SpdError):
        spdddpm.normalizer_zeta(0.5, 4)
    cdf = [spdddpm.radial_cdf(0.5, 2, rho) for rho in (0.0, 0.5, 1.0, 8.0)]
    assert cdf[0] == 0.0
    assert cdf[1] < cdf[2] < cdf[3]
    assert cdf[3] == pytest.approx(1.0, abs=1e-6)


def test_sampling_and_frechet_mean():
    draws = spdddpm.sample_gaussian(np.eye(2), 0.2, n=50, seed=1)
    assert len(draws) == 50
    for x in draws:
        spdddpm.validate_spd(x)
        assert spdddpm.dist_affine(x, np.eye(2)) < 1.5
    again = spdddpm.sample_gaussian(np.eye(2), 0.2, n=50, seed=1)
    assert all(np.array_equal(a, b) for a, b in zip(draws, again))

    mean = spdddpm.frechet_mean([diag(2, 0.5), diag(8, 2)])
    assert np.allclose(mean, diag(4, 1), atol=1e-8)


def test_schedule_arrays():
    s = spdddpm.schedule_arrays(200)
    assert len(s["alpha"]) == 200
    assert s["alpha_bar"][-1] == pytest.approx(0.016050800238, abs=1e-9)
    assert s["beta_bar"][-1] == pytest.approx(0.999871177608, abs=1e-9)
    assert s["sigma_tilde"][0] == 0.0
    for a, b in zip(s["alpha"], s["beta"]):
        assert a * a + b * b == pytest.approx(1.0, abs=1e-14)


def test_forward_jump_matches_power_law():
    eps = spdddpm.mat_exp(np.array([[0.2, 0.05], [0.05, -0.1]]))
    s = spdddpm.schedule_arrays(50)
    got = spdddpm.forward_jump(np.eye(2), 13, eps, 50)
    want = spdddpm.mat_pow(eps, s["beta_bar"][12])
    assert np.allclose(got, want, atol=1e-12)


def test_dataset_round_trip(tmp_path):
    path = str(tmp_path / "data.jsonl")
    mats = spdddpm.sample_gaussian(diag(1.5, 0.7), 0.1, n=5, seed=3)
    spdddpm.save_dataset(path, mats)
    loaded = spdddpm.load_dataset(path)
    assert len(loaded) == 5
    assert all(np.array_equal(a, b) for a, b in zip(mats, loaded))
    with pytest.raises(spdddpm.SpdError):
        spdddpm.load_dataset(str(tmp_path / "missing.jsonl"))


def test_train_and_sample(tmp_path):
    ckpt = str(tmp_path / "model.json")
    data = spdddpm.sample_gaussian(diag(1.4, 0.8), 0.1, n=40, seed=5)
    losses = spdddpm.train_unconditional(
        data, T=5, epochs=2, batch_size=20, learning_rate=1.5e-3, checkpoint_path=ckpt, seed=6
    )
    assert len(losses) == 2
    assert all(math.isfinite(l) and l >= 0.0 for l in losses)
    out = spdddpm.sample_unconditional(ckpt, n=3, gamma=10.0, seed=8)
    assert len(out) == 3
    for x in out:
        assert x.shape == (2, 2)
        spdddpm.validate_spd(x)
