import math

import numpy as np
import pytest

import idbp


def smooth_image(n=32, seed=0):
    rng = np.random.default_rng(seed)
    r, c = np.mgrid[0:n, 0:n] / n
    img = np.full((n, n), 128.0)
    for _ in range(4):
        fy, fx, ph = rng.uniform(1, 4), rng.uniform(1, 4), rng.uniform(0, 2 * np.pi)
        img += 25.0 * np.sin(2 * np.pi * (fy * r + fx * c) + ph)
    return img


def test_inpainting_projection_identities():
    op = idbp.InpaintingOperator.random(16, 16, 0.8, seed=3)
    assert op.observed.sum() == 16 * 16 - round(0.8 * 256)
    x = smooth_image(16)
    z = np.random.default_rng(1).normal(100, 40, (16, 16))
    y = op.forward(x)
    yk = op.back_project(y, z)
    np.testing.assert_array_equal(op.forward(yk), y)
    np.testing.assert_array_equal(op.project_null(yk), op.project_null(z))


def test_condition_ratio_identity():
    op = idbp.InpaintingOperator.random(16, 16, 0.5, seed=1)
    x = smooth_image(16)
    y = op.forward(idbp.add_gaussian_noise(x, 4.0, seed=2))
    guess = idbp.add_gaussian_noise(x, 8.0, seed=3)
    assert idbp.condition_ratio(op, y, guess, 4.0, 0.0) == pytest.approx(1.0, rel=1e-12)
    assert idbp.condition_ratio(op, y, guess, 4.0, 4.0) == pytest.approx(4.0, rel=1e-12)


def test_idbp_inpainting_improves_on_median_fill():
    x = smooth_image(48)
    op = idbp.InpaintingOperator.random(48, 48, 0.8, seed=5)
    y = op.forward(idbp.add_gaussian_noise(x, 10.0, seed=6))
    init = idbp.median_initialize(op, y)
    est, trace = idbp.idbp(op, y, 10.0, delta=0.0, iterations=20, init=init, truth=x)
    assert est.shape == (48, 48)
    assert len(trace["iter"]) == 20
    np.testing.assert_allclose(trace["condition_ratio"], 1.0, rtol=1e-12)
    assert idbp.psnr(x, est) > idbp.psnr(x, init)


def test_deblurring_and_auto_tuning():
    x = smooth_image(64)
    k = idbp.scenario_kernel(1)
    assert k.shape == (15, 15)
    assert k.sum() == pytest.approx(1.0)
    sigma = math.sqrt(2.0)
    op = idbp.BlurOperator(k, 64, 64, epsilon=7e-3, sigma_n=sigma)
    y = idbp.add_gaussian_noise(op.forward(x), sigma, seed=1)
    est, _ = idbp.idbp(op, y, sigma, delta=5.0, iterations=10)
    assert idbp.psnr(x, est) > idbp.psnr(x, y)

    res = idbp.idbp_auto(op, y, sigma, epsilon=1e-5, eps_increment=5e-4, iterations=10, truth=x)
    trace = res.trace
    assert trace["total_restarts"] >= 1
    final = trace["restarts"] == trace["total_restarts"]
    assert np.all(trace["condition_ratio"][final & (trace["iter"] > 1)] >= 3.0)


def test_pnp_linear_denoiser_matches_ridge_solution():
    x = smooth_image(12)
    op = idbp.InpaintingOperator.random(12, 12, 0.5, seed=9)
    sigma, gamma = 5.0, 0.02
    y = op.forward(idbp.add_gaussian_noise(x, sigma, seed=4))
    est, _ = idbp.pnp(op, y, sigma, beta=1.0, lam=0.05, iterations=2000,
                      denoiser="linear_shrink", shrink_gamma=gamma)
    m = op.observed.astype(float).ravel()
    expected = m * y.ravel() / (m + gamma * sigma**2)
    np.testing.assert_allclose(est.ravel(), expected, atol=1e-6)


def test_denoise_and_pgm_round_trip(tmp_path):
    x = smooth_image(32)
    noisy = idbp.add_gaussian_noise(x, 15.0, seed=7)
    out = idbp.denoise(noisy, 15.0, kind="dct")
    assert np.mean((out - x) ** 2) < np.mean((noisy - x) ** 2)
    path = tmp_path / "img.pgm"
    idbp.save_pgm(path, x)
    np.testing.assert_array_equal(idbp.load_pgm(path), np.clip(np.round(x), 0, 255))


def test_external_bridge_errors_surface():
    z = np.zeros((4, 4))
    np.testing.assert_array_equal(idbp.denoise(z, 1.0, kind="external", external_cmd="tail -n +2"), z)
    with pytest.raises(idbp.BridgeError):
        idbp.denoise(z, 1.0, kind="external", external_cmd="head -c 3 > /dev/null")


def test_verify_suite_passes():
    results = idbp.verify(seed=1, instances=50)
    assert results and all(ok for _, ok, _ in results)
