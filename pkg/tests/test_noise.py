"""Noisy observation assembly: channels, reductions, exactness invariants."""

import math

import numpy as np
import pytest

from phycov.errors import ParameterError
from phycov.estimators import PreAvgConfig, phy_refresh
from phycov.noise import NoiseConfig, observe, observe_linear_process, observe_pair
from phycov.paths import ModelConfig, RngSeed, TimeGrid, simulate_bridge
from phycov.sampling import gen_barrier_hitting, gen_equidistant

B_N = 1.0 / 3600
SIGMA = 0.02


@pytest.fixture(scope="module")
def path():
    return simulate_bridge(TimeGrid(0, 1, 36_000), ModelConfig(), RngSeed(3, 0))


@pytest.fixture(scope="module")
def times():
    return gen_equidistant(1.0, B_N)


def test_zero_noise_values_equal_latent(path, times):
    xs = observe(path, times, NoiseConfig(psi=None), RngSeed(3, 1))
    np.testing.assert_array_equal(xs.values, xs.latent)


def test_iid_noise_variance(path, times):
    gamma = 0.001
    cfg = NoiseConfig(psi=gamma * SIGMA**2)
    devs = []
    for s in range(30):
        xs = observe(path, times, cfg, RngSeed(4, s))
        devs.append(xs.values - xs.latent)
    d = np.concatenate(devs)
    target = gamma * SIGMA**2  # 4e-7
    se = np.std(d * d, ddof=1) / math.sqrt(d.size)
    assert abs(np.var(d) - target) < 3 * se
    assert abs(np.mean(d)) < 3 * np.std(d) / math.sqrt(d.size)


def test_psi_validation():
    with pytest.raises(ParameterError, match="positive semidefinite"):
        NoiseConfig(psi=np.array([[1.0, 2.0], [2.0, 1.0]])).validate()
    with pytest.raises(ParameterError, match="symmetric"):
        NoiseConfig(psi=np.array([[1.0, 0.5], [0.1, 1.0]])).validate()


def test_joint_cross_covariance(path, times):
    psi = np.array([[1e-6, 6e-7], [6e-7, 1e-6]])
    cfg = NoiseConfig(psi=psi)
    prods = []
    for s in range(40):
        xs, ys = observe_pair(path, times, times, cfg, RngSeed(5, s))
        prods.append((xs.values - xs.latent) * (ys.values - ys.latent))
    p = np.concatenate(prods)
    se = np.std(p, ddof=1) / math.sqrt(p.size)
    assert abs(np.mean(p) - 6e-7) < 3 * se


def test_endogenous_noise_sign(times):
    # negative delta makes the noise negatively correlated with latent returns
    delta = -math.sqrt(0.001)
    cfg_model = ModelConfig(endo_factor_x=delta)
    corrs = []
    for s in range(25):
        p = simulate_bridge(TimeGrid(0, 1, 36_000), cfg_model, RngSeed(6, s))
        xs = observe(p, times, NoiseConfig(psi=None), RngSeed(6, s).spawn(2))
        noise = xs.values - xs.latent
        dlat = np.diff(xs.latent)
        corrs.append(np.corrcoef(noise[1:], dlat)[0, 1])
    mean_corr = np.mean(corrs)
    assert mean_corr < 0
    # magnitude: noise = delta sqrt(n) dX, so corr(noise, dX) = sign(delta) = -1
    # up to the sampling-interpolation of dX; strong negative correlation expected
    assert mean_corr < -0.9


def test_scenario3_two_entry_points(times):
    # endo factor on the path with unit scale == unit factor with delta scale
    delta = -math.sqrt(0.001)
    p1 = simulate_bridge(TimeGrid(0, 1, 36_000), ModelConfig(endo_factor_x=delta), RngSeed(8, 1))
    p2 = simulate_bridge(TimeGrid(0, 1, 36_000), ModelConfig(endo_factor_x=1.0), RngSeed(8, 1))
    a = observe(p1, times, NoiseConfig(psi=None, endo_scale_x=1.0), RngSeed(8, 2))
    b = observe(p2, times, NoiseConfig(psi=None, endo_scale_x=delta), RngSeed(8, 2))
    np.testing.assert_allclose(a.values, b.values, atol=1e-18)


def test_scenario3_matches_direct_formula(path, times):
    # U_i = delta sqrt(n) (X_{S_i} - X_{S_{i-1}}) built from the latent values
    delta = -math.sqrt(0.001)
    p = simulate_bridge(TimeGrid(0, 1, 36_000), ModelConfig(endo_factor_x=delta), RngSeed(9, 1))
    xs = observe(p, times, NoiseConfig(psi=None), RngSeed(9, 2))
    dx = np.concatenate(([0.0], np.diff(xs.latent)))
    np.testing.assert_allclose(xs.values, xs.latent + delta * dx / math.sqrt(B_N), atol=1e-18)


def test_times_beyond_grid_rejected(path):
    st = gen_equidistant(2.0, 0.5)
    with pytest.raises(ParameterError, match="beyond"):
        observe(path, st, NoiseConfig(), RngSeed(1))


def test_linear_process_single_weight_reduction(path, times):
    cfg = NoiseConfig(psi=1e-6, lambda1=(1.0,), lambda2=(1.0,), mu1=(1.0,), mu2=(1.0,))
    a, _ = observe_linear_process(path, times, cfg, RngSeed(10, 0))
    b = observe(path, times, cfg, RngSeed(10, 0))
    np.testing.assert_array_equal(a.values, b.values)


def test_linear_process_telescoping_kills_signal(path, times):
    # lambda = (1, -1): accumulated noise telescopes, long-run weight 0; on
    # pure-noise data at the realistic noise scale the estimator is negligible
    # against sigma^2 = 4e-4, and its dispersion collapses relative to
    # untelescoped noise of the same variance
    flat = simulate_bridge(TimeGrid(0, 1, 36_000),
                           ModelConfig(sigma=1e-12, x1=0.0, drift_kind="none"), RngSeed(11, 0))
    psi = 0.001 * SIGMA**2
    out = {}
    for lam in ((1.0, -1.0), (1.0,)):
        cfg = NoiseConfig(psi=psi, lambda1=lam, lambda2=lam)
        vals = []
        for s in range(20):
            xs, _ = observe_linear_process(flat, times, cfg, RngSeed(11, s))
            vals.append(phy_refresh(xs, xs, PreAvgConfig(b_n=B_N), horizon=1.0).value)
        out[lam] = np.asarray(vals)
    assert np.all(np.abs(out[(1.0, -1.0)]) < 0.05 * SIGMA**2)
    assert np.std(out[(1.0, -1.0)]) < np.std(out[(1.0,)]) / 3.0


def test_linear_process_nonsynchronous_rejected(path, times):
    other = gen_equidistant(1.0, 1.0 / 1800)
    with pytest.raises(ParameterError, match="synchronous"):
        observe_linear_process(path, times, NoiseConfig(), RngSeed(1), t_times=other)


def test_linear_process_retains_draws(path, times):
    cfg = NoiseConfig(psi=1e-6)
    xs, _ = observe_linear_process(path, times, cfg, RngSeed(12, 0))
    assert xs.eps is not None and xs.eps.shape == xs.times.shape


def test_custom_driver_hook(path, times):
    arr = np.linspace(0.0, 1e-3, path.grid.n_fine + 1)
    cfg = NoiseConfig(psi=None, custom_driver_x=arr)
    xs = observe(path, times, cfg, RngSeed(13, 0))
    du = np.concatenate(([0.0], np.diff(np.interp(times.times, path.times(), arr))))
    np.testing.assert_allclose(xs.values - xs.latent, du / math.sqrt(B_N), atol=1e-18)


def test_latent_mode_sampling_exact_martingale_for_driftless(times):
    p = simulate_bridge(TimeGrid(0, 1, 36_000), ModelConfig(x1=0.0, drift_kind="none"),
                        RngSeed(14, 0))
    st = gen_barrier_hitting(p, 0.01, 0.04, B_N, RngSeed(14, 1))
    xs = observe(p, st, NoiseConfig(psi=None), RngSeed(14, 2), latent_mode="sampling")
    np.testing.assert_array_equal(xs.values, st.driver_values)


def test_time_varying_psi_callable(path, times):
    cfg = NoiseConfig(psi=lambda t: np.diag([1e-6 * (1 + t), 1e-6]))
    st = gen_equidistant(1.0, 1.0 / 50)
    devs = []
    for s in range(400):
        xs = observe(path, st, cfg, RngSeed(15, s))
        devs.append(xs.values - xs.latent)
    d = np.asarray(devs)
    early = d[:, 1:10].ravel()
    late = d[:, -10:].ravel()
    assert np.var(late) > np.var(early)
