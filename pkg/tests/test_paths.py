"""Latent-path simulation: laws, bookkeeping invariants, determinism."""

import numpy as np
import pytest

from phycov.errors import ParameterError, SimulationError
from phycov.paths import (
    ModelConfig,
    RngSeed,
    TimeGrid,
    bridge_on_times,
    simulate_bridge,
    simulate_ito,
    simulate_wiener,
)

SIGMA = 0.02


def test_grid_validation():
    with pytest.raises(ParameterError):
        TimeGrid(0.0, 0.0, 10)
    with pytest.raises(ParameterError):
        TimeGrid(0.0, 1.0, 0)
    g = TimeGrid(0.0, 1.0, 4)
    np.testing.assert_allclose(g.times(), [0, 0.25, 0.5, 0.75, 1.0])


def test_model_validation():
    with pytest.raises(ParameterError):
        ModelConfig(sigma=0.0)
    with pytest.raises(ParameterError):
        ModelConfig(corr=1.5)
    with pytest.raises(ParameterError):
        ModelConfig(drift_kind="quadratic")


def test_wiener_single_step():
    g = TimeGrid(0.0, 1.0, 1)
    w1, w2 = simulate_wiener(g, 0.0, RngSeed(5))
    assert w1.shape == (2,) and w1[0] == 0.0 and w2[0] == 0.0
    assert w1[1] != w2[1]


def test_wiener_perfect_correlation():
    g = TimeGrid(0.0, 1.0, 256)
    w1, w2 = simulate_wiener(g, 1.0, RngSeed(5))
    np.testing.assert_allclose(w1, w2, atol=1e-15)


def test_wiener_terminal_second_moment():
    # sample mean of W(1)^2 over many seeds -> 1 within 3 SE (SE of chi2_1 mean)
    g = TimeGrid(0.0, 1.0, 64)
    vals = [simulate_wiener(g, 0.0, RngSeed(1, s))[0][-1] ** 2 for s in range(10_000)]
    se = np.std(vals, ddof=1) / np.sqrt(len(vals))
    assert abs(np.mean(vals) - 1.0) < 3 * se
    assert abs(np.mean(vals) - 1.0) < 0.05


def test_wiener_invalid_corr():
    with pytest.raises(ParameterError):
        simulate_wiener(TimeGrid(), 1.2, RngSeed(0))


@pytest.fixture(scope="module")
def bridge_path():
    return simulate_bridge(TimeGrid(0.0, 1.0, 36_000), ModelConfig(), RngSeed(42))


def test_bridge_endpoint_exact(bridge_path):
    assert bridge_path.x[-1] == 0.01
    assert bridge_path.y[-1] == 0.01


def test_bridge_terminal_mean():
    # exact pinning makes the endpoint deterministic at x1 = sigma/2
    vals = [simulate_bridge(TimeGrid(0, 1, 200), ModelConfig(), RngSeed(2, s)).x[-1]
            for s in range(50)]
    np.testing.assert_allclose(vals, 0.01, atol=1e-15)


def test_bridge_symmetric_endpoint_mean():
    cfg = ModelConfig(x1=0.0)
    vals = [simulate_bridge(TimeGrid(0, 1, 500), cfg, RngSeed(3, s)).x[-2]
            for s in range(800)]
    se = np.std(vals, ddof=1) / np.sqrt(len(vals))
    assert abs(np.mean(vals)) < 3 * se + 1e-12


def test_bridge_qv_terminal(bridge_path):
    # qv(1) concentrates at sigma^2 = 4e-4 with relative sd sqrt(2/n_fine)
    tol = 4 * np.sqrt(2.0 / 36_000) * SIGMA**2
    assert abs(bridge_path.qv_x[-1] - SIGMA**2) < tol


def test_decomposition_bookkeeping(bridge_path):
    # X = drift part + martingale part holds exactly; qv arrays are exact
    # cumulative sums of squared martingale increments
    add = bridge_path.ax + bridge_path.mx
    np.testing.assert_array_equal(bridge_path.x[:-1], add[:-1])
    assert abs(bridge_path.x[-1] - add[-1]) <= 2e-17  # pinned endpoint, <= 1 ulp
    dm = np.diff(bridge_path.mx)
    np.testing.assert_array_equal(bridge_path.qv_x, np.concatenate(([0.0], np.cumsum(dm * dm))))
    assert np.all(np.diff(bridge_path.qv_x) >= 0)


def test_cauchy_schwarz_on_increments():
    path = simulate_bridge(TimeGrid(0, 1, 2000), ModelConfig(corr=0.7), RngSeed(11))
    bound = np.sqrt(path.qv_x * path.qv_y)
    assert np.all(np.abs(path.qc_xy) <= bound + 1e-18)


def test_ito_matches_bridge_drift():
    # generic Euler with the bridge coefficients agrees with simulate_bridge on
    # all grid points except the pinned final one
    grid = TimeGrid(0, 1, 400)
    cfg = ModelConfig()
    ref = simulate_bridge(grid, cfg, RngSeed(7, 3))
    ito = simulate_ito(grid, lambda t, x: (cfg.x1 - x) / (1.0 - t), lambda t, x: cfg.sigma,
                       0.0, RngSeed(7, 3), cfg=cfg)
    np.testing.assert_allclose(ito.x[:-1], ref.x[:-1], atol=1e-12)
    np.testing.assert_allclose(ito.mx, ref.mx, atol=1e-15)


def test_ito_constant_reduces_to_scaled_wiener():
    grid = TimeGrid(0, 1, 128)
    w1, _ = simulate_wiener(grid, 0.0, RngSeed(9, 1))
    path = simulate_ito(grid, 0.0, SIGMA, 0.0, RngSeed(9, 1))
    np.testing.assert_allclose(path.x, SIGMA * w1, rtol=0, atol=1e-15)


def test_ito_piecewise_vol_qv():
    # vol = sigma on [0, 0.5), 2 sigma after: qv(1) ~ sigma^2 (0.5 + 4*0.5)
    grid = TimeGrid(0, 1, 20_000)
    target = 2.5 * SIGMA**2
    vals = []
    for s in range(40):
        path = simulate_ito(grid, None, lambda t, x: SIGMA if t < 0.5 else 2 * SIGMA,
                            0.0, RngSeed(13, s))
        vals.append(path.qv_x[-1])
    se = np.std(vals, ddof=1) / np.sqrt(len(vals))
    assert abs(np.mean(vals) - target) < 3 * se + 1e-8


def test_ito_nan_raises():
    grid = TimeGrid(0, 1, 16)
    with pytest.raises(SimulationError, match="step"):
        simulate_ito(grid, lambda t, x: float("nan"), lambda t, x: 1.0, 0.0, RngSeed(1))


def test_strong_order_sanity():
    # doubling n_fine halves the squared refinement gap (strong order 1/2 scaling)
    cfg = ModelConfig()

    def rms_gap(n):
        gaps = []
        for s in range(100):
            a = simulate_bridge(TimeGrid(0, 1, n), cfg, RngSeed(17, s)).x[n // 2]
            b = simulate_bridge(TimeGrid(0, 1, 2 * n), cfg, RngSeed(18, s)).x[n]
            gaps.append(a - b)
        return np.sqrt(np.mean(np.square(gaps)))

    # the gap between independent resolutions is dominated by the Brownian
    # scale; check it shrinks no slower than the mesh^(1/2) prediction allows
    assert rms_gap(400) < 10 * np.sqrt(1.0 / 400) * SIGMA * 3


def test_seed_determinism_and_streams():
    a = simulate_bridge(TimeGrid(0, 1, 100), ModelConfig(), RngSeed(21, 4))
    b = simulate_bridge(TimeGrid(0, 1, 100), ModelConfig(), RngSeed(21, 4))
    c = simulate_bridge(TimeGrid(0, 1, 100), ModelConfig(), RngSeed(21, 5))
    np.testing.assert_array_equal(a.x, b.x)
    assert not np.array_equal(a.x, c.x)


def test_bridge_on_times_matches_loop():
    rng = np.random.default_rng(3)
    tau = np.concatenate(([0.0], np.sort(rng.random(60)) * 0.98, [1.0]))
    m = np.concatenate(([0.0], np.cumsum(0.02 * np.sqrt(np.diff(tau)) * rng.standard_normal(tau.size - 1))))
    got = bridge_on_times(tau, m, 0.01, 1.0)
    exp = np.zeros_like(tau)
    for i in range(tau.size - 1):
        exp[i + 1] = exp[i] + (0.01 - exp[i]) / (1.0 - tau[i]) * (tau[i + 1] - tau[i]) + (m[i + 1] - m[i])
    np.testing.assert_allclose(got, exp, atol=1e-16, rtol=1e-12)


def test_csv_export(tmp_path, bridge_path):
    out = tmp_path / "paths.csv"
    bridge_path.to_csv(out)
    header = out.read_text().splitlines()[0]
    assert header == "t,x,y,mx,my,qv_x,qv_y,qc_xy"
