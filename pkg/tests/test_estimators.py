"""Point estimators: brute-force oracle equality, algebra, identities."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_instance
from phycov.errors import InsufficientDataError, ParameterError
from phycov.estimators import (
    MIN_XX,
    QUARTIC_F,
    PreAvgConfig,
    as_series,
    gamma1,
    min_xx,
    mrc,
    msrv,
    msrv_weights,
    phy,
    phy_refresh,
    preavg,
    quartic_f,
    rq,
    rv,
    xi,
    xi_f,
)
from phycov.quadrature import adaptive_simpson
from phycov.sampling import refresh, SamplingTimes

CFG = PreAvgConfig(b_n=0.05, theta=0.5)


def wrap(xs):
    return SamplingTimes(times=xs.times, b_n=xs.b_n)


# -------------------------------------------------------------------- weights

def test_weight_validation():
    w = min_xx()
    assert w(0.0) == 0.0 and w(1.0) == 0.0 and w(-0.3) == 0.0 and w(1.2) == 0.0
    assert w(0.25) == 0.25 and w(0.75) == 0.25
    f = quartic_f()
    assert f.is_quartic_class()
    assert not w.is_quartic_class()


def test_preavg_config_validation():
    with pytest.raises(ParameterError):
        PreAvgConfig(b_n=-1.0)
    with pytest.raises(ParameterError):
        PreAvgConfig(b_n=0.1, k_n=1)
    with pytest.raises(ParameterError):
        PreAvgConfig(b_n=0.1, kernel_norm="riemann")


def test_kn_rules():
    cfg = PreAvgConfig(b_n=1.0 / 3600, theta=0.15)
    assert cfg.resolve_k_n(3600) == 9
    assert PreAvgConfig(b_n=1.0 / 3600, theta=0.15, k_n_rule="sqrt_bn").resolve_k_n() == 9
    assert PreAvgConfig(b_n=1.0 / 3600, k_n=5).resolve_k_n(10_000) == 5


def test_theta_consistency():
    # k_n sqrt(b_n) - theta stays O(b_n^{1/4}) along the data-driven rule
    for n in (900, 3600, 14400):
        cfg = PreAvgConfig(b_n=1.0 / n, theta=0.15)
        k = cfg.resolve_k_n(n)
        assert abs(k * math.sqrt(1.0 / n) - 0.15) <= (1.0 / n) ** 0.25


# -------------------------------------------------------------------- preavg

def test_preavg_constant_series():
    out = preavg(np.full(20, 3.7), 5, MIN_XX)
    np.testing.assert_array_equal(out, np.zeros(16))


def test_preavg_k2_halves_increment():
    vals = np.array([0.0, 1.0, 3.0, 6.0])
    out = preavg(vals, 2, MIN_XX)
    np.testing.assert_array_equal(out, 0.5 * np.diff(vals))


def test_preavg_matches_double_loop():
    rng = np.random.default_rng(1)
    vals = rng.standard_normal(50)
    got = preavg(vals, 5, MIN_XX)
    np.testing.assert_array_equal(got, oracles.preavg_oracle(vals, 5, MIN_XX))


def test_preavg_too_short():
    with pytest.raises(InsufficientDataError):
        preavg(np.zeros(5), 5, MIN_XX)


# ------------------------------------------------------------------------ phy

def test_phy_constant_series_zero(rng):
    xs, ys = random_instance(rng)
    const = as_series(ys.times, np.full(len(ys), 2.0), ys.b_n)
    assert phy(xs, const, CFG).value == 0.0


def test_phy_oracle_bitwise(rng):
    for _ in range(150):
        xs, ys = random_instance(rng)
        got = phy(xs, ys, CFG, horizon=0.9)
        exp, k_n = oracles.phy_value_oracle(xs, ys, CFG, horizon=0.9)
        assert got.value == exp
        assert got.meta["k_n"] == k_n


def test_phy_refresh_synchronous_collapse(rng):
    xs, _ = random_instance(rng, sync=True)
    a = phy(xs, xs, CFG)
    b = phy_refresh(xs, xs, CFG)
    assert a.value == b.value


def test_phy_refresh_oracle_bitwise(rng):
    for _ in range(60):
        xs, ys = random_instance(rng)
        got = phy_refresh(xs, ys, CFG)
        exp = oracles.phy_refresh_value_oracle(xs, ys, CFG)
        assert got.value == exp


def test_phy_univariate_closed_band_sum(rng):
    # univariate refresh estimator equals the |i-j| < k_n band sum
    xs, _ = random_instance(rng, sync=True)
    cfg = PreAvgConfig(b_n=xs.b_n, k_n=4)
    got = phy_refresh(xs, xs, cfg)
    xbar = oracles.preavg_oracle(xs.values, 4, MIN_XX)
    acc = 0.0
    for i in range(len(xs) - 4):
        for j in range(len(xs) - 4):
            if abs(i - j) < 4:
                acc += float(xbar[i]) * float(xbar[j])
    nc = cfg.norm_const(4)
    assert abs(got.value - acc / (nc * 4) ** 2) < 1e-18


def test_phy_path_causality(rng):
    xs, ys = random_instance(rng)
    res = phy(xs, ys, CFG, with_path=True)
    et, ev = res.path
    assert np.all(np.diff(et) >= 0)
    # value at t reflects only windows fully closed by t
    for t in (0.3, 0.6, 0.95):
        exp, _ = oracles.phy_value_oracle(xs, ys, CFG, horizon=t)
        assert abs(res.path_at(t) - exp) < 1e-15 * max(1.0, abs(exp))


def test_phy_insufficient_data():
    xs = as_series(np.linspace(0, 1, 8), np.zeros(8), 0.1)
    with pytest.raises(InsufficientDataError):
        phy(xs, xs, PreAvgConfig(b_n=0.1, k_n=4))


@settings(max_examples=25, deadline=None)
@given(st.integers(-6, 6), st.integers(-6, 6))
def test_phy_bilinearity_powers_of_two(ax, bx):
    # scaling observed values by powers of two scales the estimate exactly
    rng = np.random.default_rng(abs(ax) * 31 + abs(bx) * 7 + 5)
    xs, ys = random_instance(rng)
    a, b = 2.0**ax, 2.0**bx
    base = phy(xs, ys, CFG).value
    xs2 = as_series(xs.times, a * xs.values, xs.b_n)
    ys2 = as_series(ys.times, b * ys.values, ys.b_n)
    assert phy(xs2, ys2, CFG).value == a * b * base


def test_phy_symmetry_synchronous(rng):
    # equal term sets, transposed accumulation order: equal up to roundoff
    xs, ys = random_instance(rng, sync=True)
    a = phy(xs, ys, CFG).value
    b = phy(ys, xs, CFG).value
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))
    # identical inputs traverse identically, hence bitwise equality
    assert phy(xs, xs, CFG).value == phy(xs, xs, CFG).value


# -------------------------------------------------------------------- rv / rq

def test_rv_rq_constant_increments():
    vals = np.cumsum(np.full(11, 0.5))
    xs = as_series(np.linspace(0, 1, 11), vals, 0.1)
    assert rv(xs).value == 10 * 0.25
    assert rq(xs).value == 10 * 0.0625


def test_rv_oracle(rng):
    xs, _ = random_instance(rng)
    assert rv(xs, horizon=0.7).value == oracles.rv_oracle(xs, 0.7)
    assert rq(xs, horizon=0.7).value == oracles.rq_oracle(xs, 0.7)


# --------------------------------------------------------------------- gamma

def test_gamma1_hand_instance():
    t = np.arange(10.0)
    vals = np.array([0.0, 1.0, -1.0, 2.0, 0.5, 0.0, 3.0, 1.0, -2.0, 0.0])
    xs = as_series(t, vals, 1.0)
    rd = refresh(wrap(xs), wrap(xs))
    g = gamma1(xs, xs, rd, 3)
    d = np.diff(vals)
    exp11 = -np.sum(d[:-1] * d[1:]) / 9.0
    assert abs(g.g11.value - exp11) < 1e-18
    assert g.g11.value == g.g22.value
    # synchronous cross statistic halves the doubled product sum
    exp12 = -np.sum(d[:-1] * d[1:] + d[1:] * d[:-1]) / 18.0
    assert abs(g.g12.value - exp12) < 1e-18


def test_gamma1_oracle_bitwise(rng):
    for _ in range(80):
        xs, ys = random_instance(rng)
        rd = refresh(wrap(xs), wrap(ys))
        if rd.r.size < 3:
            continue
        got = gamma1(xs, ys, rd, 4)
        e11, e22, e12 = oracles.gamma1_oracle(xs, ys, rd, 4)
        assert got.g11.value == e11
        assert got.g22.value == e22
        assert got.g12.value == e12


def test_gamma1_pure_noise_level(rng):
    # k_n^2 gamma11 / N estimates the noise variance under iid noise
    psi = 2.5e-6
    vals = []
    n = 2000
    for s in range(200):
        r = np.random.default_rng(s)
        eps = math.sqrt(psi) * r.standard_normal(n)
        xs = as_series(np.linspace(0, 1, n), eps, 1.0 / n)
        rd = refresh(wrap(xs), wrap(xs))
        g = gamma1(xs, xs, rd, 5)
        vals.append(5**2 * g.g11.value / (n - 1))
    se = np.std(vals, ddof=1) / math.sqrt(len(vals))
    assert abs(np.mean(vals) - psi) < 3 * se


def test_gamma1_smooth_path_vanishes():
    # for a smooth (finite-variation) path the scaled autocovariance statistic
    # is bounded by the path's own realized variance, which vanishes like 1/n
    t = np.linspace(0, 1, 500)
    xs = as_series(t, np.sin(t), 1.0 / 500)
    rd = refresh(wrap(xs), wrap(xs))
    g = gamma1(xs, xs, rd, 5)
    rv_val = rv(xs).value
    assert rv_val < 2.0 / 500
    assert abs(5**2 * g.g11.value) <= 1.01 * rv_val


def test_gamma1_insufficient():
    xs = as_series(np.array([0.0, 1.0]), np.array([0.0, 1.0]), 1.0)
    rd = refresh(wrap(xs), wrap(xs))
    with pytest.raises(InsufficientDataError):
        gamma1(xs, xs, rd, 2)


# ----------------------------------------------------------------------- xi

def test_xi_constant_zero(rng):
    xs, _ = random_instance(rng, sync=True)
    const = as_series(xs.times, np.ones(len(xs)), xs.b_n)
    rd = refresh(wrap(xs), wrap(xs))
    assert xi(const, const, rd, 4, MIN_XX, MIN_XX).value == 0.0


def test_xi_oracle_bitwise(rng):
    for _ in range(80):
        xs, ys = random_instance(rng)
        rd = refresh(wrap(xs), wrap(ys))
        if rd.r.size <= 5:
            continue
        got = xi(xs, ys, rd, 4, MIN_XX, QUARTIC_F)
        exp = oracles.xi_oracle(xs, ys, rd, 4, MIN_XX, QUARTIC_F)
        assert got.value == exp


def test_xi_f_antisymmetry(rng):
    xs, ys = random_instance(rng)
    rd = refresh(wrap(xs), wrap(ys))
    rd_swap = refresh(wrap(ys), wrap(xs))
    a = xi_f(xs, ys, rd, 4, QUARTIC_F).value
    b = xi_f(ys, xs, rd_swap, 4, QUARTIC_F).value
    assert abs(a + b) < 1e-18 + 1e-12 * abs(a)


def test_xi_f_univariate_identically_zero(rng):
    xs, _ = random_instance(rng, sync=True)
    rd = refresh(wrap(xs), wrap(xs))
    assert xi_f(xs, xs, rd, 4, QUARTIC_F).value == 0.0


def test_xi_f_requires_quartic_class(rng):
    xs, ys = random_instance(rng)
    rd = refresh(wrap(xs), wrap(ys))
    with pytest.raises(ParameterError):
        xi_f(xs, ys, rd, 4, MIN_XX)


def test_fprime_norm_closed_form():
    f = quartic_f()
    val = adaptive_simpson(lambda u: float(f.d(u)) ** 2, 0.0, 1.0, 1e-12)
    assert abs(val - 2.0 / 105.0) < 1e-12


# ----------------------------------------------------------------------- mrc

def test_mrc_psi_constants():
    xs = as_series(np.linspace(0, 1, 40), np.random.default_rng(0).standard_normal(40), 1 / 40)
    res = mrc(xs, xs, PreAvgConfig(b_n=1 / 40, k_n=4))
    assert abs(res.meta["psi1"] - 1.0) < 1e-12
    assert abs(res.meta["psi2"] - 1.0 / 12.0) < 1e-12


def test_mrc_definition_decomposition(rng):
    # MRC - (1/psi2) Xi_{g,g} equals -(psi1/psi2) gamma12 exactly
    xs, ys = random_instance(rng)
    cfg = PreAvgConfig(b_n=xs.b_n, k_n=4)
    rd = refresh(wrap(xs), wrap(ys))
    res = mrc(xs, ys, cfg, rd=rd)
    xi_gg = xi(xs, ys, rd, 4, cfg.weight, cfg.weight)
    g = gamma1(xs, ys, rd, 4)
    psi1, psi2 = res.meta["psi1_used"], res.meta["psi2_used"]
    assert res.value == (1.0 / psi2) * xi_gg.value - (psi1 / psi2) * g.g12.value


def test_mrc_oracle_bitwise(rng):
    for _ in range(60):
        xs, ys = random_instance(rng)
        cfg = PreAvgConfig(b_n=xs.b_n, k_n=4)
        rd = refresh(wrap(xs), wrap(ys))
        if rd.r.size <= 5:
            continue
        got = mrc(xs, ys, cfg, rd=rd)
        exp = oracles.mrc_oracle(xs, ys, rd, cfg, 4,
                                 got.meta["psi1_used"], got.meta["psi2_used"])
        assert got.value == exp


# ---------------------------------------------------------------------- msrv

def test_msrv_weights_m2_values():
    w = msrv_weights(2)
    np.testing.assert_allclose(w, [-1.0, 2.0], atol=1e-15)


@pytest.mark.parametrize("m", [2, 5, 50])
def test_msrv_weight_identities(m):
    w = msrv_weights(m)
    i = np.arange(1, m + 1)
    assert abs(np.sum(w) - 1.0) < 1e-12
    assert abs(np.sum(w / i)) < 1e-12


def test_msrv_oracle_bitwise(rng):
    for _ in range(60):
        xs, _ = random_instance(rng)
        m = int(rng.integers(2, 8))
        got = msrv(xs, m)
        exp = oracles.msrv_oracle(xs.values, m)
        assert got.value == exp


def test_msrv_validation(rng):
    xs, _ = random_instance(rng, n_x=30)
    with pytest.raises(ParameterError):
        msrv(xs, 1)
    with pytest.raises(ParameterError):
        msrv(xs, 40)
