"""Observation-time generators and refresh-time synchronization.

Implements equidistant sampling, two-sided barrier-hitting times (constant and
random barriers), the mixed hitting-time duration model, Poisson sampling with
a random change point, thinned (Lo-MacKinlay style) sampling, the refresh-time
synchronization objects, and empirical duration diagnostics with the
closed-form limits of each example scheme.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import InsufficientDataError, ParameterError
from .paths import LatentPath, as_generator

__all__ = [
    "SamplingTimes",
    "RefreshData",
    "SchemeLimits",
    "PoissonChangePointConfig",
    "LoMacKinlayConfig",
    "gen_equidistant",
    "gen_barrier_hitting",
    "gen_general_return",
    "gen_mixed_hitting",
    "gen_poisson_changepoint",
    "gen_lo_mackinlay",
    "refresh",
    "duration_diagnostics",
    "hitting_limits",
    "lo_mackinlay_limits",
    "poisson_changepoint_limits",
    "sample_inverse_gaussian",
]


@dataclass
class SamplingTimes:
    """Ordered observation epochs of one asset.

    times starts at 0 and is strictly increasing. Path-driven schemes may end
    before the horizon (truncated sequence); overshooting final epochs are
    retained and truncated by consumers. driver_values carries exact martingale
    levels at the epochs for barrier schemes, exit_sides the barrier hit.
    """

    times: np.ndarray
    b_n: float
    scheme_tag: str = ""
    driver_values: np.ndarray | None = None
    exit_sides: np.ndarray | None = None
    driver_asset: str = "x"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if self.times.size < 1 or self.times[0] != 0.0:
            raise ParameterError("sampling times must start at 0")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ParameterError("sampling times must be strictly increasing")
        if not self.b_n > 0:
            raise ParameterError(f"b_n must be > 0, got {self.b_n}")

    def __len__(self):
        return self.times.size

    def to_csv(self, path) -> None:
        from .io import write_csv

        write_csv(path, ["index", "time"],
                  np.column_stack([np.arange(len(self)), self.times]))


@dataclass
class RefreshData:
    """Refresh-time synchronization products of two sampling sequences.

    Index k runs over refresh epochs 0..K. gamma[k] = r[k] - r[k-1]; i_check /
    j_check are the next-minus-previous tick interval lengths around r[k-1];
    star is the length of the union of the three pairwise intersections used
    by the asymptotic-variance formulas. Entries that are undefined at the
    boundary (k = 0, and k = K for star) are NaN, not dropped.
    """

    r: np.ndarray
    s_hat: np.ndarray
    t_hat: np.ndarray
    s_check: np.ndarray
    t_check: np.ndarray
    gamma: np.ndarray
    i_check: np.ndarray
    j_check: np.ndarray
    star: np.ndarray
    s_idx: np.ndarray
    t_idx: np.ndarray
    b_n: float
    horizon: float

    def n_refresh(self, t: float | None = None) -> int:
        """Number of refresh epochs with r[k] <= t (k >= 1), the refresh count."""
        tt = self.horizon if t is None else t
        return int(np.searchsorted(self.r, tt, side="right")) - 1

    def to_csv(self, path) -> None:
        from .io import write_csv

        cols = ["k", "r", "s_hat", "t_hat", "gamma", "i_check", "j_check", "star"]
        data = np.column_stack([
            np.arange(self.r.size), self.r, self.s_hat, self.t_hat,
            self.gamma, self.i_check, self.j_check, self.star,
        ])
        write_csv(path, cols, data)


def gen_equidistant(horizon: float, b_n: float) -> SamplingTimes:
    """Epochs i * b_n for i = 0..ceil(horizon / b_n)."""
    if not b_n > 0:
        raise ParameterError(f"b_n must be > 0, got {b_n}")
    count = math.ceil(horizon / b_n)
    return SamplingTimes(times=b_n * np.arange(count + 1), b_n=b_n, scheme_tag="equidistant")


def _scan_barriers(path: LatentPath, dn_bars, up_bars, seed, driver):
    m = np.ascontiguousarray(path.mx if driver == "x" else path.my)
    spot = path.spot_x if driver == "x" else path.spot_y
    mesh = path.grid.mesh
    var_step = np.ascontiguousarray(spot[:-1] * mesh)
    rng = as_generator(seed)
    n = path.grid.n_fine
    u_dn = rng.random(n)
    u_up = rng.random(n)
    times, values, sides, capped = kernels.barrier_scan(
        m, mesh, var_step,
        np.ascontiguousarray(dn_bars), np.ascontiguousarray(up_bars),
        u_dn, u_up,
    )
    if capped:
        raise ParameterError("barrier arrays exhausted before the path ended; increase the cap")
    times = np.concatenate(([path.grid.t0], path.grid.t0 + times))
    values = np.concatenate(([m[0]], values))
    sides = np.concatenate(([0], sides)).astype(np.int8)
    return times, values, sides


def _check_resolution(path, dn_scaled, driver):
    spot = path.spot_x if driver == "x" else path.spot_y
    step_sd = float(np.sqrt(np.max(spot) * path.grid.mesh))
    if dn_scaled < step_sd:
        warnings.warn(
            f"barrier {dn_scaled:.3g} is below one fine-grid step sd ({step_sd:.3g}); "
            "within-step multiple crossings become likely and the detected times "
            "will be unreliable - use a finer grid",
            RuntimeWarning,
            stacklevel=3,
        )


def gen_barrier_hitting(path: LatentPath, u: float, v: float, b_n: float,
                        seed, driver: str = "x") -> SamplingTimes:
    """First-passage times of the driver martingale to -u*sqrt(b_n) / +v*sqrt(b_n).

    Each epoch restarts the barriers at the hit level, so the sampled
    martingale increments are exactly two-valued. Detection uses the fine grid
    with within-step Brownian-bridge crossing tests and linear sub-step
    placement of crossing times. The sequence is truncated where the path ends.
    """
    if not (u > 0 and v > 0):
        raise ParameterError(f"barriers must be positive, got u={u}, v={v}")
    root = math.sqrt(b_n)
    _check_resolution(path, u * root, driver)
    cap = path.grid.n_fine + 1024
    dn = np.full(cap, u * root)
    up = np.full(cap, v * root)
    times, values, sides = _scan_barriers(path, dn, up, seed, driver)
    return SamplingTimes(times=times, b_n=b_n, scheme_tag="hitting",
                         driver_values=values, exit_sides=sides, driver_asset=driver)


def gen_general_return(uv_sampler, wiener_path: LatentPath, b_n: float,
                       seed, driver: str = "x") -> SamplingTimes:
    """Barrier-hitting times with per-duration random barriers (-U_i, V_i) * sqrt(b_n).

    uv_sampler(rng, size) must return two positive arrays (U, V); a constant
    sampler reproduces gen_barrier_hitting draw-for-draw on the same seed.
    """
    rng = as_generator(seed)
    cap = wiener_path.grid.n_fine + 1024
    u_arr, v_arr = uv_sampler(rng, cap)
    u_arr = np.asarray(u_arr, dtype=np.float64)
    v_arr = np.asarray(v_arr, dtype=np.float64)
    if u_arr.size != cap or v_arr.size != cap:
        raise ParameterError("uv_sampler must return arrays of the requested size")
    if np.any(u_arr <= 0) or np.any(v_arr <= 0):
        raise ParameterError("uv_sampler produced nonpositive barriers")
    root = math.sqrt(b_n)
    times, values, sides = _scan_barriers(wiener_path, u_arr * root, v_arr * root, rng, driver)
    return SamplingTimes(times=times, b_n=b_n, scheme_tag="general_return",
                         driver_values=values, exit_sides=sides, driver_asset=driver)


def sample_inverse_gaussian(mean, shape, rng) -> np.ndarray:
    """Inverse-Gaussian draws with given mean and shape (transform method)."""
    mean = np.asarray(mean, dtype=np.float64)
    shape_p = np.asarray(shape, dtype=np.float64)
    nu = rng.standard_normal(np.broadcast(mean, shape_p).shape) ** 2
    w = mean * nu
    x = mean * (1.0 + (w - np.sqrt(4.0 * shape_p * w + w * w)) / (2.0 * shape_p))
    u = rng.random(x.shape)
    return np.where(u <= mean / (mean + x), x, mean * mean / x)


def gen_mixed_hitting(mu: float, c: float, zeta_sampler, b_n: float,
                      horizon: float, seed) -> SamplingTimes:
    """Durations drawn from the mixed hitting-time model.

    Conditionally on the positive mean-one multipliers zeta_i, each duration is
    inverse Gaussian with parameters (sqrt(b_n) * c * zeta_i, mu / sqrt(b_n)),
    i.e. mean b_n * c * zeta_i / mu and shape b_n * (c * zeta_i)^2.
    """
    if not (mu > 0 and c > 0):
        raise ParameterError(f"mu and c must be positive, got mu={mu}, c={c}")
    rng = as_generator(seed)
    mean_dur = b_n * c / mu
    times = [0.0]
    t = 0.0
    while True:
        m = max(64, int(1.5 * (horizon - t) / mean_dur))
        zeta = np.asarray(zeta_sampler(rng, m), dtype=np.float64)
        if np.any(zeta <= 0):
            raise ParameterError("zeta_sampler produced nonpositive values")
        delta = math.sqrt(b_n) * c * zeta
        gamma_p = mu / math.sqrt(b_n)
        durations = sample_inverse_gaussian(delta / gamma_p, delta**2, rng)
        cum = t + np.cumsum(durations)
        idx = int(np.searchsorted(cum, horizon, side="left"))
        if idx < cum.size:
            times.extend(cum[: idx + 1])  # keep one overshooting epoch
            break
        times.extend(cum)
        t = float(cum[-1])
    return SamplingTimes(times=np.asarray(times), b_n=b_n, scheme_tag="mixed_hitting")


@dataclass(frozen=True)
class PoissonChangePointConfig:
    """Intensities n*p before and after the per-asset change points tau."""

    p_under1: float
    p_over1: float
    p_under2: float
    p_over2: float
    tau1: float
    tau2: float
    n: int

    def __post_init__(self):
        for name in ("p_under1", "p_over1", "p_under2", "p_over2"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.n < 1:
            raise ParameterError("n must be >= 1")


def _poisson_arrivals(rate: float, start: float, horizon: float, rng) -> np.ndarray:
    out = []
    t = start
    while True:
        m = max(64, int(1.5 * (horizon - t) * rate))
        gaps = rng.exponential(1.0 / rate, m)
        cum = t + np.cumsum(gaps)
        idx = int(np.searchsorted(cum, horizon, side="left"))
        if idx < cum.size:
            out.append(cum[: idx + 1])  # keep one overshooting epoch
            break
        out.append(cum)
        t = float(cum[-1])
    return np.concatenate(out)


def gen_poisson_changepoint(cfg: PoissonChangePointConfig, horizon: float,
                            seed) -> tuple[SamplingTimes, SamplingTimes]:
    """Poisson epochs with intensity n*p_under before tau and n*p_over after."""
    rng = as_generator(seed)
    b_n = 1.0 / cfg.n
    out = []
    for p_u, p_o, tau in ((cfg.p_under1, cfg.p_over1, cfg.tau1),
                          (cfg.p_under2, cfg.p_over2, cfg.tau2)):
        pre = _poisson_arrivals(cfg.n * p_u, 0.0, min(tau, horizon), rng)
        pre = pre[pre < tau]
        post = _poisson_arrivals(cfg.n * p_o, tau, horizon, rng) if tau <= horizon else np.empty(0)
        times = np.concatenate(([0.0], pre, post))
        out.append(SamplingTimes(times=times, b_n=b_n, scheme_tag="poisson_changepoint"))
    return out[0], out[1]


@dataclass(frozen=True)
class LoMacKinlayConfig:
    """Independent thinning of a base duration scheme.

    Asset k keeps each base epoch with probability 1 - p_k. duration_scheme is
    'equidistant' (base epochs m * b_n) or 'mixed_hitting' with (mu, c).
    """

    p1: float
    p2: float
    b_n: float
    duration_scheme: str = "equidistant"
    mu: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        for p in (self.p1, self.p2):
            if not 0.0 <= p < 1.0:
                raise ParameterError(f"thinning probabilities must lie in [0, 1), got {p}")


def gen_lo_mackinlay(cfg: LoMacKinlayConfig, horizon: float,
                     seed) -> tuple[SamplingTimes, SamplingTimes]:
    """Two independently thinned copies of a common base epoch sequence."""
    rng = as_generator(seed)
    if cfg.duration_scheme == "equidistant":
        base = gen_equidistant(horizon, cfg.b_n).times
    elif cfg.duration_scheme == "mixed_hitting":
        def unit(rng_, m):
            return np.ones(m)

        base = gen_mixed_hitting(cfg.mu, cfg.c, unit, cfg.b_n, horizon, rng).times
    else:
        raise ParameterError(f"unknown duration_scheme {cfg.duration_scheme!r}")
    out = []
    for p in (cfg.p1, cfg.p2):
        keep = rng.random(base.size - 1) >= p
        times = np.concatenate(([0.0], base[1:][keep]))
        out.append(SamplingTimes(times=times, b_n=cfg.b_n, scheme_tag="lo_mackinlay"))
    return out[0], out[1]


def refresh(s_times: SamplingTimes, t_times: SamplingTimes,
            horizon: float | None = None) -> RefreshData:
    """Refresh times with next/previous-tick interpolation products.

    In the synchronous case the refresh epochs coincide with the raw epochs.
    Epochs beyond the horizon are retained (consumers truncate); horizon only
    sets the default reporting endpoint.
    """
    s = np.ascontiguousarray(s_times.times)
    t = np.ascontiguousarray(t_times.times)
    if s.size < 2 or t.size < 2:
        raise InsufficientDataError("refresh needs at least 2 epochs per asset")
    if s.size == t.size and np.array_equal(s, t):
        # synchronous collapse: every raw epoch is a refresh epoch
        idx = np.arange(s.size, dtype=np.int64)
        r, s_hat, t_hat, s_idx, t_idx = s.copy(), s.copy(), s.copy(), idx, idx.copy()
    else:
        r, s_hat, t_hat, s_idx, t_idx = kernels.refresh_merge(s, t)
    k = r.size
    nan = np.nan
    s_check = np.full(k, nan)
    t_check = np.full(k, nan)
    s_check[1:] = s[s_idx[1:] - 1]
    t_check[1:] = t[t_idx[1:] - 1]
    gamma = np.full(k, nan)
    gamma[1:] = np.diff(r)
    i_check = np.full(k, nan)
    j_check = np.full(k, nan)
    i_check[1:] = s_hat[1:] - s_check[1:]
    j_check[1:] = t_hat[1:] - t_check[1:]
    star = np.full(k, nan)
    if k >= 2:
        def olap(a0, a1, b0, b1):
            lo = np.maximum(a0, b0)
            hi = np.minimum(a1, b1)
            return np.maximum(hi - lo, 0.0)

        kk = np.arange(1, k - 1)
        star[1:-1] = (
            olap(s_check[kk], s_hat[kk], t_check[kk], t_hat[kk])
            + olap(s_check[kk + 1], s_hat[kk + 1], t_check[kk], t_hat[kk])
            + olap(s_check[kk], s_hat[kk], t_check[kk + 1], t_hat[kk + 1])
        )
    hz = horizon if horizon is not None else float(min(s[-1], t[-1]))
    return RefreshData(r=r, s_hat=s_hat, t_hat=t_hat, s_check=s_check, t_check=t_check,
                       gamma=gamma, i_check=i_check, j_check=j_check, star=star,
                       s_idx=s_idx, t_idx=t_idx, b_n=s_times.b_n, horizon=hz)


@dataclass
class DiagnosticSeries:
    """Rolling duration-moment proxies on the refresh grid, plus global means.

    Rolling entries use a trailing window of ceil(K**0.4) refresh durations and
    are NaN where the window is empty. The global block holds full-sample means
    with standard errors, the quantities compared against each scheme's
    closed-form limits.
    """

    r: np.ndarray
    g_rho: dict
    f1: np.ndarray
    f2: np.ndarray
    f12: np.ndarray
    chi: np.ndarray
    global_means: dict
    global_se: dict

    def to_csv(self, path) -> None:
        from .io import write_csv

        cols = ["k", "r"] + [f"g_{rho:g}" for rho in self.g_rho] + ["f1", "f2", "f12", "chi"]
        data = np.column_stack([np.arange(self.r.size), self.r]
                               + [self.g_rho[rho] for rho in self.g_rho]
                               + [self.f1, self.f2, self.f12, self.chi])
        write_csv(path, cols, data)


def _trailing_mean(values: np.ndarray, window: int) -> np.ndarray:
    out = np.full(values.size, np.nan)
    ok = np.isfinite(values)
    vals = np.where(ok, values, 0.0)
    csum = np.cumsum(vals)
    ccnt = np.cumsum(ok.astype(np.int64))
    for k in range(values.size):
        lo = max(0, k - window + 1)
        cnt = ccnt[k] - (ccnt[lo - 1] if lo > 0 else 0)
        if cnt > 0:
            tot = csum[k] - (csum[lo - 1] if lo > 0 else 0)
            out[k] = tot / cnt
    return out


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = x[np.isfinite(x)]
    if x.size == 0:
        return math.nan, math.nan
    if x.size == 1:
        return float(x[0]), math.nan
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(x.size))


def duration_diagnostics(rd: RefreshData, rho_list=(1.0, 2.0)) -> DiagnosticSeries:
    """Empirical proxies for the duration-moment and coincidence limits.

    Produces trailing-window step series of the normalized duration moments
    (gamma / b_n)^rho, the next/previous-tick interval moments, the star
    intervals, and the tick-coincidence frequency, together with full-sample
    means and standard errors. These are diagnostics for the ergodic example
    schemes; they never enter the estimators.
    """
    if rd.r.size < 2:
        raise InsufficientDataError("need at least 2 refresh epochs")
    for rho in rho_list:
        if rho < 0:
            raise ParameterError("rho must be nonnegative")
    kcount = rd.r.size - 1
    window = max(1, math.ceil(kcount**0.4))
    g_rho = {}
    for rho in rho_list:
        vals = (rd.gamma / rd.b_n) ** rho
        g_rho[rho] = _trailing_mean(vals, window)
    f1_vals = rd.i_check / rd.b_n
    f2_vals = rd.j_check / rd.b_n
    f12_vals = rd.star / rd.b_n
    coincide = np.where(np.isfinite(rd.gamma), (rd.s_hat == rd.t_hat).astype(float), np.nan)
    series = DiagnosticSeries(
        r=rd.r,
        g_rho={rho: g_rho[rho] for rho in rho_list},
        f1=_trailing_mean(f1_vals, window),
        f2=_trailing_mean(f2_vals, window),
        f12=_trailing_mean(f12_vals, window),
        chi=_trailing_mean(coincide, window),
        global_means={},
        global_se={},
    )
    for rho in rho_list:
        m, se = _mean_se((rd.gamma / rd.b_n) ** rho)
        series.global_means[f"g_{rho:g}"] = m
        series.global_se[f"g_{rho:g}"] = se
    for name, vals in (("f1", f1_vals), ("f2", f2_vals), ("f12", f12_vals), ("chi", coincide)):
        m, se = _mean_se(vals)
        series.global_means[name] = m
        series.global_se[name] = se
    return series


@dataclass(frozen=True)
class SchemeLimits:
    """Closed-form limits of the duration diagnostics for an example scheme."""

    g: float
    chi: float
    f1: float
    f2: float
    f12: float


def hitting_limits(u: float, v: float, spot: float) -> SchemeLimits:
    """Barrier scheme: G = u*v / spot variance; univariate, so F = G, chi = 1."""
    g = u * v / spot
    return SchemeLimits(g=g, chi=1.0, f1=g, f2=g, f12=g)


def lo_mackinlay_limits(p1: float, p2: float, scale: float = 1.0) -> SchemeLimits:
    """Thinned-sampling limits; scale is the base scheme's mean duration ratio.

    chi is the coincidence probability of the two next ticks: the first kept
    base epoch after a refresh time is geometric per asset, so two independent
    thinnings coincide with probability (1-p1)(1-p2)/(1-p1*p2) (this is what
    the empirical tick-coincidence frequency converges to; see the tests).
    The f-values are the forward-gap means of each thinned grid; the literal
    previous-to-next-tick interval statistics of the refresh construction are
    larger because the window also straddles backward from the refresh epoch.
    """
    g = (1.0 / (1.0 - p1) + 1.0 / (1.0 - p2) - 1.0 / (1.0 - p1 * p2)) * scale
    return SchemeLimits(
        g=g,
        chi=(1.0 - p1) * (1.0 - p2) / (1.0 - p1 * p2),
        f1=scale / (1.0 - p1),
        f2=scale / (1.0 - p2),
        f12=(2.0 - (1.0 - p1) * (1.0 - p2)) / (1.0 - p1 * p2) * scale,
    )


def poisson_changepoint_limits(cfg: PoissonChangePointConfig):
    """Piecewise-regime limit functions of time for the change-point scheme."""

    def regime(s):
        p1 = cfg.p_under1 if s < cfg.tau1 else cfg.p_over1
        p2 = cfg.p_under2 if s < cfg.tau2 else cfg.p_over2
        return p1, p2

    def g(s):
        p1, p2 = regime(s)
        return 1.0 / p1 + 1.0 / p2 - 1.0 / (p1 + p2)

    def f1(s):
        return 1.0 / regime(s)[0]

    def f2(s):
        return 1.0 / regime(s)[1]

    def f12(s):
        p1, p2 = regime(s)
        return 2.0 / (p1 + p2)

    return {"g": g, "chi": lambda s: 0.0, "f1": f1, "f2": f2, "f12": f12}
