"""Point estimators for integrated (co)variance.

Pre-averaging machinery, the pre-averaged overlapping-window covariance
estimator on raw and refresh-time designs, realized variance/quarticity,
first-order realized autocovariances, diagonal pre-average product statistics
and their antisymmetrized form, the modulated (bias-corrected) pre-averaged
covariance, and the multiscale realized variance.

Every estimator value is defined as a sequential left-to-right accumulation in
a canonical term order (documented per function) so that the compiled kernels,
the NumPy fallback and the brute-force test oracles agree bit-for-bit.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import InsufficientDataError, ParameterError
from .noise import ObservationSeries
from .quadrature import adaptive_simpson
from .sampling import RefreshData, SamplingTimes, refresh

__all__ = [
    "WeightFn",
    "min_xx",
    "quartic_f",
    "derivative_weight",
    "PreAvgConfig",
    "EstimatorResult",
    "Gamma1Result",
    "as_series",
    "preavg",
    "phy",
    "phy_refresh",
    "rv",
    "rq",
    "gamma1",
    "xi",
    "xi_f",
    "mrc",
    "msrv",
    "msrv_weights",
]


@dataclass(frozen=True)
class WeightFn:
    """Pre-averaging weight on [0, 1], extended by zero outside.

    fn and deriv are vectorized callables on [0, 1]; breakpoints lists interior
    kinks for the quadrature; antideriv, when given, is the exact antiderivative
    with antideriv(0) = 0 (used by the kernel-constant integrals).
    """

    fn: object
    deriv: object
    tag: str = "custom"
    breakpoints: tuple = ()
    antideriv: object = None

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= 0.0) & (x <= 1.0)
        vals = np.where(inside, self.fn(np.clip(x, 0.0, 1.0)), 0.0)
        return float(vals) if vals.ndim == 0 else vals

    def d(self, x):
        x = np.asarray(x, dtype=np.float64)
        inside = (x >= 0.0) & (x <= 1.0)
        vals = np.where(inside, self.deriv(np.clip(x, 0.0, 1.0)), 0.0)
        return float(vals) if vals.ndim == 0 else vals

    def integral(self, tol=1e-12) -> float:
        """Integral of the weight over [0, 1]."""
        if self.antideriv is not None:
            return float(self.antideriv(1.0) - self.antideriv(0.0))
        return adaptive_simpson(lambda u: float(self(u)), 0.0, 1.0, tol, self.breakpoints)

    def is_hy_class(self) -> bool:
        return abs(self(0.0)) < 1e-12 and abs(self(1.0)) < 1e-12 and abs(self.integral()) > 1e-12

    def is_quartic_class(self) -> bool:
        return (abs(self(0.0)) < 1e-12 and abs(self(1.0)) < 1e-12
                and abs(self.deriv(0.0)) < 1e-12 and abs(self.deriv(1.0)) < 1e-12)


def min_xx() -> WeightFn:
    """The weight min(x, 1-x): the standard triangle kernel."""

    def anti(y):
        y = np.clip(y, 0.0, 1.0)
        return np.where(y <= 0.5, 0.5 * y * y, y - 0.5 * y * y - 0.25)

    return WeightFn(
        fn=lambda x: np.minimum(x, 1.0 - x),
        deriv=lambda x: np.where(np.asarray(x) < 0.5, 1.0, -1.0),
        tag="min_xx",
        breakpoints=(0.5,),
        antideriv=anti,
    )


def quartic_f() -> WeightFn:
    """The C^2 weight x^2 (1-x)^2 with vanishing boundary derivatives."""
    return WeightFn(
        fn=lambda x: (x * (1.0 - x)) ** 2,
        deriv=lambda x: 2.0 * x - 6.0 * x**2 + 4.0 * x**3,
        tag="quartic_f",
        breakpoints=(),
        antideriv=lambda y: np.clip(y, 0.0, 1.0) ** 3 / 3.0
        - np.clip(y, 0.0, 1.0) ** 4 / 2.0
        + np.clip(y, 0.0, 1.0) ** 5 / 5.0,
    )


def derivative_weight(w: WeightFn) -> WeightFn:
    """The derivative of a weight, as a weight (its antiderivative is w itself)."""
    return WeightFn(
        fn=w.deriv,
        deriv=lambda x: np.zeros_like(np.asarray(x, dtype=np.float64)),
        tag=w.tag + "_prime",
        breakpoints=w.breakpoints,
        antideriv=lambda y: w.fn(np.clip(y, 0.0, 1.0)),
    )


MIN_XX = min_xx()
QUARTIC_F = quartic_f()

_WEIGHTS = {"min_xx": MIN_XX, "quartic_f": QUARTIC_F}


def weight_by_tag(tag: str) -> WeightFn:
    try:
        return _WEIGHTS[tag]
    except KeyError:
        raise ParameterError(f"unknown weight tag {tag!r}; known: {sorted(_WEIGHTS)}") from None


@dataclass(frozen=True)
class PreAvgConfig:
    """Pre-averaging window configuration.

    k_n, when None, is resolved at estimation time as ceil(theta * sqrt(N))
    with N the number of returns of the design at hand (the data-driven rule
    of the simulation design); the duration-scale rule ceil(theta / sqrt(b_n))
    is available via k_n_rule="sqrt_bn" for theory checks. kernel_norm selects
    the window normalization: "discrete" uses the Riemann sum
    k_n^-1 sum_{p<k_n} g(p/k_n) (default; matches the finite-sample behaviour
    of the reference results), "continuous" uses the integral of g.
    """

    b_n: float
    theta: float = 0.15
    k_n: int | None = None
    weight: WeightFn = field(default_factory=min_xx)
    kernel_norm: str = "discrete"
    k_n_rule: str = "sqrt_returns"

    def __post_init__(self):
        if not self.b_n > 0:
            raise ParameterError(f"b_n must be > 0, got {self.b_n}")
        if not self.theta > 0:
            raise ParameterError(f"theta must be > 0, got {self.theta}")
        if self.k_n is not None and self.k_n < 2:
            raise ParameterError(f"k_n must be >= 2, got {self.k_n}")
        if self.kernel_norm not in ("discrete", "continuous"):
            raise ParameterError(f"unknown kernel_norm {self.kernel_norm!r}")
        if self.k_n_rule not in ("sqrt_returns", "sqrt_bn"):
            raise ParameterError(f"unknown k_n_rule {self.k_n_rule!r}")
        if not self.weight.is_hy_class():
            raise ParameterError("weight must vanish at 0 and 1 and have nonzero integral")

    def resolve_k_n(self, n_returns: int | None = None) -> int:
        if self.k_n is not None:
            return self.k_n
        if self.k_n_rule == "sqrt_bn" or n_returns is None:
            return max(2, math.ceil(self.theta / math.sqrt(self.b_n)))
        return max(2, math.ceil(self.theta * math.sqrt(n_returns)))

    def norm_const(self, k_n: int) -> float:
        """The per-window normalization constant (times k_n)."""
        if self.kernel_norm == "continuous":
            return self.weight.integral()
        p = np.arange(1, k_n) / k_n
        return float(np.sum(self.weight(p))) / k_n


@dataclass
class EstimatorResult:
    """An estimate at the horizon plus an optional right-continuous step path."""

    value: float
    path: tuple | None = None  # (event_times, cumulative_values), both sorted
    meta: dict = field(default_factory=dict)

    def path_at(self, t) -> np.ndarray:
        """Step-function evaluation: value using only events at or before t."""
        if self.path is None:
            raise ParameterError("estimator was computed without a path")
        et, ev = self.path
        idx = np.searchsorted(et, np.asarray(t, dtype=np.float64), side="right")
        out = np.where(idx > 0, ev[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if out.ndim == 0 else out

    def to_csv(self, path) -> None:
        from .io import write_csv

        if self.path is not None:
            write_csv(path, ["t", "value"], np.column_stack(self.path))
        else:
            write_csv(path, ["t", "value"], np.array([[math.inf, self.value]]))


def as_series(times, values, b_n: float) -> ObservationSeries:
    """Wrap raw arrays as an observation series (latent = values)."""
    times = np.asarray(times, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    return ObservationSeries(times=times, values=values, latent=values.copy(), b_n=b_n)


def preavg(values, k_n: int, weight: WeightFn) -> np.ndarray:
    """Weighted sums of k_n consecutive increments.

    Window i (i = 0..L-k_n) accumulates weight(p/k_n) * (v[i+p] - v[i+p-1])
    over p = 1..k_n-1, in ascending p order.
    """
    values = np.asarray(values, dtype=np.float64)
    length = values.size
    if length <= k_n:
        raise InsufficientDataError(f"series of length {length} too short for k_n={k_n}")
    dv = np.diff(values)
    nwin = length - k_n + 1
    out = np.zeros(nwin)
    for p in range(1, k_n):
        out += float(weight(p / k_n)) * dv[p - 1 : p - 1 + nwin]
    return out


def _norm_factor(cfg: PreAvgConfig, k_n: int) -> float:
    nc = cfg.norm_const(k_n)
    return 1.0 / (nc * k_n) ** 2


def _phy_core(s, t, xvals, yvals, cfg, k_n, horizon, with_path):
    if s.size <= 2 * k_n or t.size <= 2 * k_n:
        raise InsufficientDataError(
            f"need more than 2*k_n={2 * k_n} observations, got {s.size} and {t.size}"
        )
    xbar = preavg(xvals, k_n, cfg.weight)
    ybar = preavg(yvals, k_n, cfg.weight)
    s = np.ascontiguousarray(s)
    t = np.ascontiguousarray(t)
    norm = _norm_factor(cfg, k_n)
    raw = kernels.phy_pair_sum(s, t, xbar, ybar, k_n, horizon)
    value = norm * raw
    path = None
    if with_path:
        prods, entries = kernels.phy_pairs(s, t, xbar, ybar, k_n, horizon)
        order = np.argsort(entries, kind="stable")
        path = (entries[order], norm * np.cumsum(prods[order]))
    return value, path, norm


def phy(xs: ObservationSeries, ys: ObservationSeries, cfg: PreAvgConfig,
        horizon: float = math.inf, with_path: bool = False) -> EstimatorResult:
    """Pre-averaged overlapping-window covariance on the raw sampling designs.

    Canonical order: pairs (i, j) accumulate lexicographically; the pair (i, j)
    enters when max(s[i+k_n], t[j+k_n]) <= horizon and its windows overlap.
    """
    k_n = cfg.resolve_k_n(min(xs.n_returns(), ys.n_returns()))
    value, path, norm = _phy_core(xs.times, ys.times, xs.values, ys.values,
                                  cfg, k_n, horizon, with_path)
    return EstimatorResult(value=value, path=path,
                           meta={"estimator": "phy", "k_n": k_n, "norm": norm,
                                 "kernel_norm": cfg.kernel_norm, "theta": cfg.theta})


def _wrap_times(xs: ObservationSeries) -> SamplingTimes:
    return SamplingTimes(times=xs.times, b_n=xs.b_n, scheme_tag="obs")


def hat_series(xs: ObservationSeries, ys: ObservationSeries,
               rd: RefreshData | None = None):
    """Refresh-interpolated designs and the observation values on them."""
    if rd is None:
        rd = refresh(_wrap_times(xs), _wrap_times(ys))
    return rd, xs.values[rd.s_idx], ys.values[rd.t_idx]


def _refresh_returns(rd: RefreshData, horizon: float) -> int:
    eff = horizon if math.isfinite(horizon) else float(rd.r[-1])
    return max(int(np.searchsorted(rd.r, eff, side="right")) - 1, 1)


def phy_refresh(xs: ObservationSeries, ys: ObservationSeries, cfg: PreAvgConfig,
                horizon: float = math.inf, with_path: bool = False,
                rd: RefreshData | None = None) -> EstimatorResult:
    """Pre-averaged overlapping-window covariance on the refresh-time designs.

    For synchronous inputs the refresh designs coincide with the raw ones and
    the estimate equals phy() bit-for-bit.
    """
    rd, xv, yv = hat_series(xs, ys, rd)
    k_n = cfg.resolve_k_n(_refresh_returns(rd, horizon))
    value, path, norm = _phy_core(rd.s_hat, rd.t_hat, xv, yv, cfg, k_n, horizon, with_path)
    return EstimatorResult(value=value, path=path,
                           meta={"estimator": "phy_refresh", "k_n": k_n, "norm": norm,
                                 "kernel_norm": cfg.kernel_norm, "theta": cfg.theta,
                                 "n_refresh": int(rd.r.size - 1)})


def _cum_eval(terms, event_times, horizon, scale, with_path):
    csum = np.cumsum(terms)
    n = int(np.searchsorted(event_times, horizon, side="right"))
    value = scale * float(csum[n - 1]) if n >= 1 else 0.0
    path = (event_times, scale * csum) if with_path else None
    return value, path


def rv(xs: ObservationSeries, horizon: float = math.inf,
       with_path: bool = False) -> EstimatorResult:
    """Sum of squared increments over epochs at or before the horizon."""
    if len(xs) < 2:
        raise InsufficientDataError("realized variance needs at least 2 observations")
    d = np.diff(xs.values)
    value, path = _cum_eval(d * d, xs.times[1:], horizon, 1.0, with_path)
    return EstimatorResult(value=value, path=path, meta={"estimator": "rv"})


def rq(xs: ObservationSeries, horizon: float = math.inf,
       with_path: bool = False) -> EstimatorResult:
    """Sum of fourth-power increments over epochs at or before the horizon."""
    if len(xs) < 2:
        raise InsufficientDataError("realized quarticity needs at least 2 observations")
    d = np.diff(xs.values)
    dd = d * d
    value, path = _cum_eval(dd * dd, xs.times[1:], horizon, 1.0, with_path)
    return EstimatorResult(value=value, path=path, meta={"estimator": "rq"})


@dataclass
class Gamma1Result:
    """The three symmetric first-order realized autocovariance statistics."""

    g11: EstimatorResult
    g22: EstimatorResult
    g12: EstimatorResult


def gamma1(xs: ObservationSeries, ys: ObservationSeries, rd: RefreshData,
           k_n: int, horizon: float = math.inf, with_path: bool = False) -> Gamma1Result:
    """First-order realized autocovariances of the refresh-interpolated series.

    Canonical order: the k-th term (k ascending from 1) is the product of
    consecutive increments; the -1/k_n^2 (and -1/(2 k_n^2) for the cross term)
    scaling is applied once after summation. Term k of the 11 statistic enters
    at the (k+1)-th next-tick epoch, the cross term at the (k+1)-th refresh time.
    """
    if rd.r.size < 3:
        raise InsufficientDataError("need at least 3 refresh epochs")
    dxh = np.diff(xs.values[rd.s_idx])
    dyh = np.diff(ys.values[rd.t_idx])
    t11 = dxh[:-1] * dxh[1:]
    t22 = dyh[:-1] * dyh[1:]
    t12 = dxh[:-1] * dyh[1:] + dxh[1:] * dyh[:-1]
    s11 = -1.0 / k_n**2
    s12 = -1.0 / (2.0 * k_n**2)
    v11, p11 = _cum_eval(t11, rd.s_hat[2:], horizon, s11, with_path)
    v22, p22 = _cum_eval(t22, rd.t_hat[2:], horizon, s11, with_path)
    v12, p12 = _cum_eval(t12, rd.r[2:], horizon, s12, with_path)
    mk = {"k_n": k_n}
    return Gamma1Result(
        g11=EstimatorResult(v11, p11, {"estimator": "gamma1_11", **mk}),
        g22=EstimatorResult(v22, p22, {"estimator": "gamma1_22", **mk}),
        g12=EstimatorResult(v12, p12, {"estimator": "gamma1_12", **mk}),
    )


def xi(xs: ObservationSeries, ys: ObservationSeries, rd: RefreshData, k_n: int,
       alpha: WeightFn, beta: WeightFn, horizon: float = math.inf,
       with_path: bool = False) -> EstimatorResult:
    """Diagonal pre-average product statistic on the refresh designs.

    Canonical order: window index i ascending; term i enters at the i-th
    refresh time; the 1/k_n scaling is applied once after summation.
    """
    if rd.r.size <= k_n:
        raise InsufficientDataError("refresh design too short for k_n")
    xb = preavg(xs.values[rd.s_idx], k_n, alpha)
    yb = preavg(ys.values[rd.t_idx], k_n, beta)
    terms = xb * yb
    value, path = _cum_eval(terms, rd.r[: terms.size], horizon, 1.0 / k_n, with_path)
    return EstimatorResult(value=value, path=path,
                           meta={"estimator": "xi", "k_n": k_n,
                                 "alpha": alpha.tag, "beta": beta.tag})


def xi_f(xs: ObservationSeries, ys: ObservationSeries, rd: RefreshData, k_n: int,
         f: WeightFn, horizon: float = math.inf, with_path: bool = False,
         norm_fprime_sq: float | None = None) -> EstimatorResult:
    """Antisymmetrized diagonal statistic normalized by the derivative norm.

    (xi_{f',f} - xi_{f,f'}) / (2 ||f'||_2^2); requires f and f' to vanish at
    both endpoints. Identically zero when xs and ys are the same series.
    """
    if not f.is_quartic_class():
        raise ParameterError("xi_f needs f(0)=f(1)=f'(0)=f'(1)=0")
    fp = derivative_weight(f)
    if norm_fprime_sq is None:
        norm_fprime_sq = adaptive_simpson(lambda u: float(f.d(u)) ** 2, 0.0, 1.0,
                                          1e-12, f.breakpoints)
    a = xi(xs, ys, rd, k_n, fp, f, horizon, with_path)
    b = xi(xs, ys, rd, k_n, f, fp, horizon, with_path)
    denom = 2.0 * norm_fprime_sq
    value = (a.value - b.value) / denom
    path = None
    if with_path:
        path = (a.path[0], (a.path[1] - b.path[1]) / denom)
    return EstimatorResult(value=value, path=path,
                           meta={"estimator": "xi_f", "k_n": k_n,
                                 "norm_fprime_sq": norm_fprime_sq})


def mrc_constants(weight: WeightFn, k_n: int, kernel_norm: str) -> tuple[float, float]:
    """The derivative-energy and weight-energy constants of the correction.

    "continuous" returns the integrals of g'^2 and g^2. "discrete" returns
    their window sums k_n * sum (g(p/k_n) - g((p-1)/k_n))^2 and
    k_n^-1 * sum g(p/k_n)^2, which make the noise-bias correction cancel the
    pre-average noise energy exactly at finite k_n (the sums converge to the
    integrals as the window grows).
    """
    if kernel_norm == "continuous":
        psi1 = adaptive_simpson(lambda u: float(weight.d(u)) ** 2, 0.0, 1.0,
                                1e-12, weight.breakpoints)
        psi2 = adaptive_simpson(lambda u: float(weight(u)) ** 2, 0.0, 1.0,
                                1e-12, weight.breakpoints)
        return psi1, psi2
    gp = weight(np.arange(0, k_n + 1) / k_n)
    psi1 = k_n * float(np.sum(np.diff(gp) ** 2))
    psi2 = float(np.sum(gp[1:k_n] ** 2)) / k_n
    return psi1, psi2


def mrc(xs: ObservationSeries, ys: ObservationSeries, cfg: PreAvgConfig,
        horizon: float = math.inf, with_path: bool = False,
        rd: RefreshData | None = None) -> EstimatorResult:
    """Modulated (bias-corrected) pre-averaged realized covariance.

    (1/psi2) * xi_{g,g} - (psi1/psi2) * gamma1_12 with the derivative- and
    weight-energy constants of mrc_constants (for the default weight the
    continuous values are 1 and 1/12; cfg.kernel_norm selects continuous vs
    window-exact discrete constants, as for the main estimator).
    """
    rd, _, _ = hat_series(xs, ys, rd)
    k_n = cfg.resolve_k_n(_refresh_returns(rd, horizon))
    g = cfg.weight
    psi1, psi2 = mrc_constants(g, k_n, cfg.kernel_norm)
    xi_gg = xi(xs, ys, rd, k_n, g, g, horizon, with_path)
    g1 = gamma1(xs, ys, rd, k_n, horizon, with_path)
    value = (1.0 / psi2) * xi_gg.value - (psi1 / psi2) * g1.g12.value
    path = None
    if with_path:
        et = np.union1d(xi_gg.path[0], g1.g12.path[0])
        path = (et, (1.0 / psi2) * xi_gg.path_at(et) - (psi1 / psi2) * g1.g12.path_at(et))
    psi1_cont, psi2_cont = mrc_constants(g, k_n, "continuous")
    return EstimatorResult(value=value, path=path,
                           meta={"estimator": "mrc", "k_n": k_n,
                                 "psi1": psi1_cont, "psi2": psi2_cont,
                                 "psi1_used": psi1, "psi2_used": psi2,
                                 "kernel_norm": cfg.kernel_norm})


def msrv_weights(m_scales: int) -> np.ndarray:
    """Scale weights of the multiscale realized variance; sum to 1, sum/i to 0."""
    if m_scales < 2:
        raise ParameterError(f"need at least 2 scales, got {m_scales}")
    m = float(m_scales)
    i = np.arange(1, m_scales + 1, dtype=np.float64)
    return 12.0 * i * i / (m**3 - m) - 6.0 * i / (m**2 - 1.0) - 6.0 * i / (m**3 - m)


def msrv(xs: ObservationSeries, m_scales: int, horizon: float = math.inf) -> EstimatorResult:
    """Multiscale realized variance over epochs at or before the horizon.

    Canonical order: scales i ascending; each scale's inner sum of squared
    lag-i increments accumulates sequentially before the weighted combination.
    """
    n_keep = int(np.searchsorted(xs.times, horizon, side="right"))
    vals = np.ascontiguousarray(xs.values[:n_keep])
    n_ret = vals.size - 1
    if m_scales < 2:
        raise ParameterError(f"need at least 2 scales, got {m_scales}")
    if m_scales > n_ret:
        raise ParameterError(f"m_scales={m_scales} exceeds {n_ret} returns")
    value = kernels.msrv_sum(vals, msrv_weights(m_scales))
    return EstimatorResult(value=value, path=None,
                           meta={"estimator": "msrv", "m_scales": m_scales,
                                 "n_returns": n_ret})
