"""Asymptotic-variance machinery and Studentized statistics.

Kernel constants of the weight functions (by adaptive quadrature with kink
splitting), local spot estimators from estimator paths, the feasible
kernel-based asymptotic-variance estimator, closed-form integrated-variance
oracles for each estimator flavor, Studentized statistics with log/inverse
transforms, the multiscale tuning pilot, and the realized-variance limit-law
diagnostic for barrier sampling.
"""

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InsufficientDataError, NumericError, ParameterError
from .estimators import (
    QUARTIC_F,
    EstimatorResult,
    PreAvgConfig,
    WeightFn,
    gamma1,
    hat_series,
    msrv,
    phy_refresh,
    xi_f,
)
from .noise import ObservationSeries
from .quadrature import adaptive_simpson
from .sampling import RefreshData

__all__ = [
    "KernelConstants",
    "SpotConfig",
    "SpotRecords",
    "AvarResult",
    "ModelSpots",
    "LimitSpec",
    "MsrvTuning",
    "RvLimitLaw",
    "psi_ab",
    "phi_ab",
    "kernel_constants",
    "spot_estimators",
    "avar_hat",
    "theoretical_w2",
    "studentize",
    "studentize_log",
    "studentize_inv",
    "studentize_rv",
    "studentize_msrv",
    "msrv_tuning",
    "rv_limit_law",
]


def _antideriv(w: WeightFn):
    if w.antideriv is not None:
        return lambda y: float(w.antideriv(min(max(y, 0.0), 1.0)))

    def num(y):
        y = min(max(y, 0.0), 1.0)
        if y <= 0.0:
            return 0.0
        return adaptive_simpson(lambda v: float(w(v)), 0.0, y, 1e-13, w.breakpoints)

    return num


def _kinks(w: WeightFn):
    return (0.0, *w.breakpoints, 1.0)


def psi_ab(alpha: WeightFn, beta: WeightFn, x: float, tol: float = 1e-11) -> float:
    """Overlap integral of two weights at offset x.

    Integrates alpha(u) times the mass of beta over [x+u-1, x+u+1], the weights
    being zero outside [0, 1]; vanishes for |x| >= 2.
    """
    if abs(x) >= 2.0:
        return 0.0
    bfn = _antideriv(beta)

    def integrand(u):
        return float(alpha(u)) * (bfn(x + u + 1.0) - bfn(x + u - 1.0))

    breaks = set(alpha.breakpoints)
    for vk in _kinks(beta):
        breaks.add(vk - x + 1.0)
        breaks.add(vk - x - 1.0)
    return adaptive_simpson(integrand, 0.0, 1.0, tol, tuple(breaks))


def phi_ab(alpha: WeightFn, beta: WeightFn, s: float, tol: float = 1e-11) -> float:
    """Lag-s product integral of two weights over [s, 1]."""
    if s >= 1.0:
        return 0.0

    def integrand(u):
        return float(alpha(u - s)) * float(beta(u))

    breaks = {s + bk for bk in _kinks(alpha)} | set(beta.breakpoints)
    return adaptive_simpson(integrand, max(s, 0.0), 1.0, tol, tuple(breaks))


@dataclass(frozen=True)
class KernelConstants:
    """Quadrature constants of the weight pair entering the variance formulas."""

    psi_hy: float
    psi1: float
    psi2: float
    kappa: float
    kappa_tilde: float
    kappa_bar: float
    phi11: float
    phi22: float
    phi12: float
    norm_fprime_sq: float
    tol: float
    g_tag: str = "min_xx"
    f_tag: str = "quartic_f"

    def to_csv(self, path) -> None:
        from .io import write_csv

        names = ["psi_hy", "psi1", "psi2", "kappa", "kappa_tilde", "kappa_bar",
                 "phi11", "phi22", "phi12", "norm_fprime_sq"]
        rows = [[n, getattr(self, n), self.tol] for n in names]
        write_csv(path, ["name", "value", "quadrature_tolerance"], rows)


def _x_breaks(alpha: WeightFn, beta: WeightFn):
    pts = set()
    for uk in _kinks(alpha):
        for vk in _kinks(beta):
            for shift in (-1.0, 1.0):
                z = vk - uk + shift
                if -2.0 < z < 2.0:
                    pts.add(z)
    return tuple(sorted(pts))


def _s_breaks(alpha: WeightFn, beta: WeightFn):
    pts = set()
    for uk in _kinks(alpha):
        for vk in _kinks(beta):
            z = vk - uk
            if 0.0 < z < 1.0:
                pts.add(z)
    return tuple(sorted(pts))


def kernel_constants(weight_g: WeightFn, weight_f: WeightFn | None = None,
                     tol: float = 1e-10) -> KernelConstants:
    """All kernel constants of the weight pair by nested adaptive quadrature.

    The overlap-squared integrals use an inner tolerance two orders tighter
    than the outer one; results are stable to below 1e-8 under refinement for
    the built-in piecewise-polynomial weights.
    """
    if weight_f is None:
        weight_f = QUARTIC_F
    g = weight_g
    gp = None

    def gd(x):
        return float(g.d(x))

    inner = tol * 1e-2
    psi_hy = g.integral()
    psi1 = adaptive_simpson(lambda u: gd(u) ** 2, 0.0, 1.0, inner, g.breakpoints)
    psi2 = adaptive_simpson(lambda u: float(g(u)) ** 2, 0.0, 1.0, inner, g.breakpoints)
    norm_fprime_sq = adaptive_simpson(lambda u: float(weight_f.d(u)) ** 2, 0.0, 1.0,
                                      inner, weight_f.breakpoints)

    from .estimators import derivative_weight

    gprime = derivative_weight(g)

    def sq_over_x(a, b):
        xb = _x_breaks(a, b)
        return adaptive_simpson(lambda x: psi_ab(a, b, x, inner) ** 2, -2.0, 2.0, tol, xb)

    kappa = sq_over_x(g, g)
    kappa_tilde = sq_over_x(gprime, gprime)
    kappa_bar = sq_over_x(g, gprime)

    sb = _s_breaks(gprime, gprime) + _s_breaks(g, g)
    phi11 = adaptive_simpson(lambda s: phi_ab(gprime, gprime, s, inner) ** 2, 0.0, 1.0, tol, sb)
    phi22 = adaptive_simpson(lambda s: phi_ab(g, g, s, inner) ** 2, 0.0, 1.0, tol, sb)
    phi12 = adaptive_simpson(
        lambda s: phi_ab(g, g, s, inner) * phi_ab(gprime, gprime, s, inner), 0.0, 1.0, tol, sb
    )
    out = KernelConstants(
        psi_hy=psi_hy, psi1=psi1, psi2=psi2,
        kappa=kappa, kappa_tilde=kappa_tilde, kappa_bar=kappa_bar,
        phi11=phi11, phi22=phi22, phi12=phi12,
        norm_fprime_sq=norm_fprime_sq, tol=tol,
        g_tag=g.tag, f_tag=weight_f.tag,
    )
    for name in ("psi1", "psi2", "kappa", "kappa_tilde", "kappa_bar",
                 "phi11", "phi22", "norm_fprime_sq"):
        if not getattr(out, name) > 0:
            raise NumericError(f"kernel constant {name} came out nonpositive")
    return out


_CONSTANTS_CACHE: dict = {}


def cached_constants(weight_g: WeightFn, weight_f: WeightFn | None = None,
                     tol: float = 1e-10) -> KernelConstants:
    key = (weight_g.tag, None if weight_f is None else weight_f.tag, tol)
    if key not in _CONSTANTS_CACHE or weight_g.tag == "custom":
        _CONSTANTS_CACHE[key] = kernel_constants(weight_g, weight_f, tol)
    return _CONSTANTS_CACHE[key]


@dataclass(frozen=True)
class SpotConfig:
    """Backward-window bandwidth for the local spot estimators."""

    h_n: float | None = None
    exponent: float = 0.2

    def resolve(self, n_returns: int) -> float:
        h = self.h_n if self.h_n is not None else float(n_returns) ** (-self.exponent)
        if not 0.0 < h:
            raise ParameterError(f"bandwidth must be positive, got {h}")
        return h


@dataclass
class SpotRecords:
    """Backward-difference spot quantities at each refresh time."""

    r: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    sxy: np.ndarray
    dg11: np.ndarray
    dg22: np.ndarray
    dg12: np.ndarray
    dxi: np.ndarray
    h_n: float
    k_n: int


def _same_series(xs: ObservationSeries, ys: ObservationSeries) -> bool:
    return xs is ys or (xs.times.size == ys.times.size
                        and np.array_equal(xs.times, ys.times)
                        and np.array_equal(xs.values, ys.values))


def spot_estimators(xs: ObservationSeries, ys: ObservationSeries, rd: RefreshData,
                    cfg: PreAvgConfig, spot: SpotConfig | None = None,
                    xi_weight: WeightFn = QUARTIC_F,
                    horizon: float = math.inf) -> SpotRecords:
    """Backward difference quotients of the estimator paths at refresh times.

    Windows [max(r - h_n, 0), r] are divided by h_n even when truncated at 0.
    The antisymmetrized statistic's spot is identically zero when the two
    series coincide.
    """
    spot = spot or SpotConfig()
    n_ret = max(int(np.searchsorted(rd.r, min(horizon, rd.horizon), side="right")) - 1, 1)
    h_n = spot.resolve(n_ret)
    k_n = cfg.resolve_k_n(n_ret)
    cfgk = replace(cfg, k_n=k_n)

    univariate = _same_series(xs, ys)
    pxx = phy_refresh(xs, xs, cfgk, with_path=True)
    if univariate:
        pyy = pxy = pxx
    else:
        pyy = phy_refresh(ys, ys, cfgk, with_path=True)
        pxy = phy_refresh(xs, ys, cfgk, with_path=True, rd=rd)
    g1 = gamma1(xs, ys, rd, k_n, with_path=True)

    q1 = rd.r
    q0 = np.maximum(rd.r - h_n, 0.0)

    def dq(res: EstimatorResult):
        return (res.path_at(q1) - res.path_at(q0)) / h_n

    if univariate:
        dxi = np.zeros(rd.r.size)
    else:
        dxi = dq(xi_f(xs, ys, rd, k_n, xi_weight, with_path=True))
    return SpotRecords(
        r=rd.r.copy(),
        sx=dq(pxx), sy=dq(pyy), sxy=dq(pxy),
        dg11=dq(g1.g11), dg22=dq(g1.g22), dg12=dq(g1.g12),
        dxi=dxi, h_n=h_n, k_n=k_n,
    )


@dataclass
class AvarResult:
    """Feasible asymptotic-variance estimate and its per-refresh-time terms.

    The raw sum can be negative in finite samples (the antisymmetrized-spot
    term enters with a minus sign); negativity is reported as-is unless
    floor_negative was requested, in which case each term is floored at 0 and
    the result flagged.
    """

    avar: float
    w2: np.ndarray
    records: SpotRecords
    path: tuple | None = None
    n_skipped: int = 0
    floored: bool = False
    meta: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        from .io import write_csv

        rec = self.records
        k = np.arange(rec.r.size)
        w2_full = np.full(rec.r.size, np.nan)
        w2_full[1 : 1 + self.w2.size] = self.w2
        cols = ["k", "r_k", "spot_x", "spot_y", "spot_xy",
                "dgamma11", "dgamma22", "dgamma12", "dxi", "w2_hat"]
        write_csv(path, cols, np.column_stack([
            k, rec.r, rec.sx, rec.sy, rec.sxy, rec.dg11, rec.dg22, rec.dg12, rec.dxi, w2_full,
        ]))


def avar_hat(xs: ObservationSeries, ys: ObservationSeries, cfg: PreAvgConfig,
             spot: SpotConfig | None = None, constants: KernelConstants | None = None,
             rd: RefreshData | None = None, horizon: float = math.inf,
             xi_weight: WeightFn = QUARTIC_F, floor_negative: bool = False,
             with_path: bool = False) -> AvarResult:
    """Kernel-based estimator of the asymptotic variance of the pre-averaged estimator.

    Each refresh time k (1 <= k < K) contributes
    k_n * norm^-4 * [kappa-group + kappa_tilde-group + kappa_bar-group] *
    gamma_k * gamma_{k+1}; the running sum over r_k <= t is the estimate. NaN
    terms (empty spot windows) are skipped and counted.
    """
    rd, _, _ = hat_series(xs, ys, rd)
    if constants is None:
        constants = cached_constants(cfg.weight, xi_weight)
    rec = spot_estimators(xs, ys, rd, cfg, spot, xi_weight, horizon)
    k_n = rec.k_n
    nc = cfg.norm_const(k_n)
    kk = np.arange(1, rd.r.size - 1)
    if kk.size == 0:
        raise InsufficientDataError("need at least 3 refresh epochs for the variance estimator")
    sx, sy, sxy = rec.sx[kk], rec.sy[kk], rec.sxy[kk]
    d11, d22, d12, dxi = rec.dg11[kk], rec.dg22[kk], rec.dg12[kk], rec.dxi[kk]
    core = (
        constants.kappa * (sx * sy + sxy**2)
        + constants.kappa_tilde * (d11 * d22 + d12**2)
        + constants.kappa_bar * (sx * d22 + sy * d11 + 2.0 * sxy * d12 - dxi**2)
    )
    w2 = (k_n / nc**4) * core * rd.gamma[kk] * rd.gamma[kk + 1]
    if floor_negative:
        w2 = np.maximum(w2, 0.0)
    ok = np.isfinite(w2)
    n_skipped = int(np.sum(~ok))
    w2_use = np.where(ok, w2, 0.0)
    csum = np.cumsum(w2_use)
    n_in = int(np.searchsorted(rd.r[kk], horizon, side="right"))
    avar = float(csum[n_in - 1]) if n_in >= 1 else 0.0
    path = (rd.r[kk], csum) if with_path else None
    return AvarResult(avar=avar, w2=w2, records=rec, path=path,
                      n_skipped=n_skipped, floored=floor_negative,
                      meta={"k_n": k_n, "norm_const": nc, "h_n": rec.h_n})


def _as_fn(v):
    return v if callable(v) else (lambda s, v=float(v): v)


@dataclass(frozen=True)
class ModelSpots:
    """Spot processes entering the variance formulas (floats or callables of s).

    sx, sy, sxy are the latent spot (co)variances; psi* the noise covariance
    entries; ux, uy, uxy the spot (co)variances of the endogenous-noise
    drivers; ux_y and x_uy the driver-latent cross spots (first driver with
    second latent and vice versa).
    """

    sx: object
    sy: object
    sxy: object = 0.0
    psi11: object = 0.0
    psi22: object = 0.0
    psi12: object = 0.0
    ux: object = 0.0
    uy: object = 0.0
    uxy: object = 0.0
    ux_y: object = 0.0
    x_uy: object = 0.0


@dataclass(frozen=True)
class LimitSpec:
    """Scheme limits (floats or callables of s); f-limits default to g."""

    g: object = 1.0
    chi: object = 1.0
    f1: object = None
    f2: object = None
    f12: object = None


def theoretical_w2(spots: ModelSpots, limits: LimitSpec, constants: KernelConstants,
                   theta: float, flavor: str = "phy_endogenous",
                   lin_weights: tuple | None = None, span: tuple = (0.0, 1.0),
                   breakpoints: tuple = (), tol: float = 1e-9) -> float:
    """Integrated theoretical variance for the selected estimator flavor.

    Flavors: "phy_exogenous" (no endogenous noise), "phy_endogenous",
    "mrc", and "dep_noise" (tick-time linear-process noise; needs lin_weights
    = (lambda1~, lambda2~, mu1~, mu2~), the weight-sequence sums).
    """
    sx, sy, sxy = _as_fn(spots.sx), _as_fn(spots.sy), _as_fn(spots.sxy)
    p11, p22, p12 = _as_fn(spots.psi11), _as_fn(spots.psi22), _as_fn(spots.psi12)
    ux, uy, uxy = _as_fn(spots.ux), _as_fn(spots.uy), _as_fn(spots.uxy)
    ux_y, x_uy = _as_fn(spots.ux_y), _as_fn(spots.x_uy)
    gf = _as_fn(limits.g)
    chif = _as_fn(limits.chi)
    f1f = _as_fn(limits.f1 if limits.f1 is not None else limits.g)
    f2f = _as_fn(limits.f2 if limits.f2 is not None else limits.g)
    f12f = _as_fn(limits.f12 if limits.f12 is not None else limits.g)
    kc = constants

    def w2(s):
        g = gf(s)
        if not g > 0:
            raise ParameterError(f"duration limit must be positive, got {g} at s={s}")
        a = sx(s) * sy(s) + sxy(s) ** 2
        if flavor == "phy_exogenous":
            noise = p11(s) * p22(s) + (p12(s) * chif(s)) ** 2
            cross = sx(s) * p22(s) + sy(s) * p11(s) + 2.0 * sxy(s) * p12(s) * chif(s)
            return (theta * kc.kappa * a * g
                    + theta**-3 * kc.kappa_tilde * noise / g
                    + theta**-1 * kc.kappa_bar * cross) / kc.psi_hy**4
        if flavor in ("phy_endogenous", "mrc"):
            pb11 = p11(s) + ux(s) * f1f(s)
            pb22 = p22(s) + uy(s) * f2f(s)
            pb12 = p12(s) * chif(s) + uxy(s) * f12f(s)
            endo = (ux_y(s) * f1f(s) - x_uy(s) * f2f(s)) ** 2 / g
            noise = pb11 * pb22 + pb12**2
            cross = sx(s) * pb22 + sy(s) * pb11 + 2.0 * sxy(s) * pb12 - endo
            if flavor == "phy_endogenous":
                return (theta * kc.kappa * a * g
                        + theta**-3 * kc.kappa_tilde * noise / g
                        + theta**-1 * kc.kappa_bar * cross) / kc.psi_hy**4
            return 2.0 / kc.psi2**2 * (theta * kc.phi22 * a * g
                                       + theta**-3 * kc.phi11 * noise / g
                                       + theta**-1 * kc.phi12 * cross)
        if flavor == "dep_noise":
            if lin_weights is None:
                raise ParameterError("dep_noise needs lin_weights=(lt1, lt2, mt1, mt2)")
            lt1, lt2, mt1, mt2 = lin_weights
            pt11 = lt1**2 * p11(s) + mt1**2 * ux(s) * g
            pt22 = lt2**2 * p22(s) + mt2**2 * uy(s) * g
            pt12 = lt1 * lt2 * p12(s) + mt1 * mt2 * uxy(s) * g
            last = (mt1 * ux_y(s) - mt2 * x_uy(s)) ** 2 * g
            noise = pt11 * pt22 + pt12**2
            cross = sx(s) * pt22 + sy(s) * pt11 + 2.0 * sxy(s) * pt12 - last
            return (theta * kc.kappa * a * g
                    + theta**-3 * kc.kappa_tilde * noise / g
                    + theta**-1 * kc.kappa_bar * cross) / kc.psi_hy**4
        raise ParameterError(f"unknown flavor {flavor!r}")

    return adaptive_simpson(w2, span[0], span[1], tol, breakpoints)


def studentize(estimate: float, target: float, avar: float) -> float:
    """(estimate - target) / sqrt(avar); NaN when avar is not positive."""
    if not avar > 0 or not math.isfinite(avar):
        return math.nan
    return (estimate - target) / math.sqrt(avar)


def studentize_log(estimate: float, target: float, avar: float) -> float:
    """Delta-method log transform; NaN unless estimate, target, avar positive."""
    if not (avar > 0 and estimate > 0 and target > 0):
        return math.nan
    return (math.log(estimate) - math.log(target)) / (math.sqrt(avar) / estimate)


def studentize_inv(estimate: float, target: float, avar: float) -> float:
    """Inverse transform; NaN unless estimate, target, avar positive."""
    if not (avar > 0 and estimate > 0 and target > 0):
        return math.nan
    return -(estimate**2) * (1.0 / estimate - 1.0 / target) / math.sqrt(avar)


def studentize_rv(rv_value: float, rq_value: float, truth: float) -> float:
    """The feasible realized-variance statistic (rv - truth)/sqrt((2/3) rq)."""
    if not rq_value > 0:
        return math.nan
    return (rv_value - truth) / math.sqrt((2.0 / 3.0) * rq_value)


def studentize_msrv(estimate: float, truth: float, n_returns: int, avar_multi: float) -> float:
    """N^(1/4)-scaled multiscale statistic."""
    if not avar_multi > 0:
        return math.nan
    return float(n_returns) ** 0.25 * (estimate - truth) / math.sqrt(avar_multi)


@dataclass
class MsrvTuning:
    """Pilot-calibrated multiscale configuration and its variance normalizer."""

    c_multi: float
    m_scales: int
    estimate: float
    avar_multi: float
    g2_over_g1: float
    omega_sq: float
    iv_pilot: float
    var_const: float


def msrv_variance_constant(m_scales: int) -> float:
    """Finite-M variance constant of the multiscale weight combination.

    For equidistant iid-increment data, N * Var(MSRV)/IQ equals
    2 + 4 sum_l (sum_{i>l} alpha_i (i-l)/i)^2; as M grows this converges to
    the asymptotic (52/35) M, i.e. (52/35) c sqrt(N).
    """
    from .estimators import msrv_weights

    alphas = msrv_weights(m_scales)
    i = np.arange(1, m_scales + 1, dtype=np.float64)
    total = 2.0
    for lag in range(1, m_scales):
        mask = i > lag
        c_l = float(np.sum(alphas[mask] * (i[mask] - lag) / i[mask]))
        total += 4.0 * c_l * c_l
    return total


def msrv_tuning(xs: ObservationSeries, horizon: float = math.inf,
                c_multi: float | None = None, c_floor: float = 0.03,
                c_cap: float = 5.0) -> MsrvTuning:
    """Data-driven multiscale tuning.

    The noise variance is estimated from the (negated) first-lag return
    autocovariance, the integrated quarticity from the square of a c=1 pilot
    estimate (decorrelated from the final estimator), and the number of scales
    set by c = clip(c_floor * sqrt(1 + N * omega^2 / IV), c_floor, c_cap), so
    a near-noiseless series gets the minimal two scales. The variance
    normalizer is v(M)/sqrt(N) * IQ_hat * G(2)/G(1) with v(M) the finite-M
    variance constant (asymptotically (52/35) c sqrt(N)) and the duration
    moments taken from the observed epochs. Pass c_multi to override the pilot.
    """
    n_keep = int(np.searchsorted(xs.times, horizon, side="right"))
    if n_keep < 16:
        raise InsufficientDataError("multiscale tuning needs at least 16 observations")
    times = xs.times[:n_keep]
    n_ret = n_keep - 1
    d = np.diff(xs.values[:n_keep])
    omega_sq = max(0.0, -float(np.mean(d[:-1] * d[1:])))
    try:
        pilot = msrv(xs, max(2, math.ceil(math.sqrt(n_ret))), horizon).value
        if not pilot > 0:
            raise NumericError("nonpositive pilot estimate")
    except (NumericError, ParameterError) as exc:
        warnings.warn(f"multiscale pilot failed ({exc}); falling back to c_multi=1",
                      RuntimeWarning, stacklevel=2)
        pilot = float(np.cumsum(d * d)[-1])
        c_multi = 1.0 if c_multi is None else c_multi
    if c_multi is None:
        c_multi = min(max(c_floor * math.sqrt(1.0 + n_ret * omega_sq / pilot), c_floor), c_cap)
    m_scales = max(2, math.ceil(c_multi * math.sqrt(n_ret)))
    est = msrv(xs, m_scales, horizon).value
    dur = np.diff(times) / xs.b_n
    g1 = float(np.mean(dur))
    g2 = float(np.mean(dur * dur))
    g_ratio = g2 / g1 if g1 > 0 else math.nan
    var_const = msrv_variance_constant(m_scales)
    avar_multi = var_const / math.sqrt(n_ret) * pilot**2 * g_ratio
    return MsrvTuning(c_multi=c_multi, m_scales=m_scales, estimate=est,
                      avar_multi=avar_multi, g2_over_g1=g_ratio,
                      omega_sq=omega_sq, iv_pilot=pilot, var_const=var_const)


@dataclass(frozen=True)
class RvLimitLaw:
    """Limit-law ingredients of the realized variance under barrier sampling."""

    v_s: float
    u_s_sq: float
    bias: float
    diffusion_sd: float


def rv_limit_law(u: float, v: float, sigma: float, x_endpoint_mean: float) -> RvLimitLaw:
    """Bias and diffusion coefficients of the scaled realized-variance error.

    For the two-sided barrier scheme the return skewness and kurtosis ratios
    are v_s = v - u and u_s^2 = u^2 - u v + v^2; the limit of the scaled error
    has mean (2/3) v_s E[X_1 - X_0] and diffusion standard deviation
    sqrt((2/3) (u_s^2 - (2/3) v_s^2)) * sigma over a unit horizon.
    """
    if not (u > 0 and v > 0):
        raise ParameterError("barriers must be positive")
    v_s = v - u
    u_s_sq = u * u - u * v + v * v
    core = u_s_sq - (2.0 / 3.0) * v_s**2
    if core <= 0:
        raise ParameterError("diffusion variance must be positive (cannot occur for u, v > 0)")
    return RvLimitLaw(
        v_s=v_s,
        u_s_sq=u_s_sq,
        bias=(2.0 / 3.0) * v_s * x_endpoint_mean,
        diffusion_sd=math.sqrt((2.0 / 3.0) * core) * sigma,
    )
