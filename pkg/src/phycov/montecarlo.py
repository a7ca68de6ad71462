"""Replication harness for the simulation design.

Runs seeded, reproducible replications of the bridge model under equidistant
or barrier-hitting sampling and the three noise scenarios, records per-rep
estimator values and Studentized statistics, and aggregates the bias/rmse,
quantile/coverage and density/QQ summaries. Identical (config, master_seed)
give byte-identical reports regardless of worker count.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats as sp_stats

from .errors import ParameterError
from .estimators import PreAvgConfig, phy_refresh, rq, rv
from .inference import (
    SpotConfig,
    avar_hat,
    cached_constants,
    msrv_tuning,
    studentize,
    studentize_inv,
    studentize_log,
    studentize_msrv,
    studentize_rv,
)
from .noise import NoiseConfig, observe
from .paths import ModelConfig, RngSeed, TimeGrid, simulate_bridge, simulate_ito
from .sampling import gen_barrier_hitting, gen_equidistant, refresh

__all__ = [
    "ScenarioConfig",
    "McReport",
    "run_scenario",
    "bias_rmse_table",
    "quantile_coverage_table",
    "density_export",
    "qq_export",
    "DEFAULT_LEVELS",
]

_SCENARIOS = {"s1": "s1", "s1_no_noise": "s1", "s2": "s2", "s2_iid": "s2",
              "s3": "s3", "s3_endogenous": "s3", "custom": "custom"}

DEFAULT_LEVELS = (0.005, 0.025, 0.05, 0.95, 0.975, 0.995)


@dataclass(frozen=True)
class ScenarioConfig:
    """Full parameterization of one Monte Carlo experiment.

    The defaults are the simulation design's: one-day horizon, n = 3600,
    sigma = 0.02, bridge endpoint sigma/2, noise variance ratio 0.001,
    endogenous noise factor -sqrt(0.001), barriers (0.01, 0.04), theta = 0.15.
    """

    scenario: str = "s1"
    sampling: str = "equidistant"
    reps: int = 1000
    n: int = 3600
    sigma: float = 0.02
    x1: float | None = None
    drift_kind: str = "bridge"
    gamma_noise: float = 0.001
    delta_endo: float = -math.sqrt(0.001)
    u: float = 0.01
    v: float = 0.04
    theta: float = 0.15
    kernel_norm: str = "discrete"
    n_fine: int | None = None
    estimators: tuple = ("phy", "rv", "msrv")
    c_multi: float | None = None
    spot_exponent: float = 0.2
    floor_negative_avar: bool = False
    latent_mode: str = "auto"
    horizon: float = 1.0
    workers: int = 1

    def __post_init__(self):
        if self.scenario not in _SCENARIOS:
            raise ParameterError(f"unknown scenario {self.scenario!r}; known: {sorted(_SCENARIOS)}")
        if self.sampling not in ("equidistant", "hitting"):
            raise ParameterError(f"unknown sampling {self.sampling!r}")
        if self.reps < 1:
            raise ParameterError("reps must be >= 1")
        unknown = set(self.estimators) - {"phy", "rv", "msrv", "mrc"}
        if unknown:
            raise ParameterError(f"unknown estimator tags {sorted(unknown)}")
        if self.latent_mode not in ("auto", "fine", "sampling"):
            raise ParameterError(f"unknown latent_mode {self.latent_mode!r}")

    @property
    def scenario_key(self) -> str:
        return _SCENARIOS[self.scenario]

    @property
    def b_n(self) -> float:
        return 1.0 / self.n

    def resolved_x1(self) -> float:
        return self.sigma / 2.0 if self.x1 is None else self.x1

    def resolved_n_fine(self) -> int:
        # barrier detection wants more sub-duration resolution than the
        # estimators do; 10 steps per nominal duration leaves a ~0.2% duration
        # bias, 30 is measurably unbiased (see tests/test_sampling.py)
        if self.n_fine is not None:
            return self.n_fine
        return 30 * self.n if self.sampling == "hitting" else 10 * self.n

    def resolved_latent_mode(self) -> str:
        if self.latent_mode != "auto":
            return self.latent_mode
        return "sampling" if self.sampling == "hitting" else "fine"


@dataclass
class McReport:
    """Per-replication records plus aggregate tables and the run metadata."""

    per_rep: list
    summaries: dict
    meta: dict

    def rows(self, estimator: str) -> list:
        return [r for r in self.per_rep if r.get("estimator") == estimator]

    def column(self, estimator: str, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.rows(estimator)], dtype=np.float64)

    def statistics(self, tag: str) -> np.ndarray:
        """Studentized statistics by display tag (S_PHY, S_RV, S_MSRV, S_log, S_inv)."""
        src = {"S_PHY": ("phy", "stat"), "S_log": ("phy", "stat_log"),
               "S_inv": ("phy", "stat_inv"), "S_RV": ("rv", "stat"),
               "S_MSRV": ("msrv", "stat")}
        try:
            est, key = src[tag]
        except KeyError:
            raise ParameterError(f"unknown statistic tag {tag!r}; known: {sorted(src)}") from None
        return self.column(est, key)


def _noise_config(cfg: ScenarioConfig) -> NoiseConfig:
    key = cfg.scenario_key
    if key in ("s1", "custom"):
        return NoiseConfig(psi=None)
    if key == "s2":
        return NoiseConfig(psi=cfg.gamma_noise * cfg.sigma**2)
    return NoiseConfig(psi=None)  # s3: endogenous only, driver factor on the path


def _one_rep(cfg: ScenarioConfig, master_seed: int, rep: int) -> list:
    seed = RngSeed(master_seed, rep)
    grid = TimeGrid(0.0, cfg.horizon, cfg.resolved_n_fine())
    endo = cfg.delta_endo if cfg.scenario_key == "s3" else 0.0
    model = ModelConfig(sigma=cfg.sigma, x1=cfg.resolved_x1(), corr=0.0,
                        drift_kind=cfg.drift_kind, endo_factor_x=endo, endo_factor_y=endo)
    if cfg.drift_kind == "linear":
        path = simulate_ito(grid, cfg.resolved_x1(), cfg.sigma, 0.0, seed.spawn(0), cfg=model)
    else:
        path = simulate_bridge(grid, model, seed.spawn(0))
    if cfg.sampling == "equidistant":
        st = gen_equidistant(cfg.horizon, cfg.b_n)
    else:
        st = gen_barrier_hitting(path, cfg.u, cfg.v, cfg.b_n, seed.spawn(1))
    xs = observe(path, st, _noise_config(cfg), seed.spawn(2), asset="x",
                 latent_mode=cfg.resolved_latent_mode())
    truth = path.qv_at(cfg.horizon, "qv_x")
    hz = cfg.horizon
    rows = []
    base = {"rep": rep, "truth": truth, "n_obs": len(xs), "fail_reason": ""}

    if "phy" in cfg.estimators or "mrc" in cfg.estimators:
        rd = refresh(st, st, hz)
    if "phy" in cfg.estimators:
        pcfg = PreAvgConfig(b_n=cfg.b_n, theta=cfg.theta, kernel_norm=cfg.kernel_norm)
        est = phy_refresh(xs, xs, pcfg, horizon=hz, rd=rd)
        av = avar_hat(xs, xs, pcfg, SpotConfig(exponent=cfg.spot_exponent),
                      cached_constants(pcfg.weight), rd=rd, horizon=hz,
                      floor_negative=cfg.floor_negative_avar)
        stat = studentize(est.value, truth, av.avar)
        reason = ""
        if not av.avar > 0:
            reason = "nonpositive_avar"
        elif not est.value > 0:
            reason = "nonpositive_estimate"
        rows.append({**base, "estimator": "phy", "value": est.value, "avar": av.avar,
                     "stat": stat, "stat_log": studentize_log(est.value, truth, av.avar),
                     "stat_inv": studentize_inv(est.value, truth, av.avar),
                     "k_n": est.meta["k_n"], "fail_reason": reason,
                     "avar_terms_skipped": av.n_skipped})
    if "rv" in cfg.estimators:
        rvv = rv(xs, hz).value
        rqv = rq(xs, hz).value
        rows.append({**base, "estimator": "rv", "value": rvv, "avar": (2.0 / 3.0) * rqv,
                     "stat": studentize_rv(rvv, rqv, truth),
                     "stat_log": math.nan, "stat_inv": math.nan,
                     "fail_reason": "" if rqv > 0 else "nonpositive_quarticity"})
    if "msrv" in cfg.estimators:
        tune = msrv_tuning(xs, hz, c_multi=cfg.c_multi)
        stat = studentize_msrv(tune.estimate, truth, len(xs) - 1
                               if math.isinf(hz) else int(np.searchsorted(xs.times, hz, "right")) - 1,
                               tune.avar_multi)
        rows.append({**base, "estimator": "msrv", "value": tune.estimate,
                     "avar": tune.avar_multi, "stat": stat,
                     "stat_log": math.nan, "stat_inv": math.nan,
                     "m_scales": tune.m_scales, "c_multi": tune.c_multi,
                     "fail_reason": "" if tune.avar_multi > 0 else "nonpositive_avar"})
    if "mrc" in cfg.estimators:
        from .estimators import mrc as mrc_est

        pcfg = PreAvgConfig(b_n=cfg.b_n, theta=cfg.theta, kernel_norm=cfg.kernel_norm)
        est = mrc_est(xs, xs, pcfg, horizon=hz, rd=rd)
        rows.append({**base, "estimator": "mrc", "value": est.value, "avar": math.nan,
                     "stat": math.nan, "stat_log": math.nan, "stat_inv": math.nan})
    return rows


def _run_chunk(args):
    cfg, master_seed, rep_ids = args
    out = []
    for rep in rep_ids:
        try:
            out.extend(_one_rep(cfg, master_seed, rep))
        except Exception as exc:  # recorded, not fatal
            out.append({"rep": rep, "estimator": "__failure__", "value": math.nan,
                        "truth": math.nan, "fail_reason": f"{type(exc).__name__}: {exc}"})
    return out


def run_scenario(cfg: ScenarioConfig, master_seed: int) -> McReport:
    """Run the configured replications and aggregate the summary tables.

    Replications are independent tasks with per-rep seed streams; results are
    reassembled in replication order, so the report does not depend on the
    worker count. Replication failures are recorded with reason codes; a
    failure rate above 1% aborts.
    """
    rep_ids = list(range(cfg.reps))
    if cfg.workers > 1:
        chunks = [rep_ids[i::cfg.workers] for i in range(cfg.workers)]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_run_chunk, [(cfg, master_seed, ch) for ch in chunks]))
        rows = [row for part in parts for row in part]
    else:
        rows = _run_chunk((cfg, master_seed, rep_ids))
    rows.sort(key=lambda r: (r["rep"], r.get("estimator", "")))
    failures = [r for r in rows if r.get("estimator") == "__failure__"]
    if len(failures) > 0.01 * cfg.reps:
        sample = "; ".join(r["fail_reason"] for r in failures[:5])
        raise RuntimeError(
            f"{len(failures)}/{cfg.reps} replications failed (> 1%): {sample}"
        )
    report = McReport(per_rep=rows, summaries={}, meta={
        "config": asdict(cfg),
        "master_seed": master_seed,
        "n_failures": len(failures),
        "exclusions": _exclusion_counts(rows),
    })
    report.summaries["bias_rmse"] = bias_rmse_table(report)
    report.summaries["quantiles"] = quantile_coverage_table(report)
    return report


def _exclusion_counts(rows) -> dict:
    out: dict = {}
    for r in rows:
        reason = r.get("fail_reason") or ""
        if reason and r.get("estimator") != "__failure__":
            key = f"{r['estimator']}:{reason}"
            out[key] = out.get(key, 0) + 1
    return out


def bias_rmse_table(report: McReport) -> dict:
    """Relative bias and rmse per estimator, normalized by the realized truth.

    Each replication contributes (value - truth)/truth; the table reports the
    mean and root mean square of these relative errors.
    """
    out = {}
    tags = sorted({r["estimator"] for r in report.per_rep if r.get("estimator", "").isalpha()})
    for tag in tags:
        v = report.column(tag, "value")
        t = report.column(tag, "truth")
        if v.size == 0:
            continue
        rel = v / t - 1.0
        out[tag] = {"bias": float(np.mean(rel)),
                    "rmse": float(np.sqrt(np.mean(rel * rel))),
                    "n": int(v.size)}
    return out


def quantile_coverage_table(report: McReport, levels=DEFAULT_LEVELS) -> dict:
    """Empirical CDF of each Studentized statistic at standard-normal quantiles.

    Also reports the mean, standard deviation, two-sided 95% coverage
    (fraction inside +-1.96) and the number of excluded (NaN) statistics.
    """
    out = {}
    for tag in ("S_PHY", "S_RV", "S_MSRV", "S_log", "S_inv"):
        try:
            s = report.statistics(tag)
        except ParameterError:
            continue
        if s.size == 0:
            continue
        ok = np.isfinite(s)
        sv = s[ok]
        if sv.size == 0:
            continue
        cells = {f"q_{lv:g}": float(np.mean(sv <= sp_stats.norm.ppf(lv))) for lv in levels}
        sd = float(np.std(sv, ddof=1)) if sv.size > 1 else math.nan
        out[tag] = {"mean": float(np.mean(sv)), "sd": sd,
                    **cells,
                    "coverage95": float(np.mean(np.abs(sv) <= 1.959963984540054)),
                    "n": int(sv.size), "n_excluded": int(np.sum(~ok))}
    return out


def density_export(report: McReport, tag: str, grid: np.ndarray | None = None):
    """Gaussian kernel density of a statistic on a grid (Silverman bandwidth)."""
    s = report.statistics(tag)
    s = s[np.isfinite(s)]
    if s.size < 100:
        raise ParameterError(f"need at least 100 statistics for a density, got {s.size}")
    if grid is None:
        grid = np.linspace(-4.0, 4.0, 161)
    sd = np.std(s, ddof=1)
    iqr = np.subtract(*np.percentile(s, [75, 25]))
    bw = 0.9 * min(sd, iqr / 1.34) * s.size ** (-0.2)
    z = (grid[:, None] - s[None, :]) / bw
    dens = np.mean(np.exp(-0.5 * z * z), axis=1) / (bw * math.sqrt(2.0 * math.pi))
    return grid, dens


def qq_export(report: McReport, tag: str):
    """Normal QQ pairs at k/(m+1) plotting positions."""
    s = report.statistics(tag)
    s = s[np.isfinite(s)]
    if s.size < 100:
        raise ParameterError(f"need at least 100 statistics for a QQ export, got {s.size}")
    emp = np.sort(s)
    pos = np.arange(1, s.size + 1) / (s.size + 1.0)
    return sp_stats.norm.ppf(pos), emp
