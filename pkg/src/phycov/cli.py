"""Command-line entry point.

Verbs: simulate, sample, observe, estimate, avar, mc, constants, diag.
Options can come from a flat JSON config file (--config) and are overridden
by flags; unknown config keys are rejected with the list of valid keys.
Outputs are CSV files plus a run_meta.json under the output directory
(flag -o/--out, default from PHYCOV_OUTDIR or the working directory).
"""

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import PhycovError
from .estimators import PreAvgConfig, as_series, mrc, msrv, phy, phy_refresh, rq, rv, weight_by_tag
from .inference import SpotConfig, avar_hat, kernel_constants
from .io import write_csv, write_run_meta
from .montecarlo import DEFAULT_LEVELS, ScenarioConfig, density_export, qq_export, run_scenario
from .noise import NoiseConfig, observe
from .paths import ModelConfig, RngSeed, TimeGrid, simulate_bridge, simulate_ito
from .sampling import (
    LoMacKinlayConfig,
    PoissonChangePointConfig,
    duration_diagnostics,
    gen_barrier_hitting,
    gen_equidistant,
    gen_lo_mackinlay,
    gen_mixed_hitting,
    gen_poisson_changepoint,
    hitting_limits,
    lo_mackinlay_limits,
    refresh,
)

_SCENARIO_KEYS = {
    "scenario", "sampling", "reps", "n", "sigma", "x1", "drift_kind", "gamma_noise",
    "delta_endo", "u", "v", "theta", "kernel_norm", "n_fine", "estimators", "c_multi",
    "spot_exponent", "floor_negative_avar", "latent_mode", "horizon", "workers",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _outdir(args) -> Path:
    out = args.out or os.environ.get("PHYCOV_OUTDIR") or "."
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load_config(path, valid_keys) -> dict:
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise PhycovError("config file must hold a flat JSON object")
    unknown = set(cfg) - set(valid_keys)
    if unknown:
        raise PhycovError(
            f"unknown config keys {sorted(unknown)}; valid keys: {sorted(valid_keys)}"
        )
    return cfg


def _apply_overrides(args, pairs, valid_keys) -> dict:
    out = {}
    for kv in pairs or []:
        if "=" not in kv:
            raise PhycovError(f"override {kv!r} must look like key=value")
        key, val = kv.split("=", 1)
        if key not in valid_keys:
            raise PhycovError(f"unknown key {key!r}; valid keys: {sorted(valid_keys)}")
        out[key] = val
    return out


def _read_series(path, b_n):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    times = np.array([float(r["time"]) for r in rows])
    values = np.array([float(r["value"]) for r in rows])
    return as_series(times, values, b_n)


def _build_path(args, seed: RngSeed):
    grid = TimeGrid(0.0, args.horizon, args.n_fine or 10 * args.n)
    model = ModelConfig(sigma=args.sigma, x1=args.x1 if args.x1 is not None else args.sigma / 2,
                        corr=args.corr, drift_kind=args.drift,
                        endo_factor_x=args.endo_x, endo_factor_y=args.endo_y)
    if args.drift == "linear":
        return simulate_ito(grid, model.x1, model.sigma, model.corr, seed.spawn(0), cfg=model)
    return simulate_bridge(grid, model, seed.spawn(0))


def _add_model_flags(p):
    p.add_argument("--n", type=int, default=3600, help="nominal observation frequency")
    p.add_argument("--n-fine", dest="n_fine", type=int, default=None)
    p.add_argument("--sigma", type=float, default=0.02)
    p.add_argument("--x1", type=float, default=None)
    p.add_argument("--corr", type=float, default=0.0)
    p.add_argument("--drift", choices=("bridge", "none", "linear"), default="bridge")
    p.add_argument("--endo-x", dest="endo_x", type=float, default=0.0)
    p.add_argument("--endo-y", dest="endo_y", type=float, default=0.0)
    p.add_argument("--horizon", type=float, default=1.0)


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("-o", "--out", default=None, help="output directory (default $PHYCOV_OUTDIR or .)")
    p.add_argument("--format", choices=("csv",), default="csv")


def _cmd_simulate(args):
    out = _outdir(args)
    path = _build_path(args, RngSeed(args.seed, args.stream))
    path.to_csv(out / "paths.csv")
    write_run_meta(out, vars(args))
    print(f"wrote {out / 'paths.csv'}")
    return 0


def _gen_times(args, seed: RngSeed, path=None):
    b_n = 1.0 / args.n
    if args.scheme == "equidistant":
        return gen_equidistant(args.horizon, b_n), None
    if args.scheme == "hitting":
        path = path or _build_path(args, seed)
        return gen_barrier_hitting(path, args.u, args.v, b_n, seed.spawn(1)), None
    if args.scheme == "mixed_hitting":
        return gen_mixed_hitting(args.mu, args.c, lambda rng, m: np.ones(m), b_n,
                                 args.horizon, seed.spawn(1)), None
    if args.scheme == "poisson":
        cfg = PoissonChangePointConfig(args.p_under1, args.p_over1, args.p_under2,
                                       args.p_over2, args.tau1, args.tau2, args.n)
        return gen_poisson_changepoint(cfg, args.horizon, seed.spawn(1))
    if args.scheme == "lo_mackinlay":
        cfg = LoMacKinlayConfig(args.p1, args.p2, b_n)
        return gen_lo_mackinlay(cfg, args.horizon, seed.spawn(1))
    raise PhycovError(f"unknown scheme {args.scheme!r}")


def _add_scheme_flags(p):
    p.add_argument("--scheme", default="equidistant",
                   choices=("equidistant", "hitting", "mixed_hitting", "poisson", "lo_mackinlay"))
    p.add_argument("--u", type=float, default=0.01)
    p.add_argument("--v", type=float, default=0.04)
    p.add_argument("--bn", dest="bn", type=float, default=None, help="duration scale (default 1/n)")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--p1", type=float, default=0.5)
    p.add_argument("--p2", type=float, default=0.5)
    p.add_argument("--p-under1", dest="p_under1", type=float, default=1.0)
    p.add_argument("--p-over1", dest="p_over1", type=float, default=2.0)
    p.add_argument("--p-under2", dest="p_under2", type=float, default=1.0)
    p.add_argument("--p-over2", dest="p_over2", type=float, default=2.0)
    p.add_argument("--tau1", type=float, default=0.5)
    p.add_argument("--tau2", type=float, default=0.5)


def _cmd_sample(args):
    out = _outdir(args)
    if args.bn is not None:
        args.n = max(1, round(1.0 / args.bn))
    st, st2 = _gen_times(args, RngSeed(args.seed, args.stream))
    st.to_csv(out / "times.csv")
    written = [out / "times.csv"]
    if st2 is not None:
        st2.to_csv(out / "times2.csv")
        written.append(out / "times2.csv")
    write_run_meta(out, vars(args))
    print("wrote " + ", ".join(map(str, written)))
    return 0


def _noise_from_args(args):
    if args.scenario == "s2":
        return NoiseConfig(psi=args.gamma_noise * args.sigma**2)
    return NoiseConfig(psi=None)


def _cmd_observe(args):
    out = _outdir(args)
    seed = RngSeed(args.seed, args.stream)
    if args.scenario == "s3":
        args.endo_x = args.delta_endo
    path = _build_path(args, seed)
    st, _ = _gen_times(args, seed, path)
    mode = "sampling" if args.scheme == "hitting" else "fine"
    xs = observe(path, st, _noise_from_args(args), seed.spawn(2), latent_mode=mode)
    xs.to_csv(out / "observations.csv")
    write_run_meta(out, vars(args))
    print(f"wrote {out / 'observations.csv'}")
    return 0


def _add_scenario_flags(p):
    p.add_argument("--scenario", choices=("s1", "s2", "s3"), default="s1")
    p.add_argument("--gamma-noise", dest="gamma_noise", type=float, default=0.001)
    p.add_argument("--delta-endo", dest="delta_endo", type=float, default=-math.sqrt(0.001))


def _cmd_estimate(args):
    out = _outdir(args)
    xs = _read_series(args.x, args.bn)
    ys = _read_series(args.y, args.bn) if args.y else xs
    cfg = PreAvgConfig(b_n=args.bn, theta=args.theta, k_n=args.kn, kernel_norm=args.kernel_norm)
    fns = {"phy": lambda: phy(xs, ys, cfg, args.horizon, with_path=True),
           "phy_refresh": lambda: phy_refresh(xs, ys, cfg, args.horizon, with_path=True),
           "rv": lambda: rv(xs, args.horizon, with_path=True),
           "rq": lambda: rq(xs, args.horizon, with_path=True),
           "mrc": lambda: mrc(xs, ys, cfg, args.horizon, with_path=True),
           "msrv": lambda: msrv(xs, args.m_scales, args.horizon)}
    res = fns[args.estimator]()
    res.to_csv(out / f"{args.estimator}.csv")
    write_run_meta(out, vars(args), {"value": res.value, "meta": res.meta})
    print(f"{args.estimator} = {res.value:.8g}  (wrote {out / (args.estimator + '.csv')})")
    return 0


def _cmd_avar(args):
    out = _outdir(args)
    xs = _read_series(args.x, args.bn)
    ys = _read_series(args.y, args.bn) if args.y else xs
    cfg = PreAvgConfig(b_n=args.bn, theta=args.theta, k_n=args.kn, kernel_norm=args.kernel_norm)
    res = avar_hat(xs, ys, cfg, SpotConfig(h_n=args.hn), horizon=args.horizon,
                   floor_negative=args.floor_negative)
    res.to_csv(out / "avar.csv")
    write_run_meta(out, vars(args), {"avar": res.avar, "n_skipped": res.n_skipped})
    print(f"avar = {res.avar:.8g}  (wrote {out / 'avar.csv'})")
    return 0


def _cmd_mc(args):
    out = _outdir(args)
    overrides = {}
    if args.config:
        overrides.update(_load_config(args.config, _SCENARIO_KEYS))
    overrides.update(_apply_overrides(args, args.set, _SCENARIO_KEYS))
    fields = dict(scenario=args.scenario, sampling=args.sampling, reps=args.reps,
                  n=args.n, theta=args.theta, workers=args.workers)
    if args.c_multi is not None:
        fields["c_multi"] = args.c_multi
    for key, val in overrides.items():
        cur = getattr(ScenarioConfig, key, None)
        if key == "estimators":
            val = tuple(val.split(",")) if isinstance(val, str) else tuple(val)
        elif key in ("reps", "n", "n_fine", "workers"):
            val = int(val)
        elif key in ("sigma", "x1", "gamma_noise", "delta_endo", "u", "v", "theta",
                     "c_multi", "spot_exponent", "horizon"):
            val = float(val)
        elif key == "floor_negative_avar":
            val = str(val).lower() in ("1", "true", "yes")
        fields[key] = val
    cfg = ScenarioConfig(**fields)
    report = run_scenario(cfg, args.seed)

    keys = ["rep", "estimator", "value", "truth", "avar", "stat", "stat_log", "stat_inv",
            "n_obs", "k_n", "m_scales", "c_multi", "fail_reason"]
    rows = [[r.get(k, "") for k in keys] for r in report.per_rep]
    write_csv(out / "per_rep.csv", keys, rows)

    bt = report.summaries["bias_rmse"]
    write_csv(out / "bias_rmse.csv", ["estimator", "bias", "rmse", "n"],
              [[k, v["bias"], v["rmse"], v["n"]] for k, v in sorted(bt.items())])
    qt = report.summaries["quantiles"]
    qcols = ["statistic", "mean", "sd"] + [f"q_{lv:g}" for lv in DEFAULT_LEVELS] + \
            ["coverage95", "n", "n_excluded"]
    write_csv(out / "quantiles.csv", qcols,
              [[k] + [v[c] for c in qcols[1:]] for k, v in qt.items()])
    for tag in qt:
        try:
            grid, dens = density_export(report, tag)
            nq, eq = qq_export(report, tag)
        except PhycovError as exc:
            print(f"skipping density/qq for {tag}: {exc}")
            continue
        write_csv(out / f"density_{tag}.csv", ["x", "density"], np.column_stack([grid, dens]))
        write_csv(out / f"qq_{tag}.csv", ["normal_quantile", "empirical_quantile"],
                  np.column_stack([nq, eq]))
    write_run_meta(out, report.meta["config"],
                   {"master_seed": args.seed, "n_failures": report.meta["n_failures"],
                    "exclusions": report.meta["exclusions"]})
    print(f"wrote per_rep/bias_rmse/quantiles/density/qq CSVs under {out}")
    return 0


def _cmd_constants(args):
    out = _outdir(args)
    kc = kernel_constants(weight_by_tag(args.weight), weight_by_tag(args.f_weight), tol=args.tol)
    kc.to_csv(out / "constants.csv")
    write_run_meta(out, vars(args))
    print(f"psi_hy = {kc.psi_hy:.8g}, kappa = {kc.kappa:.8g}  (wrote {out / 'constants.csv'})")
    return 0


def _cmd_diag(args):
    out = _outdir(args)
    collected = 0
    stream = 0
    rows = []
    while collected < args.durations and stream < 10_000:
        s = RngSeed(args.seed, stream)
        if args.scheme in ("poisson", "lo_mackinlay"):
            st, st2 = _gen_times(args, s)
            rd = refresh(st, st2, args.horizon)
        else:
            path = _build_path(args, s) if args.scheme == "hitting" else None
            st, _ = _gen_times(args, s, path)
            rd = refresh(st, st, args.horizon)
        rows.append(duration_diagnostics(rd))
        collected += rd.r.size - 1
        stream += 1
    agg = {}
    for key in rows[0].global_means:
        vals = np.array([d.global_means[key] for d in rows], dtype=np.float64)
        agg[key] = float(np.nanmean(vals))
    rows[0].to_csv(out / "diagnostics.csv")
    limits = None
    if args.scheme == "hitting":
        limits = hitting_limits(args.u, args.v, args.sigma**2)
    elif args.scheme == "lo_mackinlay":
        limits = lo_mackinlay_limits(args.p1, args.p2)
    closed = {}
    if limits is not None:
        closed = {"g_1": limits.g, "chi": limits.chi, "f1": limits.f1,
                  "f2": limits.f2, "f12": limits.f12}
    summary = [[k, v, closed.get(k, "")] for k, v in agg.items()]
    write_csv(out / "diag_summary.csv", ["name", "empirical", "closed_form"], summary)
    write_run_meta(out, vars(args), {"durations": collected})
    print(f"collected {collected} durations; wrote diagnostics under {out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="phycov", description=__doc__)
    parser.add_argument("--version", action="version", version=f"phycov {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True,
                                metavar="{simulate,sample,observe,estimate,avar,mc,constants,diag}")

    p = sub.add_parser("simulate", help="simulate a latent path to CSV")
    _add_common(p); _add_model_flags(p)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sample", help="generate sampling times")
    _add_common(p); _add_model_flags(p); _add_scheme_flags(p)
    p.set_defaults(fn=_cmd_sample)

    p = sub.add_parser("observe", help="simulate, sample and add noise")
    _add_common(p); _add_model_flags(p); _add_scheme_flags(p); _add_scenario_flags(p)
    p.set_defaults(fn=_cmd_observe)

    p = sub.add_parser("estimate", help="run one estimator on an observation CSV")
    _add_common(p)
    p.add_argument("--estimator", required=True,
                   choices=("phy", "phy_refresh", "rv", "rq", "mrc", "msrv"))
    p.add_argument("--x", required=True, help="observation CSV (index,time,value[,latent])")
    p.add_argument("--y", default=None)
    p.add_argument("--bn", type=float, required=True)
    p.add_argument("--theta", type=float, default=0.15)
    p.add_argument("--kn", type=int, default=None)
    p.add_argument("--kernel-norm", dest="kernel_norm", default="discrete",
                   choices=("discrete", "continuous"))
    p.add_argument("--m-scales", dest="m_scales", type=int, default=4)
    p.add_argument("--horizon", type=float, default=math.inf)
    p.set_defaults(fn=_cmd_estimate)

    p = sub.add_parser("avar", help="feasible asymptotic-variance estimate")
    _add_common(p)
    p.add_argument("--x", required=True)
    p.add_argument("--y", default=None)
    p.add_argument("--bn", type=float, required=True)
    p.add_argument("--theta", type=float, default=0.15)
    p.add_argument("--kn", type=int, default=None)
    p.add_argument("--hn", type=float, default=None)
    p.add_argument("--kernel-norm", dest="kernel_norm", default="discrete",
                   choices=("discrete", "continuous"))
    p.add_argument("--floor-negative", dest="floor_negative", action="store_true")
    p.add_argument("--horizon", type=float, default=math.inf)
    p.set_defaults(fn=_cmd_avar)

    p = sub.add_parser("mc", help="Monte Carlo scenario run with summary tables")
    _add_common(p)
    p.add_argument("--scenario", default="s1", choices=("s1", "s2", "s3"))
    p.add_argument("--sampling", default="equidistant", choices=("equidistant", "hitting"))
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--n", type=int, default=3600)
    p.add_argument("--theta", type=float, default=0.15)
    p.add_argument("--c-multi", dest="c_multi", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", default=None, help="flat JSON config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a scenario config key")
    p.set_defaults(fn=_cmd_mc)

    p = sub.add_parser("constants", help="kernel constants of a weight pair")
    _add_common(p)
    p.add_argument("--weight", default="min_xx")
    p.add_argument("--f-weight", dest="f_weight", default="quartic_f")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(fn=_cmd_constants)

    p = sub.add_parser("diag", help="duration diagnostics vs closed-form limits")
    _add_common(p); _add_model_flags(p); _add_scheme_flags(p)
    p.add_argument("--durations", type=int, default=10_000)
    p.set_defaults(fn=_cmd_diag)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except (PhycovError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint():
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
