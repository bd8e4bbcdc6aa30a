"""Experiment runner: reproduces each headline curve as a CSV data file and
provides a validation command comparing the closed forms against simulation.

Subcommands: pmf | success-vs-threshold | delay-vs-delta | optimize-sweep |
efficiency-sweep | validate. Every command is deterministic under a fixed
seed; column names carry units.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys

import numpy as np

from . import analytics, simulate
from .config import ExperimentConfig, config_as_dict, load_config
from .model import CGBC, RBC, ClusteringScheme, SystemParams
from .optimize import optimize_delta
from .simulate import run_campaign

REFERENCE_MUS = (160.0, 640.0)
PMF_DELTAS = (0.1, 0.15)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _write_csv(path: str, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _params_with(cfg: ExperimentConfig, mu: float | None = None) -> SystemParams:
    p = cfg.to_params()
    if mu is not None:
        p = dataclasses.replace(p, mu=mu)
    return p


def _sim_kwargs(cfg: ExperimentConfig, workers: int):
    if cfg.realizations > 0:
        return dict(n_realizations=cfg.realizations, ci_target=None,
                    workers=workers)
    return dict(ci_target=cfg.ci_target, workers=workers)


def cmd_pmf(cfg: ExperimentConfig, workers: int) -> list[str]:
    """Analytic vs empirical cluster-size distribution over the reference
    (device density, delta) grid."""
    header = ["mu_per_km2", "delta", "n_members",
              "pmf_analytic", "pmf_empirical", "ci95"]
    rows = []
    n_real = cfg.realizations if cfg.realizations > 0 else 300
    for mu in REFERENCE_MUS:
        params = _params_with(cfg, mu)
        for delta in PMF_DELTAS:
            scheme = ClusteringScheme(cfg.scheme, delta)
            stats = run_campaign(params, scheme, n_real, cfg.seed,
                                 gain_mode=cfg.gain_mode, workers=workers)
            total = stats.hist.sum()
            emp = stats.hist / total
            ana = analytics.cluster_pmf(delta, np.arange(2000))
            n_max = max(emp.size, int(np.searchsorted(np.cumsum(ana),
                                                      1.0 - 1e-9)) + 2)
            for n in range(n_max):
                e = emp[n] if n < emp.size else 0.0
                ci = 1.96 * math.sqrt(max(e * (1 - e), 0.0) / total)
                rows.append([mu, delta, n, ana[n], e, ci])
    _write_csv(cfg.out, header, rows)
    return [f"wrote {len(rows)} rows to {cfg.out}"]


def cmd_success_vs_threshold(cfg: ExperimentConfig, workers: int) -> list[str]:
    """RA and D2D success probability versus detection threshold at the
    configured delta, analytic and simulated side by side."""
    thetas = list(range(-20, 11))
    header = ["mu_per_km2", "metric", "theta_db", "p_analytic",
              "p_simulated", "ci95"]
    rows = []
    params = cfg.to_params()
    n_real = cfg.realizations if cfg.realizations > 0 else 200
    for kind, metric in ((RBC, "p_ra_rbc"), (CGBC, "p_ra_cgbc")):
        scheme = ClusteringScheme(kind, cfg.delta)
        stats = run_campaign(params, scheme, n_real, cfg.seed,
                             gain_mode=cfg.gain_mode, workers=workers,
                             theta_ra_grid_db=thetas, theta_c_grid_db=thetas)
        for i, th in enumerate(thetas):
            p = dataclasses.replace(params, theta_ra_db=float(th))
            ana = (analytics.p_ra_rbc(p, cfg.delta) if kind == RBC
                   else analytics.p_ra_cgbc(p, cfg.delta))
            est = simulate.ratio_estimate(stats.ra_succ[:, i], stats.ra_obs)
            rows.append([cfg.mu_per_km2, metric, th, ana, est.mean,
                         est.ci_halfwidth])
            if kind == RBC:
                pc = dataclasses.replace(params, theta_c_db=float(th))
                est_c = simulate.ratio_estimate(stats.d2d_succ[:, i],
                                                stats.d2d_obs)
                rows.append([cfg.mu_per_km2, "p_c", th,
                             analytics.p_c_d2d(pc), est_c.mean,
                             est_c.ci_halfwidth])
    _write_csv(cfg.out, header, rows)
    return [f"wrote {len(rows)} rows to {cfg.out}"]


def cmd_delay_vs_delta(cfg: ExperimentConfig, workers: int) -> list[str]:
    """P_RA and delay versus CH selection probability for both schemes and
    both reference device densities; simulation columns when realizations
    are requested."""
    header = ["mu_per_km2", "scheme", "delta", "p_ra_analytic",
              "delay_slots_analytic", "p_ra_simulated", "p_ra_ci95",
              "delay_slots_simulated"]
    rows = []
    for mu in REFERENCE_MUS:
        params = _params_with(cfg, mu)
        for kind in (RBC, CGBC):
            for delta in cfg.delta_grid:
                scheme = ClusteringScheme(kind, delta)
                ana_p = (analytics.p_ra_rbc(params, delta) if kind == RBC
                         else analytics.p_ra_cgbc(params, delta))
                ana_d = analytics.delay(params, scheme)
                sim_p = sim_ci = sim_d = None
                if cfg.realizations > 0:
                    rep = simulate.estimate_report(
                        params, scheme, cfg.realizations, cfg.seed,
                        cfg.gain_mode, ci_target=None, workers=workers)
                    sim_p, sim_ci = rep.p_ra.mean, rep.p_ra.ci_halfwidth
                    sim_d = rep.delay.mean
                rows.append([mu, kind, delta, ana_p, ana_d, sim_p, sim_ci,
                             sim_d])
    _write_csv(cfg.out, header, rows)
    return [f"wrote {len(rows)} rows to {cfg.out}"]


def _alpha_range(spec: str):
    lo, hi, step = (float(v) for v in spec.split(":"))
    out = []
    a = lo
    while a <= hi + 1e-9:
        out.append(round(a, 6))
        a += step
    return out


def cmd_optimize_sweep(cfg: ExperimentConfig, workers: int,
                       alpha_range: str) -> list[str]:
    """Optimal delta and delay versus the devices-to-BS ratio."""
    header = ["alpha_dev_per_bs", "scheme", "delta_star", "tau_star_db",
              "d_star_slots", "d_conventional_slots", "reduction_pct"]
    rows = []
    for alpha in _alpha_range(alpha_range):
        params = _params_with(cfg, mu=alpha * cfg.lambda_per_km2)
        for kind in (RBC, CGBC):
            res = optimize_delta(params, kind)
            rows.append([alpha, kind, res.delta_star, res.tau_star_db,
                         res.d_star, res.d_conventional, res.reduction_pct])
    _write_csv(cfg.out, header, rows)
    return [f"wrote {len(rows)} rows to {cfg.out}"]


def cmd_efficiency_sweep(cfg: ExperimentConfig, workers: int,
                         alpha_range: str) -> list[str]:
    """Protocol efficiency (delay reduction per unit clustering overhead) at
    the optimal delta versus the devices-to-BS ratio."""
    header = ["alpha_dev_per_bs", "scheme", "delta_star", "zeta_pct"]
    rows = []
    for alpha in _alpha_range(alpha_range):
        params = _params_with(cfg, mu=alpha * cfg.lambda_per_km2)
        for kind in (RBC, CGBC):
            res = optimize_delta(params, kind)
            if res.delta_star >= 1.0:
                zeta = math.nan   # no cluster members, overhead undefined
            else:
                zeta = analytics.efficiency(params, res.scheme)
            rows.append([alpha, kind, res.delta_star, zeta])
    _write_csv(cfg.out, header, rows)
    return [f"wrote {len(rows)} rows to {cfg.out}"]


def cmd_validate(cfg: ExperimentConfig, workers: int,
                 perturb_theta_ra_db: float) -> tuple[list[str], bool]:
    """Analytic-vs-simulated deltas with pass/fail per tolerance, as JSON.

    ``perturb_theta_ra_db`` shifts the analytic side only; it exists to show
    the harness fails when the two sides genuinely disagree.
    """
    results = []
    sim_kw = _sim_kwargs(cfg, workers)

    def check(name, analytic, estimate, tol):
        diff = abs(analytic - estimate.mean)
        results.append(dict(name=name, analytic=analytic,
                            simulated=estimate.mean,
                            ci95=estimate.ci_halfwidth, abs_diff=diff,
                            tol=tol, passed=bool(diff <= tol)))

    params = cfg.to_params()
    ana_params = dataclasses.replace(
        params, theta_ra_db=params.theta_ra_db + perturb_theta_ra_db)
    for kind, tol in ((RBC, 0.03), (CGBC, 0.05)):
        for delta in (0.2, 0.35, 0.6, 1.0):
            scheme = ClusteringScheme(kind, delta)
            rep = simulate.estimate_report(params, scheme, seed=cfg.seed,
                                           gain_mode=cfg.gain_mode, **sim_kw)
            ana = (analytics.p_ra_rbc(ana_params, delta) if kind == RBC
                   else analytics.p_ra_cgbc(ana_params, delta))
            check(f"p_ra[{kind},delta={delta}]", ana, rep.p_ra, tol)

    thetas = [-10.0, -7.0, -3.0]
    stats = run_campaign(params, ClusteringScheme(RBC, cfg.delta),
                         cfg.realizations if cfg.realizations > 0 else 120,
                         cfg.seed, gain_mode=cfg.gain_mode, workers=workers,
                         theta_c_grid_db=thetas)
    for i, th in enumerate(thetas):
        p = dataclasses.replace(params, theta_c_db=th)
        est = simulate.ratio_estimate(stats.d2d_succ[:, i], stats.d2d_obs)
        check(f"p_c[theta_c={th}dB]", analytics.p_c_d2d(p), est, 0.03)

    emp = stats.hist / stats.hist.sum()
    ana_pmf = analytics.cluster_pmf(cfg.delta, np.arange(max(emp.size, 40)))
    tv = 0.5 * (np.abs(ana_pmf[:emp.size] - emp).sum()
                + ana_pmf[emp.size:].sum())
    results.append(dict(name=f"cluster_pmf_tv[delta={cfg.delta}]",
                        analytic=0.0, simulated=float(tv), ci95=None,
                        abs_diff=float(tv), tol=0.02,
                        passed=bool(tv <= 0.02)))

    ok = all(r["passed"] for r in results)
    payload = dict(params=config_as_dict(cfg), results=results,
                   **{"pass": ok})
    with open(cfg.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
    lines = [f"{r['name']}: {'PASS' if r['passed'] else 'FAIL'} "
             f"(|diff|={r['abs_diff']:.4f} tol={r['tol']})" for r in results]
    lines.append(f"wrote {cfg.out}; overall {'PASS' if ok else 'FAIL'}")
    return lines, ok


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="d2dsched",
        description="Clustered scheduling-request experiments and validation")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--seed", type=int, help="master RNG seed")
    common.add_argument("--out", help="output file path")
    common.add_argument("--realizations", type=int,
                        help="fixed simulation realizations (0: auto CI)")
    common.add_argument("--gain-mode", choices=simulate.GAIN_MODES,
                        help="interferer gain conditioning in the simulator")
    common.add_argument("--workers", type=int, default=1,
                        help="parallel realization workers")
    sub.add_parser("pmf", parents=[common],
                   help="cluster-size distribution, analytic vs empirical")
    sub.add_parser("success-vs-threshold", parents=[common],
                   help="success probabilities vs detection threshold")
    sub.add_parser("delay-vs-delta", parents=[common],
                   help="P_RA and delay vs CH selection probability")
    for name in ("optimize-sweep", "efficiency-sweep"):
        p = sub.add_parser(name, parents=[common],
                           help=f"{name.replace('-', ' ')} over alpha")
        p.add_argument("--alpha-range", default="10:500:10",
                       help="devices-to-BS sweep as min:max:step")
    v = sub.add_parser("validate", parents=[common],
                       help="analytic-vs-simulation validation summary (JSON)")
    v.add_argument("--perturb-theta-ra-db", type=float, default=0.0,
                   help="shift the analytic threshold only (harness self-test)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.realizations is not None:
        overrides["realizations"] = args.realizations
    if args.gain_mode is not None:
        overrides["gain_mode"] = args.gain_mode
    default_ext = "json" if args.command == "validate" else "csv"
    overrides["out"] = args.out or cfg.out or f"{args.command}.{default_ext}"
    cfg = dataclasses.replace(cfg, **overrides)

    ok = True
    if args.command == "pmf":
        lines = cmd_pmf(cfg, args.workers)
    elif args.command == "success-vs-threshold":
        lines = cmd_success_vs_threshold(cfg, args.workers)
    elif args.command == "delay-vs-delta":
        lines = cmd_delay_vs_delta(cfg, args.workers)
    elif args.command == "optimize-sweep":
        lines = cmd_optimize_sweep(cfg, args.workers, args.alpha_range)
    elif args.command == "efficiency-sweep":
        lines = cmd_efficiency_sweep(cfg, args.workers, args.alpha_range)
    elif args.command == "validate":
        lines, ok = cmd_validate(cfg, args.workers, args.perturb_theta_ra_db)
    else:  # pragma: no cover - argparse enforces choices
        raise SystemExit(2)
    for line in lines:
        print(line)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
