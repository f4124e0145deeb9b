"""Command-line surface for reproducible experiments.

Subcommands:

* ``simulate CONFIG``   one finite-system run (or all three disciplines on a
  shared stream with ``--crn``); per-job CSV plus summary JSON.
* ``table1``            the 3x3 mean-sojourn comparison (three job-size laws
  x three disciplines) at n=1000, 30000 jobs; ``--scale s`` divides n and
  the total arrival rate jointly for desk-scale runs.
* ``figures``           tail-distribution data for the two comparison panels
  and the running-mean run at the stability boundary, with rendered PNGs
  alongside the CSVs.
* ``limit CONFIG``      population-dynamics pool and limit CCDF exports.
* ``asymptotics CONFIG`` stability report, tail root, H estimate, and the
  approximation-vs-empirical tail table.
* ``boundary CONFIG``   critical per-server intensity for the configured law.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
Same seed and config give byte-identical CSV artifacts, independent of the
worker count.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    boundary_lambda, cl_tail, estimate_H, recommended_generations,
    solve_theta, stability_margin,
)
from .config import ExperimentConfig, load_experiment
from .dists import MixedPoissonPareto, MinWithCap, ServiceModel, UniformService
from .engine import SimConfig, generate_job_stream, run_discipline
from .errors import ConfigError, NoCramerRootError, NumericError
from .limit import LimitParams, popdyn_pool, sojourn_limit_samples, waiting_limit_samples
from .reporting import (
    fmt, plot_ccdfs, plot_running_mean, plot_table1, summary_dict,
    write_ccdf_csv, write_comparison_csv, write_jobs_csv, write_manifest,
    write_pool_csv, write_running_mean_csv, write_summary_json,
)
from .rng import RandomStream
from .stats import default_ccdf_grid, empirical_ccdf, running_mean

TABLE1_ROWS = (
    ("en2", 2.0 / 3.0, 100.0),
    ("en10", 6.0, 6.5),
    ("en100", 66.0, 0.06),
)
TABLE1_N = 1000
TABLE1_JOBS = 30_000
MAX_GENERATIONS = 400


def _base_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="syncq", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"syncq {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one configuration")
    sim.add_argument("config")
    sim.add_argument("--crn", action="store_true",
                     help="run all three disciplines on one shared stream")
    sim.add_argument("--discipline", choices=["syncb", "splitmerge", "mgn"])
    sim.add_argument("--seed", type=int)
    sim.add_argument("--jobs", type=int)
    sim.add_argument("--out", default="out")

    t1 = sub.add_parser("table1", help="mean-sojourn comparison grid")
    t1.add_argument("--scale", type=int, default=1,
                    help="divide n and the total arrival rate by this factor")
    t1.add_argument("--jobs", type=int, default=TABLE1_JOBS)
    t1.add_argument("--seed", type=int, default=0)
    t1.add_argument("--out", default="out")
    t1.add_argument("--workers", type=int, default=1)
    t1.add_argument("--no-plots", action="store_true")

    fig = sub.add_parser("figures", help="tail panels and boundary run data")
    fig.add_argument("--scale", type=int, default=1)
    fig.add_argument("--jobs", type=int, default=TABLE1_JOBS)
    fig.add_argument("--seed", type=int, default=0)
    fig.add_argument("--out", default="out")
    fig.add_argument("--pool-size", type=int, default=100_000)
    fig.add_argument("--limit-draws", type=int, default=200_000)
    fig.add_argument("--no-plots", action="store_true")

    lim = sub.add_parser("limit", help="limiting waiting/sojourn samplers")
    lim.add_argument("config")
    lim.add_argument("--seed", type=int)
    lim.add_argument("--out", default="out")
    lim.add_argument("--pool-size", type=int)
    lim.add_argument("--generations", type=int)
    lim.add_argument("--draws", type=int, default=200_000)
    lim.add_argument("--sizing", choices=["typical", "size_biased"], default="typical",
                     help="branch piece-count law; size_biased matches the finite system")

    asy = sub.add_parser("asymptotics", help="stability, tail root and H")
    asy.add_argument("config")
    asy.add_argument("--seed", type=int)
    asy.add_argument("--out", default="out")
    asy.add_argument("--samples", type=int)
    asy.add_argument("--conditioned", action="store_true")
    asy.add_argument("--no-plots", action="store_true")

    bnd = sub.add_parser("boundary", help="critical per-server intensity")
    bnd.add_argument("config")
    bnd.add_argument("--out", default="out")
    return p


def _effective(cfg: ExperimentConfig, args) -> ExperimentConfig:
    sim = cfg.sim
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "jobs", None) is not None:
        updates["horizon_jobs"] = args.jobs
    if updates:
        sim = dataclasses.replace(sim, **updates)
    disc = cfg.discipline
    if getattr(args, "crn", False):
        disc = "all-crn"
    elif getattr(args, "discipline", None):
        disc = args.discipline
    return dataclasses.replace(cfg, sim=sim, discipline=disc)


def _cmd_simulate(args) -> int:
    cfg = _effective(load_experiment(args.config), args)
    sim = cfg.sim
    out = Path(args.out)
    stream = generate_job_stream(sim)
    disciplines = ["syncb", "splitmerge", "mgn"] if cfg.discipline == "all-crn" else [cfg.discipline]
    artifacts = []
    summaries = []
    for name in disciplines:
        result = dataclasses.replace(run_discipline(name, stream, sim.n),
                                     warmup_jobs=sim.warmup_jobs)
        artifacts.append(write_jobs_csv(out / f"jobs_{name}.csv", result))
        artifacts.append(write_summary_json(out / f"summary_{name}.json", result))
        summaries.append(summary_dict(result))
    if len(disciplines) > 1:
        artifacts.append(write_comparison_csv(out / "comparison.csv", summaries))
    write_manifest(out, "simulate", cfg.raw, sim.seed, artifacts,
                   extra={"disciplines": disciplines})
    for s in summaries:
        print(f"{s['discipline']}: mean sojourn {fmt(s['mean_sojourn'])} "
              f"[{fmt(s['ci_lo'])}, {fmt(s['ci_hi'])}]  jobs={s['jobs']}")
    return 0


def _table1_config(beta: float, lam_n: float, scale: int, jobs: int, seed: int) -> SimConfig:
    n = TABLE1_N // scale
    if n < 1:
        raise ConfigError(f"scale {scale} leaves no servers")
    return SimConfig(
        n=n, lam=lam_n / TABLE1_N,
        job_size=MixedPoissonPareto(3.0, beta),
        truncation=MinWithCap(n),
        service=ServiceModel(UniformService(0.0, 1.0)),
        horizon_jobs=jobs, warmup_jobs=0, seed=seed,
    )


def _table1_cell(task) -> list[dict]:
    index, label, beta, lam_n, scale, jobs, seed = task
    sim = _table1_config(beta, lam_n, scale, jobs, seed)
    stream = generate_job_stream(sim, RandomStream(seed, index))
    rows = []
    for name in ("syncb", "splitmerge", "mgn"):
        result = run_discipline(name, stream, sim.n)
        s = summary_dict(result)
        s.update(row=label, mean_jobsize=MixedPoissonPareto(3.0, beta).mean,
                 lambda_n=lam_n / scale, n=sim.n)
        rows.append(s)
    return rows


def _cmd_table1(args) -> int:
    out = Path(args.out)
    tasks = [(i, label, beta, lam_n, args.scale, args.jobs, args.seed)
             for i, (label, beta, lam_n) in enumerate(TABLE1_ROWS)]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_table1_cell, tasks))
    else:
        results = [_table1_cell(t) for t in tasks]
    rows = [r for cell in results for r in cell]
    out.mkdir(parents=True, exist_ok=True)
    table = out / "table1.csv"
    with table.open("w") as fh:
        fh.write("row,mean_jobsize,lambda_n,n,jobs,discipline,"
                 "mean_sojourn,ci_lo,ci_hi,mean_waiting\n")
        for r in rows:
            fh.write(f"{r['row']},{fmt(r['mean_jobsize'])},{fmt(r['lambda_n'])},"
                     f"{r['n']},{r['jobs']},{r['discipline']},{fmt(r['mean_sojourn'])},"
                     f"{fmt(r['ci_lo'])},{fmt(r['ci_hi'])},{fmt(r['mean_waiting'])}\n")
    artifacts = [table]
    if not args.no_plots:
        artifacts.append(plot_table1(out / "table1.png", rows))
    config = {"command": "table1", "scale": args.scale, "jobs": args.jobs}
    write_manifest(out, "table1", config, args.seed, artifacts)
    for r in rows:
        print(f"{r['row']:>6} {r['discipline']:>10}: {fmt(r['mean_sojourn'])} "
              f"[{fmt(r['ci_lo'])}, {fmt(r['ci_hi'])}]")
    return 0


def _limit_curve(params: LimitParams, pool_size: int, draws: int,
                 rng: RandomStream, sizing: str):
    gens = min(MAX_GENERATIONS, recommended_generations(params, sizing=sizing))
    pool = popdyn_pool(params, pool_size, gens, rng, branch_sizing=sizing)
    return pool, sojourn_limit_samples(params, pool, draws, rng.substream(1))


def _cmd_figures(args) -> int:
    out = Path(args.out)
    n = TABLE1_N // args.scale
    if n < 1:
        raise ConfigError(f"scale {args.scale} leaves no servers")
    artifacts = []
    for pi, (label, beta, lam_n) in enumerate(TABLE1_ROWS[:2]):
        panel = out / f"fig3_{label}"
        sim = _table1_config(beta, lam_n, args.scale, args.jobs, args.seed)
        stream = generate_job_stream(sim, RandomStream(args.seed, 10 + pi))
        sync = run_discipline("syncb", stream, sim.n)
        merge = run_discipline("splitmerge", stream, sim.n)
        params = LimitParams(MixedPoissonPareto(3.0, beta),
                             ServiceModel(UniformService(0.0, 1.0)), lam_n / TABLE1_N)
        pool, limit_soj = _limit_curve(params, args.pool_size, args.limit_draws,
                                       RandomStream(args.seed, 20 + pi), "typical")
        grid = default_ccdf_grid(sync.sojourn)
        curves = {
            "syncb": empirical_ccdf(sync.sojourn, grid),
            "splitmerge": empirical_ccdf(merge.sojourn, grid),
            "limit": empirical_ccdf(limit_soj, grid),
        }
        artifacts.append(write_ccdf_csv(panel / "ccdf_syncb.csv", curves["syncb"]))
        artifacts.append(write_ccdf_csv(panel / "ccdf_splitmerge.csv", curves["splitmerge"]))
        artifacts.append(write_ccdf_csv(panel / "ccdf_limit.csv", curves["limit"]))
        sb_margin = stability_margin(params, "size_biased")
        if sb_margin.stable:
            _, sb_soj = _limit_curve(params, args.pool_size, args.limit_draws,
                                     RandomStream(args.seed, 30 + pi), "size_biased")
            sb_curve = empirical_ccdf(sb_soj, grid)
            artifacts.append(write_ccdf_csv(panel / "ccdf_limit_size_biased.csv", sb_curve))
            curves["limit (size-biased)"] = sb_curve
        if not args.no_plots:
            artifacts.append(plot_ccdfs(panel / f"tail_{label}.png", curves,
                                        title=f"sojourn tail, {label}"))

    lam_crit = boundary_lambda(MixedPoissonPareto(3.0, 2.0 / 3.0), UniformService(0.0, 1.0))
    sim = _table1_config(2.0 / 3.0, lam_crit * TABLE1_N, args.scale, args.jobs, args.seed)
    stream = generate_job_stream(sim, RandomStream(args.seed, 40))
    sync = run_discipline("syncb", stream, sim.n)
    merge = run_discipline("splitmerge", stream, sim.n)
    rm_sync = running_mean(sync.sojourn)
    rm_merge = running_mean(merge.sojourn)
    artifacts.append(write_running_mean_csv(out / "running_mean_boundary.csv", rm_sync))
    artifacts.append(write_running_mean_csv(
        out / "running_mean_boundary_splitmerge.csv", rm_merge))
    if not args.no_plots:
        artifacts.append(plot_running_mean(
            out / "running_mean_boundary.png",
            {"syncb": rm_sync, "splitmerge": rm_merge},
            title=f"running mean sojourn at lambda = {lam_crit:.4f}"))
    config = {"command": "figures", "scale": args.scale, "jobs": args.jobs,
              "pool_size": args.pool_size, "limit_draws": args.limit_draws}
    write_manifest(out, "figures", config, args.seed, artifacts,
                   extra={"boundary_lambda": lam_crit})
    print(f"boundary lambda = {fmt(lam_crit)}")
    return 0


def _cmd_limit(args) -> int:
    cfg = _effective(load_experiment(args.config), args)
    out = Path(args.out)
    params = cfg.limit_params()
    rng = RandomStream(cfg.sim.seed, 0)
    pool_size = args.pool_size if args.pool_size is not None else cfg.limit.pool_size
    gens = args.generations if args.generations is not None else cfg.limit.generations
    if gens is None:
        gens = min(MAX_GENERATIONS, recommended_generations(params, sizing=args.sizing))
    pool = popdyn_pool(params, pool_size, gens, rng, branch_sizing=args.sizing)
    waits = waiting_limit_samples(params, pool, args.draws, rng.substream(1))
    sojourns = sojourn_limit_samples(params, pool, args.draws, rng.substream(2))
    artifacts = [
        write_pool_csv(out / "pool.csv", pool.values),
        write_ccdf_csv(out / "ccdf_waiting.csv",
                       empirical_ccdf(waits, default_ccdf_grid(waits))),
        write_ccdf_csv(out / "ccdf_sojourn.csv",
                       empirical_ccdf(sojourns, default_ccdf_grid(sojourns))),
    ]
    write_manifest(out, "limit", cfg.raw, cfg.sim.seed, artifacts,
                   extra={"pool_size": pool_size, "generations": gens,
                          "sizing": args.sizing,
                          "pool_mean": pool.mean(),
                          "mean_waiting": float(waits.mean()),
                          "mean_sojourn": float(sojourns.mean())})
    print(f"pool mean {fmt(pool.mean())}  limit mean waiting {fmt(float(waits.mean()))}  "
          f"mean sojourn {fmt(float(sojourns.mean()))}")
    return 0


def _cmd_asymptotics(args) -> int:
    cfg = _effective(load_experiment(args.config), args)
    out = Path(args.out)
    params = cfg.limit_params()
    report = stability_margin(params)
    if not report.stable:
        raise NoCramerRootError(
            f"no Cramer root: margin {report.margin:.6f} >= 1 at lambda {params.lam}")
    theta = solve_theta(params)
    gens = min(MAX_GENERATIONS, recommended_generations(params, sizing="typical"))
    rng = RandomStream(cfg.sim.seed, 0)
    pool = popdyn_pool(params, cfg.limit.pool_size, gens, rng, branch_sizing="typical")
    samples = args.samples if args.samples is not None else cfg.asymptotics.h_samples
    conditioned = args.conditioned or cfg.asymptotics.conditioned
    h = estimate_H(params, theta, pool, samples, rng.substream(1),
                   conditioned=conditioned)
    result = {
        "lambda_star": params.lambda_star,
        "beta_star": report.beta_star,
        "margin": report.margin,
        "stable": report.stable,
        "theta": theta.theta,
        "derivative": theta.derivative_value,
        "moment_warning": theta.moment_warning,
        "H": h.h,
        "ci": [h.ci[0], h.ci[1]],
        "samples": h.samples_used,
        "conditioned": conditioned,
        "pool_size": pool.size,
        "generations": gens,
    }
    out.mkdir(parents=True, exist_ok=True)
    res_path = out / "asymptotics.json"
    res_path.write_text(json.dumps(result, indent=2) + "\n")
    grid = default_ccdf_grid(pool.values[pool.values > 0])
    emp = empirical_ccdf(pool.values, grid)
    tail_path = out / "cl_vs_empirical.csv"
    with tail_path.open("w") as fh:
        fh.write("x,cl_tail,empirical_ccdf\n")
        for (x, e) in emp:
            fh.write(f"{fmt(x)},{fmt(cl_tail(h.h, theta.theta, x))},{fmt(e)}\n")
    artifacts = [res_path, tail_path]
    if not args.no_plots:
        approx = np.column_stack([emp[:, 0],
                                  [cl_tail(h.h, theta.theta, x) for x in emp[:, 0]]])
        artifacts.append(plot_ccdfs(out / "cl_vs_empirical.png",
                                    {"empirical": emp, "approximation": approx},
                                    title="waiting-time tail"))
    write_manifest(out, "asymptotics", cfg.raw, cfg.sim.seed, artifacts)
    print(f"theta = {fmt(theta.theta)}  H = {fmt(h.h)} "
          f"[{fmt(h.ci[0])}, {fmt(h.ci[1])}]  margin = {fmt(report.margin)}")
    return 0


def _cmd_boundary(args) -> int:
    cfg = load_experiment(args.config)
    out = Path(args.out)
    lam_crit = boundary_lambda(cfg.sim.job_size, cfg.sim.service.marginal)
    margin = stability_margin(
        LimitParams(cfg.sim.job_size, cfg.sim.service, lam_crit)).margin
    out.mkdir(parents=True, exist_ok=True)
    path = out / "boundary.json"
    path.write_text(json.dumps({"boundary_lambda": lam_crit,
                                "margin_at_boundary": margin}, indent=2) + "\n")
    write_manifest(out, "boundary", cfg.raw, cfg.sim.seed, [path],
                   extra={"boundary_lambda": lam_crit})
    print(f"boundary lambda = {fmt(lam_crit)} (margin there = {fmt(margin)})")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "table1": _cmd_table1,
    "figures": _cmd_figures,
    "limit": _cmd_limit,
    "asymptotics": _cmd_asymptotics,
    "boundary": _cmd_boundary,
}


def main(argv=None) -> int:
    parser = _base_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
