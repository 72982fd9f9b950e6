"""Command-line orchestration: stage commands, pipeline, timing calibration.

Subcommands: run-ga, sampling-var, ga-var, fit-rate, tradeoff, sweep,
calibrate, pipeline.  Exit codes: 0 success, 2 configuration error, 3 stage
failure.  All artifacts are CSV files stamped with the config hash; rerunning
any stage with the same config and master seed reproduces them byte for byte
(timing tables exempt).
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import (RunManifest, StageTimer, read_csv, read_csv_floats,
                        write_csv)
from .config import ConfigError, ExperimentConfig, apply_scale, load_config
from .engine import run_ga
from .problems import PROBLEM_NAMES, get_problem
from .rate import RateFit, fitted_curve, select_rate
from .seeding import STREAM_CALIBRATE, STREAM_DATA, STREAM_GA, rng_for
from .tradeoff import (CostModel, InfeasibleError, power_rate,
                       solve_closed_form, solve_numeric, sweep_surface,
                       timed_cost_comparison)
from .variance import (GaVarianceCurves, estimate_ga_variance,
                       estimate_sampling_variance, ga_config_for,
                       ga_variance_trace)

CALIBRATE_REPETITIONS = 200
_MIN_TIMED_BLOCK = 0.005      # seconds; batch grows until a block exceeds this


def _meta(cfg: ExperimentConfig, **extra) -> dict:
    meta = {"config_hash": cfg.config_hash(), "seed": cfg.master_seed,
            "version": __version__}
    meta.update(extra)
    return meta


def _ga_config(cfg: ExperimentConfig):
    return ga_config_for(cfg.n, cfg.ga.population, cfg.ga.crossover_rate,
                         cfg.ga.mutation_rate, cfg.ga.generations)


# ---------------------------------------------------------------------------
# stages
# ---------------------------------------------------------------------------

def stage_run_ga(cfg: ExperimentConfig, out: Path) -> list[str]:
    problem = get_problem(cfg.problem)
    sample = problem.sample(cfg.n, rng_for(cfg.master_seed, STREAM_DATA, 0))
    ga_cfg = _ga_config(cfg)
    outputs = [_write_sample(cfg, out, problem, sample, 0)]
    for r in range(cfg.runs):
        trace = run_ga(problem, sample, ga_cfg, rng=rng_for(cfg.master_seed, STREAM_GA, 0, r))
        cols = ["generation", "evaluations", "objective", *problem.param_names]
        rows = [
            [int(trace.generation[g]), int(trace.evaluations[g]),
             trace.best_objective[g], *trace.best_theta[g]]
            for g in range(trace.generation.size)
        ]
        path = out / f"ga_trace_{cfg.problem}_run{r}.csv"
        write_csv(path, cols, rows, _meta(cfg, problem=cfg.problem, run=r))
        outputs.append(path.name)
    return outputs


def _write_sample(cfg, out: Path, problem, sample, index: int) -> str:
    cols, rows = problem.sample_to_rows(sample)
    path = out / f"dataset_{cfg.problem}_{index}.csv"
    write_csv(path, cols, rows, _meta(cfg, problem=cfg.problem, dataset=index))
    return path.name


def stage_sampling_var(cfg: ExperimentConfig, out: Path, workers: int) -> list[str]:
    report = estimate_sampling_variance(
        cfg.problem, cfg.n, cfg.monte_carlo.sampling_replications,
        cfg.master_seed, workers=workers)
    problem = get_problem(cfg.problem)
    rows = [[f"msd_{name}", report.per_param_msd[i]]
            for i, name in enumerate(problem.param_names)]
    rows += [
        ["trace_sigma_s", report.trace_sigma_s],
        ["trace_w_s", report.trace_w_s],
        ["n", report.n],
        ["replications", report.replications],
        ["used", report.used],
        ["flagged", report.flagged],
    ]
    path = out / f"sampling_variance_{cfg.problem}.csv"
    write_csv(path, ["field", "value"], rows,
              _meta(cfg, problem=cfg.problem, estimator="sampling", rate_f="n"))
    return [path.name]


def stage_ga_var(cfg: ExperimentConfig, out: Path, workers: int) -> list[str]:
    problem = get_problem(cfg.problem)
    mc = cfg.monte_carlo
    samples = [problem.sample(cfg.n, rng_for(cfg.master_seed, STREAM_DATA, d))
               for d in range(mc.datasets)]
    outputs = [_write_sample(cfg, out, problem, s, d) for d, s in enumerate(samples)]

    theta_hats = [problem.reference_estimate(s) for s in samples]
    ref_rows = []
    for d, th in enumerate(theta_hats):
        grid = problem.project_to_grid(th)
        for i, name in enumerate(problem.param_names):
            ref_rows.append([d, name, th[i], grid[i]])
    ref_path = out / f"dataset_refs_{cfg.problem}.csv"
    write_csv(ref_path, ["dataset", "param", "theta_hat", "theta_hat_grid"],
              ref_rows, _meta(cfg, problem=cfg.problem))
    outputs.append(ref_path.name)

    run_rows: list[list] = []

    def sink(d, j, g, v, theta, objective):
        run_rows.append([d, j, g, v, *theta, objective])

    curves = estimate_ga_variance(
        cfg.problem, samples, theta_hats, _ga_config(cfg),
        mc.runs_per_dataset, cfg.master_seed, workers=workers, record_sink=sink)

    runs_path = out / f"ga_runs_{cfg.problem}.csv"
    write_csv(runs_path,
              ["dataset", "run", "generation", "evaluations",
               *problem.param_names, "objective"],
              run_rows, _meta(cfg, problem=cfg.problem, records="best_so_far_changes"))
    outputs.append(runs_path.name)

    cols = ["generation", "evaluations"]
    cols += [f"var_{p}" for p in problem.param_names]
    cols += [f"var_runcentered_{p}" for p in problem.param_names]
    rows = [
        [int(g), int(curves.evaluations[gi]), *curves.sigma[gi],
         *curves.sigma_run_centered[gi]]
        for gi, g in enumerate(curves.generations)
    ]
    curves_path = out / f"ga_variance_curves_{cfg.problem}.csv"
    write_csv(curves_path, cols, rows,
              _meta(cfg, problem=cfg.problem, n=cfg.n, datasets=mc.datasets,
                    runs_per_dataset=mc.runs_per_dataset,
                    population=cfg.ga.population, tau="n",
                    divisor="J_centered_on_theta_hat_grid"))
    outputs.append(curves_path.name)
    return outputs


def load_curves(cfg: ExperimentConfig, out: Path, problem_name: str) -> GaVarianceCurves:
    meta, cols, data = read_csv_floats(out / f"ga_variance_curves_{problem_name}.csv")
    problem = get_problem(problem_name)
    k = problem.n_params
    sigma = data[:, 2:2 + k]
    sigma8 = data[:, 2 + k:2 + 2 * k]
    return GaVarianceCurves(
        problem=problem_name,
        n=int(meta["n"]),
        datasets=int(meta["datasets"]),
        runs_per_dataset=int(meta["runs_per_dataset"]),
        population=int(meta["population"]),
        evaluations=data[:, 1],
        sigma=sigma,
        sigma_run_centered=sigma8,
        theta_hat=np.full((int(meta["datasets"]), k), np.nan),
        theta_hat_grid=np.full((int(meta["datasets"]), k), np.nan),
    )


def stage_fit_rate(cfg: ExperimentConfig, out: Path) -> list[str]:
    curves = load_curves(cfg, out, cfg.problem)
    fit = select_rate(curves, candidates=cfg.rate.candidates, burn_in=cfg.rate.burn_in)
    problem = get_problem(cfg.problem)

    cols = ["problem", "parameter"]
    cols += [f"r2_a{a!r}" for a in fit.candidates]
    cols += ["w_selected", "selected_exponent", "tie_flag"]
    rows = []
    for i, name in enumerate(problem.param_names):
        rows.append([cfg.problem, name, *fit.r_squared_by_candidate[:, i],
                     fit.coefficients[i], fit.exponent, fit.tie_flag])
    fit_path = out / f"rate_fit_{cfg.problem}.csv"
    write_csv(fit_path, cols, rows,
              _meta(cfg, problem=cfg.problem, burn_in=fit.burn_in,
                    r2_convention="centered", trace_w_ga=repr(fit.trace_w_ga)))

    overlay = fitted_curve(fit, curves.evaluations)
    ov_rows = []
    for i, name in enumerate(problem.param_names):
        for gi, g in enumerate(curves.generations):
            ov_rows.append([name, int(g), int(curves.evaluations[gi]),
                            curves.sigma[gi, i], overlay[gi, i]])
    ov_path = out / f"rate_overlay_{cfg.problem}.csv"
    write_csv(ov_path, ["parameter", "generation", "evaluations", "observed", "fitted"],
              ov_rows, _meta(cfg, problem=cfg.problem, exponent=repr(fit.exponent)))
    return [fit_path.name, ov_path.name]


def _load_fit_summary(out: Path, problem_name: str) -> dict | None:
    """tr(W_S), tr(W_GA) and the selected exponent from stage artifacts."""
    svar = out / f"sampling_variance_{problem_name}.csv"
    rfit = out / f"rate_fit_{problem_name}.csv"
    if not (svar.exists() and rfit.exists()):
        return None
    _, _, rows = read_csv(svar)
    fields = {r[0]: r[1] for r in rows}
    meta, cols, frows = read_csv(rfit)
    w_idx = cols.index("w_selected")
    a_idx = cols.index("selected_exponent")
    return {
        "problem": problem_name,
        "tr_w_s": float(fields["trace_w_s"]),
        "tr_w_ga": sum(float(r[w_idx]) for r in frows),
        "exponent": float(frows[0][a_idx]),
    }


def stage_tradeoff(cfg: ExperimentConfig, out: Path) -> list[str]:
    fits = [f for p in PROBLEM_NAMES if (f := _load_fit_summary(out, p))]
    if not fits:
        raise RuntimeError("no sampling-variance/rate-fit artifacts found; "
                           "run sampling-var, ga-var and fit-rate first")
    t2_rows = [[f["problem"], f["tr_w_s"], f["tr_w_ga"], f["tr_w_ga"] / f["tr_w_s"]]
               for f in fits]
    t2_path = out / "table2.csv"
    write_csv(t2_path, ["problem", "tr_w_s", "tr_w_ga", "ratio"], t2_rows, _meta(cfg))

    sol_rows = []
    cost = CostModel(cfg.cost.sample_cost, cfg.cost.eval_cost, cfg.cost.budget)
    for f in fits:
        n_min = 10 * get_problem(f["problem"]).n_params
        try:
            if f["exponent"] == 1.0:
                sol = solve_closed_form(cost, f["tr_w_s"], f["tr_w_ga"], n_min=n_min)
            else:
                sol = solve_numeric(cost, f["tr_w_s"], f["tr_w_ga"],
                                    h=power_rate(f["exponent"]), n_min=n_min)
        except InfeasibleError:
            continue
        sol_rows.append([
            f["problem"], cost.sample_cost, cost.eval_cost, cost.budget,
            f["exponent"], sol.n_real, sol.v_real, sol.objective_real,
            sol.n_int, sol.v_int, sol.objective_int, sol.method,
            sol.ga_generations(cfg.ga.population),
        ])
    sol_path = out / "tradeoff_solution.csv"
    write_csv(sol_path,
              ["problem", "S", "T", "C", "exponent", "n_opt", "V_opt", "objective",
               "n_int", "V_int", "objective_int", "method", "ga_generations"],
              sol_rows, _meta(cfg))
    return [t2_path.name, sol_path.name]


def stage_sweep(cfg: ExperimentConfig, out: Path) -> list[str]:
    fits = [f for p in PROBLEM_NAMES if (f := _load_fit_summary(out, p))]
    if not fits:
        raise RuntimeError("no fit artifacts found; run the earlier stages first")
    outputs = []
    for f in fits:
        n_min = 10 * get_problem(f["problem"]).n_params
        rows = sweep_surface(f["tr_w_s"], f["tr_w_ga"], cfg.cost.sample_cost_grid,
                             cfg.cost.eval_cost_grid, cfg.cost.budget,
                             exponent=f["exponent"], n_min=n_min)
        path = out / f"figure2_4_{f['problem']}.csv"
        write_csv(path, ["problem", "S", "T", "C", "n_opt", "V_opt", "objective"],
                  [[f["problem"], r["S"], r["T"], r["C"], r["n_opt"], r["v_opt"],
                    r["objective"]] for r in rows],
                  _meta(cfg, problem=f["problem"], exponent=repr(f["exponent"])))
        outputs.append(path.name)

    for f in fits:
        f["t_ratio"] = cfg.cost.t_ratios[f["problem"]]
    n_min = max(10 * get_problem(f["problem"]).n_params for f in fits)
    rows = timed_cost_comparison(fits, cfg.cost.sample_cost_grid, cfg.cost.budget,
                                 corner_eval_cost=cfg.cost.eval_cost, n_min=n_min)
    f5_path = out / "figure5.csv"
    write_csv(f5_path, ["problem", "S", "T", "C", "n_opt", "V_opt", "objective"],
              [[r["problem"], r["S"], r["T"], r["C"], r["n_opt"], r["v_opt"],
                r["objective"]] for r in rows],
              _meta(cfg, t_ratios=";".join(f"{k}:{v}" for k, v in
                                           sorted(cfg.cost.t_ratios.items()))))
    outputs.append(f5_path.name)
    return outputs


def measure_eval_time(problem_name: str, n: int, repetitions: int,
                      master_seed: int) -> dict:
    """Median per-evaluation wall time of the scalar objective at size n."""
    problem = get_problem(problem_name)
    idx = PROBLEM_NAMES.index(problem_name)
    rng = rng_for(master_seed, STREAM_CALIBRATE, idx)
    sample = problem.sample(n, rng)
    thetas = []
    while len(thetas) < 32:
        bits = rng.integers(0, 2, size=problem.coding.total_bits, dtype=np.int8)
        theta = problem.decode_theta(bits)
        if problem.admissible(theta):
            thetas.append(theta)

    batch = 1
    while True:                      # grow until one block out-runs the timer
        t0 = time.perf_counter()
        for i in range(batch):
            problem.objective(thetas[i % 32], sample)
        elapsed = time.perf_counter() - t0
        if elapsed >= _MIN_TIMED_BLOCK or batch >= 4096:
            break
        batch *= 2
    times = np.empty(repetitions)
    for rep in range(repetitions):
        t0 = time.perf_counter()
        for i in range(batch):
            problem.objective(thetas[(rep + i) % 32], sample)
        times[rep] = (time.perf_counter() - t0) / batch
    return {"problem": problem_name, "n": n, "repetitions": repetitions,
            "batch": batch, "t_eval_seconds": float(np.median(times))}


def stage_calibrate(cfg: ExperimentConfig, out: Path,
                    repetitions: int = CALIBRATE_REPETITIONS) -> list[str]:
    if repetitions < 100:
        raise ConfigError("calibration needs at least 100 repetitions")
    results = [measure_eval_time(p, cfg.n, repetitions, cfg.master_seed)
               for p in PROBLEM_NAMES]
    corner = next(r for r in results if r["problem"] == "gk")["t_eval_seconds"]
    rows = [[r["problem"], r["n"], r["repetitions"], r["batch"],
             r["t_eval_seconds"], r["t_eval_seconds"] / corner] for r in results]
    path = out / "calibration.csv"
    write_csv(path, ["problem", "n", "repetitions", "batch",
                     "t_eval_seconds", "ratio_to_gk"],
              rows, _meta(cfg, note="timing; exempt from byte determinism"))
    return [path.name]


PIPELINE_STAGES = ("sampling-var", "ga-var", "fit-rate", "tradeoff", "sweep")


def run_pipeline(cfg: ExperimentConfig, out: Path, workers: int) -> int:
    manifest = RunManifest(config_hash=cfg.config_hash(), master_seed=cfg.master_seed)
    failed = None
    for stage in PIPELINE_STAGES:
        with StageTimer() as timer:
            try:
                outputs = _dispatch_stage(stage, cfg, out, workers)
            except Exception as e:                        # stage failure: keep partials
                manifest.record_stage(stage, [], time.perf_counter() - timer.start,
                                      status=f"failed: {e}")
                failed = stage
                print(f"stage {stage} failed: {e}", file=sys.stderr)
                break
        manifest.record_stage(stage, outputs, timer.seconds)
        print(f"stage {stage}: {timer.seconds:.1f}s, {len(outputs)} file(s)")
    manifest.write(out / "manifest.json")
    (out / "config.json").write_text(cfg.to_json())
    return 3 if failed else 0


def _dispatch_stage(stage: str, cfg: ExperimentConfig, out: Path, workers: int) -> list[str]:
    if stage == "run-ga":
        return stage_run_ga(cfg, out)
    if stage == "sampling-var":
        return stage_sampling_var(cfg, out, workers)
    if stage == "ga-var":
        return stage_ga_var(cfg, out, workers)
    if stage == "fit-rate":
        return stage_fit_rate(cfg, out)
    if stage == "tradeoff":
        return stage_tradeoff(cfg, out)
    if stage == "sweep":
        return stage_sweep(cfg, out)
    if stage == "calibrate":
        return stage_calibrate(cfg, out)
    raise ValueError(f"unknown stage {stage}")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gatradeoff",
        description="GA estimation variability decomposition and budget tradeoff")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run-ga", "sampling-var", "ga-var", "fit-rate", "tradeoff",
                 "sweep", "calibrate", "pipeline"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--threads", type=int, default=None, help="worker processes")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--scale", choices=["desk", "paper"], default=None)
        if name == "calibrate":
            p.add_argument("--repetitions", type=int, default=CALIBRATE_REPETITIONS)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.scale:
            cfg = apply_scale(cfg, args.scale)
        if args.seed is not None:
            cfg = replace(cfg, master_seed=args.seed)
        if args.out is not None:
            cfg = replace(cfg, out_dir=args.out)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("--threads must be >= 1")
            cfg = replace(cfg, threads=args.threads)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = cfg.threads

    if args.command == "pipeline":
        return run_pipeline(cfg, out, workers)
    try:
        with StageTimer() as timer:
            if args.command == "calibrate":
                outputs = stage_calibrate(cfg, out, repetitions=args.repetitions)
            else:
                outputs = _dispatch_stage(args.command, cfg, out, workers)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        print(f"stage {args.command} failed: {e}", file=sys.stderr)
        return 3
    print(f"{args.command}: {timer.seconds:.1f}s  -> " + ", ".join(outputs))
    return 0


if __name__ == "__main__":
    sys.exit(main())
