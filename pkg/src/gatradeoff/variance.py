"""Monte Carlo estimation of the two variability components.

Sampling variance: dispersion of the (asymptotically efficient) estimator
around the true parameters over independent samples,

    sigma_S_ii = (1/R) sum_r (thetahat_{r,i} - theta_i)^2,
    tr(W_S)    = n * sum_i sigma_S_ii          (consistency rate f(n) = n).

GA variance: dispersion of the per-generation best-so-far around the
per-sample optimum over independent GA runs at fixed data,

    sigmastar_ii(g) = (1/J) sum_j (thetastar_{j,i}(g) - thetahat_i)^2,

computed per dataset against the grid-projected reference optimum and then
averaged pointwise over datasets.  The run-mean-centered variant with divisor
J - 1 is carried alongside as a diagnostic.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .engine import GaConfig, run_ga
from .problems import get_problem
from .problems.base import EstimatorError
from .seeding import STREAM_GA, STREAM_SAMPLING, rng_for

DROP_FLAG_FRACTION = 0.05


@dataclass
class SamplingVarianceReport:
    problem: str
    n: int
    replications: int          # requested
    used: int                  # successful replications
    per_param_msd: np.ndarray  # (k,) sigma_S_ii
    flagged: bool

    @property
    def trace_sigma_s(self) -> float:
        return float(np.sum(self.per_param_msd))

    @property
    def trace_w_s(self) -> float:
        return self.n * self.trace_sigma_s


@dataclass
class GaVarianceCurves:
    problem: str
    n: int
    datasets: int
    runs_per_dataset: int
    population: int
    evaluations: np.ndarray         # (G,) V(g) = N*(g+1), g = 1..G
    sigma: np.ndarray               # (G, k) reference-centered, divisor J
    sigma_run_centered: np.ndarray  # (G, k) mean-centered, divisor J-1
    theta_hat: np.ndarray           # (D, k) reference optima
    theta_hat_grid: np.ndarray      # (D, k) grid-projected reference optima

    @property
    def generations(self) -> np.ndarray:
        return np.arange(1, self.sigma.shape[0] + 1)


def ga_variance_trace(curves: GaVarianceCurves) -> np.ndarray:
    """Per-generation trace: sum of the per-parameter variance curves."""
    return curves.sigma.sum(axis=1)


def _sampling_replication(args):
    problem_name, n, master_seed, r = args
    problem = get_problem(problem_name)
    rng = rng_for(master_seed, STREAM_SAMPLING, r)
    sample = problem.sample(n, rng)
    try:
        theta = problem.sampling_estimate(sample)
    except EstimatorError:
        return r, None
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        return r, None
    return r, theta


def estimate_sampling_variance(
    problem_name: str,
    n: int,
    replications: int,
    master_seed: int,
    workers: int = 1,
) -> SamplingVarianceReport:
    """Mean squared deviation of the sampling estimator from the true vector.

    Failed replications are dropped and counted; losing more than 5% flags
    the report.
    """
    if replications < 2:
        raise ValueError("need at least 2 replications")
    problem = get_problem(problem_name)
    true_theta = problem.true_theta
    tasks = [(problem_name, n, master_seed, r) for r in range(replications)]
    results = _ordered_map(_sampling_replication, tasks, workers)

    acc = np.zeros(problem.n_params)
    used = 0
    for _, theta in results:
        if theta is None:
            continue
        dev = theta - true_theta
        acc += dev * dev
        used += 1
    if used < 2:
        raise EstimatorError(f"only {used} of {replications} replications usable")
    dropped = replications - used
    return SamplingVarianceReport(
        problem=problem_name,
        n=n,
        replications=replications,
        used=used,
        per_param_msd=acc / used,
        flagged=dropped > DROP_FLAG_FRACTION * replications,
    )


def _ga_run_task(args):
    problem_name, sample_rows, config, master_seed, d, j = args
    problem = get_problem(problem_name)
    sample = problem.sample_from_rows(sample_rows)
    rng = rng_for(master_seed, STREAM_GA, d, j)
    trace = run_ga(problem, sample, config, rng=rng)
    return d, j, trace.best_theta, trace.best_objective


def trace_change_points(best_theta: np.ndarray, best_objective: np.ndarray) -> np.ndarray:
    """Generation indices where the best-so-far record changed (always incl. 0)."""
    changed = np.empty(best_objective.shape[0], dtype=bool)
    changed[0] = True
    changed[1:] = (best_objective[1:] != best_objective[:-1]) | np.any(
        best_theta[1:] != best_theta[:-1], axis=1
    )
    return np.nonzero(changed)[0]


def estimate_ga_variance(
    problem_name: str,
    samples: list,
    theta_hats: list[np.ndarray],
    config: GaConfig,
    runs_per_dataset: int,
    master_seed: int,
    workers: int = 1,
    record_sink=None,
) -> GaVarianceCurves:
    """GA variance curves over D fixed datasets with J independent runs each.

    `theta_hats` must hold the precomputed reference optimum of every dataset;
    each is projected onto the problem's coding grid before centering so the
    grid's own resolution does not leave a variance floor.  `record_sink`, when
    given, receives (dataset, run, generation, V, theta, objective) rows at
    every best-so-far change point for persistence.
    """
    if runs_per_dataset < 2:
        raise ValueError("need at least 2 runs per dataset")
    if len(samples) != len(theta_hats):
        raise ValueError("every dataset needs its reference optimum precomputed")
    problem = get_problem(problem_name)
    k = problem.n_params
    n_gen = config.generations
    datasets = len(samples)

    theta_hat = np.asarray(theta_hats, dtype=float).reshape(datasets, k)
    theta_grid = np.array([problem.project_to_grid(t) for t in theta_hat])

    sq_dev = np.zeros((datasets, n_gen, k))    # sum_j (theta* - theta_hat_grid)^2
    lin = np.zeros((datasets, n_gen, k))       # sum_j theta*
    raw_sq = np.zeros((datasets, n_gen, k))    # sum_j theta*^2

    tasks = [
        (problem_name, problem.sample_to_rows(samples[d])[1], config, master_seed, d, j)
        for d in range(datasets)
        for j in range(runs_per_dataset)
    ]
    for d, j, best_theta, best_objective in _ordered_map(_ga_run_task, tasks, workers):
        curve = best_theta[1:]                 # g = 1..G
        dev = curve - theta_grid[d]
        sq_dev[d] += dev * dev
        lin[d] += curve
        raw_sq[d] += curve * curve
        if record_sink is not None:
            for g in trace_change_points(best_theta, best_objective):
                record_sink(d, j, int(g), config.population * (int(g) + 1),
                            best_theta[g], float(best_objective[g]))

    j_count = runs_per_dataset
    sigma9 = sq_dev.mean(axis=0) / j_count
    mean = lin / j_count
    sigma8 = ((raw_sq - j_count * mean * mean) / (j_count - 1)).mean(axis=0)
    sigma8 = np.maximum(sigma8, 0.0)           # guard tiny negative round-off

    return GaVarianceCurves(
        problem=problem_name,
        n=problem.sample_size(samples[0]),
        datasets=datasets,
        runs_per_dataset=runs_per_dataset,
        population=config.population,
        evaluations=config.population * (np.arange(1, n_gen + 1) + 1),
        sigma=sigma9,
        sigma_run_centered=sigma8,
        theta_hat=theta_hat,
        theta_hat_grid=theta_grid,
    )


def curves_from_records(
    records: np.ndarray,
    theta_hat_grid: np.ndarray,
    generations: int,
    population: int,
    runs_per_dataset: int,
) -> np.ndarray:
    """Recompute the reference-centered curves from persisted change-point rows.

    `records` columns: dataset, run, generation, V, theta_1..theta_k.  Rows
    for each run are forward-filled across generations 1..G.
    """
    records = np.asarray(records, dtype=float)
    k = theta_hat_grid.shape[1]
    datasets = int(records[:, 0].max()) + 1
    sq_dev = np.zeros((datasets, generations, k))
    for d in range(datasets):
        for j in range(runs_per_dataset):
            rows = records[(records[:, 0] == d) & (records[:, 1] == j)]
            rows = rows[np.argsort(rows[:, 2])]
            gens = rows[:, 2].astype(int)
            thetas = rows[:, 4:4 + k]
            curve = np.empty((generations + 1, k))
            for g, th in zip(gens, thetas):
                curve[g:] = th
            dev = curve[1:] - theta_hat_grid[d]
            sq_dev[d] += dev * dev
    return sq_dev.mean(axis=0) / runs_per_dataset


def _ordered_map(fn, tasks, workers: int):
    """Map preserving task order; a process pool is used only when workers > 1
    so results (and any floating-point reduction over them) are identical for
    every worker count."""
    if workers <= 1:
        for t in tasks:
            yield fn(t)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, len(tasks) // (8 * workers))
            yield from pool.map(fn, tasks, chunksize=chunk)


def ga_config_for(n: int, population: int, crossover: float, mutation: float,
                  generations: int) -> GaConfig:
    """GA configuration with the fitness scale tied to the sample size."""
    cfg = GaConfig(
        population=population,
        crossover_rate=crossover,
        mutation_rate=mutation,
        generations=generations,
        tau=float(n),
    )
    cfg.validate(require_mutation=True)
    return cfg
