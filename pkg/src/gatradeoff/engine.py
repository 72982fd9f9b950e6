"""Binary-coded elitist genetic algorithm engine.

Fitness is the scaled exponential exp(g(theta; y) / tau) of the raw objective;
selection works on log-fitness shifted by the per-generation maximum, which
rescales every fitness by the same positive constant and therefore leaves
roulette probabilities unchanged while avoiding underflow.

Evaluation accounting: the initial population counts as generation 0, so the
cumulative evaluation count after generation g is V(g) = N * (g + 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GaConfigError(ValueError):
    """Invalid GA configuration."""


class RegenerationError(RuntimeError):
    """Admissible chromosome could not be generated within the retry cap."""


REGENERATION_CAP = 1000


@dataclass(frozen=True)
class GaConfig:
    """Operator rates and run length; defaults follow the reference setup."""

    population: int = 50
    crossover_rate: float = 0.7
    mutation_rate: float = 0.1
    generations: int = 1400
    elitism: bool = True
    seed: int = 0
    tau: float = 1.0

    def validate(self, require_mutation: bool = False) -> None:
        if self.population < 1:
            raise GaConfigError("population must be >= 1")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise GaConfigError("crossover rate must be in [0, 1]")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise GaConfigError("mutation rate must be in [0, 1]")
        if self.generations < 0:
            raise GaConfigError("generations must be >= 0")
        if self.tau <= 0.0:
            raise GaConfigError("tau must be > 0")
        if not self.elitism:
            raise GaConfigError("this engine always runs elitist; elitism=False unsupported")
        if require_mutation and self.mutation_rate <= 0.0:
            raise GaConfigError("convergence analysis requires mutation_rate > 0")


@dataclass
class GaTrace:
    """Per-generation best-so-far record of one GA run."""

    generation: np.ndarray          # (G+1,) int
    evaluations: np.ndarray         # (G+1,) int, V(g) = N*(g+1)
    best_objective: np.ndarray      # (G+1,) raw objective of best-so-far
    best_theta: np.ndarray          # (G+1, k) decoded best-so-far
    objective_calls: int            # billed objective evaluations
    uniform_fallback_generations: list[int] = field(default_factory=list)

    @property
    def final_theta(self) -> np.ndarray:
        return self.best_theta[-1]

    @property
    def final_objective(self) -> float:
        return float(self.best_objective[-1])


def scaled_fitness(raw_objective: float, tau: float) -> float:
    """exp(g / tau); the -inf sentinel of rejected solutions maps to fitness 0."""
    if tau <= 0.0:
        raise GaConfigError("tau must be > 0")
    if raw_objective == -np.inf:
        return 0.0
    return float(np.exp(raw_objective / tau))


def selection_probabilities(log_fitness: np.ndarray) -> tuple[np.ndarray, bool]:
    """Roulette probabilities from log-fitness values.

    Subtracting the maximum before exponentiation multiplies every fitness by
    the same constant, so the distribution is exactly preserved.  If every
    entry is -inf the selection falls back to uniform; the second return value
    flags that case.
    """
    log_fitness = np.asarray(log_fitness, dtype=float)
    m = np.max(log_fitness)
    if m == -np.inf:
        n = log_fitness.size
        return np.full(n, 1.0 / n), True
    w = np.exp(log_fitness - m)
    return w / w.sum(), False


def roulette_select(fitnesses: np.ndarray, rng: np.random.Generator) -> int:
    """Sample one index proportionally to (nonnegative) fitness."""
    f = np.asarray(fitnesses, dtype=float)
    if np.any(f < 0):
        raise ValueError("fitness values must be nonnegative")
    with np.errstate(divide="ignore"):
        probs, _ = selection_probabilities(np.log(f))
    return int(rng.choice(f.size, p=probs))


def single_point_crossover(
    parent1: np.ndarray,
    parent2: np.ndarray,
    crossover_rate: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """With probability pC splice at a uniform cut in {1..M-1}, else copy parents."""
    if parent1.shape != parent2.shape:
        raise ValueError("parents must have equal length")
    if rng.random() < crossover_rate and parent1.size > 1:
        cut = int(rng.integers(1, parent1.size))
        return splice(parent1, parent2, cut)
    return parent1.copy(), parent2.copy()


def splice(parent1: np.ndarray, parent2: np.ndarray, cut: int) -> tuple[np.ndarray, np.ndarray]:
    child1 = np.concatenate([parent1[:cut], parent2[cut:]])
    child2 = np.concatenate([parent2[:cut], parent1[cut:]])
    return child1, child2


def bitflip_mutate(bits: np.ndarray, mutation_rate: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each bit independently with probability pM."""
    flips = rng.random(bits.shape) < mutation_rate
    return np.where(flips, 1 - bits, bits).astype(bits.dtype)


def _random_admissible(problem, rng: np.random.Generator) -> np.ndarray:
    m = problem.coding.total_bits
    for _ in range(REGENERATION_CAP):
        bits = rng.integers(0, 2, size=m, dtype=np.int8)
        if problem.admissible(problem.decode_theta(bits)):
            return bits
    raise RegenerationError(f"no admissible chromosome found in {REGENERATION_CAP} draws")


def _decode_admissible(pop: np.ndarray, problem, rng: np.random.Generator) -> np.ndarray:
    """Decode the population, replacing inadmissible chromosomes (rejected and
    regenerated as fresh uniform draws) in place.  Returns the decoded matrix."""
    thetas = problem.decode_matrix(pop)
    bad = np.nonzero(~_admissible_rows(problem, thetas))[0]
    for i in bad:
        pop[i] = _random_admissible(problem, rng)
        thetas[i] = problem.decode_theta(pop[i])
    return thetas


def _admissible_rows(problem, thetas: np.ndarray) -> np.ndarray:
    batch = getattr(problem, "admissible_batch", None)
    if batch is not None:
        return np.asarray(batch(thetas), dtype=bool)
    return np.fromiter((problem.admissible(t) for t in thetas), dtype=bool, count=len(thetas))


def run_ga(problem, sample, config: GaConfig, rng=None) -> GaTrace:
    """Run one elitist GA on a fixed sample and return its best-so-far trace.

    The loop per generation: roulette selection with replacement, shuffle and
    pair, single-point crossover, bit-flip mutation, evaluation of all N
    offspring, then replacement of the worst offspring by the stored elite
    when the elite is strictly better.  Identical (seed, sample, config)
    reproduces the trace bit for bit.
    """
    config.validate()
    if rng is None:
        rng = np.random.default_rng(config.seed)
    n_pop = config.population
    n_bits = problem.coding.total_bits
    k = problem.coding.n_params
    n_gen = config.generations

    init = getattr(problem, "initial_population", None)
    if init is not None:
        pop = np.asarray(init(n_pop, rng), dtype=np.int8)
        if pop.shape != (n_pop, n_bits):
            raise GaConfigError(f"initial population has shape {pop.shape}")
    else:
        pop = rng.integers(0, 2, size=(n_pop, n_bits), dtype=np.int8)

    generation = np.arange(n_gen + 1, dtype=np.int64)
    evaluations = n_pop * (generation + 1)
    best_objective = np.empty(n_gen + 1)
    best_theta = np.empty((n_gen + 1, k))
    fallback_gens: list[int] = []
    objective_calls = 0

    thetas = _decode_admissible(pop, problem, rng)
    raw = np.asarray(problem.objective_batch(thetas, sample), dtype=float)
    objective_calls += n_pop

    elite_idx = int(np.argmax(raw))
    elite_bits = pop[elite_idx].copy()
    elite_obj = float(raw[elite_idx])
    elite_theta = thetas[elite_idx].copy()
    best_objective[0] = elite_obj
    best_theta[0] = elite_theta

    log_fitness = raw / config.tau

    for g in range(1, n_gen + 1):
        probs, fallback = selection_probabilities(log_fitness)
        if fallback:
            fallback_gens.append(g)
        chosen = rng.choice(n_pop, size=n_pop, p=probs)
        order = rng.permutation(n_pop)
        selected = pop[chosen[order]]

        # paired single-point crossover, vectorized: an effective cut of M
        # reproduces the no-crossover copy
        children = selected.copy()
        n_pairs = n_pop // 2
        if n_pairs and n_bits > 1:
            cuts = rng.integers(1, n_bits, size=n_pairs)
            coins = rng.random(n_pairs) < config.crossover_rate
            cuts = np.where(coins, cuts, n_bits)
            colmask = np.arange(n_bits)[None, :] < cuts[:, None]
            p1 = selected[0 : 2 * n_pairs : 2]
            p2 = selected[1 : 2 * n_pairs : 2]
            children[0 : 2 * n_pairs : 2] = np.where(colmask, p1, p2)
            children[1 : 2 * n_pairs : 2] = np.where(colmask, p2, p1)

        flips = rng.random(children.shape) < config.mutation_rate
        children = np.where(flips, 1 - children, children).astype(np.int8)

        thetas = _decode_admissible(children, problem, rng)
        raw = np.asarray(problem.objective_batch(thetas, sample), dtype=float)
        objective_calls += n_pop

        worst = int(np.argmin(raw))
        if elite_obj > raw[worst]:
            children[worst] = elite_bits
            thetas[worst] = elite_theta
            raw[worst] = elite_obj

        gen_best = int(np.argmax(raw))
        if raw[gen_best] > elite_obj:
            elite_obj = float(raw[gen_best])
            elite_bits = children[gen_best].copy()
            elite_theta = thetas[gen_best].copy()

        best_objective[g] = elite_obj
        best_theta[g] = elite_theta
        pop = children
        log_fitness = raw / config.tau

    return GaTrace(
        generation=generation,
        evaluations=evaluations,
        best_objective=best_objective,
        best_theta=best_theta,
        objective_calls=objective_calls,
        uniform_fallback_generations=fallback_gens,
    )
