import numpy as np
import pytest

from gatradeoff.coding import CodingScheme
from gatradeoff.engine import (GaConfig, GaConfigError, RegenerationError,
                               bitflip_mutate, roulette_select, run_ga,
                               scaled_fitness, selection_probabilities,
                               single_point_crossover, splice)
from gatradeoff.problems.base import Problem


class QuadraticToy(Problem):
    """Maximize -(theta - 0.5)^2 on [-2, 2]; unique optimum well inside."""

    name = "toy"
    param_names = ("t",)

    def __init__(self):
        self.coding = CodingScheme.uniform(1, -2.0, 2.0, 8)
        self.true_theta = np.array([0.5])

    def sample(self, n, rng):
        return np.zeros(n)

    def objective(self, theta, sample):
        return -float((theta[0] - 0.5) ** 2)

    def sample_size(self, sample):
        return sample.shape[0]


class ConstantToy(QuadraticToy):
    def objective(self, theta, sample):
        return 1.25


class NeverAdmissible(QuadraticToy):
    def admissible(self, theta):
        return False


def test_scaled_fitness_values():
    assert scaled_fitness(0.0, 200.0) == 1.0
    assert scaled_fitness(-200.0, 200.0) == pytest.approx(np.exp(-1.0), rel=1e-12)
    assert scaled_fitness(-np.inf, 7.0) == 0.0
    with pytest.raises(GaConfigError):
        scaled_fitness(1.0, 0.0)


def test_selection_probabilities_proportional_and_scale_invariant():
    probs, fallback = selection_probabilities(np.log(np.array([1.0, 3.0])))
    assert not fallback
    assert probs == pytest.approx([0.25, 0.75], rel=1e-12)
    # multiplying fitness by any c > 0 shifts log-fitness by a constant
    for c in [1e-8, 3.7, 1e9]:
        scaled, _ = selection_probabilities(np.log(np.array([1.0, 3.0])) + np.log(c))
        assert scaled == pytest.approx(probs, rel=1e-12, abs=0)


def test_selection_probabilities_underflow_safe():
    # raw fitness exp(-40000) underflows; log-domain must keep the exact ratio
    probs, _ = selection_probabilities(np.array([-40000.0, -40001.0]))
    expected = np.array([np.e / (1 + np.e), 1 / (1 + np.e)])
    assert probs == pytest.approx(expected, rel=1e-12)


def test_selection_all_rejected_falls_back_to_uniform():
    probs, fallback = selection_probabilities(np.full(4, -np.inf))
    assert fallback
    assert probs == pytest.approx([0.25] * 4)


def test_roulette_select_singleton_and_distribution():
    rng = np.random.default_rng(0)
    assert roulette_select(np.array([5.0]), rng) == 0
    draws = np.array([roulette_select(np.array([1.0, 3.0]), rng) for _ in range(4000)])
    assert np.mean(draws == 1) == pytest.approx(0.75, abs=0.03)


def test_crossover_splice_definition():
    c1, c2 = splice(np.array([0, 0, 0, 0]), np.array([1, 1, 1, 1]), 2)
    assert c1.tolist() == [0, 0, 1, 1]
    assert c2.tolist() == [1, 1, 0, 0]


def test_crossover_rate_zero_copies_parents():
    rng = np.random.default_rng(1)
    p1 = np.array([0, 1, 0, 1, 1])
    p2 = np.array([1, 1, 0, 0, 0])
    c1, c2 = single_point_crossover(p1, p2, 0.0, rng)
    assert np.array_equal(c1, p1) and np.array_equal(c2, p2)


def test_crossover_equal_parents_is_identity_for_every_cut():
    p = np.array([1, 0, 1, 1, 0, 0])
    for cut in range(1, 6):
        c1, c2 = splice(p, p, cut)
        assert np.array_equal(c1, p) and np.array_equal(c2, p)


def test_crossover_length_mismatch():
    rng = np.random.default_rng(1)
    with pytest.raises(ValueError):
        single_point_crossover(np.zeros(4), np.zeros(5), 0.5, rng)


def test_mutation_extremes_and_mean_flip_count():
    rng = np.random.default_rng(2)
    bits = rng.integers(0, 2, size=24)
    assert np.array_equal(bitflip_mutate(bits, 0.0, rng), bits)
    assert np.array_equal(bitflip_mutate(bits, 1.0, rng), 1 - bits)
    # binomial mean: 24 * 0.1 = 2.4 flips; 4000 trials give SE ~ 0.023
    flips = [np.sum(bitflip_mutate(bits, 0.1, rng) != bits) for _ in range(4000)]
    assert np.mean(flips) == pytest.approx(2.4, abs=0.12)


def test_run_ga_constant_objective_trace_constant():
    trace = run_ga(ConstantToy(), np.zeros(10), GaConfig(population=12, generations=30, seed=3))
    assert np.all(trace.best_objective == 1.25)


def test_run_ga_monotone_and_eval_count():
    problem = QuadraticToy()
    calls = {"n": 0}
    orig = problem.objective_batch

    def counting(thetas, sample):
        calls["n"] += len(thetas)
        return orig(thetas, sample)

    problem.objective_batch = counting
    cfg = GaConfig(population=14, generations=25, seed=5)
    trace = run_ga(problem, np.zeros(4), cfg)
    assert np.all(np.diff(trace.best_objective) >= 0)
    assert calls["n"] == 14 * 26
    assert trace.objective_calls == 14 * 26
    assert np.array_equal(trace.evaluations, 14 * (np.arange(26) + 1))


def test_run_ga_deterministic():
    cfg = GaConfig(population=10, generations=40, seed=11)
    t1 = run_ga(QuadraticToy(), np.zeros(3), cfg)
    t2 = run_ga(QuadraticToy(), np.zeros(3), cfg)
    assert np.array_equal(t1.best_objective, t2.best_objective)
    assert np.array_equal(t1.best_theta, t2.best_theta)


def test_run_ga_finds_quadratic_optimum():
    trace = run_ga(QuadraticToy(), np.zeros(3), GaConfig(population=30, generations=150, seed=1))
    step = 4.0 / 255.0
    # best representable point is within half a grid step of 0.5
    assert abs(trace.final_theta[0] - 0.5) <= step
    assert trace.final_objective >= -(step ** 2)


def test_run_ga_zero_generations_records_initial_population_only():
    trace = run_ga(QuadraticToy(), np.zeros(3), GaConfig(population=8, generations=0, seed=2))
    assert trace.generation.tolist() == [0]
    assert trace.objective_calls == 8


def test_regeneration_cap_error():
    with pytest.raises(RegenerationError):
        run_ga(NeverAdmissible(), np.zeros(3), GaConfig(population=6, generations=1, seed=0))


def test_config_validation():
    with pytest.raises(GaConfigError):
        GaConfig(population=0).validate()
    with pytest.raises(GaConfigError):
        GaConfig(crossover_rate=1.5).validate()
    with pytest.raises(GaConfigError):
        GaConfig(mutation_rate=0.0).validate(require_mutation=True)
    GaConfig().validate(require_mutation=True)
