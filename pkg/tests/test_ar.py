import numpy as np
import pytest

from gatradeoff.problems.ar import (ArProblem, ArSample, ar_bic, ar_decode,
                                    ar_objective, ar_sampler,
                                    ar_seed_population, exhaustive_bic_search)


def test_objective_white_noise_formula():
    rng = np.random.default_rng(0)
    sample = ar_sampler(120, 0.8, rng)
    n = sample.n
    phi0 = np.zeros(8)
    expected = -np.log(np.sum(sample.y[8:] ** 2) / (n - 8))  # k = 0 term vanishes
    assert ar_objective(phi0, sample) == pytest.approx(expected, rel=1e-12)


def test_objective_penalty_is_log_n_over_n_per_parameter():
    # at identical residual variance, one extra nonzero coefficient costs
    # exactly log(n)/n in the negated objective
    rng = np.random.default_rng(1)
    sample = ar_sampler(100, 0.0, rng)
    n = sample.n
    phi0 = np.zeros(8)
    phi1 = np.zeros(8)
    phi1[3] = 1e-300  # nonzero, negligible effect on residuals
    gap = ar_objective(phi0, sample) - ar_objective(phi1, sample)
    assert gap == pytest.approx(np.log(n) / n, rel=1e-9)


def test_objective_true_model_beats_white_noise_on_ar1_data():
    wins = 0
    for seed in range(30):
        sample = ar_sampler(200, 0.8, np.random.default_rng(seed))
        phi = np.zeros(8)
        phi[0] = 0.8
        wins += ar_objective(phi, sample) > ar_objective(np.zeros(8), sample)
    assert wins == 30


def test_exact_zero_coefficients_do_not_count_as_free():
    rng = np.random.default_rng(2)
    sample = ar_sampler(150, 0.8, rng)
    phi = np.zeros(8)
    phi[0] = 0.5
    with_zero = phi.copy()
    # appending an exact zero elsewhere changes neither sigma2 nor k
    assert ar_bic(phi, sample) == ar_bic(with_zero, sample)
    k1 = np.count_nonzero(phi)
    assert k1 == 1


def test_sampler_autocorrelation_and_reproducibility():
    s = ar_sampler(5000, 0.8, np.random.default_rng(3))
    y = s.y
    lag1 = np.corrcoef(y[1:], y[:-1])[0, 1]
    assert lag1 == pytest.approx(0.8, abs=0.05)
    white = ar_sampler(5000, 0.0, np.random.default_rng(4))
    lag1w = np.corrcoef(white.y[1:], white.y[:-1])[0, 1]
    assert abs(lag1w) < 0.05
    again = ar_sampler(5000, 0.8, np.random.default_rng(3))
    assert np.array_equal(s.y, again.y)


def test_decode_white_noise_and_endpoints():
    assert np.array_equal(ar_decode(np.zeros(64, dtype=int)), np.zeros(8))
    bits = np.zeros(64, dtype=int)
    bits[0] = 1  # presence flag of phi1, magnitude bits zero
    phi = ar_decode(bits)
    assert phi[0] == -2.0 and np.all(phi[1:] == 0)
    bits[1:8] = 1
    assert ar_decode(bits)[0] == 2.0


def test_decode_zero_only_via_flag():
    # with the flag on, the 7-bit magnitude grid cannot represent exactly 0
    rng = np.random.default_rng(5)
    for _ in range(200):
        bits = rng.integers(0, 2, size=64)
        bits[0::8] = 1  # all flags on
        assert np.all(ar_decode(bits) != 0.0)


def test_decode_matrix_matches_scalar():
    problem = ArProblem()
    rng = np.random.default_rng(6)
    pop = rng.integers(0, 2, size=(30, 64), dtype=np.int8)
    mat = problem.decode_matrix(pop)
    for i in range(30):
        assert np.array_equal(mat[i], ar_decode(pop[i]))


def test_seed_population_composition():
    rng = np.random.default_rng(7)
    pop = ar_seed_population(50, rng)
    assert pop.shape == (50, 64)
    # member 0 decodes to white noise (k = 0)
    assert np.count_nonzero(ar_decode(pop[0])) == 0
    # members 1..8 have distinct forced-zero positions
    forced = []
    for i in range(8):
        phi = ar_decode(pop[1 + i])
        assert phi[i] == 0.0
        forced.append(i)
    assert len(set(forced)) == 8
    with pytest.raises(ValueError):
        ar_seed_population(9, rng)


def test_objective_batch_matches_scalar():
    problem = ArProblem()
    sample = problem.sample(100, np.random.default_rng(8))
    rng = np.random.default_rng(9)
    pop = rng.integers(0, 2, size=(25, 64), dtype=np.int8)
    thetas = problem.decode_matrix(pop)
    batch = problem.objective_batch(thetas, sample)
    scalar = [problem.objective(t, sample) for t in thetas]
    assert batch == pytest.approx(scalar, rel=1e-12)


def test_exhaustive_search_lower_bounds_every_vector():
    # the oracle BIC must not exceed the BIC of any coefficient vector
    rng = np.random.default_rng(10)
    sample = ar_sampler(120, 0.8, rng)
    _, best_bic, _ = exhaustive_bic_search(sample)
    problem = ArProblem()
    for _ in range(300):
        bits = rng.integers(0, 2, size=64)
        phi = ar_decode(bits)
        assert ar_bic(phi, sample) >= best_bic - 1e-9


def test_exhaustive_search_identifies_strong_ar1():
    hits = 0
    for seed in range(40):
        sample = ar_sampler(200, 0.8, np.random.default_rng(100 + seed))
        _, _, pattern = exhaustive_bic_search(sample)
        hits += pattern == (0,)
    assert hits >= 34  # about 90% of samples select exactly {phi1}


def test_sampling_estimate_is_full_ar8_least_squares():
    problem = ArProblem()
    sample = problem.sample(300, np.random.default_rng(11))
    est = problem.sampling_estimate(sample)
    assert est.shape == (8,)
    assert np.all(est != 0.0)  # unconstrained LS never lands on exact zero
    assert est[0] == pytest.approx(0.8, abs=0.15)


def test_project_to_grid_preserves_zero_pattern():
    problem = ArProblem()
    theta = np.array([0.813, 0.0, -0.02, 0.0, 0.0, 0.0, 0.0, 3.5])
    grid = problem.project_to_grid(theta)
    assert grid[1] == 0.0 and grid[3] == 0.0
    assert abs(grid[0] - 0.813) <= 0.5 * (4.0 / 127.0)
    assert grid[7] == 2.0          # clipped to the coding interval
    assert grid[2] != 0.0          # nonzero stays nonzero


def test_sample_requires_enough_observations():
    with pytest.raises(ValueError):
        ArSample(y=np.zeros(8))
    with pytest.raises(ValueError):
        ar_sampler(5, 0.8, np.random.default_rng(0))
