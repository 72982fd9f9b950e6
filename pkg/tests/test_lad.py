import numpy as np
import pytest

from gatradeoff.problems.lad import LadProblem, LadSample, lad_objective, lad_sampler


def test_objective_zero_on_exact_fit():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((30, 2))
    beta = np.array([0.5, 0.5, -0.5])
    y = beta[0] + x @ beta[1:]
    assert lad_objective(beta, LadSample(y=y, x=x)) == 0.0


def test_objective_hand_value():
    # y = (1, 1), zero covariates, b0 = 0: mean absolute residual is 1
    sample = LadSample(y=np.array([1.0, 1.0]), x=np.zeros((2, 2)))
    assert lad_objective(np.array([0.0, 3.0, -1.0]), sample) == -1.0


def test_objective_symmetric_residual_flip():
    # residuals (+r, -r) contribute equally
    sample = LadSample(y=np.array([2.0, -2.0]), x=np.zeros((2, 2)))
    up = lad_objective(np.array([0.0, 0, 0]), sample)
    sample_flipped = LadSample(y=np.array([-2.0, 2.0]), x=np.zeros((2, 2)))
    assert lad_objective(np.array([0.0, 0, 0]), sample_flipped) == up


def test_objective_permutation_invariant():
    rng = np.random.default_rng(1)
    sample = lad_sampler(50, (0.5, 0.5, -0.5), rng)
    perm = rng.permutation(50)
    shuffled = LadSample(y=sample.y[perm], x=sample.x[perm])
    beta = np.array([0.2, -0.3, 0.9])
    assert lad_objective(beta, shuffled) == pytest.approx(
        lad_objective(beta, sample), rel=1e-15)


def test_sampler_reproducible_and_sized():
    s1 = lad_sampler(200, (0.5, 0.5, -0.5), np.random.default_rng(42))
    s2 = lad_sampler(200, (0.5, 0.5, -0.5), np.random.default_rng(42))
    assert s1.n == 200
    assert np.array_equal(s1.y, s2.y) and np.array_equal(s1.x, s2.x)
    assert lad_sampler(1, (0.5, 0.5, -0.5), np.random.default_rng(0)).n == 1


def test_sampler_median_recovers_intercept():
    # y - 0.5 x1 + 0.5 x2 = 0.5 + eps with symmetric t5 noise
    s = lad_sampler(60000, (0.5, 0.5, -0.5), np.random.default_rng(7))
    med = np.median(s.y - 0.5 * s.x[:, 0] + 0.5 * s.x[:, 1])
    assert med == pytest.approx(0.5, abs=0.03)


def test_problem_objective_is_sum_scale():
    problem = LadProblem()
    rng = np.random.default_rng(3)
    sample = problem.sample(40, rng)
    beta = np.array([0.1, 0.2, 0.3])
    assert problem.objective(beta, sample) == pytest.approx(
        40 * lad_objective(beta, sample), rel=1e-12)


def test_objective_batch_matches_scalar():
    problem = LadProblem()
    sample = problem.sample(30, np.random.default_rng(4))
    thetas = np.random.default_rng(5).uniform(-2, 2, size=(20, 3))
    batch = problem.objective_batch(thetas, sample)
    scalar = [problem.objective(t, sample) for t in thetas]
    assert batch == pytest.approx(scalar, rel=1e-12)


def test_reference_estimate_exact_fit_recovered():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((60, 2))
    beta = np.array([0.4, -0.7, 1.1])
    sample = LadSample(y=beta[0] + x @ beta[1:], x=x)
    est = LadProblem().reference_estimate(sample)
    assert est == pytest.approx(beta, abs=1e-5)
    assert lad_objective(est, sample) == pytest.approx(0.0, abs=1e-7)


def test_reference_estimate_beats_or_matches_truth():
    problem = LadProblem()
    sample = problem.sample(200, np.random.default_rng(8))
    est = problem.reference_estimate(sample)
    assert lad_objective(est, sample) >= lad_objective(problem.true_theta, sample)


def test_sample_csv_round_trip():
    problem = LadProblem()
    sample = problem.sample(25, np.random.default_rng(9))
    cols, rows = problem.sample_to_rows(sample)
    assert cols == ["y", "x1", "x2"] and rows.shape == (25, 3)
    back = problem.sample_from_rows(rows)
    assert np.array_equal(back.y, sample.y) and np.array_equal(back.x, sample.x)
