import numpy as np
import pytest
from scipy.special import erfinv, ndtr

from gatradeoff.problems.gk import (GkDomainError, GkInversionError, GkParams,
                                    GkProblem, U_EPS, gk_invert, gk_loglik,
                                    gk_loglik_batch, gk_quantile,
                                    gk_quantile_deriv, gk_sampler)

TYPICAL = GkParams(3.0, 1.0, 2.0, 0.5)


def test_quantile_median_is_location():
    for params in [TYPICAL, GkParams(-4.0, 2.5, -1.0, 0.1)]:
        assert gk_quantile(0.5, params) == pytest.approx(params.A, abs=1e-14)


def test_quantile_normal_subcase():
    params = GkParams(1.5, 2.0, 0.0, 0.0)
    for u in [0.1, 0.25, 0.5, 0.9]:
        z = float(np.sqrt(2) * erfinv(2 * u - 1))
        assert gk_quantile(u, params) == pytest.approx(1.5 + 2.0 * z, rel=1e-10)


def test_quantile_worked_value():
    # u = Phi(1): z = 1, tanh(1) = (1 - e^-2)/(1 + e^-2), (1 + 1)^0.5 = sqrt(2)
    expected = 3.0 + np.sqrt(2.0) * (1.0 + 0.8 * np.tanh(1.0))
    got = gk_quantile(float(ndtr(1.0)), TYPICAL)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(5.2759, abs=5e-5)


def test_quantile_rejects_bad_domain():
    with pytest.raises(GkDomainError):
        gk_quantile(0.0, TYPICAL)
    with pytest.raises(GkDomainError):
        gk_quantile(1.0, TYPICAL)
    with pytest.raises(GkDomainError):
        GkParams(0.0, -1.0, 0.0, 0.0)
    with pytest.raises(GkDomainError):
        GkParams(0.0, 1.0, 0.0, -0.5)


def test_quantile_strictly_increasing_on_grid():
    us = np.linspace(1e-6, 1 - 1e-6, 4001)
    for params in [TYPICAL, GkParams(0, 1, 0, 0), GkParams(-5, 2, -3, 0.2),
                   GkParams(2, 0.5, 8, 3.0), GkParams(1, 9, 0, -0.4)]:
        q = gk_quantile(us, params)
        assert np.all(np.diff(q) > 0)


def test_invert_location_gives_half():
    assert gk_invert(3.0, TYPICAL) == pytest.approx(0.5, abs=1e-12)


def test_invert_round_trip():
    u0 = 0.841345
    x = gk_quantile(u0, TYPICAL)
    assert gk_invert(x, TYPICAL) == pytest.approx(u0, abs=1e-6)
    rng = np.random.default_rng(0)
    xs = gk_sampler(500, TYPICAL, rng)
    for x in xs[:60]:
        u = gk_invert(x, TYPICAL)
        assert abs(gk_quantile(u, TYPICAL) - x) <= 1e-8


def test_invert_out_of_range_raises():
    lo = gk_quantile(U_EPS, TYPICAL)
    with pytest.raises(GkInversionError):
        gk_invert(lo - 1.0, TYPICAL)


def test_deriv_matches_central_differences():
    rng = np.random.default_rng(1)
    for params in [TYPICAL, GkParams(0, 1, 0, 0), GkParams(-2, 3, 1, 1.5)]:
        us = rng.uniform(0.01, 0.99, 50)
        h = 1e-6
        fd = (gk_quantile(us + h, params) - gk_quantile(us - h, params)) / (2 * h)
        analytic = gk_quantile_deriv(us, params)
        assert analytic == pytest.approx(fd, rel=1e-6)


def test_loglik_normal_subcase_closed_form():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(400)
    ll = gk_loglik(GkParams(0.0, 1.0, 0.0, 0.0), x)
    closed = float(np.sum(-0.5 * x * x - 0.5 * np.log(2 * np.pi)))
    assert ll == pytest.approx(closed, abs=1e-8)


def test_loglik_scale_family_shift():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(200)
    base = gk_loglik(GkParams(0.0, 1.0, 0.0, 0.0), x)
    s = 2.5
    scaled = gk_loglik(GkParams(0.0, s, 0.0, 0.0), s * x)
    assert scaled == pytest.approx(base - 200 * np.log(s), rel=1e-10)


def test_loglik_matches_scalar_inversion_route():
    rng = np.random.default_rng(4)
    x = gk_sampler(150, TYPICAL, rng)
    batch = gk_loglik(TYPICAL, x)
    us = np.array([gk_invert(xi, TYPICAL) for xi in x])
    scalar = -float(np.sum(np.log(gk_quantile_deriv(us, TYPICAL))))
    assert batch == pytest.approx(scalar, rel=1e-9)


def test_loglik_finite_difference_density_oracle():
    # density f(x) = 1 / Q'(Q^{-1}(x)) also equals dF/dx with F = Q^{-1}
    rng = np.random.default_rng(5)
    x = gk_sampler(40, TYPICAL, rng)
    h = 1e-6
    fd_density = np.array([
        (gk_invert(xi + h, TYPICAL) - gk_invert(xi - h, TYPICAL)) / (2 * h) for xi in x
    ])
    ll = gk_loglik(TYPICAL, x)
    assert ll == pytest.approx(float(np.sum(np.log(fd_density))), rel=1e-4)


def test_loglik_batch_flags_inadmissible_and_unexplainable():
    rng = np.random.default_rng(6)
    x = gk_sampler(100, TYPICAL, rng)
    thetas = np.array([
        [3.0, 1.0, 2.0, 0.5],
        [3.0, 0.0, 2.0, 0.5],      # B = 0 inadmissible
        [3.0, 1.0, 2.0, -0.5],     # k = -0.5 inadmissible
        [100.0, 1e-3, 0.0, 0.0],   # support nowhere near the data
    ])
    ll = gk_loglik_batch(thetas, x)
    assert np.isfinite(ll[0])
    assert ll[1] == -np.inf and ll[2] == -np.inf and ll[3] == -np.inf


def test_sampler_reproducible_median_near_location():
    s1 = gk_sampler(20000, TYPICAL, np.random.default_rng(7))
    s2 = gk_sampler(20000, TYPICAL, np.random.default_rng(7))
    assert np.array_equal(s1, s2)
    assert np.median(s1) == pytest.approx(3.0, abs=0.05)


def test_sampler_normal_subcase_quantiles():
    x = gk_sampler(40000, GkParams(0.0, 1.0, 0.0, 0.0), np.random.default_rng(8))
    for q, z in [(0.25, -0.67449), (0.75, 0.67449)]:
        assert np.quantile(x, q) == pytest.approx(z, abs=0.03)


def test_problem_objective_batch_matches_scalar():
    problem = GkProblem()
    x = problem.sample(80, np.random.default_rng(9))
    rng = np.random.default_rng(10)
    pop = rng.integers(0, 2, size=(20, 28), dtype=np.int8)
    thetas = problem.decode_matrix(pop)
    batch = problem.objective_batch(thetas, x)
    for i in range(20):
        assert batch[i] == pytest.approx(problem.objective(thetas[i], x), rel=1e-12) \
            or (batch[i] == -np.inf and problem.objective(thetas[i], x) == -np.inf)


def test_reference_estimate_recovers_normal_subcase():
    problem = GkProblem()
    rng = np.random.default_rng(11)
    x = gk_sampler(800, GkParams(0.0, 1.0, 0.0, 0.0), rng)
    est = problem.reference_estimate(x)
    assert est[2] == pytest.approx(0.0, abs=0.25)   # skewness
    assert est[3] == pytest.approx(0.0, abs=0.25)   # kurtosis
    assert est[0] == pytest.approx(0.0, abs=0.2)
    assert est[1] == pytest.approx(1.0, abs=0.25)


def test_coding_box_matches_problem():
    problem = GkProblem()
    assert problem.coding.total_bits == 28
    lows = [p.lower for p in problem.coding.params]
    highs = [p.upper for p in problem.coding.params]
    assert lows == [-10.0, 0.0, -10.0, -0.5]
    assert highs == [10.0, 10.0, 10.0, 10.0]
    # all-zero magnitude bits decode to the inadmissible lower endpoints
    theta = problem.decode_theta(np.zeros(28, dtype=int))
    assert theta[1] == 0.0 and theta[3] == -0.5
    assert not problem.admissible(theta)
