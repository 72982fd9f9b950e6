"""Autoregressive model building: joint subset identification and estimation.

Candidate models are AR(8) coefficient vectors in which exact zeros mark
excluded lags.  The criterion is BIC = n * log(sigma2) + k * log(n) with the
conditional residual variance sigma2 = sum_{t=9..n} (y_t - sum_j phi_j
y_{t-j})^2 / (n - 8) (conditioning on the first 8 observations for every
candidate, divisor n - 8) and k the number of nonzero coefficients.  The raw
GA objective is -BIC; `ar_objective` reports -BIC/n.

Coding: 8 bits per coefficient, the first being a presence flag.  Flag 0
decodes to an exact zero; flag 1 decodes the remaining 7 bits onto [-2, 2].
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ..coding import CodingScheme, ParamCoding
from .base import Problem

MAX_ORDER = 8
TRUE_PHI1 = 0.8
CODING_INTERVAL = (-2.0, 2.0)
BITS_PER_PARAM = 8          # 1 presence flag + 7 magnitude bits
BURN_IN = 500
SIGMA2_FLOOR = 1e-12
MIN_SEEDED_POPULATION = 10

_MAGNITUDE = ParamCoding(*CODING_INTERVAL, BITS_PER_PARAM - 1)


@dataclass
class ArSample:
    y: np.ndarray
    max_order: int = MAX_ORDER

    def __post_init__(self):
        if self.y.shape[0] <= self.max_order:
            raise ValueError(f"need n > {self.max_order}, got n={self.y.shape[0]}")
        self._lag = None

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def lag_matrix(self) -> np.ndarray:
        """(n - 8, 8) matrix with column j-1 holding y_{t-j} for t = 9..n."""
        if self._lag is None:
            p, n = self.max_order, self.n
            self._lag = np.column_stack([self.y[p - j:n - j] for j in range(1, p + 1)])
        return self._lag


def ar_sampler(n: int, phi1: float, rng: np.random.Generator) -> ArSample:
    """Zero-mean AR(1) with unit-variance Gaussian noise; 500-step burn-in."""
    if n < MAX_ORDER + 1:
        raise ValueError(f"n must be >= {MAX_ORDER + 1}")
    eps = rng.standard_normal(BURN_IN + n)
    y = np.empty(BURN_IN + n)
    y[0] = eps[0]
    for t in range(1, BURN_IN + n):
        y[t] = phi1 * y[t - 1] + eps[t]
    return ArSample(y=y[BURN_IN:].copy())


def _sigma2(phis: np.ndarray, sample: ArSample) -> np.ndarray:
    """Conditional residual variance for each row of a (m, 8) coefficient matrix."""
    resid = sample.y[sample.max_order:][:, None] - sample.lag_matrix() @ phis.T
    s2 = np.sum(resid * resid, axis=0) / (sample.n - sample.max_order)
    if np.any(s2 <= SIGMA2_FLOOR):
        warnings.warn("degenerate zero residual variance clamped", RuntimeWarning)
        s2 = np.maximum(s2, SIGMA2_FLOOR)
    return s2


def ar_bic(phi: np.ndarray, sample: ArSample) -> float:
    """BIC = n log sigma2 + k log n, k counting nonzero coefficients."""
    phi = np.asarray(phi, dtype=float)
    s2 = _sigma2(phi[None, :], sample)[0]
    k = int(np.count_nonzero(phi))
    return float(sample.n * np.log(s2) + k * np.log(sample.n))


def ar_objective(phi: np.ndarray, sample: ArSample) -> float:
    """-BIC(phi; y) / n."""
    return -ar_bic(phi, sample) / sample.n


def ar_decode(bits: np.ndarray) -> np.ndarray:
    """Decode a 64-bit chromosome into 8 coefficients with representable zeros."""
    bits = np.asarray(bits)
    if bits.shape != (MAX_ORDER * BITS_PER_PARAM,):
        raise ValueError(f"expected {MAX_ORDER * BITS_PER_PARAM} bits, got {bits.shape}")
    groups = bits.reshape(MAX_ORDER, BITS_PER_PARAM)
    weights = 2.0 ** np.arange(BITS_PER_PARAM - 1)
    t = groups[:, 1:].astype(float) @ weights
    phi = _MAGNITUDE.lower + _MAGNITUDE.step * t
    return np.where(groups[:, 0] == 1, phi, 0.0)


def ar_seed_population(n_pop: int, rng: np.random.Generator) -> np.ndarray:
    """Initial population forcing the white-noise and single-zero chromosomes.

    Member 0 is all zeros; members 1..8 have parameter i's presence flag
    forced to 0 (all other genes uniform); the rest are uniform random.
    """
    if n_pop < MIN_SEEDED_POPULATION:
        raise ValueError(f"seeded AR population needs N >= {MIN_SEEDED_POPULATION}")
    m = MAX_ORDER * BITS_PER_PARAM
    pop = rng.integers(0, 2, size=(n_pop, m), dtype=np.int8)
    pop[0] = 0
    for i in range(MAX_ORDER):
        pop[1 + i, i * BITS_PER_PARAM] = 0
    return pop


class ArProblem(Problem):
    name = "ar"
    param_names = tuple(f"phi{i}" for i in range(1, MAX_ORDER + 1))

    def __init__(self):
        self.coding = CodingScheme.uniform(MAX_ORDER, *CODING_INTERVAL, BITS_PER_PARAM)
        self.true_theta = np.zeros(MAX_ORDER)
        self.true_theta[0] = TRUE_PHI1

    def decode_theta(self, bits: np.ndarray) -> np.ndarray:
        return ar_decode(bits)

    def decode_matrix(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits)
        groups = bits.reshape(bits.shape[0], MAX_ORDER, BITS_PER_PARAM)
        weights = 2.0 ** np.arange(BITS_PER_PARAM - 1)
        t = groups[:, :, 1:].astype(float) @ weights
        phi = _MAGNITUDE.lower + _MAGNITUDE.step * t
        return np.where(groups[:, :, 0] == 1, phi, 0.0)

    def project_to_grid(self, theta: np.ndarray) -> np.ndarray:
        """Zeros stay exact (flag off); nonzeros snap to the 7-bit magnitude grid."""
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for i, v in enumerate(theta):
            if v != 0.0:
                t = int(np.clip(round((v - _MAGNITUDE.lower) / _MAGNITUDE.step),
                                0, 2**_MAGNITUDE.bits - 1))
                out[i] = _MAGNITUDE.lower + _MAGNITUDE.step * t
        return out

    def initial_population(self, n_pop: int, rng: np.random.Generator) -> np.ndarray:
        return ar_seed_population(n_pop, rng)

    def sample(self, n: int, rng: np.random.Generator) -> ArSample:
        return ar_sampler(n, TRUE_PHI1, rng)

    def objective(self, theta: np.ndarray, sample: ArSample) -> float:
        return -ar_bic(theta, sample)

    def objective_batch(self, thetas: np.ndarray, sample: ArSample) -> np.ndarray:
        s2 = _sigma2(thetas, sample)
        k = np.count_nonzero(thetas, axis=1)
        return -(sample.n * np.log(s2) + k * np.log(sample.n))

    def reference_estimate(self, sample: ArSample) -> np.ndarray:
        phi, _, _ = exhaustive_bic_search(sample)
        return phi

    def sampling_estimate(self, sample: ArSample) -> np.ndarray:
        """Full AR(8) conditional least squares, no subset selection.

        This is the asymptotically efficient estimator whose dispersion defines
        the sampling-variance component; the BIC subset oracle remains the
        per-sample optimization target for the GA.
        """
        z = sample.lag_matrix()
        resp = sample.y[sample.max_order:]
        phi, *_ = np.linalg.lstsq(z, resp, rcond=None)
        return phi

    def sample_size(self, sample: ArSample) -> int:
        return sample.n

    def sample_to_rows(self, sample: ArSample):
        return ["y"], sample.y[:, None]

    def sample_from_rows(self, rows: np.ndarray) -> ArSample:
        rows = np.asarray(rows, dtype=float)
        return ArSample(y=rows.reshape(-1).copy())


def exhaustive_bic_search(sample: ArSample) -> tuple[np.ndarray, float, tuple[int, ...]]:
    """Exact BIC minimizer over all 256 zero patterns with per-pattern LS.

    Returns (coefficient vector, BIC, nonzero lag indices).  Within each
    pattern the conditional least-squares solution minimizes sigma2, so the
    returned BIC lower-bounds the BIC of every real coefficient vector.
    """
    p = sample.max_order
    z = sample.lag_matrix()
    resp = sample.y[p:]
    gram = z.T @ z
    xty = z.T @ resp
    yty = float(resp @ resp)
    n, dof = sample.n, sample.n - p
    log_n = np.log(n)

    best_bic = np.inf
    best_phi = np.zeros(p)
    best_pattern: tuple[int, ...] = ()
    for k in range(p + 1):
        for pattern in combinations(range(p), k):
            if k == 0:
                rss = yty
                coef = None
            else:
                idx = list(pattern)
                coef = np.linalg.solve(gram[np.ix_(idx, idx)], xty[idx])
                rss = yty - 2.0 * coef @ xty[idx] + coef @ gram[np.ix_(idx, idx)] @ coef
            s2 = max(rss / dof, SIGMA2_FLOOR)
            bic = n * np.log(s2) + k * log_n
            if bic < best_bic:
                best_bic = bic
                best_pattern = pattern
                best_phi = np.zeros(p)
                if coef is not None:
                    best_phi[list(pattern)] = coef
    return best_phi, float(best_bic), best_pattern
