"""Least absolute deviation regression: y = b0 + b1*x1 + b2*x2 + t5 noise.

The raw GA objective is -sum_i |y_i - b0 - b1 x_i1 - b2 x_i2|, so the scaled
fitness exp(raw / n) matches the exponential-of-mean-absolute-error form.
`lad_objective` reports the per-observation (mean) scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..coding import CodingScheme
from .base import EstimatorError, Problem

TRUE_BETA = (0.5, 0.5, -0.5)
CODING_INTERVAL = (-2.0, 2.0)
BITS_PER_PARAM = 8
NOISE_DF = 5
N_RESTARTS = 5
JITTER_SCALE = 0.25


@dataclass
class LadSample:
    y: np.ndarray
    x: np.ndarray  # (n, 2) covariates

    def __post_init__(self):
        if self.x.shape != (self.y.shape[0], 2):
            raise ValueError(f"covariate shape {self.x.shape} does not match n={self.y.shape[0]}")

    @property
    def n(self) -> int:
        return self.y.shape[0]


def lad_objective(beta: np.ndarray, sample: LadSample) -> float:
    """Negated mean absolute residual."""
    resid = sample.y - beta[0] - sample.x @ np.asarray(beta[1:], dtype=float)
    return float(-np.mean(np.abs(resid)))


def lad_sampler(n: int, beta, rng: np.random.Generator) -> LadSample:
    """Standard-normal covariates, i.i.d. Student-t(5) errors."""
    if n < 1:
        raise ValueError("n must be >= 1")
    x = rng.standard_normal((n, 2))
    eps = rng.standard_t(NOISE_DF, size=n)
    y = beta[0] + x @ np.asarray(beta[1:], dtype=float) + eps
    return LadSample(y=y, x=x)


class LadProblem(Problem):
    name = "lad"
    param_names = ("beta0", "beta1", "beta2")

    def __init__(self):
        self.coding = CodingScheme.uniform(3, *CODING_INTERVAL, BITS_PER_PARAM)
        self.true_theta = np.asarray(TRUE_BETA, dtype=float)

    def sample(self, n: int, rng: np.random.Generator) -> LadSample:
        return lad_sampler(n, self.true_theta, rng)

    def objective(self, theta: np.ndarray, sample: LadSample) -> float:
        return sample.n * lad_objective(theta, sample)

    def objective_batch(self, thetas: np.ndarray, sample: LadSample) -> np.ndarray:
        # residual matrix (n, m): y - b0 - X @ (b1, b2)
        resid = sample.y[:, None] - thetas[:, 0][None, :] - sample.x @ thetas[:, 1:].T
        return -np.sum(np.abs(resid), axis=0)

    def reference_estimate(self, sample: LadSample, seed: int = 0) -> np.ndarray:
        """Nelder-Mead on the absolute-deviation sum from the least-squares start.

        The LS start plus four jittered copies are each polished; best kept.
        """
        design = np.column_stack([np.ones(sample.n), sample.x])
        ls, *_ = np.linalg.lstsq(design, sample.y, rcond=None)
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(11,)))
        starts = [ls] + [ls + JITTER_SCALE * rng.standard_normal(3) for _ in range(N_RESTARTS - 1)]

        best = None
        for start in starts:
            res = minimize(
                lambda b: -lad_objective(b, sample),
                start,
                method="Nelder-Mead",
                options={"xatol": 1e-7, "fatol": 1e-10, "maxiter": 4000, "maxfev": 4000},
            )
            if best is None or res.fun < best.fun:
                best = res
        if best is None or not np.all(np.isfinite(best.x)):
            raise EstimatorError("LAD reference estimator failed")
        return np.asarray(best.x, dtype=float)

    def sample_size(self, sample: LadSample) -> int:
        return sample.n

    def sample_to_rows(self, sample: LadSample):
        return ["y", "x1", "x2"], np.column_stack([sample.y, sample.x])

    def sample_from_rows(self, rows: np.ndarray) -> LadSample:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        return LadSample(y=rows[:, 0].copy(), x=rows[:, 1:3].copy())
