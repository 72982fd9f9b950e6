"""Shared surface of the three estimation problems.

A problem bundles the raw objective g(theta; y) maximized by the GA, the data
generator, the binary coding scheme, the admissibility rule, and one or two
independent estimators: `reference_estimate` is the per-sample optimum the GA
is compared against, `sampling_estimate` (defaulting to the same routine) is
the estimator whose dispersion around the true parameters defines the
sampling-variance component.
"""

from __future__ import annotations

import numpy as np

from ..coding import CodingScheme


class EstimatorError(RuntimeError):
    """Reference estimator failed to produce a usable estimate."""


class Problem:
    """Base problem; subclasses fill in objective, sampler and estimators."""

    name: str = ""
    param_names: tuple[str, ...] = ()
    coding: CodingScheme
    true_theta: np.ndarray

    @property
    def n_params(self) -> int:
        return self.coding.n_params

    def decode_theta(self, bits: np.ndarray) -> np.ndarray:
        return self.coding.decode_vector(bits)

    def decode_matrix(self, bits: np.ndarray) -> np.ndarray:
        return self.coding.decode_matrix(bits)

    def project_to_grid(self, theta: np.ndarray) -> np.ndarray:
        return self.coding.project_to_grid(theta)

    def admissible(self, theta: np.ndarray) -> bool:
        return True

    def sample(self, n: int, rng: np.random.Generator):
        raise NotImplementedError

    def objective(self, theta: np.ndarray, sample) -> float:
        """Raw objective g(theta; y); the GA maximizes exp(g / tau) with tau = n."""
        raise NotImplementedError

    def objective_batch(self, thetas: np.ndarray, sample) -> np.ndarray:
        """Vectorized objective over the rows of a (m, k) parameter matrix."""
        return np.array([self.objective(t, sample) for t in thetas])

    def reference_estimate(self, sample) -> np.ndarray:
        raise NotImplementedError

    def sampling_estimate(self, sample) -> np.ndarray:
        return self.reference_estimate(sample)

    def sample_size(self, sample) -> int:
        raise NotImplementedError

    def sample_to_rows(self, sample) -> tuple[list[str], np.ndarray]:
        """Column names and a (n, c) array for CSV serialization."""
        raise NotImplementedError

    def sample_from_rows(self, rows: np.ndarray):
        raise NotImplementedError
