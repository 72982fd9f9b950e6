"""Empirical convergence-rate fitting for the GA variance curves.

Each per-parameter curve is regressed without intercept on the reciprocal
power of the evaluation count,

    sigmastar_ii(g) = w_i * V(g)^(-a) + eps_g,

for every candidate exponent a in {1/3, 1/2, 1, 2}; the exponent shared by
all parameters is the one maximizing the mean R^2.  R^2 uses the centered
convention (total sum of squares around the curve mean) so values are
comparable across exponents; the uncentered value is carried alongside.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .variance import GaVarianceCurves

CANDIDATE_EXPONENTS = (1.0 / 3.0, 0.5, 1.0, 2.0)
DEFAULT_BURN_IN = 5
TIE_TOLERANCE = 1e-6


class RateFitError(ValueError):
    """Curve unusable for regression."""


@dataclass
class ParamFit:
    coefficient: float        # w >= 0
    r_squared: float          # centered convention
    r_squared_uncentered: float


@dataclass
class RateFit:
    problem: str
    exponent: float
    coefficients: np.ndarray          # (k,) w_i at the selected exponent
    r_squared: np.ndarray             # (k,) centered R^2 at the selected exponent
    candidates: tuple[float, ...]
    r_squared_by_candidate: np.ndarray  # (n_candidates, k) centered R^2
    mean_r_squared: np.ndarray          # (n_candidates,)
    burn_in: int
    tie_flag: bool

    @property
    def trace_w_ga(self) -> float:
        return float(np.sum(self.coefficients))


def fit_rate_curve(sigma: np.ndarray, evaluations: np.ndarray, exponent: float,
                   burn_in: int = DEFAULT_BURN_IN) -> ParamFit:
    """No-intercept least squares of one variance curve on V^(-a).

    w = sum(sigma * r) / sum(r^2) with r = V^(-a), clamped at zero.  The first
    `burn_in` generations are excluded as initialization transient.
    """
    sigma = np.asarray(sigma, dtype=float)[burn_in:]
    v = np.asarray(evaluations, dtype=float)[burn_in:]
    if sigma.size < 2:
        raise RateFitError("need at least 2 generations after burn-in")
    if np.any(v <= 0):
        raise RateFitError("evaluation counts must be positive")
    r = v ** (-exponent)
    if np.ptp(r) == 0.0:
        raise RateFitError("regressor has zero variance")

    w = max(float(np.dot(sigma, r) / np.dot(r, r)), 0.0)
    resid = sigma - w * r
    ss_res = float(np.dot(resid, resid))
    centered = sigma - sigma.mean()
    ss_tot = float(np.dot(centered, centered))
    ss_tot_u = float(np.dot(sigma, sigma))
    return ParamFit(
        coefficient=w,
        r_squared=_r2(ss_res, ss_tot),
        r_squared_uncentered=_r2(ss_res, ss_tot_u),
    )


def _r2(ss_res: float, ss_tot: float) -> float:
    if ss_tot <= 0.0:
        return 1.0 if ss_res <= 1e-300 else -np.inf
    return 1.0 - ss_res / ss_tot


def fit_rate(curves: GaVarianceCurves, exponent: float,
             burn_in: int = DEFAULT_BURN_IN) -> list[ParamFit]:
    """Per-parameter no-intercept fits at one candidate exponent."""
    return [
        fit_rate_curve(curves.sigma[:, i], curves.evaluations, exponent, burn_in)
        for i in range(curves.sigma.shape[1])
    ]


def select_rate(curves: GaVarianceCurves,
                candidates: tuple[float, ...] = CANDIDATE_EXPONENTS,
                burn_in: int = DEFAULT_BURN_IN) -> RateFit:
    """Fit all candidate exponents and keep the one maximizing mean R^2.

    One exponent is shared by all parameters.  Mean-R^2 ties within 1e-6 break
    deterministically toward the smaller exponent and are flagged.
    """
    cands = tuple(sorted(candidates))
    k = curves.sigma.shape[1]
    r2 = np.empty((len(cands), k))
    fits = []
    for ci, a in enumerate(cands):
        per_param = fit_rate(curves, a, burn_in)
        fits.append(per_param)
        r2[ci] = [p.r_squared for p in per_param]
    mean_r2 = r2.mean(axis=1)

    best = float(np.max(mean_r2))
    within = np.nonzero(mean_r2 >= best - TIE_TOLERANCE)[0]
    chosen = int(within[0])                      # smallest exponent among ties
    tie = within.size > 1

    sel = fits[chosen]
    return RateFit(
        problem=curves.problem,
        exponent=cands[chosen],
        coefficients=np.array([p.coefficient for p in sel]),
        r_squared=np.array([p.r_squared for p in sel]),
        candidates=cands,
        r_squared_by_candidate=r2,
        mean_r_squared=mean_r2,
        burn_in=burn_in,
        tie_flag=tie,
    )


def fitted_curve(fit: RateFit, evaluations: np.ndarray) -> np.ndarray:
    """(G, k) fitted overlay w_i * V^(-a) for plotting against the observation."""
    v = np.asarray(evaluations, dtype=float)
    return np.outer(v ** (-fit.exponent), np.ones_like(fit.coefficients)) * fit.coefficients
