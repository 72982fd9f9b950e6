"""g-and-k distribution: quantile function, numeric inversion, likelihood.

The distribution is defined through its quantile function

    Q(u) = A + B * z * (1 + c * (1 - e^{-g z}) / (1 + e^{-g z})) * (1 + z^2)^k

with z the standard-normal quantile of u.  The density has no closed form:
log-likelihood evaluation inverts Q numerically at every observation and uses
the analytic derivative Q'(u) = (dQ/dz) / phi(z), so that

    loglik = sum_i [ log phi(z_i) - log dQ/dz(z_i) ],   z_i = Q^{-1}(x_i).

Scalar inversion (`gk_invert`) uses Brent's method on the u-scale; the hot
path (`gk_loglik` and the population batch) uses a grid-bracketed Newton
iteration on the z-scale with a bisection fallback, converging to the same
x-scale tolerance.  (1 - e^{-gz}) / (1 + e^{-gz}) is evaluated as tanh(gz/2),
which is the same function without overflow for large |gz|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.special import ndtri

from ..coding import CodingScheme, ParamCoding
from .base import EstimatorError, Problem

TRUE_THETA = (3.0, 1.0, 2.0, 0.5)
GK_C = 0.8
BITS_PER_PARAM = 7
CODING_BOX = ((-10.0, 10.0), (0.0, 10.0), (-10.0, 10.0), (-0.5, 10.0))

U_EPS = 1e-10                    # inversion bracket is (U_EPS, 1 - U_EPS)
X_TOL = 1e-9                     # default inversion tolerance on the x-scale
Z_HI = float(-ndtri(U_EPS))
Z_LO = -Z_HI
_N_GRID = 513
_NEWTON_ITERS = 5
_FALLBACK_ITERS = 90
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
N_STARTS = 10


class GkDomainError(ValueError):
    """Argument outside the distribution's domain."""


class GkInversionError(RuntimeError):
    """Quantile inversion failed (value not bracketed or not converged)."""


@dataclass(frozen=True)
class GkParams:
    A: float
    B: float
    g: float
    k: float
    c: float = GK_C

    def __post_init__(self):
        if not self.B > 0.0:
            raise GkDomainError(f"scale B must be > 0, got {self.B}")
        if not self.k > -0.5:
            raise GkDomainError(f"kurtosis k must be > -0.5, got {self.k}")

    @classmethod
    def from_theta(cls, theta, c: float = GK_C) -> "GkParams":
        return cls(float(theta[0]), float(theta[1]), float(theta[2]), float(theta[3]), c)


def _q_of_z(z, A, B, g, k, c):
    """Quantile as a function of the normal quantile z."""
    z = np.asarray(z, dtype=float)
    t = np.tanh(0.5 * g * z)
    return A + B * z * (1.0 + c * t) * np.exp(k * np.log1p(z * z))


def _q_and_deriv_of_z(z, A, B, g, k, c):
    """Quantile and its z-derivative, sharing the transcendental evaluations."""
    z = np.asarray(z, dtype=float)
    t = np.tanh(0.5 * g * z)
    z2 = z * z
    s = np.exp(k * np.log1p(z2))
    one_ct = 1.0 + c * t
    val = A + B * z * one_ct * s
    deriv = B * s * (one_ct * (1.0 + 2.0 * k * z2 / (1.0 + z2)) + 0.5 * c * g * z * (1.0 - t * t))
    return val, deriv


def gk_quantile(u, params: GkParams):
    """Q(u); accepts scalars or arrays of probabilities in (0, 1)."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise GkDomainError("u must lie strictly inside (0, 1)")
    z = ndtri(u_arr)
    out = _q_of_z(z, params.A, params.B, params.g, params.k, params.c)
    return float(out) if np.isscalar(u) else out


def gk_quantile_deriv(u, params: GkParams):
    """Analytic dQ/du = (dQ/dz) / phi(z)."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
        raise GkDomainError("u must lie strictly inside (0, 1)")
    z = ndtri(u_arr)
    _, dqdz = _q_and_deriv_of_z(z, params.A, params.B, params.g, params.k, params.c)
    phi = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    out = dqdz / phi
    return float(out) if np.isscalar(u) else out


def gk_invert(x: float, params: GkParams, tol: float = X_TOL) -> float:
    """Solve Q(u) = x by Brent's method on the bracket (U_EPS, 1 - U_EPS)."""
    lo = gk_quantile(U_EPS, params)
    hi = gk_quantile(1.0 - U_EPS, params)
    if not lo <= x <= hi:
        raise GkInversionError(f"x={x} outside the invertible range [{lo}, {hi}]")
    u = brentq(lambda v: gk_quantile(v, params) - x, U_EPS, 1.0 - U_EPS,
               xtol=1e-15, rtol=8.9e-16, maxiter=200)
    if abs(gk_quantile(u, params) - x) > tol:
        raise GkInversionError(f"inversion residual above tol={tol} at x={x}")
    return float(u)


def _invert_z_matrix(x: np.ndarray, A, B, g, k, c):
    """Vectorized inversion of Q on the z-scale for a batch of parameter rows.

    x: (n,) data; A, B, g, k: (m, 1) column vectors.  Returns (z, dqdz,
    point_ok, row_ok) with z and dqdz shaped (m, n).  A row is marked bad when
    its quantile is not strictly increasing on the grid; a point is bad when x
    falls outside the bracket or the iteration misses the tolerance.
    """
    m = A.shape[0]
    n = x.shape[0]
    z_grid = np.linspace(Z_LO, Z_HI, _N_GRID)
    val_grid = _q_of_z(z_grid[None, :], A, B, g, k, c)        # (m, _N_GRID)

    row_ok = np.all(np.diff(val_grid, axis=1) > 0.0, axis=1)
    xx = np.broadcast_to(x[None, :], (m, n))
    point_ok = (xx >= val_grid[:, :1]) & (xx <= val_grid[:, -1:])
    active = point_ok & row_ok[:, None]

    # binary search for the bracketing cell: val[lo] <= x <= val[hi]
    flat = val_grid.ravel()
    offs = (np.arange(m, dtype=np.int32) * _N_GRID)[:, None]
    lo = np.zeros((m, n), dtype=np.int32)
    hi = np.full((m, n), _N_GRID - 1, dtype=np.int32)
    for _ in range(int(np.ceil(np.log2(_N_GRID - 1)))):
        mid = (lo + hi) >> 1
        go_right = flat[mid + offs] <= xx
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)

    cell_lo = z_grid[lo]
    cell_hi = z_grid[hi]
    v_lo = flat[lo + offs]
    v_hi = flat[hi + offs]
    tol = np.maximum(X_TOL, 8.0 * np.finfo(float).eps * np.abs(xx))
    # secant start within the cell, then clipped Newton; after two full-matrix
    # passes the few unconverged points are polished on compressed 1-d arrays
    with np.errstate(divide="ignore", invalid="ignore"):
        z = cell_lo + (xx - v_lo) * (cell_hi - cell_lo) / (v_hi - v_lo)
    z = np.minimum(np.maximum(np.nan_to_num(z), cell_lo), cell_hi)
    for it in range(3):
        v, d = _q_and_deriv_of_z(z, A, B, g, k, c)
        resid = v - xx
        converged = np.abs(resid) <= tol
        if it == 2 or np.all(converged | ~active):
            break
        z = np.minimum(np.maximum(z - resid / np.maximum(d, 1e-300), cell_lo), cell_hi)

    tail = active & ~converged
    if np.any(tail):
        rows, cols = np.nonzero(tail)
        zt, dt_, okt = _polish_points(
            z[tail], xx[tail], cell_lo[tail], cell_hi[tail], tol[tail],
            A[rows, 0], B[rows, 0], g[rows, 0], k[rows, 0], c,
        )
        z = z.copy()
        d = d.copy()
        z[tail] = zt
        d[tail] = dt_
        point_ok[tail] &= okt
    return z, d, point_ok & (d > 0.0), row_ok


def _polish_points(z, x, cell_lo, cell_hi, tol, A, B, g, k, c):
    """Finish unconverged points on flat arrays: clipped Newton, then in-cell
    bisection for anything still outside tolerance."""
    converged = np.zeros(z.shape, dtype=bool)
    for it in range(_NEWTON_ITERS + 1):
        v, d = _q_and_deriv_of_z(z, A, B, g, k, c)
        resid = v - x
        converged = np.abs(resid) <= tol
        if it == _NEWTON_ITERS or np.all(converged):
            break
        z = np.minimum(np.maximum(z - resid / np.maximum(d, 1e-300), cell_lo), cell_hi)

    if not np.all(converged):
        lo = np.where(converged, z, cell_lo)
        hi = np.where(converged, z, cell_hi)
        for _ in range(_FALLBACK_ITERS):
            mid = 0.5 * (lo + hi)
            right = _q_of_z(mid, A, B, g, k, c) <= x
            lo = np.where(right, mid, lo)
            hi = np.where(right, hi, mid)
        z = 0.5 * (lo + hi)
        v, d = _q_and_deriv_of_z(z, A, B, g, k, c)
        converged = np.abs(v - x) <= tol
    return z, d, converged


def gk_loglik_batch(thetas: np.ndarray, x: np.ndarray, c: float = GK_C) -> np.ndarray:
    """Log-likelihood of each parameter row; -inf when a row is inadmissible,
    any observation fails inversion, or the density is nonpositive at a datum.

    Duplicate rows (frequent in GA populations after selection) are evaluated
    once and fanned back out; results are identical either way.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    x = np.asarray(x, dtype=float)
    uniq, inverse = np.unique(thetas, axis=0, return_inverse=True)
    A = uniq[:, 0:1]
    B = uniq[:, 1:2]
    g = uniq[:, 2:3]
    k = uniq[:, 3:4]
    out = np.full(uniq.shape[0], -np.inf)
    admissible = (B[:, 0] > 0.0) & (k[:, 0] > -0.5)
    if not np.any(admissible):
        return out[inverse]

    idx = np.nonzero(admissible)[0]
    z, dqdz, point_ok, row_ok = _invert_z_matrix(x, A[idx], B[idx], g[idx], k[idx], c)
    good = row_ok & np.all(point_ok, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = -0.5 * z * z - _LOG_SQRT_2PI - np.log(dqdz)
    out[idx] = np.where(good, np.sum(terms, axis=1), -np.inf)
    return out[inverse]


def gk_loglik(params: GkParams, x: np.ndarray) -> float:
    """loglik = -sum_i log Q'(Q^{-1}(x_i)); -inf marks an unusable parameter point."""
    theta = np.array([[params.A, params.B, params.g, params.k]])
    return float(gk_loglik_batch(theta, np.asarray(x, dtype=float), params.c)[0])


def gk_sampler(n: int, params: GkParams, rng: np.random.Generator) -> np.ndarray:
    """x_i = Q(u_i) with u_i i.i.d. uniform on (0, 1)."""
    u = rng.random(n)
    while np.any(u <= 0.0):            # rng.random can return exactly 0.0
        redo = u <= 0.0
        u[redo] = rng.random(int(redo.sum()))
    return gk_quantile(u, params)


class GkProblem(Problem):
    name = "gk"
    param_names = ("A", "B", "g", "k")

    def __init__(self):
        self.coding = CodingScheme(
            tuple(ParamCoding(lo, hi, BITS_PER_PARAM) for lo, hi in CODING_BOX)
        )
        self.true_theta = np.asarray(TRUE_THETA, dtype=float)
        self.c = GK_C

    def admissible(self, theta: np.ndarray) -> bool:
        return theta[1] > 0.0 and theta[3] > -0.5

    def admissible_batch(self, thetas: np.ndarray) -> np.ndarray:
        return (thetas[:, 1] > 0.0) & (thetas[:, 3] > -0.5)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return gk_sampler(n, GkParams.from_theta(self.true_theta, self.c), rng)

    def objective(self, theta: np.ndarray, sample: np.ndarray) -> float:
        return float(gk_loglik_batch(np.asarray(theta)[None, :], sample, self.c)[0])

    def objective_batch(self, thetas: np.ndarray, sample: np.ndarray) -> np.ndarray:
        return gk_loglik_batch(thetas, sample, self.c)

    def reference_estimate(self, sample: np.ndarray, seed: int = 0) -> np.ndarray:
        """Multi-start Nelder-Mead maximum likelihood, 10 starts drawn from the
        coding box, best kept."""
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(13,)))
        lo = np.array([b[0] for b in CODING_BOX])
        hi = np.array([b[1] for b in CODING_BOX])
        margin = 1e-3 * (hi - lo)
        bounds = list(zip(lo + margin, hi - margin))
        x = np.asarray(sample, dtype=float)

        def neg_mean_loglik(theta):
            ll = gk_loglik_batch(theta[None, :], x, self.c)[0]
            return np.inf if ll == -np.inf else -ll / x.size

        best = None
        starts = [lo + (hi - lo) * rng.random(4) for _ in range(N_STARTS)]
        for start in starts:
            res = minimize(neg_mean_loglik, start, method="Nelder-Mead", bounds=bounds,
                           options={"xatol": 1e-6, "fatol": 1e-10, "maxiter": 3000})
            if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
                best = res
        if best is None:
            raise EstimatorError("all Nelder-Mead starts failed on the g-and-k likelihood")
        return np.asarray(best.x, dtype=float)

    def sample_size(self, sample: np.ndarray) -> int:
        return int(np.asarray(sample).shape[0])

    def sample_to_rows(self, sample: np.ndarray):
        return ["x"], np.asarray(sample, dtype=float)[:, None]

    def sample_from_rows(self, rows: np.ndarray) -> np.ndarray:
        return np.asarray(rows, dtype=float).reshape(-1).copy()
