"""Budget-constrained minimization of the total variability.

The objective combines the two variance components through their rates,

    tr(Sigma_TOT)(n, V) = tr(W_S) / f(n) + tr(W_GA) / h(V),

subject to the linear cost constraint C = n*S + V*n*T.  With f(n) = n and
h(V) = V the interior optimum has the closed form

    n_opt = (-S*C*trWS + C*sqrt(C*T*trWS*trWGA)) / (C*T*trWGA - S^2*trWS),
    V_opt = (C - n_opt*S) / (n_opt*T),

of which only the positive root is meaningful.  For general rates (e.g.
h(V) = sqrt(V)) a coarse integer scan plus golden-section refinement solves
the problem numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DENOMINATOR_EPS = 1e-12
COARSE_POINTS = 512


class InfeasibleError(ValueError):
    """No sample size satisfies the budget with positive evaluations."""


@dataclass(frozen=True)
class CostModel:
    sample_cost: float   # S, per observation
    eval_cost: float     # T, per observation per fitness evaluation
    budget: float        # C

    def __post_init__(self):
        if not (self.sample_cost > 0 and self.eval_cost > 0 and self.budget > 0):
            raise ValueError("S, T and C must all be positive")

    def evals_for(self, n) -> float:
        """V implied by the active budget constraint at sample size n."""
        return (self.budget - n * self.sample_cost) / (n * self.eval_cost)

    def n_max(self) -> int:
        return int(math.floor(self.budget / self.sample_cost)) - 1


@dataclass
class TradeoffSolution:
    n_real: float
    v_real: float
    objective_real: float
    n_int: int
    v_int: float
    objective_int: float
    n_floor: int
    objective_floor: float
    n_ceil: int
    objective_ceil: float
    method: str                  # "closed-form" | "numeric"
    fallback: bool = False

    def ga_generations(self, population: int) -> int:
        """Operational generation count G with V = N*(G+1)."""
        return max(int(round(self.v_real / population - 1.0)), 0)


def linear_rate(x):
    return x


def power_rate(exponent: float):
    def h(x):
        return np.power(x, exponent)
    return h


def total_variability(n, v, tr_w_s: float, tr_w_ga: float, f=linear_rate, h=linear_rate):
    """tr(W_S)/f(n) + tr(W_GA)/h(V)."""
    return tr_w_s / f(n) + tr_w_ga / h(v)


def _objective_on_constraint(n, cost: CostModel, tr_w_s, tr_w_ga, f, h):
    v = cost.evals_for(n)
    return total_variability(n, v, tr_w_s, tr_w_ga, f, h)


def _solution_at(n_real: float, cost: CostModel, tr_w_s, tr_w_ga, f, h,
                 n_min: int, method: str, fallback: bool = False) -> TradeoffSolution:
    n_max = cost.n_max()
    lo = max(n_min, min(int(math.floor(n_real)), n_max))
    hi = max(n_min, min(int(math.ceil(n_real)), n_max))
    obj_lo = _objective_on_constraint(lo, cost, tr_w_s, tr_w_ga, f, h)
    obj_hi = _objective_on_constraint(hi, cost, tr_w_s, tr_w_ga, f, h)
    n_int, obj_int = (lo, obj_lo) if obj_lo <= obj_hi else (hi, obj_hi)
    return TradeoffSolution(
        n_real=float(n_real),
        v_real=float(cost.evals_for(n_real)),
        objective_real=float(_objective_on_constraint(n_real, cost, tr_w_s, tr_w_ga, f, h)),
        n_int=n_int,
        v_int=float(cost.evals_for(n_int)),
        objective_int=float(obj_int),
        n_floor=lo,
        objective_floor=float(obj_lo),
        n_ceil=hi,
        objective_ceil=float(obj_hi),
        method=method,
        fallback=fallback,
    )


def solve_closed_form(cost: CostModel, tr_w_s: float, tr_w_ga: float,
                      n_min: int = 1) -> TradeoffSolution:
    """Closed form for linear rates f(n) = n, h(V) = V (positive root only).

    Falls back to the numeric solver, flagged, when the denominator is within
    1e-12 (relative) of zero or the root is not feasible.
    """
    s, t, c = cost.sample_cost, cost.eval_cost, cost.budget
    den = c * t * tr_w_ga - s * s * tr_w_s
    scale = c * t * abs(tr_w_ga) + s * s * abs(tr_w_s)
    if abs(den) <= DENOMINATOR_EPS * scale or tr_w_s < 0 or tr_w_ga < 0:
        sol = solve_numeric(cost, tr_w_s, tr_w_ga, n_min=n_min)
        sol.fallback = True
        return sol
    n_real = (-s * c * tr_w_s + c * math.sqrt(c * t * tr_w_s * tr_w_ga)) / den
    if not (n_min <= n_real <= cost.n_max()):
        sol = solve_numeric(cost, tr_w_s, tr_w_ga, n_min=n_min)
        sol.fallback = True
        return sol
    return _solution_at(n_real, cost, tr_w_s, tr_w_ga, linear_rate, linear_rate,
                        n_min, "closed-form")


def solve_numeric(cost: CostModel, tr_w_s: float, tr_w_ga: float,
                  f=linear_rate, h=linear_rate, n_min: int = 1) -> TradeoffSolution:
    """Coarse integer scan plus golden-section refinement on the budget line.

    The scan guards non-unimodal rate combinations; golden-section then
    refines inside the best bracket.
    """
    n_max = cost.n_max()
    if n_min > n_max:
        raise InfeasibleError(f"no feasible n in [{n_min}, {n_max}]")

    grid = np.unique(np.round(np.geomspace(n_min, n_max, min(COARSE_POINTS, n_max - n_min + 1))).astype(np.int64))
    vals = np.array([_objective_on_constraint(int(n), cost, tr_w_s, tr_w_ga, f, h) for n in grid])
    best = int(np.argmin(vals))
    lo = float(grid[max(best - 1, 0)])
    hi = float(grid[min(best + 1, grid.size - 1)])

    a, b = lo, hi
    c1 = b - GOLDEN * (b - a)
    c2 = a + GOLDEN * (b - a)
    f1 = _objective_on_constraint(c1, cost, tr_w_s, tr_w_ga, f, h)
    f2 = _objective_on_constraint(c2, cost, tr_w_s, tr_w_ga, f, h)
    for _ in range(90):
        if b - a < 1e-10 * max(1.0, b):
            break
        if f1 <= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - GOLDEN * (b - a)
            f1 = _objective_on_constraint(c1, cost, tr_w_s, tr_w_ga, f, h)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + GOLDEN * (b - a)
            f2 = _objective_on_constraint(c2, cost, tr_w_s, tr_w_ga, f, h)
    n_real = 0.5 * (a + b)

    sol = _solution_at(n_real, cost, tr_w_s, tr_w_ga, f, h, n_min, "numeric")
    # integer candidates near the refined point and the best coarse cell
    cand = {sol.n_floor, sol.n_ceil, int(grid[best])}
    cand.update(int(np.clip(sol.n_int + d, n_min, n_max)) for d in (-2, -1, 1, 2))
    best_n = min(cand, key=lambda n: _objective_on_constraint(n, cost, tr_w_s, tr_w_ga, f, h))
    if _objective_on_constraint(best_n, cost, tr_w_s, tr_w_ga, f, h) < sol.objective_int:
        sol.n_int = int(best_n)
        sol.v_int = float(cost.evals_for(best_n))
        sol.objective_int = float(_objective_on_constraint(best_n, cost, tr_w_s, tr_w_ga, f, h))
    return sol


def brute_force_integer(cost: CostModel, tr_w_s: float, tr_w_ga: float,
                        f=linear_rate, h=linear_rate, n_min: int = 1) -> tuple[int, float]:
    """Exhaustive integer minimizer on [n_min, n_max]; oracle for the solvers."""
    n_max = cost.n_max()
    if n_min > n_max:
        raise InfeasibleError(f"no feasible n in [{n_min}, {n_max}]")
    ns = np.arange(n_min, n_max + 1, dtype=float)
    vs = cost.evals_for(ns)
    vals = tr_w_s / f(ns) + tr_w_ga / h(vs)
    i = int(np.argmin(vals))
    return int(ns[i]), float(vals[i])


def sweep_surface(tr_w_s: float, tr_w_ga: float, s_grid, t_grid, budget: float,
                  exponent: float = 1.0, n_min: int = 1) -> list[dict]:
    """Optimal-n surface over the (S, T) cost grid at a fixed budget.

    Returns one row per grid cell; infeasible cells are recorded, not fatal.
    """
    rows = []
    h = linear_rate if exponent == 1.0 else power_rate(exponent)
    for s in s_grid:
        for t in t_grid:
            cost = CostModel(float(s), float(t), float(budget))
            row = {"S": float(s), "T": float(t), "C": float(budget),
                   "exponent": exponent, "feasible": True}
            try:
                if exponent == 1.0:
                    sol = solve_closed_form(cost, tr_w_s, tr_w_ga, n_min=n_min)
                else:
                    sol = solve_numeric(cost, tr_w_s, tr_w_ga, h=h, n_min=n_min)
                row.update(n_opt=sol.n_real, v_opt=sol.v_real,
                           objective=sol.objective_real, method=sol.method)
            except InfeasibleError:
                row.update(n_opt=float("nan"), v_opt=float("nan"),
                           objective=float("nan"), method="infeasible", feasible=False)
            rows.append(row)
    return rows


def timed_cost_comparison(fits: list[dict], s_grid, budget: float,
                          corner_eval_cost: float = 1.0, n_min: int = 1) -> list[dict]:
    """Per-problem optimal-n(S) curves with measured per-evaluation cost ratios.

    Each entry of `fits` carries problem, tr_w_s, tr_w_ga, exponent and
    t_ratio (per-evaluation cost relative to the corner problem).
    """
    rows = []
    for fit in fits:
        t = fit["t_ratio"] * corner_eval_cost
        h = linear_rate if fit["exponent"] == 1.0 else power_rate(fit["exponent"])
        for s in s_grid:
            cost = CostModel(float(s), float(t), float(budget))
            row = {"problem": fit["problem"], "S": float(s), "T": float(t),
                   "C": float(budget), "exponent": fit["exponent"], "feasible": True}
            try:
                if fit["exponent"] == 1.0:
                    sol = solve_closed_form(cost, fit["tr_w_s"], fit["tr_w_ga"], n_min=n_min)
                else:
                    sol = solve_numeric(cost, fit["tr_w_s"], fit["tr_w_ga"], h=h, n_min=n_min)
                row.update(n_opt=sol.n_real, v_opt=sol.v_real,
                           objective=sol.objective_real, method=sol.method)
            except InfeasibleError:
                row.update(n_opt=float("nan"), v_opt=float("nan"),
                           objective=float("nan"), method="infeasible", feasible=False)
            rows.append(row)
    return rows
