"""Weighted fused-lasso solver via its dual box-constrained QP.

Primal problem over theta in R^d (A with full column rank, weights w > 0):

    min  0.5 ||b - A theta||**2 + sum_i w_i |theta_{i+1} - theta_i|

With D the (d-1) x d first-difference matrix, the dual over u in R^{d-1} is

    min  0.5 ||b_tilde - A_tilde u||**2   s.t.  |u_i| <= w_i

where ``A_tilde = (A^T A)^{-1/2} D^T`` and ``b_tilde = (A^T A)^{-1/2} A^T b``
(the inverse square root comes from a symmetric eigendecomposition of the
Gram matrix).  The dual Hessian ``D (A^T A)^{-1} D^T`` is positive definite,
so the box QP has a unique minimizer, any KKT point is global, and the
primal solution is recovered exactly as ``theta = (A^T A)^{-1}(A^T b - D^T u)``.

The solver is a primal active-set iteration on the box: solve the free
block exactly, step to the first blocking bound, release the bound
coordinate whose multiplier has the worst wrong sign.  Per-free-set inverse
blocks are cached per instance, which makes dense weight-grid sweeps cheap.
On a fixed stable active set the solve is a single linear system, so u (and
hence theta) is an affine function of w there -- the geometry behind
solution-path counting with at most ``3**(d-1)`` active-set patterns.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, RankDeficiencyError
from .problems import ProblemInstance

DEFAULT_ACTIVE_TOL = 1e-9
DEFAULT_RANK_RTOL = 1e-10
DEFAULT_MAX_ITERS = 10_000

_STATUS = {1: "upper", -1: "lower", 0: "free"}


@dataclass
class DualSolution:
    """Dual minimizer plus the bound status of each coordinate."""

    u: np.ndarray
    active_set: tuple[str, ...]


def first_difference_matrix(d: int) -> np.ndarray:
    D = np.zeros((d - 1, d))
    for i in range(d - 1):
        D[i, i] = -1.0
        D[i, i + 1] = 1.0
    return D


def _classify(u, lo, hi, active_tol) -> tuple[str, ...]:
    labels = []
    for ui, li, hi_i in zip(u, lo, hi):
        if ui >= hi_i - active_tol:
            labels.append("upper")
        elif ui <= li + active_tol:
            labels.append("lower")
        else:
            labels.append("free")
    return tuple(labels)


class FusedDualProblem:
    """Dual QP data for one instance, reusable across weight vectors."""

    def __init__(self, x: ProblemInstance, *, rank_rtol: float = DEFAULT_RANK_RTOL):
        if x.d < 2:
            raise ValueError(f"fused lasso needs d >= 2, got d={x.d}")
        A, b = x.A, x.b
        gram = A.T @ A
        evals, evecs = np.linalg.eigh(gram)
        svals = np.sqrt(np.clip(evals, 0.0, None))
        if svals[-1] <= 0.0 or svals[0] <= rank_rtol * svals[-1]:
            raise RankDeficiencyError(
                f"design matrix is rank deficient: smallest singular value "
                f"{svals[0]:.3e} vs largest {svals[-1]:.3e}"
            )
        inv = (evecs / evals) @ evecs.T
        inv_sqrt = (evecs / svals) @ evecs.T
        D = first_difference_matrix(x.d)
        atb = A.T @ b
        self.d = x.d
        self.p = x.d - 1
        self.hessian = D @ inv @ D.T
        self.linear = D @ (inv @ atb)
        self.design_tilde = inv_sqrt @ D.T
        self.target_tilde = inv_sqrt @ atb
        self.ols = inv @ atb
        self._inv_gram_dt = inv @ D.T
        self._half_b_sq = 0.5 * float(b @ b)
        self._A = A
        self._b = b
        self._diff = D
        self._free_inverses: dict[bytes, np.ndarray] = {}

    # ------------------------------------------------------------------
    # linear algebra helpers
    # ------------------------------------------------------------------

    def _free_inverse(self, free: np.ndarray) -> np.ndarray:
        key = free.tobytes()
        inv = self._free_inverses.get(key)
        if inv is None:
            idx = np.flatnonzero(free)
            inv = np.linalg.inv(self.hessian[np.ix_(idx, idx)])
            self._free_inverses[key] = inv
        return inv

    def _working_set_solution(self, work, lo, hi) -> np.ndarray:
        """Exact minimizer with the working-set coordinates pinned to bounds."""
        target = np.where(work > 0, hi, np.where(work < 0, lo, 0.0))
        free = work == 0
        if free.any():
            idx = np.flatnonzero(free)
            rhs = self.linear[idx]
            bound = ~free
            if bound.any():
                rhs = rhs - self.hessian[np.ix_(idx, np.flatnonzero(bound))] @ target[bound]
            target[idx] = self._free_inverse(free) @ rhs
        return target

    # ------------------------------------------------------------------
    # solving
    # ------------------------------------------------------------------

    def solve(
        self,
        weights,
        *,
        active_tol: float = DEFAULT_ACTIVE_TOL,
        max_iters: int = DEFAULT_MAX_ITERS,
    ) -> DualSolution:
        w = np.asarray(weights, dtype=float)
        if w.shape != (self.p,):
            raise ValueError(f"weights must have shape ({self.p},), got {w.shape}")
        if np.any(w <= 0):
            raise ValueError("difference weights must be strictly positive")
        lo, hi = -w, w
        # start from the clipped unconstrained minimizer
        u = np.clip(self._working_set_solution(np.zeros(self.p, dtype=int), lo, hi), lo, hi)
        work = np.where(u >= hi, 1, np.where(u <= lo, -1, 0))
        release_slack = 1e-12 * (1.0 + float(np.max(np.abs(self.linear))))
        for _ in range(max_iters):
            target = self._working_set_solution(work, lo, hi)
            free = work == 0
            outside = free & ((target > hi) | (target < lo))
            if outside.any():
                # partial step to the first blocking bound
                step = target - u
                with np.errstate(divide="ignore", invalid="ignore"):
                    t_hi = np.where(free & (step > 0), (hi - u) / step, np.inf)
                    t_lo = np.where(free & (step < 0), (lo - u) / step, np.inf)
                t_all = np.minimum(t_hi, t_lo)
                blocker = int(np.argmin(t_all))
                t = float(t_all[blocker])
                if t >= 1.0:
                    u = np.clip(target, lo, hi)
                    continue
                u = u + t * step
                if t_hi[blocker] <= t_lo[blocker]:
                    u[blocker] = hi[blocker]
                    work[blocker] = 1
                else:
                    u[blocker] = lo[blocker]
                    work[blocker] = -1
                continue
            u = target
            grad = self.hessian @ u - self.linear
            # at an upper bound the multiplier is -grad and must be >= 0;
            # at a lower bound it is +grad
            violation = np.where(work == 1, grad, np.where(work == -1, -grad, -np.inf))
            worst = int(np.argmax(violation))
            if violation[worst] <= release_slack:
                return DualSolution(u, _classify(u, lo, hi, active_tol))
            work[worst] = 0
        raise ConvergenceError(
            f"active-set iteration did not converge in {max_iters} steps",
            best=DualSolution(u, _classify(u, lo, hi, active_tol)),
        )

    # ------------------------------------------------------------------
    # values and recovery
    # ------------------------------------------------------------------

    def recover(self, u) -> np.ndarray:
        """Primal minimizer for a dual point: theta = OLS - (A^T A)^{-1} D^T u."""
        return self.ols - self._inv_gram_dt @ np.asarray(u, dtype=float)

    def primal_value(self, theta, weights) -> float:
        residual = self._b - self._A @ theta
        penalty = float(np.asarray(weights) @ np.abs(self._diff @ theta))
        return 0.5 * float(residual @ residual) + penalty

    def dual_value(self, u) -> float:
        residual = self.target_tilde - self.design_tilde @ np.asarray(u, dtype=float)
        return self._half_b_sq - 0.5 * float(residual @ residual)

    def duality_gap(self, u, weights) -> float:
        return self.primal_value(self.recover(u), weights) - self.dual_value(u)


def fused_lasso_dual_solve(x: ProblemInstance, weights, **options) -> DualSolution:
    """Solve the dual box QP for one instance and weight vector."""
    return FusedDualProblem(x).solve(weights, **options)


def fused_lasso_primal_recover(x: ProblemInstance, solution) -> np.ndarray:
    """Map a dual solution (or raw dual vector) back to the primal minimizer."""
    u = solution.u if isinstance(solution, DualSolution) else solution
    return FusedDualProblem(x).recover(u)


def fused_lasso_brute_force(
    x: ProblemInstance,
    weights,
    *,
    feas_tol: float = 1e-9,
    grad_tol: float = 1e-9,
) -> DualSolution:
    """Exhaustive oracle: check every {upper, lower, free}^(d-1) pattern.

    Solves the free block of each pattern independently with a dense linear
    solve, keeps the KKT-feasible candidates, and returns the one with the
    lowest dual objective (unique up to ties within tolerance, by strict
    convexity).  Exponential in d; refuses d > 12.
    """
    if x.d > 12:
        raise ValueError(f"pattern enumeration needs d <= 12, got d={x.d}")
    problem = FusedDualProblem(x)
    p = problem.p
    w = np.asarray(weights, dtype=float)
    if w.shape != (p,):
        raise ValueError(f"weights must have shape ({p},), got {w.shape}")
    if np.any(w <= 0):
        raise ValueError("difference weights must be strictly positive")
    Q, q = problem.hessian, problem.linear
    scale = grad_tol * (1.0 + float(np.max(np.abs(q))))
    best = None
    for pattern in itertools.product((1, -1, 0), repeat=p):
        status = np.array(pattern)
        u = np.where(status > 0, w, np.where(status < 0, -w, 0.0))
        free = status == 0
        if free.any():
            idx = np.flatnonzero(free)
            rhs = q[idx] - Q[np.ix_(idx, np.flatnonzero(~free))] @ u[~free]
            u[idx] = np.linalg.solve(Q[np.ix_(idx, idx)], rhs)
            if np.any(np.abs(u[idx]) > w[idx] + feas_tol):
                continue
        grad = Q @ u - q
        if np.any((status == 1) & (grad > scale)):
            continue
        if np.any((status == -1) & (grad < -scale)):
            continue
        objective = 0.5 * float(u @ Q @ u) - float(q @ u)
        if best is None or objective < best[0]:
            best = (objective, u, pattern)
    if best is None:
        raise RuntimeError("no KKT-feasible pattern found; tolerances too tight?")
    _, u, pattern = best
    return DualSolution(u, tuple(_STATUS[s] for s in pattern))
