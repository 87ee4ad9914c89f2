"""Elastic-net point solver with sign-region identification.

Objective: ``(1/2m) ||b - A theta||**2 + a1 ||theta||_1 + a2 ||theta||_2**2``
with both weights strictly positive, solved by cyclic coordinate descent
with exact scalar soft-threshold updates.  Soft thresholding produces exact
zeros, so the reported sign pattern (one of -1/0/+1 per coordinate) is a
faithful region label, and on the active set E a solution satisfies the
linear system

    (A_E^T A_E / m + 2 a2 I) theta_E = A_E^T b / m - a1 sigma_E

with sigma_E the active signs -- the per-region closed form that solution-path
arguments build on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError
from .problems import ProblemInstance

DEFAULT_KKT_TOL = 1e-8
DEFAULT_STEP_TOL = 1e-10
DEFAULT_ZERO_TOL = 1e-10
DEFAULT_MAX_ITERS = 100_000


@dataclass
class RegionSolution:
    """A minimizer plus the sign region it identifies."""

    theta: np.ndarray
    sign_pattern: tuple[int, ...]
    kkt_residual: float


def _soft(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


class ElasticNetProblem:
    """Per-instance cache (Gram/m, correlations/m) for repeated solves."""

    def __init__(self, x: ProblemInstance):
        m = x.m
        self.d = x.d
        self.gram = (x.A.T @ x.A) / m
        self.corr = (x.A.T @ x.b) / m

    def solve(
        self,
        alpha1: float,
        alpha2: float,
        *,
        kkt_tol: float = DEFAULT_KKT_TOL,
        step_tol: float = DEFAULT_STEP_TOL,
        zero_tol: float = DEFAULT_ZERO_TOL,
        max_iters: int = DEFAULT_MAX_ITERS,
    ) -> RegionSolution:
        if alpha1 <= 0 or alpha2 <= 0:
            raise ValueError(
                f"regularization weights must be positive, got ({alpha1}, {alpha2})"
            )
        gram, corr, d = self.gram, self.corr, self.d
        diag = np.diag(gram)
        denom = diag + 2.0 * alpha2
        theta = np.zeros(d)
        grad_fit = np.zeros(d)  # gram @ theta, maintained incrementally
        for _ in range(max_iters):
            max_change = 0.0
            for j in range(d):
                old = theta[j]
                rho = corr[j] - grad_fit[j] + diag[j] * old
                new = _soft(rho, alpha1) / denom[j]
                if new != old:
                    theta[j] = new
                    grad_fit += gram[:, j] * (new - old)
                    change = abs(new - old)
                    if change > max_change:
                        max_change = change
            residual = self._kkt_residual(theta, grad_fit, alpha1, alpha2)
            if residual <= kkt_tol or max_change < step_tol:
                return RegionSolution(
                    theta.copy(), _pattern(theta, zero_tol), residual
                )
        raise ConvergenceError(
            f"coordinate descent did not converge in {max_iters} iterations",
            best=RegionSolution(
                theta.copy(),
                _pattern(theta, zero_tol),
                self._kkt_residual(theta, grad_fit, alpha1, alpha2),
            ),
        )

    def _kkt_residual(self, theta, grad_fit, alpha1, alpha2) -> float:
        # grad of the smooth part: (1/m) A^T (A theta - b) + 2 a2 theta
        grad = grad_fit - self.corr
        worst = 0.0
        for j in range(self.d):
            if theta[j] != 0.0:
                r = abs(grad[j] + 2.0 * alpha2 * theta[j] + alpha1 * np.sign(theta[j]))
            else:
                r = max(0.0, abs(grad[j]) - alpha1)
            if r > worst:
                worst = r
        return worst


def _pattern(theta, zero_tol) -> tuple[int, ...]:
    return tuple(
        0 if abs(t) <= zero_tol else (1 if t > 0 else -1) for t in theta
    )


def elastic_net_solve(
    x: ProblemInstance, alpha1: float, alpha2: float, **options
) -> RegionSolution:
    """Solve one instance at one weight pair; see :class:`ElasticNetProblem`."""
    return ElasticNetProblem(x).solve(alpha1, alpha2, **options)


def elastic_net_region(
    x: ProblemInstance, alpha1: float, alpha2: float, **options
) -> tuple[int, ...]:
    """Sign pattern of the minimizer at (alpha1, alpha2)."""
    return elastic_net_solve(x, alpha1, alpha2, **options).sign_pattern
