"""Synthetic tuning experiments: distributions, bilevel loss, ERM, gap curves.

The *bilevel loss* of a weight vector on one instance solves the training
problem for the chosen penalty family and scores the minimizer on the
instance's held-out part.  Everything downstream -- grid ERM, gap curves,
loss matrices for shattering -- reduces to evaluating that loss on
instance x grid arrays, so the evaluation loop caches per-instance
factorizations and the per-cell values are identical whether computed one
at a time or in bulk.

Determinism contract: every random quantity derives from a SeedSequence
rooted at the distribution seed.  The Monte Carlo reference set and each
(train size, trial) pair use disjoint fixed spawn keys, so results are
bit-for-bit reproducible and independent of evaluation order or worker
count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .elastic_net import ElasticNetProblem
from .errors import RankDeficiencyError, TuningError
from .fused_lasso import FusedDualProblem
from .group_lasso import group_lasso_solve
from .problems import ProblemInstance, validation_loss

SOLVER_KINDS = ("elastic", "fused", "group")
DISTRIBUTION_KINDS = ("gaussian-dense", "piecewise-constant-signal", "group-sparse")

# spawn-key prefixes: Monte Carlo reference draws vs. per-trial training draws
_MC_STREAM = (1,)
_TRIAL_STREAM = 2


@dataclass(frozen=True)
class DistributionSpec:
    """An instance distribution: design shape, signal family, noise, seed.

    ``kind`` picks the ground-truth signal: dense Gaussian, piecewise
    constant with ``n_change_points`` jumps (the fused-lasso regime, which
    requires m >= d so instances are full rank), or block-sparse with
    ``n_active_blocks`` live blocks of sizes ``block_dims``.  Training and
    validation parts share the signal and draw independent designs/noise.
    """

    kind: str
    m: int
    m_val: int
    d: int
    noise_std: float
    seed: int
    n_change_points: int = 1
    n_active_blocks: int = 1
    block_dims: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in DISTRIBUTION_KINDS:
            raise ValueError(
                f"unknown kind {self.kind!r}; expected one of {DISTRIBUTION_KINDS}"
            )
        if min(self.m, self.m_val, self.d) < 1:
            raise ValueError("m, m_val and d must all be >= 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.kind == "piecewise-constant-signal":
            if self.m < self.d:
                raise ValueError(
                    "piecewise-constant-signal requires m >= d for full-rank designs"
                )
            if not 1 <= self.n_change_points <= max(self.d - 1, 1):
                raise ValueError("n_change_points must be in [1, d-1]")
        if self.kind == "group-sparse":
            if self.block_dims is None:
                raise ValueError("group-sparse requires explicit block_dims")
            object.__setattr__(
                self, "block_dims", tuple(int(x) for x in self.block_dims)
            )
            if sum(self.block_dims) != self.d:
                raise ValueError("block_dims must sum to d")
            if not 1 <= self.n_active_blocks <= len(self.block_dims):
                raise ValueError("n_active_blocks must be in [1, number of blocks]")

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "m": self.m,
            "m_val": self.m_val,
            "d": self.d,
            "noise_std": self.noise_std,
            "seed": self.seed,
        }
        if self.kind == "piecewise-constant-signal":
            out["n_change_points"] = self.n_change_points
        if self.kind == "group-sparse":
            out["n_active_blocks"] = self.n_active_blocks
            out["block_dims"] = list(self.block_dims or ())
        return out


@dataclass(frozen=True)
class AlphaGrid:
    """A product grid over p weight dimensions with a shared 1-D axis.

    Flat indices enumerate grid points in lexicographic order of their index
    tuples (first dimension slowest), which is also the tie-breaking order
    used by ERM.
    """

    lo: float
    hi: float
    points: int
    spacing: str = "linear"
    p: int = 1

    def __post_init__(self):
        if self.points < 1:
            raise ValueError("points must be >= 1")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if not self.lo <= self.hi:
            raise ValueError("need lo <= hi")
        if self.spacing not in ("linear", "logarithmic"):
            raise ValueError(f"unknown spacing {self.spacing!r}")
        if self.spacing == "logarithmic" and self.lo <= 0:
            raise ValueError("logarithmic spacing needs lo > 0")

    def axis(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.lo])
        if self.spacing == "linear":
            return np.linspace(self.lo, self.hi, self.points)
        return np.geomspace(self.lo, self.hi, self.points)

    def __len__(self) -> int:
        return self.points**self.p

    def as_array(self) -> np.ndarray:
        """(G, p) array of all grid points in flat-index order."""
        axis = self.axis()
        grids = np.meshgrid(*([axis] * self.p), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def index_tuple(self, flat: int) -> tuple[int, ...]:
        if not 0 <= flat < len(self):
            raise IndexError(f"flat index {flat} out of range")
        out = []
        for _ in range(self.p):
            # peel least-significant digits; flat order is row-major
            flat, r = divmod(flat, self.points)
            out.append(r)
        return tuple(reversed(out))

    def point(self, flat: int) -> np.ndarray:
        axis = self.axis()
        return np.array([axis[i] for i in self.index_tuple(flat)])

    def to_json(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "points": self.points,
            "spacing": self.spacing,
            "p": self.p,
        }


# ----------------------------------------------------------------------
# instance generation
# ----------------------------------------------------------------------


def _draw_signal(spec: DistributionSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.kind == "gaussian-dense":
        return rng.standard_normal(spec.d)
    if spec.kind == "piecewise-constant-signal":
        k = min(spec.n_change_points, spec.d - 1) if spec.d > 1 else 0
        theta = np.empty(spec.d)
        if k == 0:
            theta[:] = rng.standard_normal()
            return theta
        cuts = np.sort(rng.choice(np.arange(1, spec.d), size=k, replace=False))
        levels = rng.standard_normal(k + 1)
        edges = np.concatenate([[0], cuts, [spec.d]])
        for level, a, b in zip(levels, edges[:-1], edges[1:]):
            theta[a:b] = level
        return theta
    # group-sparse
    dims = spec.block_dims or ()
    active = rng.choice(len(dims), size=spec.n_active_blocks, replace=False)
    theta = np.zeros(spec.d)
    offsets = np.concatenate([[0], np.cumsum(dims)])
    for i in sorted(active):
        theta[offsets[i] : offsets[i + 1]] = rng.standard_normal(dims[i])
    return theta


def _draw_instance(spec: DistributionSpec, rng: np.random.Generator) -> ProblemInstance:
    theta = _draw_signal(spec, rng)
    A = rng.standard_normal((spec.m, spec.d))
    b = A @ theta + spec.noise_std * rng.standard_normal(spec.m)
    A_val = rng.standard_normal((spec.m_val, spec.d))
    b_val = A_val @ theta + spec.noise_std * rng.standard_normal(spec.m_val)
    if spec.kind == "piecewise-constant-signal":
        svals = np.linalg.svd(A, compute_uv=False)
        if svals[-1] <= 1e-10 * svals[0]:
            raise RankDeficiencyError("sampled design matrix is rank deficient")
    return ProblemInstance(A, b, A_val, b_val)


def gen_instances(
    spec: DistributionSpec, count: int, stream: int | tuple[int, ...] = 0
) -> list[ProblemInstance]:
    """Draw ``count`` i.i.d. instances; (spec, count prefix, stream) fixes them.

    Each instance gets its own spawned child seed, so the k-th instance is
    identical no matter how many more are drawn after it.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    key = (stream,) if isinstance(stream, int) else tuple(stream)
    root = np.random.SeedSequence(entropy=spec.seed, spawn_key=key)
    return [
        _draw_instance(spec, np.random.default_rng(child))
        for child in root.spawn(count)
    ]


# ----------------------------------------------------------------------
# bilevel loss evaluation
# ----------------------------------------------------------------------


def instance_losses(
    kind: str,
    x: ProblemInstance,
    alphas,
    *,
    block_dims: Sequence[int] | None = None,
    options: dict | None = None,
) -> np.ndarray:
    """Bilevel losses of one instance across a (G, p) array of weight vectors."""
    if kind not in SOLVER_KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {SOLVER_KINDS}")
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
    opts = options or {}
    out = np.empty(alphas.shape[0])
    if kind == "fused":
        problem = FusedDualProblem(x)
        for i, a in enumerate(alphas):
            theta = problem.recover(problem.solve(a, **opts).u)
            out[i] = validation_loss(x, theta, "fused")
    elif kind == "group":
        if block_dims is None:
            raise ValueError("group kind requires block_dims")
        for i, a in enumerate(alphas):
            theta = group_lasso_solve(x, a, block_dims, **opts)
            out[i] = validation_loss(x, theta, "group")
    else:  # elastic
        problem = ElasticNetProblem(x)
        for i, a in enumerate(alphas):
            if a.shape != (2,):
                raise ValueError("elastic kind expects weight pairs (a1, a2)")
            theta = problem.solve(a[0], a[1], **opts).theta
            residual = x.A_val @ theta - x.b_val
            out[i] = float(residual @ residual) / (2.0 * x.m_val)
    return out


def bilevel_loss(
    kind: str,
    x: ProblemInstance,
    alpha,
    *,
    block_dims: Sequence[int] | None = None,
    options: dict | None = None,
) -> float:
    """Held-out loss after training at one weight vector; see module docstring."""
    return float(
        instance_losses(
            kind, x, np.asarray(alpha, dtype=float)[None, :],
            block_dims=block_dims, options=options,
        )[0]
    )


def _loss_table(kind, instances, grid_points, *, block_dims=None, options=None):
    table = np.empty((len(instances), grid_points.shape[0]))
    for i, x in enumerate(instances):
        try:
            table[i] = instance_losses(
                kind, x, grid_points, block_dims=block_dims, options=options
            )
        except Exception as exc:
            raise TuningError(f"instance {i}: {exc}") from exc
    return table


def erm_tune(
    kind: str,
    instances: Sequence[ProblemInstance],
    grid: AlphaGrid,
    *,
    block_dims: Sequence[int] | None = None,
    options: dict | None = None,
) -> tuple[np.ndarray, float]:
    """Pick the grid point minimizing the mean bilevel loss over instances.

    Ties go to the lexicographically smallest grid index.  Returns the
    chosen weight vector and its empirical mean loss.
    """
    if not instances:
        raise ValueError("need at least one instance")
    table = _loss_table(
        kind, instances, grid.as_array(), block_dims=block_dims, options=options
    )
    mean = table.mean(axis=0)
    best = int(np.argmin(mean))  # first minimum = smallest lexicographic index
    return grid.point(best), float(mean[best])


# ----------------------------------------------------------------------
# gap curves
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class GapCurvePoint:
    n_train: int
    mean_gap: float
    std_gap: float
    trials: int

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        # sanity: a mean of nonnegative gaps can only dip below zero by noise
        if self.mean_gap < -2.0 * self.std_gap / np.sqrt(self.trials):
            raise ValueError("mean gap is negative beyond statistical noise")


@dataclass
class GapCurveResult:
    points: list[GapCurvePoint]
    records: list[dict]
    loss_bound_observed: float

    def to_json(self) -> dict:
        return {
            "points": [
                {
                    "n_train": pt.n_train,
                    "mean_gap": pt.mean_gap,
                    "std_gap": pt.std_gap,
                    "trials": pt.trials,
                }
                for pt in self.points
            ],
            "loss_bound_observed": self.loss_bound_observed,
        }


def _run_trial(args) -> tuple[int, int, int, float]:
    (kind, spec, grid_points, n_train, trial, block_dims, clip_loss, options) = args
    instances = gen_instances(spec, n_train, stream=(_TRIAL_STREAM, n_train, trial))
    table = _loss_table(
        kind, instances, grid_points, block_dims=block_dims, options=options
    )
    observed = float(np.max(np.abs(table)))
    if clip_loss is not None:
        table = np.clip(table, -clip_loss, clip_loss)
    mean = table.mean(axis=0)
    return n_train, trial, int(np.argmin(mean)), observed


def gap_curve(
    kind: str,
    spec: DistributionSpec,
    grid: AlphaGrid,
    train_sizes: Sequence[int],
    trials: int,
    n_mc: int,
    *,
    block_dims: Sequence[int] | None = None,
    clip_loss: float | None = None,
    options: dict | None = None,
    workers: int = 1,
) -> GapCurveResult:
    """Estimate E[loss(alpha_hat_N)] - min_grid E[loss] as a function of N.

    The expectation is approximated once by a shared Monte Carlo set of
    ``n_mc`` fresh instances; each of ``trials`` repetitions per train size
    draws its own training set (disjoint seed stream), tunes by grid ERM,
    and scores the tuned point against the Monte Carlo column means.  The
    gap is nonnegative by construction.  ``clip_loss``, if set, clips every
    loss at that magnitude before averaging; the largest unclipped magnitude
    seen is reported as ``loss_bound_observed``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n_mc < 100:
        raise ValueError("n_mc must be >= 100 for a usable reference")
    if any(n < 1 for n in train_sizes):
        raise ValueError("train sizes must be >= 1")
    grid_points = grid.as_array()
    mc = gen_instances(spec, n_mc, stream=_MC_STREAM)
    mc_table = _loss_table(
        kind, mc, grid_points, block_dims=block_dims, options=options
    )
    observed = float(np.max(np.abs(mc_table)))
    if clip_loss is not None:
        mc_table = np.clip(mc_table, -clip_loss, clip_loss)
    mc_mean = mc_table.mean(axis=0)
    best = float(mc_mean.min())

    tasks = [
        (kind, spec, grid_points, int(n), t, block_dims, clip_loss, options)
        for n in train_sizes
        for t in range(trials)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_run_trial, tasks, chunksize=1))
    else:
        raw = [_run_trial(t) for t in tasks]

    records = []
    for n_train, trial, best_idx, h_train in sorted(raw, key=lambda r: (r[0], r[1])):
        observed = max(observed, h_train)
        records.append(
            {
                "kind": kind,
                "n_train": n_train,
                "trial": trial,
                "gap": float(mc_mean[best_idx] - best),
                "alpha_hat": [float(v) for v in grid_points[best_idx]],
            }
        )
    points = []
    for n in train_sizes:
        gaps = np.array([r["gap"] for r in records if r["n_train"] == int(n)])
        points.append(
            GapCurvePoint(
                n_train=int(n),
                mean_gap=float(gaps.mean()),
                std_gap=float(gaps.std()),
                trials=len(gaps),
            )
        )
    return GapCurveResult(
        points=points, records=records, loss_bound_observed=observed
    )
