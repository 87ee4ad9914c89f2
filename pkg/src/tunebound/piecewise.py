"""Piecewise structures over sign partitions of a box domain.

A structure owns ``M`` boundary functions.  The *sign pattern* of a point is
the tuple of boundary signs there (with a small zero band around 0), and it
selects which piece to evaluate.  Complexity is the triple
``(boundary count, piece count, max degree)``; two pieces carrying the same
value function under different patterns still count twice, because the
piece count tallies sign patterns, not distinct functions.

Two flavours exist: scalar-valued piecewise polynomials, and vector-valued
piecewise *rational* maps used as exact solution paths (hyperparameters in,
fitted parameters out).  The module also hosts the semi-algebraic lifting
that turns a sum of Euclidean block norms into polynomial constraints by
introducing one auxiliary variable per block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .bounds import FolComplexity, group_lasso_fol_complexity
from .errors import UnreachablePatternError
from .polynomials import Polynomial, RationalFunction

#: Boundary values within this band count as exactly on the boundary.
DEFAULT_ZERO_TOL = 1e-10

SignPattern = tuple[int, ...]

Box = tuple[tuple[float, float], ...]


def _sign(value: float, zero_tol: float) -> int:
    if abs(value) <= zero_tol:
        return 0
    return 1 if value > 0 else -1


def sign_pattern(boundaries, z, zero_tol: float = DEFAULT_ZERO_TOL) -> SignPattern:
    """Signs of every boundary at ``z``, as a tuple over {-1, 0, +1}."""
    return tuple(_sign(h.evaluate(z), zero_tol) for h in boundaries)


def _check_domain(domain, nvars: int) -> Box:
    box = tuple((float(lo), float(hi)) for lo, hi in domain)
    if len(box) != nvars:
        raise ValueError(f"domain has {len(box)} intervals, expected {nvars}")
    for lo, hi in box:
        if not lo < hi:
            raise ValueError(f"empty domain interval [{lo}, {hi}]")
    return box


def _check_patterns(pieces: Mapping, n_boundaries: int) -> None:
    if not pieces:
        raise ValueError("a piecewise structure needs at least one piece")
    for pattern in pieces:
        if len(pattern) != n_boundaries:
            raise ValueError(
                f"pattern {pattern} has length {len(pattern)}, "
                f"expected {n_boundaries}"
            )
        if any(s not in (-1, 0, 1) for s in pattern):
            raise ValueError(f"pattern {pattern} has entries outside {{-1, 0, +1}}")


class PiecewisePolyFn:
    """Scalar piecewise-polynomial function on a box.

    On construction the box is sampled uniformly (``check_samples`` points,
    fixed ``check_seed``) and every sampled sign pattern must own a piece;
    this rejects structures whose pattern dictionary misses a region of
    positive volume.  Patterns of measure zero (those containing a 0) are
    not exercised by sampling and may legitimately be absent until
    evaluation hits them, at which point lookup fails loudly.
    """

    def __init__(
        self,
        boundaries: Sequence[Polynomial],
        pieces: Mapping[SignPattern, Polynomial],
        nvars: int,
        domain,
        *,
        zero_tol: float = DEFAULT_ZERO_TOL,
        check_samples: int = 10_000,
        check_seed: int = 0,
    ):
        self.boundaries = tuple(boundaries)
        self.pieces = {tuple(k): v for k, v in pieces.items()}
        self.nvars = int(nvars)
        self.domain = _check_domain(domain, self.nvars)
        self.zero_tol = float(zero_tol)
        for h in self.boundaries:
            if h.nvars != self.nvars:
                raise ValueError("boundary nvars mismatch")
        _check_patterns(self.pieces, len(self.boundaries))
        for f in self.pieces.values():
            if f.nvars != self.nvars:
                raise ValueError("piece nvars mismatch")
        if check_samples:
            self._check_completeness(check_samples, check_seed)

    def _check_completeness(self, n_samples: int, seed: int) -> None:
        rng = np.random.default_rng(seed)
        lows = np.array([lo for lo, _ in self.domain])
        highs = np.array([hi for _, hi in self.domain])
        points = rng.uniform(lows, highs, size=(n_samples, self.nvars))
        for z in points:
            pattern = sign_pattern(self.boundaries, z, self.zero_tol)
            if pattern not in self.pieces:
                raise ValueError(
                    f"sign pattern {pattern} is reachable in the domain "
                    f"(e.g. near {tuple(round(v, 6) for v in z)}) but has no piece"
                )

    def pattern_at(self, z) -> SignPattern:
        return sign_pattern(self.boundaries, z, self.zero_tol)

    def evaluate(self, z) -> float:
        pattern = self.pattern_at(z)
        piece = self.pieces.get(pattern)
        if piece is None:
            raise UnreachablePatternError(f"no piece for sign pattern {pattern}")
        return piece.evaluate(z)

    def complexity(self) -> tuple[int, int, int]:
        """(boundary count, piece count, max total degree)."""
        degrees = [h.degree for h in self.boundaries]
        degrees += [f.degree for f in self.pieces.values()]
        return (len(self.boundaries), len(self.pieces), max(degrees))

    def to_json(self) -> dict:
        return {
            "nvars": self.nvars,
            "zero_tol": self.zero_tol,
            "domain": [[lo, hi] for lo, hi in self.domain],
            "boundaries": [h.to_json() for h in self.boundaries],
            "pieces": [
                {"pattern": list(pattern), "value": f.to_json()}
                for pattern, f in sorted(self.pieces.items())
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "PiecewisePolyFn":
        # Deserialization trusts the stored structure; it was sampled when
        # first built, and re-sampling here would make loading O(samples).
        return cls(
            [Polynomial.from_json(h) for h in obj["boundaries"]],
            {
                tuple(entry["pattern"]): Polynomial.from_json(entry["value"])
                for entry in obj["pieces"]
            },
            obj["nvars"],
            obj["domain"],
            zero_tol=obj["zero_tol"],
            check_samples=0,
        )


class PiecewiseRationalPath:
    """Vector-valued piecewise-rational map from p hyperparameters to R^d."""

    def __init__(
        self,
        boundaries: Sequence[RationalFunction],
        pieces: Mapping[SignPattern, Sequence[RationalFunction]],
        p: int,
        d: int,
        domain,
        *,
        zero_tol: float = DEFAULT_ZERO_TOL,
    ):
        self.boundaries = tuple(boundaries)
        self.pieces = {tuple(k): tuple(v) for k, v in pieces.items()}
        self.p = int(p)
        self.d = int(d)
        if self.p < 1 or self.d < 1:
            raise ValueError("p and d must be >= 1")
        self.domain = _check_domain(domain, self.p)
        self.zero_tol = float(zero_tol)
        for h in self.boundaries:
            if h.nvars != self.p:
                raise ValueError("boundary nvars mismatch")
        _check_patterns(self.pieces, len(self.boundaries))
        for component_tuple in self.pieces.values():
            if len(component_tuple) != self.d:
                raise ValueError(
                    f"piece has {len(component_tuple)} components, expected {self.d}"
                )
            for r in component_tuple:
                if r.nvars != self.p:
                    raise ValueError("piece nvars mismatch")

    def pattern_at(self, alpha) -> SignPattern:
        # Boundary poles propagate as SingularityError from evaluation.
        return sign_pattern(self.boundaries, alpha, self.zero_tol)

    def evaluate(self, alpha) -> np.ndarray:
        pattern = self.pattern_at(alpha)
        piece = self.pieces.get(pattern)
        if piece is None:
            raise UnreachablePatternError(f"no piece for sign pattern {pattern}")
        return np.array([r.evaluate(alpha) for r in piece])

    def complexity(self) -> tuple[int, int, int]:
        degrees = [h.degree for h in self.boundaries]
        for component_tuple in self.pieces.values():
            degrees += [r.degree for r in component_tuple]
        return (len(self.boundaries), len(self.pieces), max(degrees))

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "d": self.d,
            "zero_tol": self.zero_tol,
            "domain": [[lo, hi] for lo, hi in self.domain],
            "boundaries": [h.to_json() for h in self.boundaries],
            "pieces": [
                {"pattern": list(pattern), "value": [r.to_json() for r in piece]}
                for pattern, piece in sorted(self.pieces.items())
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "PiecewiseRationalPath":
        return cls(
            [RationalFunction.from_json(h) for h in obj["boundaries"]],
            {
                tuple(entry["pattern"]): [
                    RationalFunction.from_json(r) for r in entry["value"]
                ]
                for entry in obj["pieces"]
            },
            obj["p"],
            obj["d"],
            obj["domain"],
            zero_tol=obj["zero_tol"],
        )


@dataclass(frozen=True)
class SemiAlgebraicLift:
    """Polynomial reformulation of a block-norm-penalized objective.

    Variables are ordered (weights alpha, parameters theta, auxiliaries nu):
    ``n_groups + sum(block_dims) + n_groups`` in total.  ``objective_terms``
    is the penalty part ``sum_i alpha_i * nu_i``; the data-fit part depends
    on a concrete (A, b) and is attached by :meth:`bind`.  Each auxiliary is
    pinned to its block norm by one quadratic equality and one sign
    constraint.
    """

    objective_terms: Polynomial
    constraints: tuple[tuple[Polynomial, str], ...]
    n_groups: int
    block_dims: tuple[int, ...]

    @property
    def d(self) -> int:
        return sum(self.block_dims)

    @property
    def nvars(self) -> int:
        return 2 * self.n_groups + self.d

    @property
    def n_aux(self) -> int:
        return self.n_groups

    @property
    def predicate_count(self) -> int:
        # one objective comparison plus the 2p lifting constraints, for each
        # of the two parameter vectors being compared
        return 2 * (1 + 2 * self.n_groups)

    @property
    def max_degree(self) -> int:
        return 2

    def fol_complexity(self) -> FolComplexity:
        return group_lasso_fol_complexity(self.n_groups, self.d)

    def theta_index(self, j: int) -> int:
        return self.n_groups + j

    def nu_index(self, i: int) -> int:
        return self.n_groups + self.d + i

    def bind(self, A, b) -> Polynomial:
        """Full objective ||A theta - b||**2 + sum_i alpha_i nu_i as one polynomial."""
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        d = self.d
        if A.ndim != 2 or A.shape[1] != d:
            raise ValueError(f"A must have {d} columns, got shape {A.shape}")
        if b.shape != (A.shape[0],):
            raise ValueError(f"b must have length {A.shape[0]}, got {b.shape}")
        gram = A.T @ A
        linear = -2.0 * (A.T @ b)
        n = self.nvars
        terms: dict[tuple[int, ...], float] = dict(self.objective_terms.terms)

        def bump(exps, coef):
            if coef != 0.0:
                terms[exps] = terms.get(exps, 0.0) + coef

        zero = (0,) * n
        for i in range(d):
            for j in range(i, d):
                coef = gram[i, i] if i == j else 2.0 * gram[i, j]
                exps = list(zero)
                exps[self.theta_index(i)] += 1
                exps[self.theta_index(j)] += 1
                bump(tuple(exps), coef)
        for j in range(d):
            exps = list(zero)
            exps[self.theta_index(j)] = 1
            bump(tuple(exps), linear[j])
        bump(zero, float(b @ b))
        return Polynomial(n, terms)


def lift_group_lasso(p: int, block_dims: Sequence[int]) -> SemiAlgebraicLift:
    """Lift a p-group Euclidean-norm penalty to polynomial form.

    For each group i an auxiliary nu_i replaces ||theta_i||, constrained by
    ``nu_i**2 = sum_j theta_ij**2`` and ``nu_i >= 0``; the penalty becomes
    the degree-2 polynomial ``sum_i alpha_i nu_i``.
    """
    block_dims = tuple(int(x) for x in block_dims)
    if p != len(block_dims):
        raise ValueError(f"p={p} but {len(block_dims)} block dimensions given")
    if any(bd < 1 for bd in block_dims):
        raise ValueError("every block must be nonempty")
    d = sum(block_dims)
    n = 2 * p + d
    zero = (0,) * n

    def unit(*positions):
        exps = list(zero)
        for pos in positions:
            exps[pos] += 1
        return tuple(exps)

    penalty_terms = {unit(i, p + d + i): 1.0 for i in range(p)}
    objective = Polynomial(n, penalty_terms)

    constraints: list[tuple[Polynomial, str]] = []
    offset = 0
    for i, bd in enumerate(block_dims):
        norm_terms = {unit(p + d + i, p + d + i): 1.0}
        for j in range(offset, offset + bd):
            norm_terms[unit(p + j, p + j)] = -1.0
        constraints.append((Polynomial(n, norm_terms), "="))
        constraints.append((Polynomial(n, {unit(p + d + i): 1.0}), ">="))
        offset += bd

    return SemiAlgebraicLift(
        objective_terms=objective,
        constraints=tuple(constraints),
        n_groups=p,
        block_dims=block_dims,
    )
