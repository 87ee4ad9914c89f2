"""Empirical shattering estimation for grid-restricted loss classes.

Given a loss matrix (instances x grid points), a subset of instances is
*shattered* when some per-instance thresholds make the indicator vectors
``1[loss >= t]`` realize all ``2**n`` sign patterns across grid columns.
Because the class is restricted to the grid, only the relative order of the
values in each row matters, so the midpoints between consecutive distinct
row values form an exhaustive threshold family; searching them exactly
lower-bounds the pseudo-dimension of the restricted class.

The search grows subset size one at a time (shattering is monotone: any
subset of a shattered set is shattered) and runs a depth-first refinement
over the chosen subset: after fixing thresholds for the first k rows the
columns split into 2**k classes, one per prefix pattern, and the next row's
threshold is admissible iff it splits every class into two non-empty
halves.  Admissibility is an interval condition -- the threshold must lie
strictly above every class minimum and at most every class maximum of that
row -- so the candidate thresholds at each step form one contiguous run of
the row's value gaps and everything outside it is skipped wholesale.
Subsets containing a pair that cannot realize all four two-bit patterns are
rejected before the descent.  Witnesses record which grid column realizes
each pattern so they can be re-verified independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .tuning import AlphaGrid, _loss_table

#: Hard cap: 2**20 patterns is already far beyond desk-scale searches.
MAX_SUBSET_CAP = 20


@dataclass(frozen=True)
class LossMatrix:
    """Instances-by-grid matrix of bilevel losses; all entries finite."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.array(self.values, dtype=float))
        if self.values.ndim != 2:
            raise ValueError(f"loss matrix must be 2-D, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            bad = np.argwhere(~np.isfinite(self.values))[0]
            raise ValueError(
                f"non-finite loss at instance {bad[0]}, grid column {bad[1]}"
            )
        self.values.setflags(write=False)

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]


def loss_matrix(
    kind: str,
    instances,
    grid: AlphaGrid,
    *,
    block_dims: Sequence[int] | None = None,
    options: dict | None = None,
) -> LossMatrix:
    """Exact bilevel losses for every (instance, grid point) cell."""
    if not instances:
        raise ValueError("need at least one instance")
    return LossMatrix(
        _loss_table(
            kind, instances, grid.as_array(), block_dims=block_dims, options=options
        )
    )


def achieved_patterns(
    matrix: LossMatrix, rows: Sequence[int], thresholds: Sequence[float]
) -> set[tuple[int, ...]]:
    """All 0/1 patterns ``(1[loss_ij >= t_i])_i`` realized by some column j."""
    rows = list(rows)
    if len(rows) != len(thresholds):
        raise ValueError(
            f"{len(rows)} rows but {len(thresholds)} thresholds"
        )
    values = matrix.values[rows]  # IndexError propagates for bad indices
    bits = values >= np.asarray(thresholds, dtype=float)[:, None]
    return {tuple(int(v) for v in col) for col in bits.T}


@dataclass(frozen=True)
class ShatterWitness:
    """A verified shattering certificate.

    ``pattern_columns`` maps each realized pattern (ordered like ``rows``)
    to one grid column index realizing it.
    """

    rows: tuple[int, ...]
    thresholds: tuple[float, ...]
    pattern_columns: dict

    @property
    def size(self) -> int:
        return len(self.rows)


class _Search:
    def __init__(self, values: np.ndarray):
        self.values = values
        self.n_rows, self.n_cols = values.shape
        self.rows: list[int] = []
        self.distinct: list[np.ndarray] = []  # ascending distinct row values
        self.mids: list[np.ndarray] = []
        for i in range(self.n_rows):
            distinct = np.unique(values[i])
            if len(distinct) < 2:
                continue  # constant rows can never flip, drop them
            self.rows.append(i)
            self.distinct.append(distinct)
            self.mids.append((distinct[:-1] + distinct[1:]) / 2.0)
        # rows with many distinct values split classes most flexibly, so
        # trying them first tends to reach a witness sooner
        order = sorted(
            range(len(self.rows)), key=lambda k: (-len(self.mids[k]), self.rows[k])
        )
        self.rows = [self.rows[k] for k in order]
        self.distinct = [self.distinct[k] for k in order]
        self.mids = [self.mids[k] for k in order]
        self._pair_cache: dict[tuple[int, int], bool] = {}

    def _row_splits(self, member: int, classes) -> range:
        """Gap indices of this row whose midpoint splits every class.

        A threshold t splits a column class C into two non-empty halves iff
        min(C) < t <= max(C), so t must exceed every class minimum and not
        exceed any class maximum; the matching gaps form one contiguous
        index range of the row's sorted distinct values.
        """
        vals = self.values[self.rows[member]]
        lo = -np.inf
        hi = np.inf
        for cls in classes:
            v = vals[cls]
            mn = v.min()
            mx = v.max()
            if mn > lo:
                lo = mn
            if mx < hi:
                hi = mx
        if not lo < hi:
            return range(0)
        distinct = self.distinct[member]
        first = int(np.searchsorted(distinct, lo, side="left"))
        last = int(np.searchsorted(distinct, hi, side="right")) - 1
        return range(first, last)

    def pair_ok(self, a: int, b: int) -> bool:
        key = (a, b)
        cached = self._pair_cache.get(key)
        if cached is not None:
            return cached
        ok = False
        vals_a = self.values[self.rows[a]]
        all_cols = np.arange(self.n_cols)
        for j in self._row_splits(a, (all_cols,)):
            above = vals_a >= self.mids[a][j]
            halves = (np.flatnonzero(~above), np.flatnonzero(above))
            if len(self._row_splits(b, halves)) > 0:
                ok = True
                break
        self._pair_cache[key] = ok
        return ok

    def find(self, size: int) -> ShatterWitness | None:
        if size > len(self.rows):
            return None
        if self.n_cols < 2**size:
            return None
        all_cols = np.arange(self.n_cols)
        for subset in combinations(range(len(self.rows)), size):
            if size >= 2 and not all(
                self.pair_ok(a, b) for a, b in combinations(subset, 2)
            ):
                continue
            hit = self._dfs(subset, 0, [all_cols], [])
            if hit is not None:
                thresholds, classes = hit
                return self._witness(subset, thresholds, classes)
        return None

    def _dfs(self, subset, level, classes, chosen):
        member = subset[level]
        vals = self.values[self.rows[member]]
        for j in self._row_splits(member, classes):
            t = self.mids[member][j]
            # refine each prefix class; index doubles as the prefix code,
            # low half (bit 0) first, so class order stays code order
            new_classes = []
            for cls in classes:
                above = vals[cls] >= t
                new_classes.append(cls[~above])
                new_classes.append(cls[above])
            chosen.append(t)
            if level + 1 == len(subset):
                return list(chosen), new_classes
            deeper = self._dfs(subset, level + 1, new_classes, chosen)
            if deeper is not None:
                return deeper
            chosen.pop()
        return None

    def _witness(self, subset, thresholds, classes) -> ShatterWitness:
        size = len(subset)
        pattern_columns = {}
        for code, cls in enumerate(classes):
            pattern = tuple((code >> (size - 1 - k)) & 1 for k in range(size))
            pattern_columns[pattern] = int(cls[0])
        return ShatterWitness(
            rows=tuple(self.rows[k] for k in subset),
            thresholds=tuple(float(t) for t in thresholds),
            pattern_columns=pattern_columns,
        )


def max_shattered(
    matrix: LossMatrix, max_n: int = 12
) -> tuple[int, ShatterWitness | None]:
    """Largest verified shattered subset size up to ``max_n``, with witness.

    Exhaustive over the grid-restricted threshold family, so the result is
    exact for the restricted class (and hence a valid lower bound for the
    unrestricted one).  Raises when ``max_n`` exceeds the combinatorial
    budget cap of 20.
    """
    if max_n < 0:
        raise ValueError("max_n must be >= 0")
    if max_n > MAX_SUBSET_CAP:
        raise ValueError(
            f"max_n={max_n} exceeds the 2**{MAX_SUBSET_CAP} pattern budget; "
            f"rerun with max_n <= {MAX_SUBSET_CAP}"
        )
    search = _Search(matrix.values)
    cap = min(max_n, len(search.rows))
    if matrix.n_columns > 1:
        cap = min(cap, int(math.floor(math.log2(matrix.n_columns))))
    else:
        cap = 0
    best_size, best_witness = 0, None
    for size in range(1, cap + 1):
        witness = search.find(size)
        if witness is None:
            break
        best_size, best_witness = size, witness
    return best_size, best_witness
