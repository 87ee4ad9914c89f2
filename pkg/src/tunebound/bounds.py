"""Closed-form pseudo-dimension and sample-complexity calculators.

Every calculator returns a :class:`BoundReport` carrying the computed value,
the raw inputs, and the log-scale intermediates that went into it.  Two
conventions hold throughout:

* every asymptotic constant collapses into a single explicit multiplier
  ``c`` (default 1.0), recorded in the report, so callers see exactly how
  the bound scales rather than a hidden O(.);
* logarithms are base 2.

Counts that overflow doubles (piece counts like ``3**d`` for large ``d``)
are kept as exact Python integers and enter floating point only through
``math.log2``, which is exact-argument for arbitrary-size ints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

__all__ = [
    "BoundReport",
    "FolComplexity",
    "qe_complexity",
    "pdim_fol",
    "pdim_goldberg_jerrum_legacy",
    "pdim_training",
    "pdim_validation",
    "pdim_solution_path",
    "pdim_group_lasso",
    "pdim_fused_lasso",
    "pdim_elastic_net",
    "elastic_net_path_inputs",
    "group_lasso_fol_complexity",
    "sample_complexity",
]


@dataclass(frozen=True)
class BoundReport:
    """A computed bound plus the bookkeeping needed to audit it."""

    bound_value: float
    formula_id: str
    inputs: dict
    log2_intermediates: dict
    constant_c: float

    def __post_init__(self):
        if not self.bound_value >= 0.0:
            raise ValueError(f"bound_value must be >= 0, got {self.bound_value}")
        for name, value in self.inputs.items():
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                if value < 0:
                    raise ValueError(f"input {name!r} is negative: {value}")
        for name, value in self.log2_intermediates.items():
            if not math.isfinite(value):
                raise ValueError(f"log2 intermediate {name!r} is not finite: {value}")

    def to_json(self) -> dict:
        return {
            "bound_value": self.bound_value,
            "formula_id": self.formula_id,
            "inputs": dict(self.inputs),
            "log2_intermediates": dict(self.log2_intermediates),
            "constant_c": self.constant_c,
        }


@dataclass(frozen=True)
class FolComplexity:
    """Counts describing a quantified formula over polynomial predicates.

    ``block_dims`` lists the quantified-block dimensions in order; the free
    block has dimension ``free_dim`` and is not included in it.
    """

    n_predicates: int
    max_degree: int
    free_dim: int
    block_dims: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "block_dims", tuple(int(d) for d in self.block_dims))
        if self.n_predicates < 1:
            raise ValueError("need at least one predicate")
        if self.max_degree < 1:
            raise ValueError("max degree must be >= 1")
        if self.free_dim < 1:
            raise ValueError("free dimension must be >= 1")
        if any(d < 1 for d in self.block_dims):
            raise ValueError("every quantified block must have dimension >= 1")

    @property
    def n_blocks(self) -> int:
        return len(self.block_dims)

    def dims_product(self) -> int:
        """prod(d_k + 1) over quantified blocks; empty product is 1."""
        return math.prod(d + 1 for d in self.block_dims)


def _log2(n) -> float:
    return math.log2(n)


def qe_complexity(fol: FolComplexity, c: float = 1.0) -> tuple[float, float]:
    """Size of the quantifier-free equivalent, in log2 form.

    Returns ``(log2 predicate count, log2 max degree)`` of the formula that
    quantifier elimination produces.  Both grow like ``prod(d_k + 1)``, so
    they are reported in log space rather than as raw counts.
    """
    prod = fol.dims_product()
    log2_degree = c * fol.free_dim * prod * _log2(fol.max_degree)
    log2_count = prod * _log2(fol.n_predicates) + log2_degree
    return log2_count, log2_degree


def pdim_fol(fol: FolComplexity, c: float = 1.0) -> BoundReport:
    """Pseudo-dimension bound for losses defined by a quantified formula."""
    prod = fol.dims_product()
    p = fol.free_dim
    term_m = p * prod * _log2(fol.n_predicates)
    term_delta = p * p * prod * _log2(fol.max_degree)
    return BoundReport(
        bound_value=c * (term_m + term_delta),
        formula_id="fol",
        inputs={
            "n_predicates": fol.n_predicates,
            "max_degree": fol.max_degree,
            "free_dim": p,
            "block_dims": list(fol.block_dims),
            "dims_product": prod,
        },
        log2_intermediates={
            "log2_predicates": _log2(fol.n_predicates),
            "log2_degree": _log2(fol.max_degree),
        },
        constant_c=c,
    )


def pdim_goldberg_jerrum_legacy(
    fol: FolComplexity, data_dim: int, c: float = 1.0
) -> BoundReport:
    """The older exponential-in-alternations bound, kept as a comparator.

    Scales like ``2**(c*K)`` in the number of quantifier blocks ``K`` and
    multiplies raw block dimensions instead of log-sized counts, so it is
    (often vastly) looser than :func:`pdim_fol` on the same inputs.
    """
    if data_dim < 1:
        raise ValueError(f"data dimension must be >= 1, got {data_dim}")
    k = fol.n_blocks
    prod_dims = math.prod(fol.block_dims) if fol.block_dims else 1
    p = fol.free_dim
    log_part = _log2(fol.n_predicates) + _log2(fol.max_degree)
    bound = c * (2.0 ** (c * k)) * p * (p + data_dim) * prod_dims * log_part
    return BoundReport(
        bound_value=bound,
        formula_id="goldberg-jerrum-legacy",
        inputs={
            "n_predicates": fol.n_predicates,
            "max_degree": fol.max_degree,
            "free_dim": p,
            "block_dims": list(fol.block_dims),
            "data_dim": data_dim,
            "n_blocks": k,
        },
        log2_intermediates={
            "log2_predicates": _log2(fol.n_predicates),
            "log2_degree": _log2(fol.max_degree),
        },
        constant_c=c,
    )


def pdim_training(
    p: int,
    d: int,
    f_boundaries: int,
    f_pieces: int,
    f_degree: int,
    c: float = 1.0,
) -> BoundReport:
    """Pseudo-dimension bound when the tuned map is a piecewise minimizer.

    ``f_boundaries``/``f_pieces``/``f_degree`` describe the piecewise
    structure of the training objective in (hyperparameter, parameter)
    space; ``p`` hyperparameters select a minimizer over ``d`` parameters.
    """
    for name, value in {
        "p": p,
        "d": d,
        "f_boundaries": f_boundaries,
        "f_pieces": f_pieces,
        "f_degree": f_degree,
    }.items():
        if value < 1:
            raise ValueError(f"{name} must be >= 1, got {value}")
    m_log = f_boundaries + f_pieces + d
    bound = c * (p * d * _log2(m_log) + p * p * d * _log2(f_degree))
    return BoundReport(
        bound_value=bound,
        formula_id="training-objective",
        inputs={
            "p": p,
            "d": d,
            "f_boundaries": f_boundaries,
            "f_pieces": f_pieces,
            "f_degree": f_degree,
            # predicates of the underlying two-block formula: boundary tests,
            # piece comparisons, and 2d box constraints on the inner argmin
            "n_formula_predicates": f_boundaries + f_pieces + 2 * d,
        },
        log2_intermediates={
            "log2_count": _log2(m_log),
            "log2_degree": _log2(f_degree),
        },
        constant_c=c,
    )


def pdim_validation(
    p: int,
    d: int,
    f_boundaries: int,
    f_pieces: int,
    f_degree: int,
    g_boundaries: int,
    g_pieces: int,
    g_degree: int,
    c: float = 1.0,
) -> BoundReport:
    """Bound for the held-out loss of a tuned piecewise minimizer.

    ``f_*`` describes the training objective, ``g_*`` the validation score.
    The bound uses the compact predicate count ``M_f + T_f + M_g + T_g + d``;
    the fully expanded construction counts ``2M_f + T_f**2 + M_g + T_g + 4d``
    predicates instead, and that value is recorded alongside the inputs for
    reference (it changes constants only, never the growth rate).
    """
    for name, value in {
        "p": p,
        "d": d,
        "f_boundaries": f_boundaries,
        "f_pieces": f_pieces,
        "f_degree": f_degree,
        "g_boundaries": g_boundaries,
        "g_pieces": g_pieces,
        "g_degree": g_degree,
    }.items():
        if value < 1:
            raise ValueError(f"{name} must be >= 1, got {value}")
    m_total = f_boundaries + f_pieces + g_boundaries + g_pieces + d
    delta_total = max(f_degree, g_degree)
    bound = c * (
        p * d * d * _log2(m_total) + p * p * d * d * _log2(delta_total)
    )
    return BoundReport(
        bound_value=bound,
        formula_id="validation-objective",
        inputs={
            "p": p,
            "d": d,
            "f_boundaries": f_boundaries,
            "f_pieces": f_pieces,
            "f_degree": f_degree,
            "g_boundaries": g_boundaries,
            "g_pieces": g_pieces,
            "g_degree": g_degree,
            "m_total": m_total,
            "delta_total": delta_total,
            "n_predicates_expanded": 4 * d
            + g_boundaries
            + g_pieces
            + 2 * f_boundaries
            + f_pieces**2,
        },
        log2_intermediates={
            "log2_count": _log2(m_total),
            "log2_degree": _log2(delta_total),
        },
        constant_c=c,
    )


def pdim_solution_path(
    p: int,
    path_boundaries: int,
    path_pieces: int,
    path_degree: int,
    obj_boundaries: int,
    obj_pieces: int,
    obj_degree: int,
    c: float = 1.0,
) -> BoundReport:
    """Bound when an exact piecewise-rational solution path is available.

    The tuned loss composes a piecewise objective (``obj_*`` counts, in
    (hyperparameter, parameter) space) with the path, giving a piecewise
    structure in the hyperparameters alone with

    * ``m_total = path_boundaries + path_pieces * (obj_boundaries + obj_pieces)``
    * ``delta_total = obj_degree * path_degree``

    and bound ``c * p * log2(max(m_total * delta_total, 2))``.  All counts
    are exact Python integers, so piece counts like ``3**d`` never overflow.
    """
    for name, value in {
        "p": p,
        "path_pieces": path_pieces,
        "path_degree": path_degree,
        "obj_pieces": obj_pieces,
        "obj_degree": obj_degree,
    }.items():
        if value < 1:
            raise ValueError(f"{name} must be >= 1, got {value}")
    if path_boundaries < 0 or obj_boundaries < 0:
        raise ValueError("boundary counts must be >= 0")
    m_total = int(path_boundaries) + int(path_pieces) * (
        int(obj_boundaries) + int(obj_pieces)
    )
    delta_total = int(obj_degree) * int(path_degree)
    guarded = max(m_total * delta_total, 2)
    bound = c * p * _log2(guarded)
    return BoundReport(
        bound_value=bound,
        formula_id="solution-path",
        inputs={
            "p": p,
            "path_boundaries": path_boundaries,
            "path_pieces": path_pieces,
            "path_degree": path_degree,
            "obj_boundaries": obj_boundaries,
            "obj_pieces": obj_pieces,
            "obj_degree": obj_degree,
            "m_total": m_total,
            "delta_total": delta_total,
        },
        log2_intermediates={
            "log2_m_total": _log2(max(m_total, 1)),
            "log2_delta_total": _log2(delta_total),
            "log2_guarded_product": _log2(guarded),
        },
        constant_c=c,
    )


def pdim_group_lasso(p: int, d: int, c: float = 1.0) -> BoundReport:
    """Closed-form bound ``c * (p**3 * d + p**2 * d**2)`` for group-lasso tuning."""
    if p < 1 or d < 1:
        raise ValueError(f"p and d must be >= 1, got p={p}, d={d}")
    return BoundReport(
        bound_value=c * (p**3 * d + p**2 * d**2),
        formula_id="group-lasso",
        inputs={"p": p, "d": d},
        log2_intermediates={},
        constant_c=c,
    )


def pdim_fused_lasso(d: int, c: float = 1.0) -> BoundReport:
    """Closed-form bound ``c * d**2`` for fused-lasso tuning (p = d - 1 weights)."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    return BoundReport(
        bound_value=c * float(d * d),
        formula_id="fused-lasso",
        inputs={"d": d},
        log2_intermediates={},
        constant_c=c,
    )


def elastic_net_path_inputs(d: int) -> dict:
    """Solution-path counts for the two-parameter elastic net in dimension d.

    The path over the (l1 weight, l2 weight) plane has at most ``3**d``
    sign-pattern pieces, ``d * 3**d`` boundary surfaces, and piecewise
    degree at most ``2d``; the objective evaluated on a piece is a single
    quadratic.  Exact integers throughout.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    return {
        "path_boundaries": d * 3**d,
        "path_pieces": 3**d,
        "path_degree": 2 * d,
        "obj_boundaries": 0,
        "obj_pieces": 1,
        "obj_degree": 2,
    }


def pdim_elastic_net(d: int, c: float = 1.0) -> BoundReport:
    """Elastic-net tuning bound: the solution-path bound at its exact counts.

    Delegates to :func:`pdim_solution_path` with p = 2 and the counts from
    :func:`elastic_net_path_inputs`, so the two stay consistent by
    construction; the result is O(d).
    """
    report = pdim_solution_path(p=2, c=c, **elastic_net_path_inputs(d))
    return replace(
        report,
        formula_id="elastic-net",
        inputs={"d": d, **report.inputs},
    )


def group_lasso_fol_complexity(p: int, d: int) -> FolComplexity:
    """Quantified-formula counts for the lifted group-lasso comparison.

    The lift adds one auxiliary norm variable per group for each of the two
    compared parameter vectors, giving blocks of dimension ``d`` and
    ``d + 2p``, predicate count ``2 * (1 + 2p)`` (each side contributes one
    objective comparison and ``2p`` lifting constraints), and degree 2.
    """
    if p < 1 or d < 1:
        raise ValueError(f"p and d must be >= 1, got p={p}, d={d}")
    return FolComplexity(
        n_predicates=2 * (1 + 2 * p),
        max_degree=2,
        free_dim=p,
        block_dims=(d, d + 2 * p),
    )


def sample_complexity(
    pdim: float, loss_bound: float, epsilon: float, delta: float, scale: float = 1.0
) -> int:
    """Samples sufficient for uniform epsilon-accuracy with confidence 1 - delta.

    Computes ``ceil(scale * (loss_bound**2 / epsilon**2) *
    (pdim + ln(1/delta)))`` for a loss family with pseudo-dimension ``pdim``
    and losses in [0, loss_bound].
    """
    if pdim < 0:
        raise ValueError(f"pdim must be >= 0, got {pdim}")
    if loss_bound <= 0:
        raise ValueError(f"loss bound must be > 0, got {loss_bound}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if scale <= 0:
        raise ValueError(f"scale must be > 0, got {scale}")
    value = scale * (loss_bound**2 / epsilon**2) * (pdim + math.log(1.0 / delta))
    return math.ceil(value)
