"""tunebound: generalization bounds and exact solvers for hyperparameter tuning.

The package has three layers:

* symbolic infrastructure -- sparse polynomials, piecewise structures, and
  straight-line program analysis (:mod:`polynomials`, :mod:`piecewise`,
  :mod:`gj`);
* closed-form pseudo-dimension and sample-complexity calculators
  (:mod:`bounds`);
* numerical experiments -- penalized regression solvers, a bilevel tuning
  harness with gap curves, and an empirical shattering estimator
  (:mod:`elastic_net`, :mod:`fused_lasso`, :mod:`group_lasso`,
  :mod:`tuning`, :mod:`shattering`), driven by the :mod:`cli`.
"""

from .bounds import (
    BoundReport,
    FolComplexity,
    elastic_net_path_inputs,
    group_lasso_fol_complexity,
    pdim_elastic_net,
    pdim_fol,
    pdim_fused_lasso,
    pdim_goldberg_jerrum_legacy,
    pdim_group_lasso,
    pdim_solution_path,
    pdim_training,
    pdim_validation,
    qe_complexity,
    sample_complexity,
)
from .elastic_net import (
    ElasticNetProblem,
    RegionSolution,
    elastic_net_region,
    elastic_net_solve,
)
from .errors import (
    ConvergenceError,
    RankDeficiencyError,
    SingularityError,
    TuningError,
    UnreachablePatternError,
)
from .fused_lasso import (
    DualSolution,
    FusedDualProblem,
    first_difference_matrix,
    fused_lasso_brute_force,
    fused_lasso_dual_solve,
    fused_lasso_primal_recover,
)
from .gj import GjNode, GjProgram
from .group_lasso import (
    group_lasso_kkt_residual,
    group_lasso_objective,
    group_lasso_solve,
)
from .piecewise import (
    PiecewisePolyFn,
    PiecewiseRationalPath,
    SemiAlgebraicLift,
    lift_group_lasso,
    sign_pattern,
)
from .polynomials import Polynomial, RationalFunction
from .problems import ProblemInstance, smallest_singular_value, validation_loss
from .shattering import (
    LossMatrix,
    ShatterWitness,
    achieved_patterns,
    loss_matrix,
    max_shattered,
)
from .tuning import (
    AlphaGrid,
    DistributionSpec,
    GapCurvePoint,
    GapCurveResult,
    bilevel_loss,
    erm_tune,
    gap_curve,
    gen_instances,
    instance_losses,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaGrid",
    "BoundReport",
    "ConvergenceError",
    "DistributionSpec",
    "DualSolution",
    "ElasticNetProblem",
    "FolComplexity",
    "FusedDualProblem",
    "GapCurvePoint",
    "GapCurveResult",
    "GjNode",
    "GjProgram",
    "LossMatrix",
    "PiecewisePolyFn",
    "PiecewiseRationalPath",
    "Polynomial",
    "ProblemInstance",
    "RankDeficiencyError",
    "RationalFunction",
    "RegionSolution",
    "SemiAlgebraicLift",
    "ShatterWitness",
    "SingularityError",
    "TuningError",
    "UnreachablePatternError",
    "achieved_patterns",
    "bilevel_loss",
    "elastic_net_path_inputs",
    "elastic_net_region",
    "elastic_net_solve",
    "erm_tune",
    "first_difference_matrix",
    "fused_lasso_brute_force",
    "fused_lasso_dual_solve",
    "fused_lasso_primal_recover",
    "gap_curve",
    "gen_instances",
    "group_lasso_fol_complexity",
    "group_lasso_kkt_residual",
    "group_lasso_objective",
    "group_lasso_solve",
    "instance_losses",
    "lift_group_lasso",
    "loss_matrix",
    "max_shattered",
    "pdim_elastic_net",
    "pdim_fol",
    "pdim_fused_lasso",
    "pdim_goldberg_jerrum_legacy",
    "pdim_group_lasso",
    "pdim_solution_path",
    "pdim_training",
    "pdim_validation",
    "qe_complexity",
    "sample_complexity",
    "sign_pattern",
    "smallest_singular_value",
    "validation_loss",
]
