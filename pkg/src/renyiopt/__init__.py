"""Minimization of order-alpha quantum Renyi divergences over density matrices.

Exposes state containers, the four divergence-minimization objectives,
entropic mirror-descent solvers (adaptive step size, line search) with a
fixed-point baseline, and verification oracles.
"""

from .errors import (
    BoundaryError,
    DomainError,
    InvariantViolation,
    NumericalError,
    ParameterError,
    ParseError,
    ShapeError,
)
from .objectives import (
    GeneralizedSandwichedInfo,
    Objective,
    PetzAugustin,
    SandwichedAugustin,
    make_conditional_entropy,
    make_generalized_sandwiched_info,
    make_petz_augustin,
    make_sandwiched_augustin,
    make_sandwiched_renyi_info,
    petz_divergence,
    sandwiched_divergence,
    umegaki_relative_entropy,
    validate_alpha,
)
from .solvers import (
    ArmijoParams,
    PolyakParams,
    SolveTrace,
    TraceRecord,
    bregman_vn,
    entropic_md_step,
    gauge_fixed,
    solve_armijo,
    solve_fixed_point,
    solve_polyak,
)
from .states import (
    BipartiteState,
    CQEnsemble,
    DensityMatrix,
    digest,
    load,
    maximally_mixed,
    random_bipartite,
    random_cq_ensemble,
    random_density,
    save,
    trace_distance,
)
from .verification import (
    OracleResult,
    bloch_grid_oracle,
    classical_divergence,
    finite_diff_directional,
    load_fixtures,
    random_traceless_direction,
    save_fixtures,
    simplex_grid_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "ArmijoParams",
    "BipartiteState",
    "BoundaryError",
    "CQEnsemble",
    "DensityMatrix",
    "DomainError",
    "GeneralizedSandwichedInfo",
    "InvariantViolation",
    "NumericalError",
    "Objective",
    "OracleResult",
    "ParameterError",
    "ParseError",
    "PetzAugustin",
    "PolyakParams",
    "SandwichedAugustin",
    "ShapeError",
    "SolveTrace",
    "TraceRecord",
    "bloch_grid_oracle",
    "bregman_vn",
    "classical_divergence",
    "digest",
    "entropic_md_step",
    "finite_diff_directional",
    "gauge_fixed",
    "load",
    "load_fixtures",
    "make_conditional_entropy",
    "make_generalized_sandwiched_info",
    "make_petz_augustin",
    "make_sandwiched_augustin",
    "make_sandwiched_renyi_info",
    "maximally_mixed",
    "petz_divergence",
    "random_bipartite",
    "random_cq_ensemble",
    "random_density",
    "random_traceless_direction",
    "sandwiched_divergence",
    "save",
    "save_fixtures",
    "simplex_grid_oracle",
    "solve_armijo",
    "solve_fixed_point",
    "solve_polyak",
    "trace_distance",
    "umegaki_relative_entropy",
    "validate_alpha",
]
