"""Compositions of discrete Laplacians on masked cell grids.

Four realizations of the (negative) Laplacian on a masked grid, the
thirteen well-posed fourth-order problems their compositions produce, the
five rejected orderings, exchange identities between the inverses, duality
and Helmholtz machinery for the underlying first-order operators, and the
norm-estimate chains that tie everything to two computable constants.
"""

from .errors import (
    BizooError,
    CompatibilityError,
    ConvergenceFailure,
    EmptyDomainError,
    ExpressionError,
    ForbiddenCompositionError,
    SpaceMismatchError,
    StencilReachError,
)
from .expressions import Expression, parse_expression
from .grid import (
    DofSpace,
    Field,
    GridDomain,
    build_domain,
    depth_ring,
    domain_to_dict,
    load_domain,
    read_field_csv,
    save_domain,
    write_field_csv,
)
from .laplace import (
    ChainCheckReport,
    LaplaceSolveReport,
    LaplacianKind,
    estimate_chain_check,
    solve_laplace,
)
from .linalg import (
    KrylovResult,
    SolverConfig,
    SparseOperator,
    cg_solve,
    default_tolerance,
    deflated_cg_solve,
    identity_operator,
    normal_cg_solve,
    orthonormalize,
    smallest_eigenpairs,
)
from .operators import (
    OperatorCatalog,
    assemble_curl_pair,
    assemble_gradient,
    assemble_hessian,
    assemble_interior_biharmonic,
    assemble_interior_laplacian,
    assemble_laplacian,
    assemble_overdetermined,
    assemble_pad,
)
from .pairs import (
    DualPair,
    HelmholtzSplit,
    best_constant,
    helmholtz_decompose,
    make_pair,
    project_range,
    reduced_solve,
)
from .studies import (
    MANUFACTURED,
    ConvergenceTable,
    ManufacturedCase,
    constants_audit,
    run_check,
    run_convergence,
)
from .zoo import (
    BiharmonicChainReport,
    BiharmonicSolveReport,
    ZooProblem,
    biharmonic_chain_check,
    classify_zoo,
    dense_solution_operator,
    exchange_identity_check,
    resolve_problem,
    solve_hessian,
    solve_regularized,
    solve_zoo,
)

__version__ = "0.1.0"

__all__ = [
    "BizooError",
    "CompatibilityError",
    "ConvergenceFailure",
    "EmptyDomainError",
    "ExpressionError",
    "ForbiddenCompositionError",
    "SpaceMismatchError",
    "StencilReachError",
    "Expression",
    "parse_expression",
    "DofSpace",
    "Field",
    "GridDomain",
    "build_domain",
    "depth_ring",
    "domain_to_dict",
    "load_domain",
    "read_field_csv",
    "save_domain",
    "write_field_csv",
    "ChainCheckReport",
    "LaplaceSolveReport",
    "LaplacianKind",
    "estimate_chain_check",
    "solve_laplace",
    "KrylovResult",
    "SolverConfig",
    "SparseOperator",
    "cg_solve",
    "default_tolerance",
    "deflated_cg_solve",
    "identity_operator",
    "normal_cg_solve",
    "orthonormalize",
    "smallest_eigenpairs",
    "OperatorCatalog",
    "assemble_curl_pair",
    "assemble_gradient",
    "assemble_hessian",
    "assemble_interior_biharmonic",
    "assemble_interior_laplacian",
    "assemble_laplacian",
    "assemble_overdetermined",
    "assemble_pad",
    "DualPair",
    "HelmholtzSplit",
    "best_constant",
    "helmholtz_decompose",
    "make_pair",
    "project_range",
    "reduced_solve",
    "MANUFACTURED",
    "ConvergenceTable",
    "ManufacturedCase",
    "constants_audit",
    "run_check",
    "run_convergence",
    "BiharmonicChainReport",
    "BiharmonicSolveReport",
    "ZooProblem",
    "biharmonic_chain_check",
    "classify_zoo",
    "dense_solution_operator",
    "exchange_identity_check",
    "resolve_problem",
    "solve_hessian",
    "solve_regularized",
    "solve_zoo",
    "__version__",
]
