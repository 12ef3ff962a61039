"""banachrep: solvers and certificates for composite-norm regularized inverse problems."""

from .norms import (
    Composite,
    ConjugateReport,
    Lp,
    Transformed,
    WeightedEuclidean,
    composite_conjugate,
    dual_norm_eval,
    dual_spec,
    duality_map,
    extremal_atoms,
    is_conjugate_pair,
    norm_eval,
)
from .kernels import Gaussian, KernelModel, Laplacian, Linear, Polynomial, gram, multi_kernel, predict
from .multikernel import (
    L1Outer,
    MultiKernelProblem,
    WeightedL2Outer,
    component_norms,
    fit_l1_multikernel,
    fit_weighted_l2,
)
from .dictionary import (
    DictionaryProblem,
    SparseSolution,
    analysis_objective,
    build_union_dictionary,
    reduce_to_extreme,
    solve_mixed_two_component,
    solve_synthesis_lasso,
)
from .splines import (
    BiorthoSystem,
    NullSpaceSystem,
    SplineFit,
    build_biortho,
    fit_gtv_spline,
    fit_hilbert_seminorm,
    projector_coeffs,
    reduce_measurements,
)
from .oracle import (
    GenericConvexProblem,
    brute_force_dual_norm,
    solve_generic,
    verify_representer_membership,
)

__version__ = "0.1.0"
