"""Transfer operators of piecewise expanding interval maps.

Growth quantities and topological pressure, exact step-function algebra,
transfer-operator action and Ulam discretization, p-variation and atomic
Besov norms, explicit eigenfunction constructions, and the lower bounds
they certify for the essential spectral radius.
"""

__version__ = "0.1.0"

from .exact import QC, qq, qq_str
from .interval_maps import (
    Cylinder,
    Interval,
    LinearBranch,
    PiecewiseMap,
    ThetaReport,
    WeightFunction,
    build_map_from_weights,
    evaluate,
    map_from_jsonable,
    map_to_jsonable,
    monotonicity_partition,
    theta_infinity,
    theta_sum,
    verify_lebesgue_invariance,
)
from .observables import (
    SampledObservable,
    StepFunction,
    combine,
    compose_affine,
    inner_product,
    integrate,
    lp_norm,
    mean_on,
    pullback,
    restrict,
)
from .transfer_operator import (
    SpectrumReport,
    UlamMatrix,
    WeightedMatrix,
    apply_discretized,
    apply_exact,
    apply_projected,
    invariant_density,
    spectrum,
    ulam_matrix,
    weighted_transfer_matrix,
)
from .function_norms import (
    Atom,
    AtomicRepresentation,
    HomogeneityReport,
    NormParameters,
    besov_atomic_upper,
    besov_dyadic_upper,
    bv_norm,
    homogeneity_probe,
    p_variation,
    p_variation_power,
)
from .spectral_bounds import (
    BoundReport,
    CaseClassification,
    ContrastRow,
    PressureReport,
    bound_bb_new,
    bound_main,
    classify_norm,
    contrast_decay,
    pressure,
)
from .eigen_lab import (
    AffineIFS,
    EigenShiftReport,
    KernelObservable,
    TruncatedEigenSeries,
    WSeries,
    backward_limit,
    build_kernel,
    cantor_ifs,
    cohomology_residual,
    distinct_truncation_values,
    eigen_residual,
    eigen_shift_check,
    h_series,
    orthogonality_gram,
    w_series,
)
from .fixtures import map_d2, map_l3, map_tent, map_w2
from .io import load_map, save_map
