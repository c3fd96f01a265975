"""Dyadic Zygmund bases: exact constructions, union measures and the
maximal-operator lower-bound experiment."""

__version__ = "0.1.0"

from .dyadic import (  # noqa: E402
    AnchoredBox,
    DyadicRational,
    ExponentSum,
    ExponentVec,
    Ordering,
    RootExponent,
    box_volume,
    compare_exponents,
    contains_cube,
    cube,
    intersect_anchored,
)
from .extension import MonotoneExtension, SeedFunction, extend_eval, verify_monotone  # noqa: E402
from .bases import (  # noqa: E402
    BetaSequence,
    IndexNotFoundError,
    LatticeBijection,
    ZygmundBasis,
    basis_A_interval,
    beta_concat,
    beta_index_find,
    beta_shell,
    bijection_eval,
    is_E_prime,
    lift_extension,
    select_cd,
    tau_map,
    theorem1_basis,
    theorem2_family,
)
from .measure import (  # noqa: E402
    MixedModeError,
    SparsenessReport,
    UnionMeasureResult,
    sparseness_witness,
    union_volume,
    union_volume_oracle,
)
from .maximal import (  # noqa: E402
    TestFunction,
    WeakTypeConfig,
    average_over_box,
    maximal_eval,
    orlicz_rhs,
    superlevel_lower_bound,
)
from .experiment import ExperimentConfig, fit_loglog_slope, run_lowerbound, run_suite  # noqa: E402
