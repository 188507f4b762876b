"""Critical graphs of the quadratic differential -(z-a)(z-b)/z^2 dz^2.

Traces horizontal/vertical trajectories, evaluates and classifies period
integrals against their closed forms, classifies graph topologies, checks
polygon-face angle sums, realizes the reality locus in the b-plane, and
cross-checks rescaled Laguerre root measures against the algebraic Cauchy
transform they converge to.
"""

from .core import (
    INFINITY,
    BranchPath,
    CanonicalMap,
    ContinuationError,
    CriticalPoint,
    DegenerateError,
    DomainError,
    InvalidDifferentialError,
    QDError,
    QDiff,
    ResolutionError,
    canonical_map,
    canonicalize,
    continue_sqrt_D,
    critical_points,
    eval_D,
    launch_directions,
    residue_infinity,
    residue_origin,
)
from .graph import (
    CaseLabel,
    CriticalGraph,
    GammaLocus,
    PolygonFace,
    SurveyGrid,
    classify_graph,
    extract_faces,
    gamma_locus,
    survey,
    teichmuller_sum,
    validate_teichmuller,
)
from .laguerre_lab import (
    AlgebraicBranch,
    RescaledLaguerre,
    RootMeasure,
    algebraic_branch,
    algebraic_h,
    build_polynomial,
    convergence_report,
    empirical_cauchy,
    laguerre_zeros,
    motherbody_density,
    roots,
)
from .periods import (
    CriterionResult,
    PeriodResult,
    RealityClass,
    criterion_reality,
    lemma_check,
    origin_circle_quadrature,
    period_candidates,
    period_integral,
    reality_details,
)
from .tracer import (
    Arc,
    Termination,
    TraceConfig,
    detect_termination,
    trace,
    trace_all_from_zeros,
    unique_arcs,
)

__version__ = "0.1.0"
