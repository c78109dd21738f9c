"""Numerical toolkit for null distances, generalized time functions, and
limit curves on discretized 1+1 dimensional spacetimes."""

from .config import (
    DomainBox,
    ExcludedRegion,
    ExperimentSpec,
    ExtractionConfig,
    LatticeConfig,
    QuadratureConfig,
    SpacetimeConfig,
    load_spacetime_config,
    parse_spacetime_config,
)
from .curves import (
    CausalCurve,
    LengthReport,
    classify_polyline,
    domain_alignment_maps,
    filter_alignment_subsequence,
    h_arclength_reparam,
    lorentzian_length,
    read_curve_csv,
    riemannian_length,
    time_reparam,
    write_curve_csv,
)
from .errors import (
    AcausalityError,
    CausalityError,
    CauchyViolationWarning,
    ConfigError,
    DisconnectedError,
    DivergenceError,
    DomainError,
    ExcludedPointError,
    ExtractionFailure,
    LorlimError,
    MarginError,
    MonotonicityError,
    RegularityError,
    SignatureError,
    StartPointError,
)
from .extraction import (
    CurveSequence,
    ExtractionReport,
    HLatticeOracle,
    LengthControlVerdict,
    NullDistanceOracle,
    cosmological_pipeline,
    extract_limit_curve,
    length_control_check,
)
from .extrapolate import LimitEstimate, estimate_limit, limsup_estimate
from .nulldist import (
    MetricAxiomReport,
    NullDistanceResult,
    ZigzagGraph,
    length_vs_nulldistance_bound,
    metric_axiom_suite,
    null_distance,
    null_distances_bulk,
    topology_compatibility_probe,
)
from .spacetime import (
    CausalLattice,
    MetricField,
    VectorClass,
    build_lattice,
    build_metric_field,
    classify_vector,
)
from .timefields import (
    GradientReport,
    ScalarTimeField,
    anti_lipschitz_check,
    cosmological_time,
    gradient_report,
    lattice_d_L,
    lattice_d_L_from,
    lattice_d_L_into,
    level_set_polyline,
    surface_function,
)

__version__ = "0.1.0"
