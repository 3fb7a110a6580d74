"""Return-map identification and bilateral symmetry testing for rhythmic systems.

Workflow: section continuous recordings at alternating left/right events,
fit linear return maps to the section-state residuals, and compare
cross-validation errors between normal, mirrored, and combined training sets
to decide whether the two sides follow the same dynamics.
"""

from .core import (
    FixedPointPair,
    MirrorSpec,
    PairedDataset,
    SectionSample,
    build_pairs,
    estimate_fixed_points,
    kinematic_asymmetry,
    mirror_pairs,
    mirror_state,
    residuals,
)
from .crossval import (
    ConditionSummary,
    CvConfig,
    CvResult,
    StepStrideComparison,
    aggregate_condition,
    compare_step_stride,
    run_extended_cv,
    split_indices,
    uncertainty,
)
from .errors import CyclesymError, NumericalError, ValidationError
from .mapfit import SectionMap, cve, fit_map, pseudoinverse
from .pipeline import (
    AnalysisConfig,
    SubjectData,
    SubjectResult,
    analyze_cohort,
    analyze_subject,
    build_report,
    prepare_subject,
)
from .preprocess import (
    FilterSpec,
    TimeSeries,
    butterworth_lowpass,
    central_difference,
    concat_channels,
    dimensionalize,
    estimate_velocities,
    nondimensionalize,
    zero_phase_filter,
)
from .sections import EventSpec, EventTrain, detect_events, sample_sections
from .stats import SlopeFit, TestResult, slope_through_origin, wilcoxon_signed_rank
from .synth import (
    AlternatingModel,
    gen_continuous_gait,
    gen_sections,
    make_symmetric,
    perturb_asymmetry,
    reference_asymmetry,
    reference_symmetric_model,
)

__version__ = "0.1.0"

__all__ = [
    "AlternatingModel",
    "AnalysisConfig",
    "ConditionSummary",
    "CvConfig",
    "CvResult",
    "CyclesymError",
    "EventSpec",
    "EventTrain",
    "FilterSpec",
    "FixedPointPair",
    "MirrorSpec",
    "NumericalError",
    "PairedDataset",
    "SectionMap",
    "SectionSample",
    "SlopeFit",
    "StepStrideComparison",
    "SubjectData",
    "SubjectResult",
    "TestResult",
    "TimeSeries",
    "ValidationError",
    "aggregate_condition",
    "analyze_cohort",
    "analyze_subject",
    "build_pairs",
    "build_report",
    "butterworth_lowpass",
    "central_difference",
    "compare_step_stride",
    "concat_channels",
    "cve",
    "detect_events",
    "dimensionalize",
    "estimate_fixed_points",
    "estimate_velocities",
    "fit_map",
    "gen_continuous_gait",
    "gen_sections",
    "kinematic_asymmetry",
    "make_symmetric",
    "mirror_pairs",
    "mirror_state",
    "nondimensionalize",
    "perturb_asymmetry",
    "prepare_subject",
    "pseudoinverse",
    "reference_asymmetry",
    "reference_symmetric_model",
    "residuals",
    "run_extended_cv",
    "sample_sections",
    "slope_through_origin",
    "split_indices",
    "uncertainty",
    "wilcoxon_signed_rank",
    "zero_phase_filter",
]
