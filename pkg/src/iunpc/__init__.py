"""Intersection-union permutation tests for two-sample equivalence."""

import os

import numba

if "NUMBA_THREADING_LAYER" not in os.environ:
    numba.config.THREADING_LAYER = "omp"

from .aux_tests import SharpTestResult, Sidedness, median_test_exact, sharp_permutation_test  # noqa: E402
from .calibrate import (  # noqa: E402
    CalibrationResult,
    CalibrationSpec,
    calibrate_alpha,
    generate_boundary_dataset,
    pooled_sigma,
)
from .estimators import (  # noqa: E402
    BoundaryCalibrator,
    IUEquivalenceTest,
    MeasurementTransformer,
    SharpPermutationTest,
)
from .iu_test import (  # noqa: E402
    AdaptiveGlobalStream,
    Decision,
    IuTestResult,
    PartialPValues,
    adaptive_stream,
    combine_max,
    run_iu_test,
)
from .perm_engine import (  # noqa: E402
    JointPermutationDistribution,
    PermutationPlan,
    draw_permutation,
    joint_distribution,
    partial_statistics,
    pvalue,
)
from .power_design import (  # noqa: E402
    DesignResult,
    PowerEstimate,
    PowerQuery,
    estimate_power,
    find_design,
    inverse_square_design,
    maximal_power,
)
from .transform import (  # noqa: E402
    MarginPair,
    ShiftedPair,
    TransformKind,
    TwoSampleData,
    apply_transform,
    shift_for_margins,
)

__version__ = "0.1.0"

__all__ = [
    "SharpTestResult",
    "Sidedness",
    "median_test_exact",
    "sharp_permutation_test",
    "AdaptiveGlobalStream",
    "BoundaryCalibrator",
    "CalibrationResult",
    "CalibrationSpec",
    "Decision",
    "DesignResult",
    "IUEquivalenceTest",
    "IuTestResult",
    "JointPermutationDistribution",
    "MarginPair",
    "MeasurementTransformer",
    "PartialPValues",
    "PermutationPlan",
    "PowerEstimate",
    "PowerQuery",
    "SharpPermutationTest",
    "ShiftedPair",
    "TransformKind",
    "TwoSampleData",
    "adaptive_stream",
    "apply_transform",
    "calibrate_alpha",
    "combine_max",
    "draw_permutation",
    "estimate_power",
    "find_design",
    "generate_boundary_dataset",
    "inverse_square_design",
    "joint_distribution",
    "maximal_power",
    "partial_statistics",
    "pooled_sigma",
    "pvalue",
    "run_iu_test",
    "shift_for_margins",
]
