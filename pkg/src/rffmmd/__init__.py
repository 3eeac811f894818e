"""Kernel two-sample testing with random Fourier features.

The package provides quadratic-time and feature-based squared-MMD
estimators together with the common sub-quadratic baselines, permutation
calibration that reuses kernels and features across relabelings, samplers
for a menu of benchmark distributions, closed-form Gaussian references,
and an experiment harness with a CSV/JSON result schema.
"""

from .core import (
    PooledSample,
    RngStream,
    SampleSet,
    SignificanceLevel,
    derive_stream,
    validate_pair,
)
from .estimators import (
    EstimatorId,
    mmd2_biased,
    mmd2_block,
    mmd2_incomplete,
    mmd2_linear,
    mmd2_unbiased,
    rff_mmd2_biased,
    rff_mmd2_streamed,
    rff_mmd2_unbiased,
)
from .features import FeatureMatrix, feature_map, feature_matrix, feature_mean
from .harness import (
    BandwidthPolicy,
    ExperimentConfig,
    ExperimentRecord,
    RPolicy,
    config_from_dict,
    emit_results,
    run_inconsistency_demo,
    run_power_sweep,
    run_timing_bench,
    theory_parameter_policy,
)
from .kernels import (
    FrequencyDraw,
    KernelSpec,
    eval_kernel,
    gram,
    median_heuristic,
    sample_frequencies,
)
from .oracles import (
    GaussianPair,
    gaussian_mmd2_closed_form,
    moment_identity_rhs,
    moment_ratio_bound_check,
)
from .permutation import PermutationPlan, TestResult, permute_and_evaluate, rff_mmd_test
from .scenarios import (
    MnistStore,
    ScenarioSpec,
    load_mnist,
    perturbation_density,
    sample_mnist_mix,
    sample_perturbed_uniform,
    sample_polya,
    sample_scenario,
)

__version__ = "0.1.0"
