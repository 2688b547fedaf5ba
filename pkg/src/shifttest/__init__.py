"""Nonparametric goodness-of-fit testing for curves equal up to a periodic shift.

The test statistic is the penalized likelihood ratio in the Fourier sequence
model, minimized over the unknown shift; its null distribution is
asymptotically parameter free, which yields universal thresholds and
p-values.  The package also ships the noise-adaptive variant, the
multidimensional variant, a rotation-invariant image keypoint descriptor
driven by the same test, and a Monte Carlo harness for calibration, power,
tail-bound, and keypoint-matching experiments.
"""

from .adaptive import (
    AdaptiveConfig,
    AdaptiveOutcome,
    adaptive_decide,
    critical_value,
    critical_value_mc,
    log_form_statistic,
    statistic_tilde,
)
from .experiments import (
    ExperimentSpec,
    ReplicateRecord,
    TailBoundCase,
    emit_csv,
    emit_svg_plot,
    load_csv,
    run_loft_eval,
    run_power,
    run_tail_bounds,
    run_tau_rate,
    run_type1_adaptive,
    run_type1_known,
)
from .loft import (
    GrayImage,
    LoftConfig,
    LoftDescriptor,
    MatchDecision,
    add_gaussian_noise,
    benchmark_texture,
    calibrate_ring_noise,
    descriptor,
    estimate_noise,
    load_descriptor,
    load_pgm,
    make_texture,
    match_decide,
    match_statistic,
    ring_profiles,
    rotate90,
    rotate_point_90,
    save_descriptor,
    save_pgm,
)
from .spectral import (
    SignalSpec,
    SpectralObservation,
    SpectralSignal,
    apply_shift,
    heavisine_coeffs,
    heavisine_smoothed_coeffs,
    load_observation_csv,
    perturbation_coeffs,
    quadrature_fourier_coeffs,
    save_observation_csv,
    synthesize_observation,
)
from .testing import (
    TestConfig,
    TestOutcome,
    chi2_form,
    delta_via_definition,
    multidim_statistic,
    norm_cdf,
    norm_quantile,
    p_value,
    profile_m,
    statistic_delta,
    threshold,
)
from .weights import (
    ConditionReport,
    WeightSequence,
    check_conditions,
    custom_weights,
    load_weights_csv,
    pinsker_weights,
    projection_weights,
    save_weights_csv,
    tikhonov_weights,
    weight_norms,
)

__version__ = "0.1.0"
