"""Few-atom trap loss statistics.

Stochastic atom-number dynamics in a small trap, fluorescence trace synthesis,
step detection, per-occupancy rate fitting, and the repump-shielding model of
the dominant two-atom loss channel.
"""

from .constants import CESIUM, PhysConstants, c3_atomic_to_si
from .trap import (TrapConfig, depth_minimum, effective_volume,
                   pair_rate_gradient_scaling, photons_to_stop,
                   saturation_parameter, trap_depth)
from .channels import (ChannelSet, Outcome, ShieldingParams, classify_outcome,
                       condon_radius, effective_betas, lz_pass_probability,
                       lz_thermal_average, outcome_probabilities,
                       scaling_constant, suppression_ratio)
from .markov import (EventLog, RateModel, TruncationError, expected_event_rates,
                     master_stationary, simulate, stationary_moments)
from .trace import FluorescenceTrace, binned_mean_counts, synthesize
from .detect import (Calibration, CalibrationError, DetectionQualityError,
                     DetectionReport, calibrate, coincidence_probability, detect)
from .fitting import (ConvergenceError, DegenerateDataError, EventRateTable,
                      FitResult, SuppressionFit, correct_coincidences,
                      extrapolate_beta_hcc, fit_rates, fit_repump_decay,
                      infer_temperature, tabulate, weighted_mean)
from .config import PRESETS, ConfigError, RunConfig, build_config, load_config

__version__ = "0.1.0"

__all__ = [
    "CESIUM", "PhysConstants", "c3_atomic_to_si",
    "TrapConfig", "depth_minimum", "effective_volume",
    "pair_rate_gradient_scaling", "photons_to_stop", "saturation_parameter",
    "trap_depth",
    "ChannelSet", "Outcome", "ShieldingParams", "classify_outcome",
    "condon_radius", "effective_betas", "lz_pass_probability",
    "lz_thermal_average", "outcome_probabilities", "scaling_constant",
    "suppression_ratio",
    "EventLog", "RateModel", "TruncationError", "expected_event_rates",
    "master_stationary", "simulate", "stationary_moments",
    "FluorescenceTrace", "binned_mean_counts", "synthesize",
    "Calibration", "CalibrationError", "DetectionQualityError",
    "DetectionReport", "calibrate", "coincidence_probability", "detect",
    "ConvergenceError", "DegenerateDataError", "EventRateTable", "FitResult",
    "SuppressionFit", "correct_coincidences", "extrapolate_beta_hcc",
    "fit_rates", "fit_repump_decay", "infer_temperature", "tabulate",
    "weighted_mean",
    "PRESETS", "ConfigError", "RunConfig", "build_config", "load_config",
    "__version__",
]
