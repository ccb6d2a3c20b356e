"""Deterministic corruption/perturbation benchmark generation and
robustness scoring."""

__version__ = "0.1.0"

from .baselines import BaselineProfile, resolve_baseline
from .corruptions import (ALL_KINDS, BENCHMARK_KINDS, VALIDATION_KINDS,
                          apply_corruption)
from .errors import (CorruptionBenchError, FormatError, ParameterError,
                     UndefinedMeasureError, ValidationError)
from .evaluate import (evaluate_run, read_labels, read_prediction_log,
                       validate_predictions, write_labels,
                       write_prediction_log)
from .generate import generate_corruptions, generate_perturbations
from .imaging import distortion, load_image, save_image
from .manifest import Manifest, validate_tree
from .metrics import (ErrorTable, RobustnessReport, corruption_error,
                      flip_probability, flip_rate, mce, mean_flip_rate,
                      mean_t5d, relative_corruption_error, relative_mce,
                      t5d, top5_distance, unstandardized_t5d,
                      zipfian_distance)
from .perturbations import (COMMON_KINDS, EXTRA_KINDS, NOISE_MODE_KINDS,
                            PERTURBATION_KINDS, PerturbationSpec,
                            frame_pairs, perturbation_sequence)
from .randomness import RandomStream
from .schedules import SeveritySchedule, load_schedule

__all__ = [
    "__version__",
    "ALL_KINDS", "BENCHMARK_KINDS", "VALIDATION_KINDS",
    "COMMON_KINDS", "EXTRA_KINDS", "NOISE_MODE_KINDS", "PERTURBATION_KINDS",
    "BaselineProfile", "CorruptionBenchError", "ErrorTable", "FormatError",
    "Manifest", "ParameterError", "PerturbationSpec", "RandomStream",
    "RobustnessReport", "SeveritySchedule", "UndefinedMeasureError",
    "ValidationError",
    "apply_corruption", "corruption_error", "distortion", "evaluate_run",
    "flip_probability", "flip_rate", "frame_pairs", "generate_corruptions",
    "generate_perturbations", "load_image", "load_schedule", "mce",
    "mean_flip_rate", "mean_t5d", "perturbation_sequence", "read_labels",
    "read_prediction_log", "relative_corruption_error", "relative_mce",
    "resolve_baseline", "save_image", "t5d", "top5_distance",
    "unstandardized_t5d", "validate_predictions", "validate_tree",
    "write_labels", "write_prediction_log",
]
