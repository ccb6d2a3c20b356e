"""Inference adapter: runs a classifier over corruption-bench trees and
writes prediction logs in the harness's JSONL format."""

__version__ = "0.1.0"

from .errors import AdapterError, ConfigError
from .inference import run_inference, ten_crop_views
from .models import ModelRef, constant_predict, toy_predict

__all__ = [
    "__version__",
    "AdapterError", "ConfigError",
    "ModelRef", "run_inference", "ten_crop_views",
    "toy_predict", "constant_predict",
]
