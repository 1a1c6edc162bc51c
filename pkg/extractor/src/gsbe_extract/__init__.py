"""Feature extraction into GSBE containers for logit-bias test-time adaptation."""

from .encoder import DEFAULT_MODEL, ClipEncoder
from .gsbe import write_class_file, write_manifest, write_sample_file
from .prompts import ENSEMBLE_TEMPLATES, SINGLE_TEMPLATE, templates_for_mode

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_MODEL",
    "ClipEncoder",
    "ENSEMBLE_TEMPLATES",
    "SINGLE_TEMPLATE",
    "templates_for_mode",
    "write_class_file",
    "write_manifest",
    "write_sample_file",
]
