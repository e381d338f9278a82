"""Synthetic forged scientific figures with ID-enriched ground truth, and
copy-move detection scoring with the consistent-true-positive rule."""

__version__ = "0.1.0"

from .errors import ForgeryError, TemplateError
from .metrics import consistent_true_positive, evaluate_figure

__all__ = ["ForgeryError", "TemplateError", "consistent_true_positive", "evaluate_figure", "__version__"]
