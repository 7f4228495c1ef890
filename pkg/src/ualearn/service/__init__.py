"""Human-in-the-loop annotation service."""

from .app import ApiError, create_app
from .render import render_sample_png
from .session import AnnotationTask, HumanOracle, Session

__all__ = ["AnnotationTask", "ApiError", "HumanOracle", "Session",
           "create_app", "render_sample_png"]
