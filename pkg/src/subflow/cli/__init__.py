"""Command-line front end: ``subflow <validate|flow|props|bracket|push|tangent>``."""

from .model import Diagnostic, Model, ModelError, bundled_models, load

__all__ = ["Diagnostic", "Model", "ModelError", "bundled_models", "load"]
