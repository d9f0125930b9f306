"""Numerical tensor calculus for conformally quasi-recurrent metrics.

Metrics are given as expression strings; curvature is computed exactly at a
point from truncated Taylor jets, then checked against a battery of
identities.
"""

from .catalog import builtin, names
from .curvature import CurvaturePack, curvature_pack
from .errors import CQRLabError, InputError, NumericalError
from .exprdsl import MetricSpec, parse_expression
from .report import AnalysisConfig, analyze

__all__ = [
    "AnalysisConfig",
    "CQRLabError",
    "CurvaturePack",
    "InputError",
    "MetricSpec",
    "NumericalError",
    "analyze",
    "builtin",
    "curvature_pack",
    "names",
    "parse_expression",
]
