"""Plasma conservation laws on Riemann, Lagrange and multi-time jet spaces."""

from ._core import (
    DegenerateMetricError,
    IntegrationError,
    JetplasmaError,
    NormalizationError,
    ParseError,
    Scenario,
    ScenarioError,
    __version__,
    christoffel,
    format_double,
    gradient,
    run_cli,
    sha256_hex,
)

__all__ = [
    "DegenerateMetricError",
    "IntegrationError",
    "JetplasmaError",
    "NormalizationError",
    "ParseError",
    "Scenario",
    "ScenarioError",
    "__version__",
    "christoffel",
    "format_double",
    "gradient",
    "run_cli",
    "sha256_hex",
]
