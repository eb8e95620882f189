"""Diffusion distributed Kalman filter: simulation, diagnostics and property checks."""

from ._core import (
    ConfigError,
    DimensionError,
    DkfError,
    ExperimentConfig,
    IoError,
    NumericalError,
    RunArtifact,
    ValidationError,
    a_min,
    adapt,
    bundled_fig1_config,
    combine,
    diameter,
    estimate_lambda,
    load_config,
    parse_config,
    record_schedule,
    run_cli,
    run_monte_carlo,
    validate_graph,
    verify,
)


def fig1_config():
    """The bundled three-sensor example as an ExperimentConfig."""
    return parse_config(bundled_fig1_config())


__all__ = [name for name in dir() if not name.startswith("_")]
