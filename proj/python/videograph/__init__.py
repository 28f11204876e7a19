"""Python bindings for the VideoGraph C++ core."""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    FormatError,
    NumericError,
    ShapeError,
    extract_activity_graph,
    force_layout,
    gradient_suite,
    kmeans,
    mean_average_precision,
    read_feature_file,
    sobol,
    track_node_distances,
    write_feature_file,
)

__all__ = [
    "ConfigError",
    "FormatError",
    "Model",
    "NumericError",
    "ShapeError",
    "cli",
    "extract_activity_graph",
    "force_layout",
    "gradient_suite",
    "kmeans",
    "mean_average_precision",
    "read_feature_file",
    "shape_inference",
    "sobol",
    "track_node_distances",
    "write_feature_file",
]


def _config_text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def shape_inference(config):
    """Per-stage shapes for a model config given as a dict or JSON text."""
    return [(stage, tuple(shape)) for stage, shape in _core.shape_inference(_config_text(config))]


def Model(config):
    """A VideoGraph or mean-pool model built from a config dict or JSON text."""
    return _core.Model(_config_text(config))


def cli(*args):
    """Run the command-line tool in-process; returns (exit_code, stdout, stderr)."""
    return _core.cli([str(a) for a in args])
