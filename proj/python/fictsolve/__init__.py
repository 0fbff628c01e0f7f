"""Fictitious-domain saddle-point solvers with augmented Lagrangian preconditioning."""

import json

from ._core import (
    ConfigError,
    mass_equivalence,
    normalize_config,
    parse_levels,
    sparsity_counts,
)
from ._core import run_experiment as _run_experiment
from ._core import spectrum as _spectrum

__all__ = [
    "ConfigError",
    "mass_equivalence",
    "normalize_config",
    "parse_levels",
    "run",
    "spectrum",
    "sparsity_counts",
]


def run(config):
    """Run an experiment from a config dict. Returns (status, log)."""
    return _run_experiment(json.dumps(config))


def spectrum(config):
    """Preconditioned spectra for a config dict, one entry per gamma."""
    return _spectrum(json.dumps(config))
