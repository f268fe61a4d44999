"""Strip-trial simulation, GWR fitting and design scoring."""

import csv
import io
import json

from . import _core
from ._core import (
    FactorizationError,
    InvalidInput,
    SchemaError,
    SelectionError,
    SingularFit,
    coefficient_mse,
    design,
    f_upper_tail,
    gwr_fit,
    select_bandwidth,
)

__version__ = _core.__version__


def _dump(config):
    if config is None:
        return ""
    return config if isinstance(config, str) else json.dumps(config)


def simulate_replicate(config, field_scenario, replicate):
    """Trials of every design on one shared coefficient field."""
    return _core.simulate_replicate(_dump(config), field_scenario, replicate)


def run_experiment(config=None):
    """Score rows (dicts) for every trial and bandwidth policy."""
    return list(csv.DictReader(io.StringIO(_core.run_experiment(_dump(config)))))


def run_pipeline(config, out):
    _core.run_pipeline(_dump(config), str(out))


__all__ = [
    "FactorizationError",
    "InvalidInput",
    "SchemaError",
    "SelectionError",
    "SingularFit",
    "coefficient_mse",
    "design",
    "f_upper_tail",
    "gwr_fit",
    "run_experiment",
    "run_pipeline",
    "select_bandwidth",
    "simulate_replicate",
]
