"""Energy-based active open-set annotation.

Thin Python layer over the C++ core. Scores and selections work on plain lists or
NumPy arrays; experiments take a nested dict shaped like ``default_config()``.
"""

import json

from ._eaoa import (
    Error,
    NumericError,
    ShapeError,
    ValidationError,
    aleatoric_uncertainty,
    data_driven_eu,
    epistemic_uncertainty,
    fit_gmm,
    free_energy,
    fuse_eu,
    margin_energy_loss,
    reverse_knn_arrows,
    select,
    to_probabilistic,
    update_k,
)
from . import _eaoa

__all__ = [
    "Error",
    "NumericError",
    "ShapeError",
    "ValidationError",
    "aleatoric_uncertainty",
    "data_driven_eu",
    "default_config",
    "epistemic_uncertainty",
    "fit_gmm",
    "free_energy",
    "fuse_eu",
    "margin_energy_loss",
    "reverse_knn_arrows",
    "run_experiment",
    "select",
    "to_probabilistic",
    "update_k",
]


def default_config():
    """The full default experiment config as a nested dict."""
    return json.loads(_eaoa.default_config_json())


def run_experiment(config=None, out_dir="", jobs=1):
    """Run an experiment. ``config`` may be partial; missing keys take defaults.

    Returns the summary dict. When ``out_dir`` is given, rounds.csv, summary.json and
    curves.csv are written there too.
    """
    return json.loads(_eaoa.run_experiment_json(json.dumps(config or {}), str(out_dir), jobs))
