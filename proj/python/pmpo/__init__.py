"""Python front end for the pmpo core library."""

import json

from ._core import (
    CapacityError,
    ConfigError,
    DegenerateInputError,
    InputError,
    NonFiniteError,
    argmax_softmax,
    categorical_pmpo_loss,
    logsumexp_bound,
    parse_seed_list,
    run_em,
)
from . import _core

__all__ = [
    "CapacityError",
    "ConfigError",
    "DegenerateInputError",
    "InputError",
    "NonFiniteError",
    "argmax_softmax",
    "categorical_pmpo_loss",
    "logsumexp_bound",
    "parse_seed_list",
    "run",
    "run_em",
    "validate",
]


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def validate(config):
    """List of violations for a config dict or JSON string (empty when valid)."""
    return _core.validate_config(_text(config))


def run(config, output_dir=None, seeds=None, quiet=True):
    """Run an experiment config and return the parsed summary.json."""
    if isinstance(seeds, str):
        seeds = parse_seed_list(seeds)
    return json.loads(_core.run_config(_text(config), output_dir, seeds, quiet))
