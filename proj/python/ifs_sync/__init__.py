"""Python front end for the ifs_sync experiment runner.

Configs and results are plain dicts; they cross into C++ as JSON text.
"""

import json as _json

from ._core import (
    ComputationError,
    ConfigError,
    DomainError,
    __version__,
    set_worker_count,
    worker_count,
)
from . import _core

__all__ = [
    "ComputationError",
    "ConfigError",
    "DomainError",
    "compute",
    "run",
    "schema",
    "set_worker_count",
    "validate",
    "worker_count",
]


def _text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def compute(config):
    """Run the experiment in memory and return its report."""
    return _json.loads(_core.compute(_text(config)))


def run(config):
    """Run the experiment, write report, CSV and manifest files, return the manifest."""
    return _json.loads(_core.run(_text(config)))


def validate(config):
    """Canonical config with defaults filled in; raises ConfigError."""
    return _json.loads(_core.validate(_text(config)))


def schema():
    return _json.loads(_core.schema())
