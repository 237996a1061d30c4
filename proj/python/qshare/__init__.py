"""Python bindings for the qshare simulator."""

import json

from ._core import (
    Circuit,
    builtin_device_names,
    circuit_from_spec,
    simulate,
    statevector,
)
from . import _core

__all__ = [
    "Circuit",
    "builtin_device_names",
    "circuit_from_spec",
    "normalize_config",
    "run",
    "simulate",
    "statevector",
]


def _document(config):
    return config if isinstance(config, str) else json.dumps(config)


def normalize_config(config):
    """Validated config with every default filled in. Raises ValueError."""
    return json.loads(_core.normalize_config(_document(config)))


def run(config, seed=None, out=None, threads=1):
    """Run a scenario config (dict or JSON text); returns the results dict.

    The returned dict carries "passed" for the built-in checks. With `out`
    the report bundle is also written to that directory.
    """
    text, _, _ = _core.run_config(_document(config), seed, out, threads)
    return json.loads(text)
