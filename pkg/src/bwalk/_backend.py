"""Select the simulation core: compiled extension if importable, else Python.

Set ``BWALK_BACKEND=python`` to force the pure-Python core.
"""

import os

from . import _simcore_py

BACKEND = "python"
core = _simcore_py

if os.environ.get("BWALK_BACKEND", "").lower() != "python":
    try:
        from . import _simcore as core  # noqa: F811
    except ImportError:
        core = _simcore_py
    else:
        BACKEND = "compiled"


def get_core(name=None):
    """Return the core module by name ("compiled" or "python"), or the default."""
    if name is None:
        return core
    if name == "python":
        return _simcore_py
    if name == "compiled":
        from . import _simcore

        return _simcore
    raise ValueError(f"unknown backend {name!r}")
