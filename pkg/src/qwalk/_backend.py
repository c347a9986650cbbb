"""Kernel backend selection.

The compiled extension is used when importable; ``QWALK_BACKEND=numpy`` forces
the pure-Python fallback.
"""

import importlib
import os

from . import _kernels_py

_CHOICES = {"cython": "qwalk._kernels", "numpy": "qwalk._kernels_py"}


def load(name):
    """Import a specific backend module by name (``"cython"`` or ``"numpy"``)."""
    if name not in _CHOICES:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(_CHOICES)}")
    return importlib.import_module(_CHOICES[name])


def available():
    names = []
    for name in _CHOICES:
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    wanted = os.environ.get("QWALK_BACKEND", "").strip().lower()
    if wanted:
        return load(wanted)
    try:
        return load("cython")
    except ImportError:
        return _kernels_py


kernels = _select()
BACKEND = kernels.NAME
