"""Kernel backend selection.

The hot per-pixel loops (disc painting, threshold-crossing sweeps, dwell
scans) exist twice: a compiled Cython extension (``_core``) and a pure-numpy
fallback (``pykern``). Both implement the same arithmetic expression by
expression, so streams and reconstructions are bit-identical across
backends; ``benchmarks/bench_backends.py`` checks that and compares speed.

Set OCCLUSIM_DISABLE_EXT=1 to force the fallback.
"""

import os

from . import pykern

_BACKENDS = {"python": pykern}

if not os.environ.get("OCCLUSIM_DISABLE_EXT"):
    try:
        from . import _core

        _BACKENDS["cython"] = _core
    except ImportError:
        pass

_active_name = "cython" if "cython" in _BACKENDS else "python"


def backend_name() -> str:
    """Name of the currently active kernel backend."""
    return _active_name


def available_backends() -> tuple:
    return tuple(sorted(_BACKENDS))


def use_backend(name: str):
    """Switch backend globally (mainly for tests and benchmarks)."""
    global _active_name
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available (have {sorted(_BACKENDS)})")
    _active_name = name
    return _BACKENDS[name]


def active():
    """The module implementing the active backend."""
    return _BACKENDS[_active_name]
