"""Kernel backend selection.

The compiled extension is used when it imports; setting the environment
variable ``ZINHPP_PURE_PYTHON=1`` forces the NumPy fallback.
"""
import os
from types import SimpleNamespace

from . import _pykernels

_NAMES = ("mixture_terms", "bernstein_event_terms", "icar_quadratic")


def _namespace(module, name):
    return SimpleNamespace(name=name, **{n: getattr(module, n) for n in _NAMES})


def available_backends() -> dict:
    backends = {"python": _namespace(_pykernels, "python")}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        backends["cython"] = _namespace(_ckernels, "cython")
    return backends


def _select():
    backends = available_backends()
    if os.environ.get("ZINHPP_PURE_PYTHON", "").strip() not in ("", "0"):
        return backends["python"]
    return backends.get("cython", backends["python"])


_active = _select()
BACKEND = _active.name
mixture_terms = _active.mixture_terms
bernstein_event_terms = _active.bernstein_event_terms
icar_quadratic = _active.icar_quadratic
