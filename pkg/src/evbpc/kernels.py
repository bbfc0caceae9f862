"""Kernel selection: compiled ``_ckernels`` when importable, else ``_pykernels``.

Set ``EVBPC_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

if os.environ.get("EVBPC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND
dijkstra = _impl.dijkstra
aon_assign = _impl.aon_assign
