"""Pick the compiled kernels when available, else the numpy fallback.

Set ``FSPRIVACY_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _fallback

if os.environ.get("FSPRIVACY_PURE_PYTHON") == "1":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _fallback
        BACKEND = "python"
    else:
        BACKEND = "compiled"

counter_uniforms = _impl.counter_uniforms
connected_without = _impl.connected_without
min_vertex_cut_size = _impl.min_vertex_cut_size
dgd_loop = _impl.dgd_loop
