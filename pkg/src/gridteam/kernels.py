"""Kernel backend selection: compiled extension if importable, numpy otherwise.

Set GRIDTEAM_PURE=1 to force the pure-Python backend (used by the benchmark
and for debugging). BACKEND names the active implementation.
"""
import os

from . import _kernels_py

if os.environ.get("GRIDTEAM_PURE") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

grid_bfs = _impl.grid_bfs
crf_logz = _impl.crf_logz
crf_marginals = _impl.crf_marginals
viterbi = _impl.viterbi
