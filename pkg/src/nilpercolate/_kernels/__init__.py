"""Hot-loop kernels: compiled (Cython) when available, numpy/scipy otherwise.

The selected lane is reported in BACKEND ("compiled" or "python"); setting
the environment variable NILPERC_PURE=1 forces the python lane.  Both lanes
implement the same contracts and are compared in bench/benchmark_kernels.py
and in the test suite.
"""

import os

from . import _python

BACKEND = "python"
components = _python.components
ball_bfs_packed = None

if not os.environ.get("NILPERC_PURE"):
    try:
        from . import _core

        components = _core.components
        ball_bfs_packed = _core.ball_bfs_packed
        BACKEND = "compiled"
    except ImportError:
        pass

__all__ = ["BACKEND", "components", "ball_bfs_packed"]
