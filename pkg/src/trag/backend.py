"""Kernel backend selection.

Hot loops (BM25 accumulation, graph ANN build/search) exist twice: a numba
@njit version and a pure-numpy fallback. TRAG_NUMBA picks the path:

  TRAG_NUMBA=0    force the numpy fallback
  TRAG_NUMBA=1    require numba (ImportError if unavailable)
  unset / auto    use numba when it imports, else fall back

`benchmarks/bench_kernels.py` compares the two.
"""
from __future__ import annotations

import os


def _resolve() -> bool:
    flag = os.environ.get("TRAG_NUMBA", "auto").strip().lower()
    if flag in ("0", "off", "false", "no"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        if flag in ("1", "on", "true", "yes", "force"):
            raise
        return False
    return True


NUMBA_ENABLED: bool = _resolve()
BACKEND: str = "numba" if NUMBA_ENABLED else "numpy"
