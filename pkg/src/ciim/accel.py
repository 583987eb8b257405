"""JIT switch for the hot numeric kernels.

Set CIIM_JIT=0 to run the kernels as plain numpy/Python (useful for
debugging and for benchmarking the compiled path against the fallback).
Both paths execute the exact same code, so results are bit-identical.
"""

import os


def _jit_enabled() -> bool:
    value = os.environ.get("CIIM_JIT", "1").strip().lower()
    return value not in ("0", "false", "off", "no")


JIT_ENABLED = _jit_enabled()

if JIT_ENABLED:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        JIT_ENABLED = False

if not JIT_ENABLED:

    def njit(func=None, **kwargs):
        if callable(func):
            return func

        def wrap(f):
            return f

        return wrap
