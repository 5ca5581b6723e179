"""Hot-loop kernels with a compiled core and a pure numpy fallback.

The backend is chosen once at import: the Cython extension if it built,
otherwise the numpy implementation. Set CARKOV_NO_EXT=1 before import to
force the fallback. ``BACKEND`` records which one is active.
"""

import os

if os.environ.get("CARKOV_NO_EXT", "") in ("", "0"):
    try:
        from ._recursion import ar1_recursion

        BACKEND = "compiled"
    except ImportError:
        from ._recursion_py import ar1_recursion

        BACKEND = "python"
else:
    from ._recursion_py import ar1_recursion

    BACKEND = "python"

__all__ = ["ar1_recursion", "BACKEND"]
