"""Pick the compiled tree kernels when built, else the numpy fallback.

Set ``SNODRI_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _tree_py

if os.environ.get("SNODRI_PURE_PYTHON", "").strip() not in ("", "0"):
    tree_kernels = _tree_py
    BACKEND = "python"
else:
    try:
        from . import _tree as tree_kernels  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        tree_kernels = _tree_py
        BACKEND = "python"
