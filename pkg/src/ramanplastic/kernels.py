"""Kernel backend chosen at import time.

The compiled ``_kernels`` extension is used when it has been built; otherwise
the numpy implementations in ``_kernels_py`` take over.  Setting
``RAMANPLASTIC_PURE_PYTHON=1`` forces the fallback.  Both backends produce
bit-identical results.
"""

import os

from . import _kernels_py

_impl = _kernels_py
if os.environ.get("RAMANPLASTIC_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _impl
    except ImportError:
        pass

BACKEND = "python" if _impl is _kernels_py else "cython"
ENTROPY = _impl.ENTROPY
GINI = _impl.GINI
scale_fill = _impl.scale_fill
bin_means = _impl.bin_means
reconstruct = _impl.reconstruct
best_split = _impl.best_split
apply_tree = _impl.apply_tree
