"""Kernel backend selection.

The hot per-pixel loops live in the compiled extension dci._kernels; the
NumPy module dci._kernels_py implements the same contracts.  The compiled
backend is picked at import when present, unless DCI_PURE_PYTHON is set in
the environment.
"""

import os

FORCE_ENV = "DCI_PURE_PYTHON"

if os.environ.get(FORCE_ENV):
    from . import _kernels_py as kernels

    COMPILED = False
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        from . import _kernels_py as kernels

        COMPILED = False


def backend_name():
    return "compiled" if COMPILED else "numpy"
