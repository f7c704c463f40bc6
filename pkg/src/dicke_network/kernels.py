"""Hot-loop kernels, compiled when available.

The Cython extension ``_kernels`` is used if it was built; otherwise the
pure-Python module is imported. Set ``DICKE_NETWORK_PURE_PYTHON=1`` to force
the fallback (the benchmark and the tests use this to compare both).
"""

import os

from . import _kernels_py

BACKEND = "python"
ryser_permanent = _kernels_py.ryser_permanent

if os.environ.get("DICKE_NETWORK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        ryser_permanent = _compiled.ryser_permanent
        BACKEND = "cython"

__all__ = ["BACKEND", "ryser_permanent"]
