"""Kernel backend selection.

The compiled extension is used when it imports; otherwise (or when
``DISTILLBOUND_PURE_PYTHON=1``) the numpy fallback is used.  Both expose the
same three functions.
"""

import os

from . import _kernels_py

if os.environ.get("DISTILLBOUND_PURE_PYTHON") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

kde_log_density = _impl.kde_log_density
outer_residual_norms = _impl.outer_residual_norms
power_iteration = _impl.power_iteration

__all__ = ["BACKEND", "kde_log_density", "outer_residual_norms", "power_iteration"]
