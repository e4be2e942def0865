"""Kernel backend selection.

The compiled extension is used when it imports; setting
``BETA_LAB_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _sturm_py

python_kernels = _sturm_py
compiled_kernels = None

try:
    from . import _sturm as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and not os.environ.get("BETA_LAB_PURE_PYTHON"):
    kernels = compiled_kernels
    BACKEND = "compiled"
else:
    kernels = python_kernels
    BACKEND = "python"
