"""Pick the execution kernel at import: compiled when available, else pure Python.

Set ``CTMIX_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernel_py

if os.environ.get("CTMIX_PURE_PYTHON", "") not in ("", "0"):
    kernel = _kernel_py
else:
    try:
        from . import _kernel as kernel  # type: ignore[attr-defined]
    except ImportError:
        kernel = _kernel_py

BACKEND = kernel.NAME


def available() -> dict:
    """All importable kernels by name."""
    found = {_kernel_py.NAME: _kernel_py}
    try:
        from . import _kernel  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        found[_kernel.NAME] = _kernel
    return found
