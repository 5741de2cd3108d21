"""Backend selection for the empirical-likelihood kernel.

The compiled Cython kernel is used when it was built; otherwise a vectorized
NumPy implementation with the same contract takes over. Set the environment
variable ``ELCHECK_PURE_PYTHON=1`` before import to force the fallback.

The two backends agree to floating-point roundoff (summation order differs),
and each is bit-deterministic for fixed inputs.
"""

import os

from . import fallback
from .fallback import (
    STATUS_ALL_ZERO,
    STATUS_DEGENERATE,
    STATUS_NO_CONVERGENCE,
    STATUS_OK,
)

if os.environ.get("ELCHECK_PURE_PYTHON", "").strip() not in ("", "0"):
    el_curve = fallback.el_curve
    BACKEND = "python"
else:
    try:
        from ._elcore import el_curve

        BACKEND = "compiled"
    except ImportError:
        el_curve = fallback.el_curve
        BACKEND = "python"

__all__ = [
    "BACKEND",
    "STATUS_ALL_ZERO",
    "STATUS_DEGENERATE",
    "STATUS_NO_CONVERGENCE",
    "STATUS_OK",
    "el_curve",
    "fallback",
]
