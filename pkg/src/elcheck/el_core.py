"""Scalar empirical-likelihood engine.

Given mark values A_1..A_n, the log empirical-likelihood ratio is

    log_ratio = -2 log sup{ prod(n w_i) : w_i >= 0, sum w_i = 1,
                            sum w_i A_i = 0 },

with the supremum over an empty feasible set defined as zero (log_ratio
infinite). When zero lies strictly inside the range of the marks the optimum
has weights w_i = 1 / (n (1 + lam A_i)) where the multiplier lam solves

    sum_i A_i / (1 + lam A_i) = 0

on the open interval (-1/max(A), -1/min(A)); the left side is strictly
decreasing there, so the root is unique. Zero marks never enter the hull
test but stay in every sum (they contribute nothing).

The column-wise solver lives in :mod:`elcheck._accel`; this module wraps it
for single vectors and whole mark matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from .exceptions import ConvergenceError, DataError, HullViolationError

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 200


@dataclass(frozen=True)
class ELEvaluation:
    """One empirical-likelihood evaluation.

    ``log_ratio`` is +inf exactly when ``degenerate`` is set; ``lam`` and
    ``weights`` are None in that case. Downstream code must branch on the
    flag, never on float comparisons with infinity.
    """

    log_ratio: float
    lam: float | None
    weights: np.ndarray | None
    degenerate: bool


def _as_mark_vector(marks) -> np.ndarray:
    a = np.asarray(marks, dtype=np.float64)
    if a.ndim != 1:
        raise DataError("marks must be a 1-d vector")
    if a.size < 1:
        raise DataError("at least one mark is required")
    if not np.isfinite(a).all():
        raise DataError("marks must be finite")
    return a


def solve_lambda(marks, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> float:
    """Solve the Lagrange-multiplier equation for one mark vector.

    Requires at least one strictly positive and one strictly negative mark.
    Raises :class:`HullViolationError` otherwise and
    :class:`ConvergenceError` when the iteration budget runs out.
    """
    a = _as_mark_vector(marks)
    if tol <= 0.0:
        raise DataError("tol must be positive")
    ell, lam, status = _accel.el_curve(a.reshape(-1, 1), tol, max_iter)
    if status[0] in (_accel.STATUS_DEGENERATE, _accel.STATUS_ALL_ZERO):
        raise HullViolationError(
            "marks must contain both a positive and a negative value"
        )
    if status[0] == _accel.STATUS_NO_CONVERGENCE:
        raise ConvergenceError(
            f"Lagrange solve did not reach tol={tol} in {max_iter} iterations"
        )
    return float(lam[0])


def el_log_ratio(marks, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> ELEvaluation:
    """Log empirical-likelihood ratio for one mark vector.

    All-zero marks satisfy the constraint with uniform weights (log_ratio 0);
    single-signed nonzero marks are degenerate (log_ratio +inf).
    """
    a = _as_mark_vector(marks)
    if tol <= 0.0:
        raise DataError("tol must be positive")
    n = a.size
    ell, lam, status = _accel.el_curve(a.reshape(-1, 1), tol, max_iter)
    if status[0] == _accel.STATUS_ALL_ZERO:
        return ELEvaluation(0.0, 0.0, np.full(n, 1.0 / n), False)
    if status[0] == _accel.STATUS_DEGENERATE:
        return ELEvaluation(np.inf, None, None, True)
    if status[0] == _accel.STATUS_NO_CONVERGENCE:
        raise ConvergenceError(
            f"Lagrange solve did not reach tol={tol} in {max_iter} iterations"
        )
    lam0 = float(lam[0])
    weights = 1.0 / (n * (1.0 + lam0 * a))
    return ELEvaluation(float(ell[0]), lam0, weights, False)


def log_ratio_curve(marks_matrix, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    """Log-EL-ratio per column of an (n, g) mark matrix.

    Returns ``(log_ratio, degenerate)`` arrays of length g; degenerate
    columns carry +inf. Raises on non-convergence of any column.
    """
    m = np.asarray(marks_matrix, dtype=np.float64)
    if m.ndim != 2:
        raise DataError("marks_matrix must be 2-d")
    ell, _, status = _accel.el_curve(m, tol, max_iter)
    if (status == _accel.STATUS_NO_CONVERGENCE).any():
        bad = int((status == _accel.STATUS_NO_CONVERGENCE).sum())
        raise ConvergenceError(f"{bad} grid column(s) did not converge at tol={tol}")
    return ell, status == _accel.STATUS_DEGENERATE
