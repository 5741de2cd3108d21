"""Test statistics and decisions built on a marked process.

Two statistic pairs are provided: the empirical-likelihood pair (supremum
and empirical-measure integral of the log-EL-ratio curve) and the classical
pair computed directly on the process values (Kolmogorov-Smirnov supremum
and Cramer-von Mises integral). Integrals use the empirical measure of the
grid points, i.e. multiplicity / n weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import el_core
from .exceptions import DataError
from .marked_process import MarkedProcess

DEFAULT_CAP = 1e6


@dataclass(frozen=True)
class ELStatistics:
    """Empirical-likelihood statistics over the grid.

    ``sup_stat`` is the supremum of the log-ratio curve (+inf when any grid
    point is degenerate); ``integral_stat`` replaces degenerate values by the
    cap inside the integral, signalled by ``capped``. Grid points with zero
    variance estimate carry an identically-zero mark column; they are
    reported in ``dropped_variance_count`` and excluded from the integral.
    """

    log_ratio_curve: np.ndarray
    sup_stat: float
    integral_stat: float
    degenerate_count: int
    dropped_variance_count: int
    capped: bool


@dataclass(frozen=True)
class IRFStatistics:
    """Kolmogorov-Smirnov and Cramer-von Mises statistics on the raw process."""

    ks: float
    cvm: float


@dataclass(frozen=True)
class Decision:
    """Bootstrap p-value and accept/reject decision for one statistic."""

    observed: float
    p_value: float
    reject: bool
    level: float
    n_replicates: int


def el_statistics(mpe: MarkedProcess, cap: float = DEFAULT_CAP,
                  tol: float = el_core.DEFAULT_TOL,
                  max_iter: int = el_core.DEFAULT_MAX_ITER) -> ELStatistics:
    """Log-EL-ratio curve and its supremum / integral statistics."""
    if cap <= 0.0:
        raise DataError("cap must be positive")
    ell, degenerate = el_core.log_ratio_curve(mpe.marks, tol, max_iter)
    retained = mpe.retained
    weights = mpe.measure_weights()
    sup_stat = float(ell.max()) if ell.size else 0.0
    contrib = np.where(degenerate, cap, ell)
    integral = float((weights * contrib)[retained].sum())
    return ELStatistics(
        log_ratio_curve=ell,
        sup_stat=sup_stat,
        integral_stat=integral,
        degenerate_count=int(degenerate.sum()),
        dropped_variance_count=int((~retained).sum()),
        capped=bool(degenerate.any()),
    )


def irf_statistics(mpe: MarkedProcess) -> IRFStatistics:
    """KS and CvM statistics of the raw marked process."""
    r = mpe.process_values()
    weights = mpe.measure_weights()
    return IRFStatistics(ks=float(np.abs(r).max()), cvm=float(weights @ (r * r)))


def decide(observed: float, bootstrap_reps, level: float) -> Decision:
    """Counting p-value (1 + #{rep >= observed}) / (B + 1); reject iff p <= level.

    An infinite observed statistic against finite replicates yields the
    smallest attainable p-value 1 / (B + 1).
    """
    reps = np.asarray(bootstrap_reps, dtype=np.float64).ravel()
    if reps.size == 0:
        raise DataError("bootstrap_reps must be nonempty")
    if np.isnan(reps).any() or np.isnan(observed):
        raise DataError("NaN statistic passed to decide")
    if not 0.0 < level < 1.0:
        raise DataError("level must lie in (0, 1)")
    count = int((reps >= observed).sum())
    p = (1.0 + count) / (reps.size + 1.0)
    return Decision(float(observed), p, p <= level, float(level), int(reps.size))
