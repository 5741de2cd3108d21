"""NumPy implementation of the empirical-likelihood kernel.

Contract shared with the compiled backend (``_elcore``): given a matrix of
mark values with one column per grid point, solve the Lagrange-multiplier
equation

    sum_i A_i / (1 + lam * A_i) = 0

column by column and return the log empirical-likelihood ratio
``2 * sum_i log(1 + lam * A_i)``. Columns are normalized to unit scale
internally, which makes the tolerance scale-free and the multiplier exactly
equivariant under scaling of the marks by powers of two.

Status codes per column:

    0  solved
    1  all marks zero (log-ratio 0, multiplier 0)
    2  hull violation: nonzero marks on one side of zero (log-ratio +inf)
    3  iteration budget exhausted

The equation's left side is strictly decreasing between the poles at
``-1/max(A)`` and ``-1/min(A)``, so a bracketed Newton iteration (midpoint
fallback whenever the Newton candidate leaves the bracket) always converges
to the unique root.
"""

import numpy as np

STATUS_OK = 0
STATUS_ALL_ZERO = 1
STATUS_DEGENERATE = 2
STATUS_NO_CONVERGENCE = 3


def el_curve(marks, tol=1e-10, max_iter=200):
    """Column-wise EL log-ratio for an (n, g) matrix of marks.

    Returns ``(log_ratio, lam, status)``, each of length g. ``lam`` is on
    the raw mark scale and is NaN where no multiplier exists.
    """
    m = np.ascontiguousarray(marks, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("marks must be a 2-d array")
    n, g = m.shape
    log_ratio = np.zeros(g)
    lam = np.zeros(g)
    status = np.full(g, STATUS_OK, dtype=np.int8)

    scale = np.max(np.abs(m), axis=0) if n else np.zeros(g)
    zero_cols = scale == 0.0
    status[zero_cols] = STATUS_ALL_ZERO

    col_max = m.max(axis=0)
    col_min = m.min(axis=0)
    degen = ~zero_cols & ((col_max <= 0.0) | (col_min >= 0.0))
    status[degen] = STATUS_DEGENERATE
    log_ratio[degen] = np.inf
    lam[degen] = np.nan

    active = ~(zero_cols | degen)
    if not active.any():
        return log_ratio, lam, status

    b = m[:, active] / scale[active]
    lo = -1.0 / b.max(axis=0)
    hi = -1.0 / b.min(axis=0)
    lam_n = np.zeros(lo.shape)
    solved = np.zeros(lo.shape, dtype=bool)
    for _ in range(max_iter):
        ratio = b / (1.0 + lam_n * b)
        gval = ratio.sum(axis=0)
        solved |= np.abs(gval) <= tol
        if solved.all():
            break
        gprime = -(ratio * ratio).sum(axis=0)
        cand = lam_n - gval / gprime
        # shrink the bracket around the root, then keep the candidate inside it
        right = ~solved & (gval > 0.0)
        left = ~solved & (gval <= 0.0)
        lo = np.where(right, lam_n, lo)
        hi = np.where(left, lam_n, hi)
        cand = np.where((cand <= lo) | (cand >= hi), 0.5 * (lo + hi), cand)
        lam_n = np.where(solved, lam_n, cand)

    ell = 2.0 * np.log1p(lam_n * b).sum(axis=0)
    ell[~solved] = np.nan
    lam_active = lam_n / scale[active]
    lam_active[~solved] = np.nan

    log_ratio[active] = ell
    lam[active] = lam_active
    sub = status[active]
    sub[~solved] = STATUS_NO_CONVERGENCE
    status[active] = sub
    return log_ratio, lam, status
