"""Marked-process construction for each null family.

For every family this module assembles, on the grid of observed points (or
fitted index values), the index-set indicators, the per-observation marks
A_i(u), the variance estimates, and the influence-corrected bootstrap scores.
Index sets accumulate observations toward a pivot: points at or left of the
pivot collect everything to their right, points right of it collect
everything to their left, so no index set ever becomes small near the edges
of the support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError
from .model_null import Dataset, GlmFit, KernelFit, ParametricFit, PartialLinearFit

MAX_EXCLUDED_FRACTION = 0.2


@dataclass(frozen=True)
class IndexSetRule:
    """Pivot-oriented index sets, one pivot per grid coordinate.

    Membership: t is in J_x iff t >= x when x <= pivot, t <= x when
    x > pivot; multivariate sets are products over coordinates. Ties at the
    pivot take the x <= pivot branch.
    """

    pivot: float | np.ndarray

    def indicator(self, obs: np.ndarray, grid: np.ndarray) -> np.ndarray:
        """Indicator matrix I(obs_i in J_{grid_j}), shape (n, g), as float."""
        obs = np.asarray(obs, dtype=np.float64)
        grid = np.asarray(grid, dtype=np.float64)
        if obs.ndim == 1:
            obs = obs.reshape(-1, 1)
            grid = grid.reshape(-1, 1)
        pivots = np.broadcast_to(
            np.asarray(self.pivot, dtype=np.float64).ravel(), (obs.shape[1],)
        )
        out = np.ones((obs.shape[0], grid.shape[0]))
        for j in range(obs.shape[1]):
            left = grid[:, j] <= pivots[j]
            t = obs[:, j][:, None]
            u = grid[:, j][None, :]
            out *= np.where(left[None, :], t >= u, t <= u)
        return out


@dataclass(frozen=True)
class MarkedProcess:
    """Grid, marks, variance estimates and bootstrap scores for one family.

    ``marks[i, j]`` is A_i(u_j); column means scaled by sqrt(n) give the
    process values. ``multiplicity`` counts observations sharing each grid
    point, defining the empirical measure used by the integral statistics.
    ``excluded`` flags observations whose contributions were zeroed by the
    density floor (kernel families only).
    """

    family: str
    grid: np.ndarray
    multiplicity: np.ndarray
    marks: np.ndarray
    variance: np.ndarray
    qscores: np.ndarray
    excluded: np.ndarray
    pivot: float | np.ndarray

    @property
    def n(self) -> int:
        return self.marks.shape[0]

    @property
    def n_grid(self) -> int:
        return self.marks.shape[1]

    def process_values(self) -> np.ndarray:
        """R_n(u) = n^(-1/2) sum_i A_i(u) per grid point."""
        return self.marks.sum(axis=0) / np.sqrt(self.n)

    def measure_weights(self) -> np.ndarray:
        """Empirical-measure mass of each grid point (multiplicity / n)."""
        return self.multiplicity / self.n

    @property
    def retained(self) -> np.ndarray:
        """Grid points with positive variance estimate."""
        return self.variance > 0.0


def _check_sides(values: np.ndarray, pivot: float):
    left = int(np.sum(values <= pivot))
    if left < 2 or values.size - left < 2:
        raise DataError("need at least 2 observations on each side of the pivot")


def _default_rule(values: np.ndarray) -> IndexSetRule:
    if values.ndim == 1:
        return IndexSetRule(float(np.median(values)))
    return IndexSetRule(np.median(values, axis=0))


def _grid_of(values: np.ndarray):
    if values.ndim == 1:
        return np.unique(values, return_counts=True)
    return np.unique(values, axis=0, return_counts=True)


def build_parametric(fit: ParametricFit, data: Dataset,
                     rule: IndexSetRule | None = None) -> MarkedProcess:
    """Residual-marked process for the parametric null (single covariate)."""
    if data.d != 1:
        raise DataError("parametric marked process requires a single covariate")
    x = data.X[:, 0]
    if rule is None:
        rule = _default_rule(x)
    _check_sides(x, float(rule.pivot))
    grid, mult = _grid_of(x)
    ind = rule.indicator(x, grid)
    r = fit.residuals
    n = data.n
    marks = ind * r[:, None]
    ghat = ind.T @ fit.gradient / n
    qscores = marks - fit.influence @ ghat.T
    variance = ind.T @ (r * r) / n
    return MarkedProcess("parametric", grid, mult, marks, variance, qscores,
                         np.zeros(n, dtype=bool), rule.pivot)


def build_glm(fit: GlmFit, data: Dataset,
              rule: IndexSetRule | None = None) -> MarkedProcess:
    """Residual-marked process on the fitted single index beta_hat' X."""
    idx = fit.index
    if rule is None:
        rule = _default_rule(idx)
    _check_sides(idx, float(rule.pivot))
    grid, mult = _grid_of(idx)
    ind = rule.indicator(idx, grid)
    r = fit.residuals
    n = data.n
    marks = ind * r[:, None]
    ghat = ind.T @ fit.gradient / n
    qscores = marks - fit.influence @ ghat.T
    variance = ind.T @ (r * r) / n
    return MarkedProcess("glm", grid, mult, marks, variance, qscores,
                         np.zeros(n, dtype=bool), rule.pivot)


def _kernel_indicator_average(kmat: np.ndarray, ind: np.ndarray) -> np.ndarray:
    # kernel-weighted average of the indicator columns, localized at each W_i;
    # row-stochastic, so every entry lies in [0, 1] for nonnegative kernels
    return (kmat @ ind) / kmat.sum(axis=1)[:, None]


def _check_excluded(excluded: np.ndarray):
    frac = float(excluded.mean())
    if frac > MAX_EXCLUDED_FRACTION:
        raise DataError(
            f"{100 * frac:.1f}% of observations fall below the density floor"
        )


def build_variable_selection(kfit: KernelFit, data: Dataset,
                             rule: IndexSetRule | None = None) -> MarkedProcess:
    """Marked process for the no-effect-of-Z null, weighted by the density.

    ``kfit`` must be the Nadaraya-Watson fit of Y on the W block. Bootstrap
    scores subtract the kernel-smoothed indicator average, which accounts for
    the estimation of the regression function.
    """
    if data.w_cols is None:
        raise DataError("variable-selection family requires a W/Z split")
    if kfit.regression.ndim != 1:
        raise DataError("kernel fit must target the response vector")
    X = data.X
    if rule is None:
        rule = _default_rule(X)
    grid, mult = _grid_of(X)
    excluded = kfit.low_density.copy()
    _check_excluded(excluded)
    n = data.n
    core = kfit.density * (data.Y - kfit.regression)
    core = np.where(excluded, 0.0, core)
    ind = rule.indicator(X, grid)
    marks = ind * core[:, None]
    rhat = _kernel_indicator_average(kfit.kmat, ind)
    qscores = (ind - rhat) * core[:, None]
    variance = ind.T @ (core * core) / n
    return MarkedProcess("variable_selection", grid, mult, marks, variance,
                         qscores, excluded, rule.pivot)


def build_partial_linear(pfit: PartialLinearFit, data: Dataset,
                         rule: IndexSetRule | None = None) -> MarkedProcess:
    """Marked process on the weighted adjusted residuals of a partial linear fit.

    The bootstrap score multiplies each weighted residual by the sample
    analog of the projection that removes both the kernel-estimation and the
    linear-coefficient estimation effects.
    """
    if data.w_cols is None:
        raise DataError("partial-linear family requires a W/Z split")
    X = data.X
    if rule is None:
        rule = _default_rule(X)
    grid, mult = _grid_of(X)
    excluded = pfit.excluded.copy()
    _check_excluded(excluded)
    n = data.n
    core = pfit.weights * pfit.adjusted_residuals
    core = np.where(excluded, 0.0, core)
    ind = rule.indicator(X, grid)
    marks = ind * core[:, None]
    rhat = _kernel_indicator_average(pfit.kernel.kmat, ind)
    zeta = data.Z - pfit.kernel.z_regression
    wz = np.where(excluded[:, None], 0.0, pfit.weights[:, None] * zeta)
    chat = ind.T @ wz / n
    proj = zeta @ np.linalg.solve(pfit.S_hat, chat.T)
    qscores = core[:, None] * (ind - rhat - proj)
    variance = ind.T @ (core * core) / n
    return MarkedProcess("partial_linear", grid, mult, marks, variance,
                         qscores, excluded, rule.pivot)
