"""Bootstrap calibration of the test statistics.

The empirical-likelihood tests are calibrated by a multiplier bootstrap on
the influence-corrected scores: every replicate multiplies the scores by
i.i.d. mean-0, variance-1, bounded random variables and evaluates the
variance-scaled process, with no refitting. The classical parametric
baseline is calibrated by a residual wild bootstrap that regenerates
responses, refits and rebuilds the process in every replicate.

Replicate multipliers come from per-replicate substreams seeded by
(seed, replicate index), so results are reproducible no matter how the
replicates are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DataError,
    DegenerateGridError,
    ModelCheckError,
    ReplicateFailureError,
)
from .marked_process import IndexSetRule, MarkedProcess, build_parametric
from .model_null import Dataset, ParametricFit, fit_least_squares
from .testkit import DEFAULT_CAP

MULTIPLIER_DISTRIBUTIONS = ("rademacher", "mammen_two_point")
MAX_WILD_FAILURE_FRACTION = 0.01

_SQRT5 = np.sqrt(5.0)
_MAMMEN_VALUES = ((1.0 - _SQRT5) / 2.0, (1.0 + _SQRT5) / 2.0)
_MAMMEN_P_LOW = (_SQRT5 + 1.0) / (2.0 * _SQRT5)


@dataclass(frozen=True)
class MultiplierConfig:
    """Replicate count, multiplier law and seed for a bootstrap run."""

    n_replicates: int = 500
    distribution: str = "rademacher"
    seed: int = 0

    def __post_init__(self):
        if self.n_replicates < 1:
            raise DataError("n_replicates must be positive")
        if self.distribution not in MULTIPLIER_DISTRIBUTIONS:
            raise DataError(
                f"distribution must be one of {MULTIPLIER_DISTRIBUTIONS}"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise DataError("seed must be a 64-bit unsigned integer")


def draw_multipliers(distribution: str, rng: np.random.Generator, n: int) -> np.ndarray:
    """One vector of mean-0, variance-1, bounded multipliers."""
    if distribution == "rademacher":
        return rng.integers(0, 2, size=n) * 2.0 - 1.0
    if distribution == "mammen_two_point":
        lo, hi = _MAMMEN_VALUES
        return np.where(rng.random(n) < _MAMMEN_P_LOW, lo, hi)
    raise DataError(f"unknown multiplier distribution: {distribution!r}")


def _multiplier_matrix(cfg: MultiplierConfig, n: int, multipliers) -> np.ndarray:
    if multipliers is not None:
        v = np.asarray(multipliers, dtype=np.float64)
        if v.shape != (cfg.n_replicates, n):
            raise DataError("multipliers override must have shape (B, n)")
        return v.T.copy()
    v = np.empty((n, cfg.n_replicates))
    for b in range(cfg.n_replicates):
        rng = np.random.default_rng((int(cfg.seed), b))
        v[:, b] = draw_multipliers(cfg.distribution, rng, n)
    return v


def multiplier_replicates(mpe: MarkedProcess, cfg: MultiplierConfig,
                          cap: float = DEFAULT_CAP, multipliers=None):
    """Multiplier-bootstrap replicates of the EL statistics.

    Every replicate evaluates the variance-scaled squared process
    R*(u)^2 / T(u) built from the scores, taking its supremum and its
    empirical-measure integral over the positive-variance grid points
    (matching the statistic definitions in :mod:`elcheck.testkit`). Returns
    arrays (sup_reps, integral_reps) of length B. Replicates are capped at
    ``cap`` so a capped observed statistic compares on the same scale; the
    cap never binds in non-degenerate problems.

    ``multipliers`` optionally overrides the random draws with an explicit
    (B, n) array, which is how forced or exhaustively enumerated multiplier
    patterns are injected.
    """
    retained = mpe.retained
    if not retained.any():
        raise DegenerateGridError("all grid points have zero variance")
    q = mpe.qscores[:, retained]
    that = mpe.variance[retained]
    weights = mpe.measure_weights()[retained]
    n = mpe.n
    v = _multiplier_matrix(cfg, n, multipliers)
    r = q.T @ v / np.sqrt(n)
    scaled = r * r / that[:, None]
    sup_reps = np.minimum(scaled.max(axis=0), cap)
    integral_reps = np.minimum(weights @ scaled, cap)
    return sup_reps, integral_reps


@dataclass(frozen=True)
class WildBootstrapResult:
    """Replicate KS and CvM statistics from the residual wild bootstrap."""

    ks: np.ndarray
    cvm: np.ndarray
    n_failed: int


def wild_bootstrap_parametric(data: Dataset, fit: ParametricFit,
                              rule: IndexSetRule | None, cfg: MultiplierConfig,
                              multipliers=None) -> WildBootstrapResult:
    """Residual wild bootstrap with refitting, parametric family only.

    Each replicate regenerates responses gamma(X, theta_hat) + residual * V,
    refits theta and rebuilds the marked process to get KS* and CvM*.
    Linear-in-theta models run all replicates through three matrix products;
    the generic path refits one replicate at a time and records failures
    (an error is raised when more than 1% fail).
    """
    if data.d != 1:
        raise DataError("wild bootstrap covers the single-covariate parametric family")
    x = data.X[:, 0]
    if rule is None:
        rule = IndexSetRule(float(np.median(x)))
    observed = build_parametric(fit, data, rule)
    ind = rule.indicator(x, observed.grid)
    weights = observed.measure_weights()
    n = data.n
    fitted = data.Y - fit.residuals
    v = _multiplier_matrix(cfg, n, multipliers)
    ystar = fitted[:, None] + fit.residuals[:, None] * v

    model = fit.model
    if hasattr(model, "design"):
        design = model.design(x)
        coef = np.linalg.solve(design.T @ design, design.T @ ystar)
        resid = ystar - design @ coef
        r = ind.T @ resid / np.sqrt(n)
        ks = np.abs(r).max(axis=0)
        cvm = weights @ (r * r)
        return WildBootstrapResult(ks, cvm, 0)

    ks = np.full(cfg.n_replicates, np.nan)
    cvm = np.full(cfg.n_replicates, np.nan)
    failed = 0
    for b in range(cfg.n_replicates):
        try:
            refit = fit_least_squares(
                Dataset(data.X, ystar[:, b]), model, theta_init=fit.theta_hat
            )
        except ModelCheckError:
            failed += 1
            continue
        r = ind.T @ refit.residuals / np.sqrt(n)
        ks[b] = np.abs(r).max()
        cvm[b] = weights @ (r * r)
    if failed > MAX_WILD_FAILURE_FRACTION * cfg.n_replicates:
        raise ReplicateFailureError(
            f"{failed} of {cfg.n_replicates} wild-bootstrap refits failed"
        )
    keep = ~np.isnan(ks)
    return WildBootstrapResult(ks[keep], cvm[keep], failed)
