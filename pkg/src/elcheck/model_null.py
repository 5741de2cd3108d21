"""Null-model fitting for each testable family.

Four families are supported: parametric curves fit by least squares,
binomial-logistic regression fit by maximum likelihood, Nadaraya-Watson
kernel fits used by the variable-selection null, and partial linear fits.
Every fit records residuals together with the per-observation influence
terms the multiplier bootstrap needs to account for parameter estimation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .exceptions import (
    ConvergenceError,
    DataError,
    SeparationError,
    SingularFitError,
)

DENSITY_FLOOR = 1e-3


# ---------------------------------------------------------------------------
# Data container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """Paired observations (X_i, Y_i) with an optional (W, Z) column split.

    X is (n, d), Y is (n,). The split assigns every column to either the
    kernel block W or the tested block Z; it is required by the
    variable-selection and partial-linear families and ignored elsewhere.
    """

    X: np.ndarray
    Y: np.ndarray
    w_cols: tuple[int, ...] | None = None
    z_cols: tuple[int, ...] | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=np.float64))
        if X.shape[0] == 1 and np.asarray(self.Y).size != 1:
            X = X.T
        Y = np.asarray(self.Y, dtype=np.float64).ravel()
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        if X.ndim != 2:
            raise DataError("X must be a 2-d array")
        if Y.shape[0] != X.shape[0]:
            raise DataError("X and Y lengths differ")
        if X.shape[0] < 2:
            raise DataError("at least two observations are required")
        if X.shape[1] < 1:
            raise DataError("at least one covariate column is required")
        if not (np.isfinite(X).all() and np.isfinite(Y).all()):
            raise DataError("X and Y must be finite (no missing values)")
        if (self.w_cols is None) != (self.z_cols is None):
            raise DataError("w_cols and z_cols must be given together")
        if self.w_cols is not None:
            w = tuple(int(c) for c in self.w_cols)
            z = tuple(int(c) for c in self.z_cols)
            object.__setattr__(self, "w_cols", w)
            object.__setattr__(self, "z_cols", z)
            if not w or not z:
                raise DataError("both W and Z blocks need at least one column")
            if set(w) & set(z):
                raise DataError("W and Z columns overlap")
            if sorted(w + z) != list(range(X.shape[1])):
                raise DataError("W and Z columns must partition the X columns")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def W(self) -> np.ndarray:
        if self.w_cols is None:
            raise DataError("dataset has no W/Z split")
        return self.X[:, self.w_cols]

    @property
    def Z(self) -> np.ndarray:
        if self.z_cols is None:
            raise DataError("dataset has no W/Z split")
        return self.X[:, self.z_cols]


# ---------------------------------------------------------------------------
# Parametric regression functions
# ---------------------------------------------------------------------------


class LinearThroughOrigin:
    """gamma(x, theta) = theta * x."""

    name = "linear-through-origin"
    n_params = 1

    def design(self, x):
        return np.asarray(x, dtype=np.float64).reshape(-1, 1)

    def predict(self, x, theta):
        return theta[0] * np.asarray(x, dtype=np.float64)

    def gradient(self, x, theta):
        return self.design(x)


class LinearWithIntercept:
    """gamma(x, theta) = theta_0 + theta_1 * x."""

    name = "linear-with-intercept"
    n_params = 2

    def design(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.column_stack([np.ones_like(x), x])

    def predict(self, x, theta):
        return self.design(x) @ theta

    def gradient(self, x, theta):
        return self.design(x)


class Polynomial:
    """gamma(x, theta) = sum_k theta_k x^k up to the given degree."""

    def __init__(self, degree: int, include_intercept: bool = True):
        if degree < 1:
            raise DataError("polynomial degree must be >= 1")
        self.degree = int(degree)
        self.include_intercept = include_intercept
        self.n_params = self.degree + (1 if include_intercept else 0)
        self.name = f"polynomial-{self.degree}"

    def design(self, x):
        x = np.asarray(x, dtype=np.float64)
        start = 0 if self.include_intercept else 1
        return np.column_stack([x**k for k in range(start, self.degree + 1)])

    def predict(self, x, theta):
        return self.design(x) @ theta

    def gradient(self, x, theta):
        return self.design(x)


@dataclass(frozen=True)
class ParametricFit:
    """Least-squares fit of a parametric regression function."""

    theta_hat: np.ndarray
    residuals: np.ndarray
    gradient: np.ndarray  # (n, p), d gamma / d theta at (X_i, theta_hat)
    influence: np.ndarray  # (n, p), estimated h(X_i, Y_i)
    model: object = field(repr=False, default=None)


def _ls_influence_sandwich(gradient: np.ndarray, residuals: np.ndarray) -> np.ndarray:
    # (mean gradient outer product)^{-1} gradient_i residual_i per observation
    n = gradient.shape[0]
    M = gradient.T @ gradient / n
    try:
        base = np.linalg.solve(M, gradient.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularFitError("gradient Gram matrix is singular") from exc
    return base * residuals[:, None]


def fit_least_squares(data: Dataset, model, theta_init=None) -> ParametricFit:
    """Fit gamma(x, theta) by least squares (d = 1 design).

    Linear-in-theta models (anything exposing ``design``) use the closed
    form; smooth nonlinear models use Gauss-Newton with step halving from
    ``theta_init``.
    """
    if data.d != 1:
        raise DataError("parametric family requires a single covariate")
    x = data.X[:, 0]
    y = data.Y

    if hasattr(model, "design"):
        D = model.design(x)
        theta, _, rank, _ = np.linalg.lstsq(D, y, rcond=None)
        if rank < D.shape[1]:
            raise SingularFitError("design matrix is rank deficient")
        residuals = y - D @ theta
        gradient = D
    else:
        if theta_init is None:
            raise DataError("theta_init is required for nonlinear models")
        theta = np.asarray(theta_init, dtype=np.float64).copy()
        sse = float(np.sum((y - model.predict(x, theta)) ** 2))
        converged = False
        for _ in range(100):
            r = y - model.predict(x, theta)
            J = model.gradient(x, theta)
            step, _, rank, _ = np.linalg.lstsq(J, r, rcond=None)
            if rank < J.shape[1]:
                raise SingularFitError("Jacobian is rank deficient")
            scale = 1.0
            for _ in range(30):
                cand = theta + scale * step
                cand_sse = float(np.sum((y - model.predict(x, cand)) ** 2))
                if cand_sse <= sse:
                    break
                scale *= 0.5
            theta = theta + scale * step
            prev_sse, sse = sse, cand_sse
            if np.max(np.abs(scale * step)) <= 1e-10 * (1.0 + np.max(np.abs(theta))):
                converged = True
                break
            if abs(prev_sse - sse) <= 1e-14 * (1.0 + sse):
                converged = True
                break
        if not converged:
            raise ConvergenceError("Gauss-Newton did not converge in 100 iterations")
        residuals = y - model.predict(x, theta)
        gradient = model.gradient(x, theta)

    influence = _ls_influence_sandwich(gradient, residuals)
    return ParametricFit(theta, residuals, gradient, influence, model)


def ls_influence_linear(data: Dataset, theta_hat) -> np.ndarray:
    """Closed-form least-squares influence for linear models, from sample moments.

    For a slope-plus-intercept fit (theta length 2) the slope column is

        (x - mean_x)(y - mean_y)/var_x - cov_xy (x - mean_x)^2 / var_x^2

    and the intercept column is residual - mean_x * slope_column. A
    slope-only fit (theta length 1) uses the uncentered analog
    x * residual / mean(x^2). Either way the influence values average to
    zero at the least-squares solution.
    """
    if data.d != 1:
        raise DataError("linear influence requires a single covariate")
    theta = np.asarray(theta_hat, dtype=np.float64).ravel()
    x = data.X[:, 0]
    y = data.Y
    if theta.size == 1:
        msq = float(np.mean(x * x))
        if msq == 0.0:
            raise SingularFitError("zero second moment of X")
        h = x * (y - theta[0] * x) / msq
        return h.reshape(-1, 1)
    if theta.size == 2:
        mx, my = float(np.mean(x)), float(np.mean(y))
        varx = float(np.mean((x - mx) ** 2))
        if varx == 0.0:
            raise SingularFitError("zero sample variance of X")
        covxy = float(np.mean((x - mx) * (y - my)))
        h1 = (x - mx) * (y - my) / varx - covxy * (x - mx) ** 2 / varx**2
        resid = y - theta[0] - theta[1] * x
        h0 = resid - mx * h1
        return np.column_stack([h0, h1])
    raise DataError("closed-form influence covers 1- or 2-parameter linear fits")


# ---------------------------------------------------------------------------
# Binomial-logistic regression
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GlmFit:
    """Maximum-likelihood fit of a binomial-logistic mean function.

    The success probability is logistic(beta' x) and the fitted mean is
    trials * p_hat. ``alpha_hat`` is kept for interface parity with link
    families carrying extra shape parameters; it is empty here.
    """

    alpha_hat: np.ndarray
    beta_hat: np.ndarray
    index: np.ndarray  # beta_hat' X_i
    fitted_mean: np.ndarray
    residuals: np.ndarray
    influence: np.ndarray  # (n, d), estimated k(X_i, Y_i)
    gradient: np.ndarray  # (n, d), d fitted mean / d beta
    trials: int


def _binomial_loglik(y, eta, trials):
    return float(np.sum(y * eta - trials * np.logaddexp(0.0, eta)))


def fit_binomial_logistic(data: Dataset, trials: int) -> GlmFit:
    """Newton-Raphson MLE for Y_i ~ Binomial(trials, logistic(beta' X_i)).

    No intercept is added: include a constant column in X if one is wanted.
    """
    if trials < 1:
        raise DataError("trials must be a positive integer")
    X = data.X
    y = data.Y
    if ((y < 0) | (y > trials)).any():
        raise DataError(f"responses must lie in [0, {trials}]")
    n, d = X.shape
    if np.linalg.matrix_rank(X) < d:
        raise SingularFitError("design matrix is rank deficient")

    beta = np.zeros(d)
    eta = X @ beta
    ll = _binomial_loglik(y, eta, trials)
    score_scale = max(1.0, float(np.max(np.abs(X.T @ (y - trials * 0.5)))))
    converged = False
    for _ in range(50):
        p = expit(eta)
        mu = trials * p
        score = X.T @ (y - mu)
        if np.max(np.abs(score)) <= 1e-10 * score_scale:
            converged = True
            break
        w = trials * p * (1.0 - p)
        H = X.T @ (X * w[:, None])
        try:
            step = np.linalg.solve(H, score)
        except np.linalg.LinAlgError as exc:
            raise SingularFitError("observed information is singular") from exc
        scale = 1.0
        for _ in range(30):
            cand = beta + scale * step
            cand_ll = _binomial_loglik(y, X @ cand, trials)
            if cand_ll >= ll:
                break
            scale *= 0.5
        beta = beta + scale * step
        eta = X @ beta
        ll = cand_ll
        if np.max(np.abs(beta)) > 30.0:
            raise SeparationError("diverging coefficients (separated data)")
    if not converged:
        raise ConvergenceError("logistic Newton-Raphson did not converge")

    p = expit(eta)
    if (p <= 0.0).any() or (p >= 1.0).any():
        raise SeparationError("fitted probabilities reached 0 or 1")
    mu = trials * p
    residuals = y - mu
    w = trials * p * (1.0 - p)
    gradient = X * w[:, None]
    Hn = X.T @ gradient / n
    try:
        base = np.linalg.solve(Hn, X.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularFitError("observed information is singular") from exc
    influence = base * residuals[:, None]
    return GlmFit(
        alpha_hat=np.zeros(0),
        beta_hat=beta,
        index=eta,
        fitted_mean=mu,
        residuals=residuals,
        influence=influence,
        gradient=gradient,
        trials=int(trials),
    )


# ---------------------------------------------------------------------------
# Kernel regression
# ---------------------------------------------------------------------------


def epanechnikov(u):
    u = np.asarray(u, dtype=np.float64)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def default_bandwidth(w: np.ndarray) -> np.ndarray:
    """Per-coordinate rule-of-thumb bandwidth s_j * n^(-1/3) (undersmoothing)."""
    w = np.atleast_2d(np.asarray(w, dtype=np.float64))
    n = w.shape[0]
    s = w.std(axis=0, ddof=1)
    if (s == 0.0).any():
        raise DataError("constant kernel column: bandwidth would be zero")
    return s * n ** (-1.0 / 3.0)


def kernel_weight_matrix(w: np.ndarray, h, kernel=epanechnikov) -> np.ndarray:
    """Pairwise product-kernel weights K((W_i - W_j) / h), shape (n, n)."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim == 1:
        w = w.reshape(-1, 1)
    h = np.broadcast_to(np.asarray(h, dtype=np.float64).ravel(), (w.shape[1],))
    if (h <= 0.0).any():
        raise DataError("bandwidth must be positive")
    K = np.ones((w.shape[0], w.shape[0]))
    for j in range(w.shape[1]):
        K *= kernel((w[:, j][:, None] - w[:, j][None, :]) / h[j])
    return K


@dataclass(frozen=True)
class KernelFit:
    """Nadaraya-Watson density and regression values at the sample points.

    ``low_density`` flags observations whose density estimate falls below
    DENSITY_FLOOR relative to the maximum; the marked-process builders
    exclude those from mark construction. ``kmat`` keeps the pairwise kernel
    weights so the bootstrap score correction reuses the exact same
    smoother.
    """

    bandwidth: np.ndarray
    density: np.ndarray
    regression: np.ndarray
    z_regression: np.ndarray | None
    low_density: np.ndarray
    kmat: np.ndarray = field(repr=False, default=None)


def nadaraya_watson(w, targets, h=None, kernel=epanechnikov,
                    density_floor: float = DENSITY_FLOOR) -> KernelFit:
    """Kernel density and regression estimates evaluated at the sample points.

    ``targets`` may be a vector or a matrix (one regression per column).
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim == 1:
        w = w.reshape(-1, 1)
    t = np.asarray(targets, dtype=np.float64)
    squeeze = t.ndim == 1
    t = t.reshape(w.shape[0], -1)
    if h is None:
        h = default_bandwidth(w)
    h = np.broadcast_to(np.asarray(h, dtype=np.float64).ravel(), (w.shape[1],)).copy()
    K = kernel_weight_matrix(w, h, kernel)
    n = w.shape[0]
    hprod = float(np.prod(h))
    density = K.sum(axis=1) / (n * hprod)
    with np.errstate(invalid="ignore", divide="ignore"):
        regression = (K @ t) / (n * hprod) / density[:, None]
    low = density < density_floor * density.max()
    low |= ~np.isfinite(regression).all(axis=1)
    if squeeze:
        regression = regression[:, 0]
    return KernelFit(h, density, regression, None, low, K)


# ---------------------------------------------------------------------------
# Partial linear model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartialLinearFit:
    """Fit of Y = theta' Z + g(W) + error with g fully nonparametric."""

    theta_hat: np.ndarray
    S_hat: np.ndarray
    kernel: KernelFit
    adjusted_residuals: np.ndarray
    weights: np.ndarray  # w(W_i) values used in S_hat and the marks
    excluded: np.ndarray


def fit_partial_linear(data: Dataset, h=None, weight=None,
                       density_floor: float = DENSITY_FLOOR) -> PartialLinearFit:
    """Profile estimator: regress kernel-adjusted Y on kernel-adjusted Z.

    ``weight`` is an evaluator applied to the W rows; the default is the
    estimated density itself. Multiplying the weight by a positive constant
    leaves theta_hat unchanged (it cancels between S_hat and the numerator).
    """
    W, Z, Y = data.W, data.Z, data.Y
    n = data.n
    kf = nadaraya_watson(W, np.column_stack([Y, Z]), h=h, density_floor=density_floor)
    m_hat = kf.regression[:, 0]
    mz_hat = kf.regression[:, 1:]
    kfit = KernelFit(kf.bandwidth, kf.density, m_hat, mz_hat, kf.low_density, kf.kmat)

    wvals = kf.density.copy() if weight is None else np.asarray(weight(W), dtype=np.float64).ravel()
    if wvals.shape != (n,):
        raise DataError("weight evaluator must return one value per observation")

    include = ~kfit.low_density
    zeta = Z - mz_hat
    u2 = wvals**2
    zi = np.where(include[:, None], zeta, 0.0)
    u2i = np.where(include, u2, 0.0)
    S = (zi * u2i[:, None]).T @ zi / n
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise SingularFitError("S_hat is singular (Z explained by W)") from exc
    num = zi.T @ (u2i * np.where(include, Y - m_hat, 0.0)) / n
    theta = np.linalg.solve(S, num)
    adjusted = Y - m_hat - zeta @ theta
    return PartialLinearFit(theta, S, kfit, adjusted, wvals, kfit.low_density)
