"""Fixed-hyperparameter Gaussian process with a squared-exponential kernel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

DEFAULT_LENGTHSCALE = 0.2
DEFAULT_SIGNAL_VAR = 1.0
DEFAULT_NOISE = 1e-6


class GPFitError(RuntimeError):
    pass


def se_kernel(a: np.ndarray, b: np.ndarray, lengthscale, signal_var: float) -> np.ndarray:
    a = np.atleast_2d(a) / lengthscale
    b = np.atleast_2d(b) / lengthscale
    # direct differences: the |a|^2 + |b|^2 - 2ab expansion loses digits that
    # an ill-conditioned K then amplifies
    diff = a[:, None, :] - b[None, :, :]
    return signal_var * np.exp(-0.5 * np.sum(diff * diff, axis=2))


@dataclass(frozen=True)
class GPModel:
    X: np.ndarray
    y_std: np.ndarray  # standardized targets
    y_mean: float
    y_scale: float
    lengthscale: np.ndarray
    signal_var: float
    noise: float
    L: np.ndarray
    alpha: np.ndarray

    @property
    def n(self) -> int:
        return len(self.X)

    def kernel(self, a, b):
        return se_kernel(a, b, self.lengthscale, self.signal_var)


def gp_fit(X, y, lengthscale=DEFAULT_LENGTHSCALE, signal_var: float = DEFAULT_SIGNAL_VAR,
           noise: float = DEFAULT_NOISE, dim: int | None = None) -> GPModel:
    """Standardize y and factor K + noise*I; on failure retry with noise x10, up to 3 times."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if noise <= 0:
        raise ValueError("noise variance must be positive")
    if X.size == 0:
        d = dim if dim is not None else np.size(lengthscale)
        X = np.zeros((0, d))
    if len(X) != len(y):
        raise ValueError("X and y differ in length")
    if len(X) and (X.min() < -1e-12 or X.max() > 1 + 1e-12):
        raise ValueError("inputs must lie in the unit cube")
    d = X.shape[1]
    ls = np.broadcast_to(np.asarray(lengthscale, dtype=float), (d,)).copy()
    if len(y) == 0:
        mean, scale = 0.0, 1.0
    else:
        mean = float(y.mean())
        scale = float(y.std()) if len(y) > 1 and y.std() > 0 else 1.0
    ys = (y - mean) / scale
    K = se_kernel(X, X, ls, signal_var) if len(X) else np.zeros((0, 0))
    nv = noise
    for _ in range(4):
        try:
            L = np.linalg.cholesky(K + nv * np.eye(len(X)))
            break
        except np.linalg.LinAlgError:
            nv *= 10
    else:
        raise GPFitError(f"covariance not positive definite even with noise {nv / 10:g}")
    alpha = cho_solve((L, True), ys) if len(X) else np.zeros(0)
    return GPModel(X, ys, mean, scale, ls, float(signal_var), nv, L, alpha)


def gp_posterior(model: GPModel, Xq, standardized: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and standard deviation at query rows.

    With ``standardized`` the values stay on the model's internal target scale.
    """
    Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
    prior_var = np.full(len(Xq), model.signal_var)
    if model.n == 0:
        mu = np.zeros(len(Xq))
        var = prior_var
    else:
        ks = model.kernel(model.X, Xq)
        mu = ks.T @ model.alpha
        v = solve_triangular(model.L, ks, lower=True)
        var = prior_var - np.sum(v * v, axis=0)
    sigma = np.sqrt(np.maximum(var, 0.0))
    if standardized:
        return mu, sigma
    return mu * model.y_scale + model.y_mean, sigma * model.y_scale
