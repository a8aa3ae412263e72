"""Extended Kalman filtering of opponent propensities under a softmax link.

An opponent's latent propensity vector ``Q`` follows a Gaussian random walk
and its one-hot action indicator is observed as ``softmax(Q / tau) + noise``.
The batched kernels (``*_batch``) run many independent filters at once along
a leading axis; the single-belief functions are thin wrappers over them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np

from .exceptions import ConfigurationError, NumericError
from .validation import check_random_state

SYM_ATOL = 1e-9
PSD_ATOL = 1e-9

Schedule = Union[float, str, Callable[[int], float]]


@dataclass(frozen=True)
class GaussianBelief:
    """Mean propensity vector and its covariance for one opponent."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ConfigurationError(f"mean {mean.shape} and cov {cov.shape} do not match")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise NumericError("belief has non-finite entries")
        if np.abs(cov - cov.T).max(initial=0.0) > SYM_ATOL:
            raise ConfigurationError("covariance is not symmetric")
        if np.linalg.eigvalsh(cov).min() < -PSD_ATOL:
            raise ConfigurationError("covariance is not positive semidefinite")
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def isotropic(cls, mean, scale: float = 1.0) -> "GaussianBelief":
        mean = np.asarray(mean, dtype=float)
        return cls(mean, scale * np.eye(mean.size))

    @property
    def n_actions(self) -> int:
        return self.mean.size


@lru_cache(maxsize=None)
def _eye(k: int) -> np.ndarray:
    e = np.eye(k)
    e.setflags(write=False)
    return e


def inverse_time(t: int) -> float:
    return 1.0 / t


def resolve_schedule(zeta: Schedule) -> Callable[[int], float]:
    """Turn a noise schedule spec into a callable of the iteration ``t >= 1``.

    Accepts a positive number (constant), the string ``"1/t"``, or a callable.
    """
    if callable(zeta):
        return zeta
    if isinstance(zeta, str):
        if zeta.replace(" ", "") == "1/t":
            return inverse_time
        try:
            zeta = float(zeta)
        except ValueError:
            raise ConfigurationError(f"unknown observation-noise schedule {zeta!r}") from None
    value = float(zeta)
    if not value > 0:
        raise ConfigurationError(f"observation noise must be > 0, got {value}")
    return lambda t: value


@dataclass(frozen=True)
class NoiseConfig:
    """Noise parameters of the propensity filter.

    ``xi`` is the state-noise scale, ``psi`` the variance of the jitter added
    to it at every prediction, ``zeta`` the observation-noise schedule and
    ``tau`` the softmax temperature.
    """

    xi: float = 0.1
    psi: float = 0.0
    zeta: Schedule = "1/t"
    tau: float = 1.0

    def __post_init__(self):
        if not self.xi >= 0:
            raise ConfigurationError(f"xi must be >= 0, got {self.xi}")
        if not self.psi >= 0:
            raise ConfigurationError(f"psi must be >= 0, got {self.psi}")
        if not self.tau > 0:
            raise ConfigurationError(f"tau must be > 0, got {self.tau}")
        resolve_schedule(self.zeta)

    def zeta_at(self, t: int) -> float:
        if t < 1:
            raise ConfigurationError(f"iteration must be >= 1, got {t}")
        z = float(resolve_schedule(self.zeta)(t))
        if not z > 0:
            raise ConfigurationError(f"observation noise schedule gave {z} at t={t}")
        return z


def softmax_link(q, tau: float = 1.0) -> np.ndarray:
    """Boltzmann map from propensities to a mixed strategy (along the last axis)."""
    if not tau > 0:
        raise ConfigurationError(f"tau must be > 0, got {tau}")
    q = np.asarray(q, dtype=float)
    if not np.isfinite(q).all():
        raise NumericError("softmax_link got non-finite propensities")
    z = q / tau
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_jacobian(q, tau: float = 1.0) -> np.ndarray:
    """Jacobian of :func:`softmax_link`: ``(diag(s) - s s^T) / tau``."""
    s = softmax_link(q, tau)
    jac = -s[..., :, None] * s[..., None, :]
    idx = np.arange(s.shape[-1])
    jac[..., idx, idx] += s
    return jac / tau


def predict_cov_batch(covs, xi, psi: float = 0.0, rng=None) -> np.ndarray:
    """Add ``(xi + eps) I`` to each covariance; ``eps ~ N(0, psi)`` clipped at ``-xi``."""
    covs = np.asarray(covs, dtype=float)
    batch = covs.shape[:-2]
    q = np.asarray(xi, dtype=float)
    if psi > 0:
        eps = check_random_state(rng).normal(0.0, np.sqrt(psi), size=batch)
        q = np.maximum(q + eps, 0.0)
    k = covs.shape[-1]
    return covs + q[..., None, None] * _eye(k)


def update_batch(means, covs, observed, zeta, tau: float = 1.0):
    """EKF correction of many beliefs at once.

    Parameters
    ----------
    means : (..., k) predicted propensity means
    covs : (..., k, k) predicted covariances
    observed : (...) int, observed action of each opponent
    zeta : scalar or (...) observation-noise scale
    tau : softmax temperature

    Returns
    -------
    (means, covs) posterior, covariance symmetrized.
    """
    means = np.asarray(means, dtype=float)
    covs = np.asarray(covs, dtype=float)
    observed = np.asarray(observed, dtype=int)
    k = means.shape[-1]
    if observed.size and (observed.min() < 0 or observed.max() >= k):
        raise ConfigurationError(f"observed action outside [0, {k})")
    zeta = np.asarray(zeta, dtype=float)
    if not np.all(zeta > 0):
        raise ConfigurationError("observation noise must be > 0")

    sig = softmax_link(means, tau)
    H = sig[..., :, None] * (_eye(k) - sig[..., None, :]) / tau
    v = (np.arange(k) == observed[..., None]) - sig

    HP = H @ covs
    S = HP @ np.swapaxes(H, -1, -2) + zeta[..., None, None] * _eye(k)
    try:
        # S and P are symmetric, so K^T = S^{-1} H P.
        KT = np.linalg.solve(S, HP)
    except np.linalg.LinAlgError:
        raise NumericError("innovation covariance is singular", condition=float(np.max(np.linalg.cond(S)))) from None
    K = np.swapaxes(KT, -1, -2)
    new_means = means + (K @ v[..., None])[..., 0]
    new_covs = covs - K @ HP
    new_covs = 0.5 * (new_covs + np.swapaxes(new_covs, -1, -2))
    if not (np.isfinite(new_means).all() and np.isfinite(new_covs).all()):
        raise NumericError("EKF update produced non-finite values", condition=float(np.max(np.linalg.cond(S))))
    return new_means, new_covs


def ekf_predict(belief: GaussianBelief, t: int, noise: NoiseConfig, rng=None) -> GaussianBelief:
    """Identity-transition prediction: mean kept, covariance inflated by ``(xi + eps) I``."""
    cov = predict_cov_batch(belief.cov, noise.xi, noise.psi, rng)
    return GaussianBelief(belief.mean, cov)


def ekf_update(predicted: GaussianBelief, observed_action: int, t: int, noise: NoiseConfig) -> GaussianBelief:
    """Correct ``predicted`` after the opponent played ``observed_action`` at iteration ``t``."""
    mean, cov = update_batch(predicted.mean, predicted.cov, observed_action, noise.zeta_at(t), noise.tau)
    return GaussianBelief(mean, cov)
