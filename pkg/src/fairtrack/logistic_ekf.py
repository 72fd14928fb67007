"""Extended Kalman filter tracking of logistic-regression coefficients.

The coefficient vector follows a Gaussian random walk and each binary label is
assimilated with a single second-order expansion of the Bernoulli
log-likelihood around the prior mean.  The resulting covariance step is a
rank-one downdate, so no matrix is ever inverted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# |log h-scale| is clamped here; exp(350) is still finite in float64.
LOG_CLAMP = 350.0


@dataclass(frozen=True)
class LabeledEvent:
    """One streaming observation.

    ``x`` carries the intercept as its final entry, ``z`` is the sensitive
    group and ``y`` the binary label.
    """

    x: np.ndarray
    z: int
    y: int

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or x.size < 1:
            raise ValueError("x must be a non-empty 1-d vector")
        if not np.all(np.isfinite(x)):
            raise ValueError("x has non-finite entries")
        if x[-1] != 1.0:
            raise ValueError("final entry of x must be the intercept 1")
        if self.y not in (0, 1):
            raise ValueError(f"y must be 0 or 1, got {self.y!r}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", int(self.z))
        object.__setattr__(self, "y", int(self.y))

    @property
    def features(self) -> np.ndarray:
        """Feature vector without the intercept slot."""
        return self.x[:-1]


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError(f"shape mismatch: mean {mean.shape}, cov {cov.shape}")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise FloatingPointError("belief has non-finite entries")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size

    @classmethod
    def isotropic(cls, dim: int, variance: float, mean=None) -> "GaussianBelief":
        m = np.zeros(dim) if mean is None else np.asarray(mean, dtype=float)
        return cls(m, variance * np.eye(dim))


def sigmoid(q):
    """Overflow-safe logistic function, elementwise."""
    q = np.asarray(q, dtype=float)
    e = np.exp(-np.abs(q))
    return np.where(q >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def log_sigmoid(q):
    return -np.logaddexp(0.0, -np.asarray(q, dtype=float))


def logit(p: float) -> float:
    return float(np.log(p) - np.log1p(-p))


def logistic_prob(x, theta) -> float:
    """Bernoulli success probability ``exp(q) / (1 + exp(q))`` with ``q = theta.x``."""
    x = np.asarray(x, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if x.shape != theta.shape:
        raise ValueError(f"x and theta differ in shape: {x.shape} vs {theta.shape}")
    return float(sigmoid(theta @ x))


def predict_step(posterior: GaussianBelief, q) -> GaussianBelief:
    """Random-walk time update: mean unchanged, covariance grows by ``q``."""
    return GaussianBelief(posterior.mean.copy(), posterior.cov + np.asarray(q, dtype=float))


def rank_one_update(prior_cov, h):
    """Return ``(C^-1 + h h^T)^-1`` as ``C - C h h^T C / (1 + h^T C h)``."""
    c = np.asarray(prior_cov, dtype=float)
    h = np.asarray(h, dtype=float)
    ch = c @ h
    denom = 1.0 + h @ ch
    if not denom > 0.0:
        raise FloatingPointError(f"rank-one denominator is {denom}; covariance not PSD")
    out = c - np.outer(ch, ch) / denom
    return 0.5 * (out + out.T)


def gradient_terms(x: np.ndarray, y: int, mean: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First- and second-order expansion vectors ``f`` and ``h`` at ``mean``.

    ``f = (-1)^y x p((-1)^y x | mean)`` and
    ``h = x p((-1)^(1-y) x | mean) exp((-1)^y mean.x / 2)``.
    """
    q = float(mean @ x)
    sign = -1.0 if y == 1 else 1.0
    f = sign * x * float(sigmoid(sign * q))
    log_scale = float(log_sigmoid(-sign * q)) + sign * q / 2.0
    h = x * np.exp(np.clip(log_scale, -LOG_CLAMP, LOG_CLAMP))
    return f, h


def ekf_update(prior: GaussianBelief, event: LabeledEvent) -> GaussianBelief:
    """Assimilate one labelled observation into the coefficient belief."""
    x = event.x
    if x.size != prior.dim:
        raise ValueError(f"event has dimension {x.size}, belief has {prior.dim}")
    f, h = gradient_terms(x, event.y, prior.mean)
    cov = rank_one_update(prior.cov, h)
    mean = prior.mean - cov @ f
    return GaussianBelief(mean, cov)


def expected_prob(x, belief: GaussianBelief) -> float:
    """Probit-style approximation of E[sigmoid(theta.x)] under the belief."""
    x = np.asarray(x, dtype=float)
    return float(expected_prob_batch(x[None, :], belief.mean, belief.cov)[0])


def moderated_sigmoid(mu, var):
    """``sigmoid(mu / sqrt(1 + pi var / 8))``, the Gaussian-averaged logistic."""
    mu = np.asarray(mu, dtype=float)
    var = np.asarray(var, dtype=float)
    if np.any(var < -1e-12):
        raise ValueError("negative predictive variance; covariance is broken")
    var = np.maximum(var, 0.0)
    return sigmoid(mu / np.sqrt(1.0 + np.pi * var / 8.0))


def expected_prob_batch(xs: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """Vectorised :func:`expected_prob` over the rows of ``xs``."""
    mu = xs @ mean
    var = np.einsum("ij,jk,ik->i", xs, cov, xs)
    return moderated_sigmoid(mu, var)
