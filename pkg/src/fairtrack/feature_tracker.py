"""Per-group normal-inverse-Wishart tracking of feature distributions."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtri
from scipy.stats import chi2, qmc


@dataclass(frozen=True)
class NiwState:
    """Normal-inverse-Wishart hyperparameters over a ``d``-dimensional feature.

    ``d`` excludes the intercept, so in terms of the full logistic dimension
    ``N`` we have ``d = N - 1``.
    """

    m: np.ndarray
    lam: float
    phi: np.ndarray
    nu: float

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if m.ndim != 1 or phi.shape != (m.size, m.size):
            raise ValueError(f"shape mismatch: m {m.shape}, phi {phi.shape}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        # nu > N - 2 with N = d + 1
        if not self.nu > m.size - 1:
            raise ValueError(f"nu={self.nu} must exceed d-1={m.size - 1}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "nu", float(self.nu))

    @property
    def dim(self) -> int:
        return self.m.size

    @property
    def predictive_df(self) -> float:
        """Degrees of freedom ``nu - N + 2`` of the multivariate-t predictive."""
        return self.nu - self.dim + 1

    def can_sample(self) -> bool:
        # finite predictive mean and variance need nu > N
        return self.nu > self.dim + 1

    def covariance_estimate(self) -> np.ndarray:
        """Scatter-based point estimate ``phi / (nu - N)`` of the feature covariance."""
        return self.phi / (self.nu - self.dim - 1)

    def predictive_scale(self) -> np.ndarray:
        lam, df = self.lam, self.predictive_df
        return (lam + 1.0) / (lam * df) * self.phi

    @classmethod
    def default_prior(cls, dim: int, lam: float, nu: float | None = None) -> "NiwState":
        """Zero location, identity scatter, ``nu = N + 1`` unless given."""
        return cls(np.zeros(dim), lam, np.eye(dim), dim + 2 if nu is None else nu)


def niw_update(prior: NiwState, x_features) -> NiwState:
    x = np.asarray(x_features, dtype=float)
    if x.shape != prior.m.shape:
        raise ValueError(f"feature dimension {x.shape} does not match tracker {prior.m.shape}")
    lam_post = prior.lam + 1.0
    resid = x - prior.m
    m = (prior.lam * prior.m + x) / lam_post
    phi = prior.phi + (prior.lam / lam_post) * np.outer(resid, resid)
    return NiwState(m, lam_post, 0.5 * (phi + phi.T), prior.nu + 1.0)


def niw_predict_reset(posterior: NiwState, beta: float) -> NiwState:
    """Carry ``m``, ``phi``, ``nu`` forward and pin the confidence weight to ``beta``."""
    return replace(posterior, lam=float(beta))


def sample_features(state: NiwState, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` feature vectors from the multivariate-t posterior predictive.

    Returns an array of shape ``(count, d)`` without the intercept column; see
    :func:`with_intercept`.
    """
    if not state.can_sample():
        raise ValueError(
            f"nu={state.nu} must exceed N={state.dim + 1} for a finite predictive variance"
        )
    if count < 1:
        raise ValueError("count must be positive")
    df = state.predictive_df
    # g ~ N(0, scale * df) so that m + g / sqrt(u) is t_df(m, scale)
    chol = np.linalg.cholesky(state.predictive_scale() * df)
    u = rng.chisquare(df, size=count)
    g = rng.standard_normal((count, state.dim)) @ chol.T
    return state.m + g / np.sqrt(u)[:, None]


def sample_features_sobol(state: NiwState, count: int, rng: np.random.Generator) -> np.ndarray:
    """Randomised quasi-Monte Carlo variant of :func:`sample_features`.

    A scrambled Sobol point in ``d + 1`` dimensions is pushed through the
    chi-square and normal inverse CDFs of the same construction, which
    removes most of the clumping of plain pseudo-random draws.  Each point is
    still marginally distributed as the multivariate t.
    """
    if not state.can_sample():
        raise ValueError(
            f"nu={state.nu} must exceed N={state.dim + 1} for a finite predictive variance"
        )
    if count < 1:
        raise ValueError("count must be positive")
    df = state.predictive_df
    chol = np.linalg.cholesky(state.predictive_scale() * df)
    with warnings.catch_warnings():
        # balance warning for counts that are not powers of two
        warnings.simplefilter("ignore", UserWarning)
        pts = qmc.Sobol(state.dim + 1, scramble=True, seed=rng).random(count)
    u = chi2.ppf(pts[:, 0], df)
    g = ndtri(pts[:, 1:]) @ chol.T
    return state.m + g / np.sqrt(u)[:, None]


SAMPLERS = {"random": sample_features, "sobol": sample_features_sobol}


def with_intercept(features: np.ndarray) -> np.ndarray:
    features = np.atleast_2d(features)
    return np.hstack([features, np.ones((features.shape[0], 1))])


@dataclass
class GroupTrackerBank:
    """One :class:`NiwState` per sensitive group, with the ``lambda = beta`` reset.

    ``states`` always holds the current prior for the next observation except
    between :meth:`observe` and :meth:`rollover`, when the observed group holds
    its posterior.  Unseen groups start from ``prior``.
    """

    prior: NiwState
    beta: float
    states: dict[int, NiwState] = field(default_factory=dict)
    sampler: str = "sobol"

    def __post_init__(self):
        if self.sampler not in SAMPLERS:
            raise ValueError(f"unknown sampler {self.sampler!r}; choose from {sorted(SAMPLERS)}")

    @classmethod
    def for_groups(cls, groups, prior: NiwState, beta: float,
                   sampler: str = "sobol") -> "GroupTrackerBank":
        return cls(prior, beta, {int(z): prior for z in groups}, sampler)

    def observe(self, z: int, x_features) -> NiwState:
        z = int(z)
        if z not in self.states:
            self.states[z] = self.prior
        self.states[z] = niw_update(self.states[z], x_features)
        return self.states[z]

    def rollover(self) -> None:
        self.states = {z: niw_predict_reset(s, self.beta) for z, s in self.states.items()}

    def ready(self) -> bool:
        return bool(self.states) and all(s.can_sample() for s in self.states.values())

    def sample(self, count: int, rng: np.random.Generator) -> dict[int, np.ndarray]:
        """Intercept-extended predictive draws for every group, in sorted group order."""
        draw = SAMPLERS[self.sampler]
        return {
            z: with_intercept(draw(self.states[z], count, rng))
            for z in sorted(self.states)
        }
