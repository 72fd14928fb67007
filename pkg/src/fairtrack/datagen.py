"""Synthetic two-group streams with a non-logistic labelling rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .logistic_ekf import LabeledEvent


@dataclass(frozen=True)
class Drift:
    """Linear interpolation of the group means between two 1-based indices."""

    start_index: int = 1000
    end_index: int = 10000
    mu0_end: tuple = (2.0, 3.0)
    mu1_end: tuple = (-1.0, -3.0)

    def __post_init__(self):
        if not self.start_index < self.end_index:
            raise ValueError("drift start must precede drift end")


@dataclass(frozen=True)
class ScenarioSpec:
    n_events: int = 10000
    mu0: tuple = (-1.0, -3.0)
    mu1: tuple = (2.0, 3.0)
    sigma: tuple = ((5.0, 1.0), (1.0, 5.0))
    v: tuple = (1.0, -1.0)
    p_high: float = 0.7
    p_low: float = 0.3
    drift: Drift | None = None
    group_balance: float = 0.5
    seed: int = 0

    @classmethod
    def static(cls, **kw) -> "ScenarioSpec":
        return cls(**kw)

    @classmethod
    def dynamic(cls, **kw) -> "ScenarioSpec":
        kw.setdefault("drift", Drift())
        return cls(**kw)


def group_means(spec: ScenarioSpec, index: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Means of both groups at 1-based event ``index`` (array), shape ``(len, 2)`` each."""
    index = np.asarray(index, dtype=float)
    mu0 = np.broadcast_to(np.asarray(spec.mu0, float), (index.size, 2)).copy()
    mu1 = np.broadcast_to(np.asarray(spec.mu1, float), (index.size, 2)).copy()
    d = spec.drift
    if d is not None:
        frac = np.clip((index - d.start_index) / (d.end_index - d.start_index), 0.0, 1.0)[:, None]
        mu0 += frac * (np.asarray(d.mu0_end, float) - np.asarray(spec.mu0, float))
        mu1 += frac * (np.asarray(d.mu1_end, float) - np.asarray(spec.mu1, float))
    return mu0, mu1


def _generate(spec: ScenarioSpec) -> list[LabeledEvent]:
    rng = np.random.default_rng(spec.seed)
    n = spec.n_events
    idx = np.arange(1, n + 1)
    z = (rng.random(n) < spec.group_balance).astype(int)
    mu0, mu1 = group_means(spec, idx)
    mu = np.where(z[:, None] == 1, mu1, mu0)
    chol = np.linalg.cholesky(np.asarray(spec.sigma, float))
    feats = mu + rng.standard_normal((n, 2)) @ chol.T
    q = feats @ np.asarray(spec.v, float)
    p = np.where(q > 0, spec.p_high, spec.p_low)
    y = (rng.random(n) < p).astype(int)
    return [LabeledEvent(np.append(feats[i], 1.0), z[i], y[i]) for i in range(n)]


def gen_static(spec: ScenarioSpec) -> list[LabeledEvent]:
    if spec.drift is not None:
        raise ValueError("gen_static needs a spec without drift")
    return _generate(spec)


def gen_dynamic(spec: ScenarioSpec) -> list[LabeledEvent]:
    if spec.drift is None:
        raise ValueError("gen_dynamic needs a drift schedule")
    return _generate(spec)
