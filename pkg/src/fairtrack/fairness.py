"""Monte Carlo error-rate estimation and bias-constrained posterior filtering.

All rates are expectations over feature draws from each group's predictive
distribution, weighted by the *true* tracker's expected probability ``p_bar``.
A candidate coefficient vector only decides the indicator: it predicts
positive when its logit exceeds ``logit(tau)``, which is ``p > tau`` without
evaluating the sigmoid.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .logistic_ekf import GaussianBelief, expected_prob_batch, logit

# Fixed evaluation chunk over coefficient draws. Results never depend on the
# number of worker threads because chunk boundaries do not move.
CHUNK = 256


@dataclass(frozen=True)
class GroupRates:
    fnr: float
    fpr: float
    acc: float
    degenerate: bool = False


@dataclass(frozen=True)
class FairnessConfig:
    epsilon: float = 0.05
    alpha: float = 0.85
    tau: float = 0.5
    m_theta: int = 1000
    m_x: int = 500
    workers: int = 1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.m_theta < 1 or self.m_x < 1:
            raise ValueError("Monte Carlo budgets must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")


@dataclass
class FilterOutcome:
    mean: np.ndarray
    cov: np.ndarray
    retained: int
    delta_before: float
    fallback_used: bool
    early_exit: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def belief(self) -> GaussianBelief:
        return GaussianBelief(self.mean, self.cov)


def _rates_from_indicators(p_bar, pos, neg):
    """Rates for each column of the boolean indicator matrices ``pos``/``neg``.

    ``pos[k, j]`` marks sample ``k`` predicted positive by candidate ``j``.
    Returns ``(fnr, fpr, acc, degenerate)`` arrays over candidates.
    """
    p_bar = np.asarray(p_bar, dtype=float)
    q_bar = 1.0 - p_bar
    pos_mass = p_bar.sum()
    neg_mass = q_bar.sum()
    hit_pos = p_bar @ pos
    hit_neg = q_bar @ neg
    # a zero denominator means there is nothing to miss or to false-alarm on
    fnr = (p_bar @ neg) / pos_mass if pos_mass > 0 else np.zeros(pos.shape[1])
    fpr = (q_bar @ pos) / neg_mass if neg_mass > 0 else np.zeros(pos.shape[1])
    acc = (hit_pos + hit_neg) / p_bar.size
    degenerate = not (pos_mass > 0 and neg_mass > 0)
    return fnr, fpr, acc, degenerate


def true_probabilities(samples_by_group, true_belief: GaussianBelief) -> dict:
    return {
        z: expected_prob_batch(xs, true_belief.mean, true_belief.cov)
        for z, xs in samples_by_group.items()
    }


def estimate_rates(samples_by_group, true_belief: GaussianBelief, predictor_theta, tau: float,
                   p_bar_by_group=None) -> dict[int, GroupRates]:
    """Per-group FNR, FPR and accuracy of the point predictor ``predictor_theta``."""
    if p_bar_by_group is None:
        p_bar_by_group = true_probabilities(samples_by_group, true_belief)
    theta = np.asarray(predictor_theta, dtype=float)
    cut = logit(tau)
    out = {}
    for z, xs in samples_by_group.items():
        if len(xs) == 0:
            raise ValueError(f"group {z} has no feature samples")
        q = (np.asarray(xs) @ theta)[:, None]
        fnr, fpr, acc, deg = _rates_from_indicators(p_bar_by_group[z], q > cut, q < cut)
        out[z] = GroupRates(float(fnr[0]), float(fpr[0]), float(acc[0]), deg)
    return out


def reference_accuracy(samples_by_group, true_belief: GaussianBelief, tau: float,
                       p_bar_by_group=None) -> dict[int, float]:
    """Expected accuracy of thresholding the true tracker's own ``p_bar``."""
    if p_bar_by_group is None:
        p_bar_by_group = true_probabilities(samples_by_group, true_belief)
    out = {}
    for z, p_bar in p_bar_by_group.items():
        pos = (p_bar > tau)[:, None]
        neg = (p_bar < tau)[:, None]
        out[z] = float(_rates_from_indicators(p_bar, pos, neg)[2][0])
    return out


def bias_delta(rates: dict[int, GroupRates]) -> float:
    """Euclidean distance between the two groups' (FPR, FNR) points."""
    if set(rates) != {0, 1}:
        raise ValueError(f"bias is defined for groups {{0, 1}} only, got {sorted(rates)}")
    a, b = rates[0], rates[1]
    return float(np.hypot(b.fpr - a.fpr, b.fnr - a.fnr))


def accuracy_gate(candidate: dict[int, GroupRates], reference_acc: dict[int, float],
                  alpha: float) -> bool:
    """True iff every group keeps more than ``alpha`` of its reference accuracy."""
    if set(candidate) != set(reference_acc):
        raise ValueError("candidate and reference cover different groups")
    if any(not reference_acc[z] > 0 for z in reference_acc):
        return False
    return min(candidate[z].acc / reference_acc[z] for z in candidate) > alpha


def score_candidates(thetas, samples_by_group, p_bar_by_group, tau: float,
                     reference_acc, workers: int = 1):
    """Bias and worst accuracy ratio for every row of ``thetas``.

    Returns ``(delta, acc_ratio)`` arrays of length ``len(thetas)``.  A
    non-positive reference accuracy yields ratio ``-inf`` so the gate fails
    closed.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if set(samples_by_group) != {0, 1}:
        raise ValueError(f"bias is defined for groups {{0, 1}} only, got {sorted(samples_by_group)}")
    cut = logit(tau)

    def chunk(lo):
        block = thetas[lo:lo + CHUNK].T
        per_group = {}
        for z in (0, 1):
            q = samples_by_group[z] @ block
            fnr, fpr, acc, _ = _rates_from_indicators(p_bar_by_group[z], q > cut, q < cut)
            ref = reference_acc[z]
            ratio = acc / ref if ref > 0 else np.full(acc.shape, -np.inf)
            per_group[z] = (fnr, fpr, ratio)
        delta = np.hypot(per_group[1][1] - per_group[0][1], per_group[1][0] - per_group[0][0])
        return delta, np.minimum(per_group[0][2], per_group[1][2])

    starts = range(0, len(thetas), CHUNK)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(chunk, starts))
    else:
        parts = [chunk(lo) for lo in starts]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def retention_mask(delta, acc_ratio, epsilon: float, alpha: float) -> np.ndarray:
    return (np.asarray(delta) < epsilon) & (np.asarray(acc_ratio) > alpha)


def draw_coefficients(belief: GaussianBelief, count: int, rng: np.random.Generator) -> np.ndarray:
    # eigh tolerates the singular covariances left by tiny retained sets
    return rng.multivariate_normal(belief.mean, belief.cov, size=count, method="eigh")


def filter_fair_posterior(fair_belief: GaussianBelief, true_belief: GaussianBelief,
                          samples_by_group, config: FairnessConfig, rng: np.random.Generator,
                          fallback: GaussianBelief | None = None,
                          reference_acc=None) -> FilterOutcome:
    """Restrict the fair posterior to coefficient draws meeting both gates.

    If the fair mean already has bias below ``epsilon`` the belief is returned
    as is.  Otherwise ``m_theta`` draws are scored and the survivors' mean and
    covariance are returned.  With no survivors the ``fallback`` belief
    (defaulting to ``fair_belief``) is returned and ``fallback_used`` is set.
    """
    p_bar = true_probabilities(samples_by_group, true_belief)
    if reference_acc is None:
        reference_acc = reference_accuracy(samples_by_group, true_belief, config.tau, p_bar)
    delta0, _ = score_candidates(fair_belief.mean, samples_by_group, p_bar, config.tau,
                                 reference_acc)
    delta0 = float(delta0[0])
    if delta0 < config.epsilon:
        return FilterOutcome(fair_belief.mean, fair_belief.cov, config.m_theta, delta0,
                             False, early_exit=True)

    thetas = draw_coefficients(fair_belief, config.m_theta, rng)
    delta, ratio = score_candidates(thetas, samples_by_group, p_bar, config.tau,
                                    reference_acc, config.workers)
    keep = retention_mask(delta, ratio, config.epsilon, config.alpha)
    kept = thetas[keep]
    diag = {"min_delta": float(delta.min()), "passed_bias": int((delta < config.epsilon).sum())}
    if len(kept) == 0:
        fb = fair_belief if fallback is None else fallback
        return FilterOutcome(fb.mean, fb.cov, 0, delta0, True, diagnostics=diag)
    mean = kept.mean(axis=0)
    if len(kept) == 1:
        cov = np.zeros((mean.size, mean.size))
    else:
        cov = np.cov(kept, rowvar=False, ddof=1)
        cov = 0.5 * (cov + cov.T)
    return FilterOutcome(mean, cov, int(len(kept)), delta0, False, diagnostics=diag)
