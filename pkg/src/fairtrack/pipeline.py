"""Per-event loop tying the coefficient trackers, feature trackers and filter together."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .fairness import (
    FairnessConfig,
    GroupRates,
    bias_delta,
    estimate_rates,
    filter_fair_posterior,
    reference_accuracy,
    true_probabilities,
)
from .feature_tracker import GroupTrackerBank, NiwState
from .logistic_ekf import GaussianBelief, LabeledEvent, ekf_update, expected_prob, predict_step


@dataclass
class TrackerConfig:
    """Run parameters.  Priors left as ``None`` follow the synthetic-experiment pattern."""

    n_dim: int = 3
    epsilon: float = 0.05
    alpha: float = 0.85
    tau: float = 0.5
    q_scale: float = 1e-5
    beta: float = 49.0
    m_theta: int = 1000
    m_x: int = 500
    seed: int = 0
    prior_cov_scale: float = 1e-4
    prior_nu: float | None = None
    groups: tuple = (0, 1)
    workers: int = 1
    feature_sampler: str = "sobol"

    def __post_init__(self):
        self.fairness()
        if self.n_dim < 2:
            raise ValueError("n_dim counts the intercept and must be at least 2")
        if self.q_scale < 0 or self.prior_cov_scale <= 0 or self.beta <= 0:
            raise ValueError("q_scale must be >= 0; prior_cov_scale and beta must be > 0")
        if self.feature_sampler not in ("random", "sobol"):
            raise ValueError(f"unknown feature sampler {self.feature_sampler!r}")

    @property
    def q(self) -> np.ndarray:
        return self.q_scale * np.eye(self.n_dim)

    def fairness(self) -> FairnessConfig:
        return FairnessConfig(self.epsilon, self.alpha, self.tau, self.m_theta, self.m_x,
                              self.workers)

    def coefficient_prior(self) -> GaussianBelief:
        return GaussianBelief.isotropic(self.n_dim, self.prior_cov_scale)

    def feature_prior(self) -> NiwState:
        # lambda starts at beta; nu defaults to N + 1 (4 for the 3-d synthetic case)
        return NiwState.default_prior(self.n_dim - 1, self.beta, self.prior_nu)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["groups"] = list(self.groups)
        return d


@dataclass
class StepReport:
    index: int
    group: int
    prediction: int
    p_bar_fair: float
    p_bar_true: float
    rates: dict = field(default_factory=dict)
    delta: float | None = None
    delta_before: float | None = None
    retained: int = 0
    fallback_used: bool = False
    early_exit: bool = False
    warmup: bool = False
    theta_true_mean: np.ndarray | None = None
    theta_fair_mean: np.ndarray | None = None

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k not in ("rates",)}
        for k in ("theta_true_mean", "theta_fair_mean"):
            if out[k] is not None:
                out[k] = [float(v) for v in out[k]]
        out["rates"] = {str(z): {"fnr": r.fnr, "fpr": r.fpr, "acc": r.acc}
                        for z, r in self.rates.items()}
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "StepReport":
        d = dict(d)
        d["rates"] = {int(z): GroupRates(r["fnr"], r["fpr"], r["acc"])
                      for z, r in d.get("rates", {}).items()}
        for k in ("theta_true_mean", "theta_fair_mean"):
            if d.get(k) is not None:
                d[k] = np.asarray(d[k], dtype=float)
        return cls(**d)


class FairTracker:
    """Mutable tracker state advanced one labelled event at a time.

    ``true_prior`` and ``fair_prior`` are the beliefs at arrival of the next
    event; ``fair_posterior`` is the last filtered posterior, reused when the
    filter retains nothing.
    """

    def __init__(self, config: TrackerConfig):
        self.config = config
        self.fair_config = config.fairness()
        self.rng = np.random.default_rng(config.seed)
        self.true_prior = config.coefficient_prior()
        self.fair_prior = config.coefficient_prior()
        self.fair_posterior = self.fair_prior
        self.features = GroupTrackerBank.for_groups(config.groups, config.feature_prior(),
                                                    config.beta, config.feature_sampler)
        self.index = 0

    def process_event(self, event: LabeledEvent) -> StepReport:
        cfg = self.config
        if event.x.size != cfg.n_dim:
            raise ValueError(f"event {self.index}: dimension {event.x.size} != {cfg.n_dim}")
        try:
            return self._step(event)
        except (FloatingPointError, np.linalg.LinAlgError) as exc:
            raise FloatingPointError(f"event {self.index}: {exc}") from exc

    def _step(self, event: LabeledEvent) -> StepReport:
        cfg, fcfg = self.config, self.fair_config
        # predict before the label is seen
        p_fair = expected_prob(event.x, self.fair_prior)
        p_true = expected_prob(event.x, self.true_prior)
        prediction = int(p_fair > cfg.tau)

        self.features.observe(event.z, event.features)
        true_post = ekf_update(self.true_prior, event)
        fair_post = ekf_update(self.fair_prior, event)

        report = StepReport(self.index, event.z, prediction, p_fair, p_true)
        if self.features.ready() and set(self.features.states) == {0, 1}:
            samples = self.features.sample(fcfg.m_x, self.rng)
            p_bar = true_probabilities(samples, true_post)
            ref_acc = reference_accuracy(samples, true_post, cfg.tau, p_bar)
            outcome = filter_fair_posterior(fair_post, true_post, samples, fcfg, self.rng,
                                            fallback=self.fair_posterior, reference_acc=ref_acc)
            fair_post = outcome.belief
            rates = estimate_rates(samples, true_post, fair_post.mean, cfg.tau, p_bar)
            report.rates = rates
            report.delta = bias_delta(rates)
            report.delta_before = outcome.delta_before
            report.retained = outcome.retained
            report.fallback_used = outcome.fallback_used
            report.early_exit = outcome.early_exit
        else:
            report.warmup = True

        report.theta_true_mean = true_post.mean
        report.theta_fair_mean = fair_post.mean

        self.features.rollover()
        self.fair_posterior = fair_post
        self.true_prior = predict_step(true_post, cfg.q)
        self.fair_prior = predict_step(fair_post, cfg.q)
        self.index += 1
        return report


def run_stream(events, config: TrackerConfig, tracker: FairTracker | None = None,
               callback=None) -> list[StepReport]:
    """Fold :meth:`FairTracker.process_event` over ``events``."""
    if len(events) == 0:
        raise ValueError("empty event stream")
    tracker = FairTracker(config) if tracker is None else tracker
    reports = []
    for i, ev in enumerate(events):
        if ev.x.size != config.n_dim:
            raise ValueError(f"event {i}: dimension {ev.x.size} != {config.n_dim}")
        rep = tracker.process_event(ev)
        reports.append(rep)
        if callback is not None:
            callback(rep)
    return reports
