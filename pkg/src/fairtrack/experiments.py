"""Named end-to-end experiments and the published numbers they are compared with."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_io import load_compas
from .datagen import ScenarioSpec, gen_dynamic, gen_static
from .evaluation import RealizedMetrics, max_fpr_gap, moving_window_rates, realized_rates
from .pipeline import FairTracker, StepReport, TrackerConfig, run_stream

# realised rates over the final 9000 events, groups (0, 1)
PUBLISHED = {
    ("static", "constrained"): {"fpr": (0.48, 0.48), "fnr": (0.28, 0.28), "acc": (0.64, 0.60)},
    ("static", "unconstrained"): {"fpr": (0.62, 0.23), "fnr": (0.11, 0.46), "acc": (0.69, 0.67)},
    ("dynamic", "constrained"): {"fpr": (0.52, 0.54), "fnr": (0.22, 0.23), "acc": (0.64, 0.62)},
    ("dynamic", "unconstrained"): {"fpr": (0.38, 0.37), "fnr": (0.24, 0.27), "acc": (0.69, 0.69)},
}
PUBLISHED_THETA_STATIC = (0.21, -0.21, 0.04)
PUBLISHED_THETA_BATCH = (0.21, -0.22, 0.04)
PUBLISHED_SIGMA0 = ((5.00, 0.98), (0.98, 5.05))

UNCONSTRAINED_EPSILON = 2.0
BURN_IN = 1000


@dataclass
class RunResult:
    events: list
    reports: list[StepReport]
    tracker: FairTracker

    @property
    def labels(self) -> list[int]:
        return [e.y for e in self.events]

    def realized(self, start: int = BURN_IN, stop: int | None = None) -> dict[int, RealizedMetrics]:
        return realized_rates(self.reports, self.labels, start, stop)

    def mean_theta(self, which: str = "true", start: int = BURN_IN) -> np.ndarray:
        attr = "theta_true_mean" if which == "true" else "theta_fair_mean"
        return np.mean([getattr(r, attr) for r in self.reports[start:]], axis=0)

    def window_series(self, width: int = 2000, valid_only: bool = True):
        return moving_window_rates(self.reports, self.labels, width, valid_only)


def scenario_events(kind: str, seed: int, n_events: int = 10000):
    if kind == "static":
        return gen_static(ScenarioSpec.static(seed=seed, n_events=n_events))
    if kind == "dynamic":
        return gen_dynamic(ScenarioSpec.dynamic(seed=seed, n_events=n_events))
    raise ValueError(f"unknown scenario {kind!r}")


def run_synthetic(kind: str, epsilon: float, seed: int = 0, **overrides) -> RunResult:
    """Generate a synthetic stream with ``seed`` and track it with the published settings."""
    events = scenario_events(kind, seed)
    config = TrackerConfig(epsilon=epsilon, seed=seed, **overrides)
    tracker = FairTracker(config)
    reports = run_stream(events, config, tracker)
    return RunResult(events, reports, tracker)


def averaged_rates(results, start: int = BURN_IN) -> dict[str, tuple[float, float]]:
    """Seed-averaged realised (fpr, fnr, acc) per group."""
    out = {}
    for key in ("fpr", "fnr", "acc"):
        vals = np.array([[getattr(r.realized(start)[z], key) for z in (0, 1)] for r in results])
        out[key] = tuple(float(v) for v in vals.mean(axis=0))
    return out


def comparison_rows(kind: str, seeds=(0,), start: int = BURN_IN, **overrides):
    """Rows of (setting, metric, group, ours, published) for the replicate table."""
    rows = []
    for setting, eps in (("constrained", 0.05), ("unconstrained", UNCONSTRAINED_EPSILON)):
        results = [run_synthetic(kind, eps, s, **overrides) for s in seeds]
        ours = averaged_rates(results, start)
        target = PUBLISHED[(kind, setting)]
        for metric in ("fpr", "fnr", "acc"):
            for z in (0, 1):
                rows.append((setting, metric, z, ours[metric][z], target[metric][z]))
    return rows


def offline_logistic_fit(events, start: int = 0) -> np.ndarray:
    """Unpenalised maximum-likelihood logistic fit (Newton iterations)."""
    x = np.array([e.x for e in events[start:]])
    y = np.array([e.y for e in events[start:]], dtype=float)
    theta = np.zeros(x.shape[1])
    for _ in range(50):
        p = 1.0 / (1.0 + np.exp(-(x @ theta)))
        grad = x.T @ (y - p)
        hess = (x * (p * (1 - p))[:, None]).T @ x
        step = np.linalg.solve(hess, grad)
        theta += step
        if np.max(np.abs(step)) < 1e-12:
            break
    return theta


def max_window_gap(result: RunResult, width: int = 2000) -> float:
    """Largest inter-group FPR gap over windows that fit inside the stream."""
    return max_fpr_gap(result.window_series(width, valid_only=True))


def run_compas(path, trim: bool, include_race: bool, epsilon: float, seed: int = 0,
               alpha: float = 0.65, **overrides) -> RunResult:
    """Track the date-ordered COMPAS stream; priors extend the synthetic pattern to ``N``."""
    events = load_compas(path, trim=trim, include_race=include_race)
    config = TrackerConfig(n_dim=events[0].x.size, epsilon=epsilon, alpha=alpha, seed=seed,
                           **overrides)
    tracker = FairTracker(config)
    reports = run_stream(events, config, tracker)
    return RunResult(events, reports, tracker)
