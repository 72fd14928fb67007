"""Realised (after-the-fact) confusion-matrix metrics of a prediction stream."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RealizedMetrics:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def fnr(self) -> float | None:
        d = self.fn + self.tp
        return self.fn / d if d else None

    @property
    def fpr(self) -> float | None:
        d = self.fp + self.tn
        return self.fp / d if d else None

    @property
    def acc(self) -> float | None:
        return (self.tp + self.tn) / self.total if self.total else None

    @property
    def positives(self) -> int:
        """Number of positive predictions."""
        return self.tp + self.fp

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
                "fnr": self.fnr, "fpr": self.fpr, "acc": self.acc}


def _columns(reports, labels):
    pred = np.array([r.prediction for r in reports], dtype=int)
    group = np.array([r.group for r in reports], dtype=int)
    y = np.asarray(labels, dtype=int)
    if not (pred.size == group.size == y.size):
        raise ValueError(f"{pred.size} reports but {y.size} labels")
    return pred, y, group


def confusion(pred, y, group, start: int, stop: int) -> dict[int, RealizedMetrics]:
    if not 0 <= start < stop <= len(pred):
        raise ValueError(f"empty or out-of-range interval [{start}, {stop}) for length {len(pred)}")
    p, t, g = pred[start:stop], y[start:stop], group[start:stop]
    out = {}
    for z in np.unique(g):
        m = g == z
        pz, tz = p[m], t[m]
        out[int(z)] = RealizedMetrics(
            tp=int(np.sum((pz == 1) & (tz == 1))),
            fp=int(np.sum((pz == 1) & (tz == 0))),
            tn=int(np.sum((pz == 0) & (tz == 0))),
            fn=int(np.sum((pz == 0) & (tz == 1))),
        )
    return out


def realized_rates(reports, labels, start: int = 0, stop: int | None = None) -> dict[int, RealizedMetrics]:
    """Per-group confusion counts over reports ``[start, stop)``."""
    pred, y, group = _columns(reports, labels)
    return confusion(pred, y, group, start, len(pred) if stop is None else stop)


def moving_window_rates(reports, labels, width: int, valid_only: bool = False):
    """Symmetric moving-window metrics, one entry per centre index.

    The window around centre ``t`` is ``[t - width//2, t + width//2)``,
    truncated at the stream ends.  With ``valid_only`` only centres whose
    window fits entirely are returned.  Returns a list of
    ``(t, {group: RealizedMetrics})`` pairs.
    """
    if width < 2 or width % 2:
        raise ValueError("width must be an even integer >= 2")
    pred, y, group = _columns(reports, labels)
    n, half = len(pred), width // 2
    groups = np.unique(group)
    # prefix sums of the four cells per group give O(1) windows
    cells = {}
    for z in groups:
        m = group == z
        cells[int(z)] = np.stack([
            np.concatenate([[0], np.cumsum(m & (pred == 1) & (y == 1))]),
            np.concatenate([[0], np.cumsum(m & (pred == 1) & (y == 0))]),
            np.concatenate([[0], np.cumsum(m & (pred == 0) & (y == 0))]),
            np.concatenate([[0], np.cumsum(m & (pred == 0) & (y == 1))]),
        ])
    centres = range(half, n - half + 1) if valid_only else range(n)
    out = []
    for t in centres:
        lo, hi = max(0, t - half), min(n, t + half)
        out.append((t, {z: RealizedMetrics(*(int(v) for v in c[:, hi] - c[:, lo]))
                        for z, c in cells.items()}))
    return out


def max_fpr_gap(series, groups=(0, 1)) -> float:
    """Largest inter-group FPR difference over a moving-window series."""
    gaps = [abs(m[groups[0]].fpr - m[groups[1]].fpr) for _, m in series
            if all(g in m and m[g].fpr is not None for g in groups)]
    return max(gaps) if gaps else float("nan")


def window_series_rows(series):
    """Flatten a window series into ``index, group, fnr, fpr, acc`` rows."""
    for t, by_group in series:
        for z, m in sorted(by_group.items()):
            yield {"index": t, "group": z, "fnr": m.fnr, "fpr": m.fpr, "acc": m.acc}
