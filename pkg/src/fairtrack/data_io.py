"""Event CSVs, COMPAS ingestion, run configuration and the report stream."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .logistic_ekf import LabeledEvent
from .pipeline import StepReport, TrackerConfig

COMPAS_URL = (
    "https://raw.githubusercontent.com/propublica/compas-analysis/master/"
    "compas-scores-two-years.csv"
)
COMPAS_FILENAME = "compas-scores-two-years.csv"
# entries screened on or after this date are all labelled recidivist
COMPAS_TRIM_DATE = "2014-04-02"
COMPAS_RACES = {"Caucasian": 0, "African-American": 1}


class DataError(ValueError):
    pass


# --------------------------------------------------------------------------- events


def write_events(path, events) -> None:
    """Canonical event CSV: ``x1..xK,z,y`` with the intercept column left off."""
    events = list(events)
    if not events:
        raise DataError("no events to write")
    k = events[0].x.size - 1
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j + 1}" for j in range(k)] + ["z", "y"])
        for ev in events:
            w.writerow([repr(float(v)) for v in ev.features] + [ev.z, ev.y])


def read_events(path) -> list[LabeledEvent]:
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        try:
            header = next(rows)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        k = len(header) - 2
        expected = [f"x{j + 1}" for j in range(k)] + ["z", "y"]
        if k < 0 or header != expected:
            raise DataError(f"{path}: header {header} does not match x1..xK,z,y")
        events, bad = [], []
        for lineno, row in enumerate(rows, start=2):
            try:
                if len(row) != k + 2:
                    raise ValueError(f"expected {k + 2} fields, got {len(row)}")
                x = np.array([float(v) for v in row[:k]] + [1.0])
                events.append(LabeledEvent(x, int(row[k]), int(row[k + 1])))
            except ValueError as exc:
                bad.append(f"line {lineno}: {exc}")
    if bad:
        raise DataError(f"{path}: {len(bad)} malformed rows; " + "; ".join(bad[:5]))
    return events


# --------------------------------------------------------------------------- COMPAS


@dataclass(frozen=True)
class CompasRow:
    sex: int
    under25: int
    over45: int
    priors_count: int
    charge_degree: int
    race: int
    screening_date: str
    two_year_recid: int


def encode_compas_row(row: CompasRow, include_race: bool = False,
                      priors_scale: float = 1.0) -> LabeledEvent:
    """Features ``[sex, under25, over45, priors, charge_degree, (race), 1]``; group is race."""
    x = [row.sex, row.under25, row.over45, row.priors_count / priors_scale, row.charge_degree]
    if include_race:
        x.append(row.race)
    return LabeledEvent(np.array(x + [1.0], dtype=float), row.race, row.two_year_recid)


def compas_frame(path, trim: bool = False):
    """ProPublica's two-year filter restricted to Caucasian/African-American, date sorted."""
    import pandas as pd

    df = pd.read_csv(path)
    needed = {"sex", "age_cat", "priors_count", "c_charge_degree", "race",
              "compas_screening_date", "two_year_recid", "days_b_screening_arrest",
              "is_recid", "score_text"}
    missing = needed - set(df.columns)
    if missing:
        raise DataError(f"{path}: missing COMPAS columns {sorted(missing)}")
    df = df[
        (df.days_b_screening_arrest <= 30)
        & (df.days_b_screening_arrest >= -30)
        & (df.is_recid != -1)
        & (df.c_charge_degree != "O")
        & (df.score_text != "N/A")
        & df.score_text.notna()
        & df.race.isin(list(COMPAS_RACES))
    ].copy()
    df["compas_screening_date"] = pd.to_datetime(df.compas_screening_date)
    df = df.sort_values("compas_screening_date", kind="stable")
    if trim:
        df = df[df.compas_screening_date < pd.Timestamp(COMPAS_TRIM_DATE)]
    return df.reset_index(drop=True)


def compas_rows(df) -> tuple[list[CompasRow], int]:
    rows, rejected = [], 0
    for rec in df.itertuples(index=False):
        try:
            rows.append(CompasRow(
                sex={"Male": 0, "Female": 1}[rec.sex],
                under25=int(rec.age_cat == "Less than 25"),
                over45=int(rec.age_cat == "Greater than 45"),
                priors_count=int(rec.priors_count),
                charge_degree={"F": 0, "M": 1}[rec.c_charge_degree],
                race=COMPAS_RACES[rec.race],
                screening_date=str(rec.compas_screening_date.date()),
                two_year_recid=int(rec.two_year_recid),
            ))
        except (KeyError, ValueError, TypeError, AttributeError):
            rejected += 1
    return rows, rejected


def load_compas(path, trim: bool = False, include_race: bool = False,
                priors_scale: float = 1.0) -> list[LabeledEvent]:
    rows, rejected = compas_rows(compas_frame(path, trim))
    if rejected:
        import logging
        logging.getLogger(__name__).warning("%d COMPAS rows rejected for missing fields", rejected)
    return [encode_compas_row(r, include_race, priors_scale) for r in rows]


def load_events(path, schema: str = "events", **kw) -> list[LabeledEvent]:
    if schema == "events":
        return read_events(path)
    if schema == "compas":
        return load_compas(path, **kw)
    raise DataError(f"unknown schema {schema!r}")


def compas_cache_path() -> Path:
    if "FAIRTRACK_COMPAS" in os.environ:
        return Path(os.environ["FAIRTRACK_COMPAS"])
    base = Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache"))
    return base / "fairtrack" / COMPAS_FILENAME


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def verify_cached(path) -> bool:
    """Check ``path`` against its ``.sha256`` sidecar, written at fetch time."""
    path = Path(path)
    sidecar = path.with_suffix(path.suffix + ".sha256")
    if not path.exists():
        return False
    if not sidecar.exists():
        return True
    return sidecar.read_text().split()[0] == sha256_of(path)


def find_compas() -> Path | None:
    path = compas_cache_path()
    if path.exists():
        if not verify_cached(path):
            raise DataError(f"{path}: checksum does not match its .sha256 sidecar")
        return path
    return None


# --------------------------------------------------------------------------- config


@dataclass
class RunConfig:
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    input: str | None = None
    scenario: str | None = None
    schema: str = "events"
    out_dir: str = "out"
    granularity: str = "step"
    eval_start: int | None = None
    trim_compas: bool = False
    include_race: bool = False
    priors_scale: float = 1.0

    def __post_init__(self):
        if self.schema not in ("events", "compas"):
            raise DataError(f"unknown schema {self.schema!r}")
        if self.granularity not in ("step", "summary"):
            raise DataError(f"granularity must be 'step' or 'summary', got {self.granularity!r}")
        if not self.priors_scale > 0:
            raise DataError("priors_scale must be positive")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "tracker"}
        d["tracker"] = self.tracker.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        tracker = d.pop("tracker", {}) or {}
        tknown = {f.name for f in dataclasses.fields(TrackerConfig)}
        tunknown = set(tracker) - tknown
        if tunknown:
            raise DataError(f"unknown tracker keys: {sorted(tunknown)}")
        if "groups" in tracker:
            tracker["groups"] = tuple(tracker["groups"])
        return cls(tracker=TrackerConfig(**tracker), **d)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            return RunConfig.from_dict(json.load(fh))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON config: {exc}") from exc


def save_config(path, config: RunConfig) -> None:
    with open(path, "w") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)


# --------------------------------------------------------------------------- reports


class ReportWriter:
    """Newline-delimited JSON: one ``step`` record per event, then one ``summary``."""

    def __init__(self, path, steps: bool = True):
        self.fh = open(path, "w")
        self.steps = steps

    def write_step(self, report: StepReport, label: int | None = None) -> None:
        if not self.steps:
            return
        rec = {"type": "step", **report.to_dict()}
        if label is not None:
            rec["label"] = int(label)
        self.fh.write(json.dumps(rec) + "\n")
        self.fh.flush()

    def write_summary(self, summary: dict) -> None:
        self.fh.write(json.dumps({"type": "summary", **summary}) + "\n")
        self.fh.flush()

    def close(self) -> None:
        self.fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_reports(path) -> tuple[list[StepReport], list[int | None], dict | None]:
    """Parse a report stream; a missing trailing summary (partial run) is allowed."""
    reports, labels, summary = [], [], None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: line {lineno}: {exc}") from exc
            kind = rec.pop("type", None)
            if kind == "step":
                labels.append(rec.pop("label", None))
                reports.append(StepReport.from_dict(rec))
            elif kind == "summary":
                summary = rec
            else:
                raise DataError(f"{path}: line {lineno}: unknown record type {kind!r}")
    return reports, labels, summary


def write_window_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["index", "group", "fnr", "fpr", "acc"])
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else v) for k, v in r.items()})
