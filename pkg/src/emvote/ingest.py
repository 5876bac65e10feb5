"""Reading sensor/annotation CSV files, aligning the two sensors, labelling minutes.

File layout for one patient ``<pid>``::

    <pid>_chest.csv    timestamp,x,y,z
    <pid>_thigh.csv    timestamp,x,y,z
    <pid>_labels.csv   minute,label        (label 0 = lying, 1 = lying with EM)

Timestamps are numeric seconds or ISO-8601; acceleration is in g.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (DataError, GapError, IdentityError, OrderingError,
                     ParameterError, ParseError, SyncError)

DEFAULT_FS = 30.0
MINUTE_S = 60.0
MAX_GAP_S = 1.0
SENSOR_HEADER = ["timestamp", "x", "y", "z"]
LABEL_HEADER = ["minute", "label"]


class Position(str, enum.Enum):
    CHEST = "chest"
    THIGH = "thigh"


class Label(enum.IntEnum):
    LYING_NO_EM = 0
    LYING_EM = 1


class SensorSample(NamedTuple):
    timestamp: float
    x: float
    y: float
    z: float


@dataclass
class SensorRecording:
    position: Position
    t: np.ndarray            # (n,) seconds, strictly increasing
    xyz: np.ndarray          # (n, 3) g
    sampling_rate_hz: float = DEFAULT_FS

    def __len__(self):
        return len(self.t)

    def sample(self, i) -> SensorSample:
        return SensorSample(float(self.t[i]), *(float(v) for v in self.xyz[i]))

    @property
    def samples(self):
        return [self.sample(i) for i in range(len(self))]

    @property
    def span(self):
        return float(self.t[0]), float(self.t[-1])


@dataclass
class SyncedRecording:
    patient_id: str
    sampling_rate_hz: float
    chest: np.ndarray        # (n, 3)
    thigh: np.ndarray        # (n, 3)
    origin: float
    # grid-index ranges [start, stop) lying inside gaps longer than MAX_GAP_S;
    # only populated when synchronize(..., on_gap="mark")
    bad_ranges: list = field(default_factory=list)

    def __len__(self):
        return len(self.chest)

    @property
    def times(self):
        return self.origin + np.arange(len(self)) / self.sampling_rate_hz


@dataclass
class AnnotationSet:
    patient_id: str
    labels: list             # [(minute_index, Label)] sorted by minute

    def as_dict(self):
        return dict(self.labels)


@dataclass
class LabeledRecording:
    patient_id: str
    sampling_rate_hz: float
    chest: np.ndarray
    thigh: np.ndarray
    origin: float
    minutes: list            # [(minute_index, Label)] kept minutes only

    @property
    def samples_per_minute(self):
        return int(round(MINUTE_S * self.sampling_rate_hz))


_FRACTION = re.compile(r"(T\d{2}:\d{2}:\d{2})\.(\d+)")


def _parse_time(text):
    try:
        return float(text)
    except ValueError:
        pass
    text = text.strip().replace("Z", "+00:00")
    # fromisoformat on 3.10 only takes 3- or 6-digit fractions
    text = _FRACTION.sub(lambda m: f"{m.group(1)}.{(m.group(2) + '000000')[:6]}", text)
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.timestamp()


def _check_header(reader, expected, what):
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"empty {what} file", row=1) from None
    if [h.strip().lower() for h in header] != expected:
        raise ParseError(f"expected header {','.join(expected)}, got {','.join(header)}", row=1)


def parse_recording(stream, position, sampling_rate_hz: float = DEFAULT_FS) -> SensorRecording:
    """Parse a ``timestamp,x,y,z`` CSV stream.

    Row numbers in errors count the header as row 1.
    """
    position = Position(position)
    reader = csv.reader(stream)
    _check_header(reader, SENSOR_HEADER, "sensor")
    ts, vals = [], []
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", row=row_no)
        try:
            t = _parse_time(row[0])
            x, y, z = (float(c) for c in row[1:])
        except ValueError as exc:
            raise ParseError(f"not a number ({exc})", row=row_no) from None
        if not all(math.isfinite(v) for v in (t, x, y, z)) or t < 0:
            raise ParseError("values must be finite and timestamp non-negative", row=row_no)
        if ts and t <= ts[-1]:
            raise OrderingError(f"timestamp {t!r} does not follow {ts[-1]!r}", row=row_no)
        ts.append(t)
        vals.append((x, y, z))
    if not ts:
        raise ParseError("recording has no samples", row=2)
    return SensorRecording(position, np.array(ts), np.array(vals, dtype=float),
                           float(sampling_rate_hz))


def serialize_recording(rec: SensorRecording, stream) -> None:
    """Write a recording with ``repr`` floats so re-parsing is bit-identical."""
    stream.write(",".join(SENSOR_HEADER) + "\n")
    for t, (x, y, z) in zip(rec.t.tolist(), rec.xyz.tolist()):
        stream.write(f"{t!r},{x!r},{y!r},{z!r}\n")


def parse_annotations(stream, patient_id: str) -> AnnotationSet:
    reader = csv.reader(stream)
    _check_header(reader, LABEL_HEADER, "annotation")
    seen = {}
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", row=row_no)
        try:
            minute, label = int(row[0]), int(row[1])
        except ValueError as exc:
            raise ParseError(f"not an integer ({exc})", row=row_no) from None
        if minute < 0:
            raise ParseError("minute index must be non-negative", row=row_no)
        if label not in (0, 1):
            raise ParseError(f"label must be 0 or 1, got {label}", row=row_no)
        if minute in seen:
            raise ParseError(f"duplicate minute {minute}", row=row_no)
        seen[minute] = Label(label)
    return AnnotationSet(patient_id, sorted(seen.items()))


def serialize_annotations(ann: AnnotationSet, stream) -> None:
    stream.write(",".join(LABEL_HEADER) + "\n")
    for minute, label in ann.labels:
        stream.write(f"{minute},{int(label)}\n")


def _resample(rec: SensorRecording, grid, fs, on_gap):
    t, xyz = rec.t, rec.xyz
    n = len(t)
    half = 0.5 / fs + 1e-9
    hi = np.clip(np.searchsorted(t, grid), 1, max(n - 1, 1))
    lo = hi - 1
    if n == 1:
        return np.repeat(xyz[:1], len(grid), axis=0), []
    d_lo = np.abs(grid - t[lo])
    d_hi = np.abs(t[hi] - grid)
    nearest = np.where(d_hi < d_lo, hi, lo)
    out = xyz[nearest].copy()

    off_grid = np.minimum(d_lo, d_hi) > half
    bad = []
    if off_grid.any():
        gap = t[hi] - t[lo]
        too_long = off_grid & (gap > MAX_GAP_S)
        if too_long.any():
            if on_gap == "error":
                k = int(np.flatnonzero(too_long)[0])
                raise GapError(rec.position.value, float(t[lo[k]]), float(t[hi[k]]))
            idx = np.flatnonzero(too_long)
            # contiguous runs of bad grid indices
            breaks = np.flatnonzero(np.diff(idx) > 1)
            starts = np.r_[idx[0], idx[breaks + 1]]
            stops = np.r_[idx[breaks], idx[-1]] + 1
            bad = list(zip(starts.tolist(), stops.tolist()))
        fix = off_grid & ~too_long
        if fix.any():
            w = ((grid[fix] - t[lo[fix]]) / gap[fix])[:, None]
            out[fix] = (1 - w) * xyz[lo[fix]] + w * xyz[hi[fix]]
    return out, bad


def synchronize(chest: SensorRecording, thigh: SensorRecording, patient_id: str = "",
                on_gap: str = "error") -> SyncedRecording:
    """Put both sensors on one ``1/fs`` grid over the intersection of their spans.

    The grid starts at the later start time. Each grid point takes the
    nearest sample when one lies within half a period; otherwise the point
    sits in a gap, which is linearly interpolated when at most
    ``MAX_GAP_S`` long. Longer gaps raise :class:`GapError`, or with
    ``on_gap="mark"`` are recorded in ``bad_ranges`` so that the affected
    minutes are dropped when labels are attached.
    """
    if on_gap not in ("error", "mark"):
        raise ParameterError(f"on_gap must be 'error' or 'mark', got {on_gap!r}")
    fs = chest.sampling_rate_hz
    if not math.isclose(fs, thigh.sampling_rate_hz, rel_tol=1e-9):
        raise SyncError(f"sampling rates differ: {fs} vs {thigh.sampling_rate_hz}")
    start = max(chest.t[0], thigh.t[0])
    end = min(chest.t[-1], thigh.t[-1])
    if end < start:
        raise SyncError(f"recordings do not overlap (chest {chest.span}, thigh {thigh.span})")
    n = int(math.floor((end - start) * fs + 1e-6)) + 1
    grid = start + np.arange(n) / fs
    c, bad_c = _resample(chest, grid, fs, on_gap)
    h, bad_h = _resample(thigh, grid, fs, on_gap)
    return SyncedRecording(patient_id, fs, c, h, float(start), sorted(bad_c + bad_h))


def attach_labels(rec: SyncedRecording, ann: AnnotationSet) -> LabeledRecording:
    """Keep complete, annotated, gap-free minutes counted from the origin."""
    if ann.patient_id != rec.patient_id:
        raise IdentityError(f"annotations for {ann.patient_id!r} cannot label {rec.patient_id!r}")
    spm = int(round(MINUTE_S * rec.sampling_rate_hz))
    complete = len(rec) // spm
    kept = []
    for minute, label in ann.labels:
        if minute >= complete:
            continue
        a, b = minute * spm, (minute + 1) * spm
        if any(s < b and a < e for s, e in rec.bad_ranges):
            continue
        kept.append((minute, Label(label)))
    return LabeledRecording(rec.patient_id, rec.sampling_rate_hz, rec.chest, rec.thigh,
                            rec.origin, kept)


def load_patient(data_dir, patient_id: str, sampling_rate_hz: float = DEFAULT_FS,
                 on_gap: str = "error") -> LabeledRecording:
    data_dir = Path(data_dir)
    recs = {}
    for pos in Position:
        path = data_dir / f"{patient_id}_{pos.value}.csv"
        with open(path, newline="") as fh:
            recs[pos] = parse_recording(fh, pos, sampling_rate_hz)
    with open(data_dir / f"{patient_id}_labels.csv", newline="") as fh:
        ann = parse_annotations(fh, patient_id)
    synced = synchronize(recs[Position.CHEST], recs[Position.THIGH], patient_id, on_gap)
    return attach_labels(synced, ann)


def discover_patients(data_dir) -> list:
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise DataError(f"data directory not found: {data_dir}")
    ids = sorted(p.name[: -len("_labels.csv")] for p in data_dir.glob("*_labels.csv"))
    if not ids:
        raise DataError(f"no <patient>_labels.csv files in {data_dir}")
    return ids


def load_dataset(data_dir, sampling_rate_hz: float = DEFAULT_FS, on_gap: str = "error") -> list:
    """Load every patient with a labels file in ``data_dir``, sorted by id."""
    out = []
    for pid in discover_patients(data_dir):
        try:
            out.append(load_patient(data_dir, pid, sampling_rate_hz, on_gap))
        except FileNotFoundError as exc:
            raise DataError(f"patient {pid}: missing file {exc.filename}") from None
    return out


def recording_from_text(text: str, position) -> SensorRecording:
    return parse_recording(io.StringIO(text), position)
