"""Seeded synthetic patients for desk-scale testing.

Each patient wears a chest and a thigh accelerometer, each mounted at an
unknown orientation (one uniformly random rotation per sensor per
patient). Minutes are either quiet lying (gravity, faint breathing, noise)
or lying with early mobility: short tapered oscillation bursts of 0.3 g
or more at 0.5-3 Hz separated by pauses. How long a patient pauses
between bursts, and how hard they move, varies from patient to patient,
so whole-minute activity levels do not transfer cleanly across patients. With ``label_mix_rate > 0`` some minutes get a
10-30 s splice of the opposite activity while keeping their majority
label, which is the coarse-label noise segment voting is meant to absorb.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .ingest import (AnnotationSet, Label, LabeledRecording, Position, SensorRecording,
                     attach_labels, serialize_annotations, synchronize)

CHEST_GRAVITY = np.array([0.0, 0.0, 1.0])
THIGH_GRAVITY = np.array([0.17, 0.0, 0.985])


@dataclass(frozen=True)
class SynthConfig:
    n_patients: int = 8
    minutes_per_patient: int = 70
    fs: float = 30.0
    class_balance: float = 0.5          # P(minute is EM)
    label_mix_rate: float = 0.0         # P(minute carries a splice of the other class)
    noise_std: float = 0.02             # g, white, per axis
    seed: int = 0
    em_amplitude: tuple = (0.3, 1.2)    # g, per-minute intensity (thigh); chest scaled down
    em_frequency: tuple = (0.5, 3.0)    # Hz
    em_burst_s: tuple = (0.8, 2.0)
    em_max_gap_s: tuple = (0.3, 12.0)   # per-patient ceiling on pauses between bursts
    patient_gain: tuple = (1.0, 4.0)    # per-patient multiplier on burst amplitude
    rest_amplitude: tuple = (0.005, 0.03)
    rest_frequency: tuple = (0.15, 0.35)
    splice_s: tuple = (10.0, 30.0)

    def __post_init__(self):
        if self.n_patients < 1 or self.minutes_per_patient < 1:
            raise ParameterError("need at least one patient and one minute")
        if self.fs <= 0:
            raise ParameterError("fs must be positive")
        for name in ("class_balance", "label_mix_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1], got {v}")
        if self.noise_std < 0:
            raise ParameterError("noise_std must be non-negative")
        if self.em_frequency[1] >= self.fs / 2:
            raise ParameterError("burst frequencies must stay below Nyquist")
        if self.em_amplitude[0] < 0.3 or self.rest_amplitude[1] > 0.05:
            raise ParameterError("EM bursts need >= 0.3 g and rest motion <= 0.05 g")
        lo, hi = self.splice_s
        if not 0 < lo <= hi <= 30.0:
            raise ParameterError("splice length must lie in (0, 30] s so the label stays the majority")


@dataclass
class MinuteTruth:
    minute: int
    label: Label
    splice_start_s: float | None = None
    splice_end_s: float | None = None


@dataclass
class SynthPatient:
    patient_id: str
    fs: float
    chest_rotation: np.ndarray
    thigh_rotation: np.ndarray
    chest_body: np.ndarray       # (n, 3) before the mounting rotation
    thigh_body: np.ndarray
    truth: list = field(default_factory=list)

    @property
    def t(self):
        return np.arange(len(self.chest_body)) / self.fs

    @property
    def chest(self):
        return self.chest_body @ self.chest_rotation.T

    @property
    def thigh(self):
        return self.thigh_body @ self.thigh_rotation.T

    def recordings(self):
        t = self.t
        return (SensorRecording(Position.CHEST, t, self.chest, self.fs),
                SensorRecording(Position.THIGH, t, self.thigh, self.fs))

    def annotations(self) -> AnnotationSet:
        return AnnotationSet(self.patient_id, [(m.minute, m.label) for m in self.truth])

    def labeled(self, rotated: bool = True) -> LabeledRecording:
        if rotated:
            chest, thigh = self.chest, self.thigh
        else:
            chest, thigh = self.chest_body, self.thigh_body
        return LabeledRecording(self.patient_id, self.fs, chest, thigh, 0.0,
                                [(m.minute, m.label) for m in self.truth])


def random_rotation(rng) -> np.ndarray:
    """Uniform rotation from a normalised 4-D Gaussian (unit quaternion)."""
    q = rng.standard_normal(4)
    w, x, y, z = q / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def _unit(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def _em_minute(rng, cfg, n, gain, max_gap):
    t = np.arange(n) / cfg.fs
    chest = np.zeros((n, 3))
    thigh = np.zeros((n, 3))
    level = rng.uniform(*cfg.em_amplitude) * gain
    start = rng.uniform(0.0, max_gap)
    while start < t[-1]:
        dur = rng.uniform(*cfg.em_burst_s)
        freq = rng.uniform(*cfg.em_frequency)
        amp = level * rng.uniform(1.0, 1.25)
        chest_scale = rng.uniform(0.3, 0.8)
        phase = rng.uniform(0, 2 * math.pi)
        sel = (t >= start) & (t < start + dur)
        tt = t[sel] - start
        wave = np.sin(2 * math.pi * freq * tt + phase) * np.sin(math.pi * tt / dur) ** 2
        thigh[sel] += amp * wave[:, None] * _unit(rng)
        chest[sel] += amp * chest_scale * wave[:, None] * _unit(rng)
        start += dur + rng.uniform(0.0, max_gap)
    return chest, thigh


def _rest_minute(rng, cfg, n):
    t = np.arange(n) / cfg.fs
    breath = math.sin(rng.uniform(0, 2 * math.pi))
    amp = rng.uniform(*cfg.rest_amplitude)
    freq = rng.uniform(*cfg.rest_frequency)
    wave = amp * np.sin(2 * math.pi * freq * t + breath)
    chest = wave[:, None] * _unit(rng)
    thigh = 0.2 * wave[:, None] * _unit(rng)
    return chest, thigh


def _minute(rng, cfg, label, n, gain, max_gap):
    if label == Label.LYING_EM:
        return _em_minute(rng, cfg, n, gain, max_gap)
    return _rest_minute(rng, cfg, n)


def generate_patient(cfg: SynthConfig, index: int) -> SynthPatient:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, index]))
    spm = int(round(60 * cfg.fs))
    r_chest = random_rotation(rng)
    r_thigh = random_rotation(rng)
    gain = rng.uniform(*cfg.patient_gain)
    max_gap = rng.uniform(*cfg.em_max_gap_s)
    chest = np.empty((cfg.minutes_per_patient * spm, 3))
    thigh = np.empty_like(chest)
    truth = []
    for m in range(cfg.minutes_per_patient):
        label = Label(int(rng.random() < cfg.class_balance))
        c, h = _minute(rng, cfg, label, spm, gain, max_gap)
        entry = MinuteTruth(m, label)
        if rng.random() < cfg.label_mix_rate:
            length = rng.uniform(*cfg.splice_s)
            s0 = rng.uniform(0.0, 60.0 - length)
            other = Label(1 - label)
            oc, oh = _minute(rng, cfg, other, spm, gain, max_gap)
            a, b = int(round(s0 * cfg.fs)), int(round((s0 + length) * cfg.fs))
            c[a:b] = oc[a:b]
            h[a:b] = oh[a:b]
            entry.splice_start_s = a / cfg.fs
            entry.splice_end_s = b / cfg.fs
        sl = slice(m * spm, (m + 1) * spm)
        chest[sl] = c + CHEST_GRAVITY
        thigh[sl] = h + THIGH_GRAVITY / np.linalg.norm(THIGH_GRAVITY)
        truth.append(entry)
    chest += rng.normal(0.0, cfg.noise_std, chest.shape)
    thigh += rng.normal(0.0, cfg.noise_std, thigh.shape)
    return SynthPatient(f"p{index + 1:02d}", cfg.fs, r_chest, r_thigh, chest, thigh, truth)


def generate_dataset(cfg: SynthConfig = SynthConfig()) -> list:
    """All patients of ``cfg``; patient ``i`` draws from its own sub-seed."""
    return [generate_patient(cfg, i) for i in range(cfg.n_patients)]


def _write_sensor(path, t, xyz):
    block = np.column_stack([t, xyz])
    with open(path, "w", newline="") as fh:
        fh.write("timestamp,x,y,z\n")
        np.savetxt(fh, block, fmt="%.6f", delimiter=",")


def write_patient(p: SynthPatient, out_dir) -> list:
    """Write the ingest-format files plus ``truth/<pid>_truth.csv``; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t = p.t
    paths = [out_dir / f"{p.patient_id}_chest.csv", out_dir / f"{p.patient_id}_thigh.csv",
             out_dir / f"{p.patient_id}_labels.csv"]
    _write_sensor(paths[0], t, p.chest)
    _write_sensor(paths[1], t, p.thigh)
    with open(paths[2], "w", newline="") as fh:
        serialize_annotations(p.annotations(), fh)
    truth_dir = out_dir / "truth"
    truth_dir.mkdir(exist_ok=True)
    truth_path = truth_dir / f"{p.patient_id}_truth.csv"
    with open(truth_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["minute", "label", "splice_start_s", "splice_end_s"])
        for m in p.truth:
            w.writerow([m.minute, int(m.label),
                        "" if m.splice_start_s is None else f"{m.splice_start_s:.6f}",
                        "" if m.splice_end_s is None else f"{m.splice_end_s:.6f}"])
    return paths + [truth_path]


def write_dataset(patients, out_dir) -> list:
    paths = []
    for p in patients:
        paths.extend(write_patient(p, out_dir))
    return paths


def read_truth(path) -> list:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            s, e = row["splice_start_s"], row["splice_end_s"]
            out.append(MinuteTruth(int(row["minute"]), Label(int(row["label"])),
                                   float(s) if s else None, float(e) if e else None))
    return out


def separability(patients, window_s: float = 60.0) -> np.ndarray:
    """Per-feature class-mean gap in pooled standard deviations over minute-long segments.

    Generator self-check: with no label mixing at least one of the 64
    features should exceed 3.
    """
    from .pipeline import PipelineConfig, featurize

    cfg = PipelineConfig(window_s=window_s)
    tables = [featurize(p.labeled(), cfg) for p in patients]
    X = np.concatenate([t.X for t in tables])
    y = np.concatenate([t.y for t in tables])
    a, b = X[y == 0], X[y == 1]
    if not len(a) or not len(b):
        raise ParameterError("separability needs minutes of both classes")
    pooled = np.sqrt((a.var(axis=0) + b.var(axis=0)) / 2)
    gap = np.abs(a.mean(axis=0) - b.mean(axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(pooled > 0, gap / pooled, np.where(gap > 0, np.inf, 0.0))


def synced_labeled(p: SynthPatient) -> LabeledRecording:
    """Run the generated streams through the regular sync/label path."""
    chest, thigh = p.recordings()
    return attach_labels(synchronize(chest, thigh, p.patient_id), p.annotations())
