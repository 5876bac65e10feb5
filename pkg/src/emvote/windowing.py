"""Minute epochs and half-overlapped segments."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import WindowError
from .ingest import MINUTE_S, Label, LabeledRecording

ABLATION_WINDOWS = (4.0, 10.0, 20.0, 30.0, 60.0)


@dataclass
class Epoch:
    patient_id: str
    minute_index: int
    chest: np.ndarray        # (round(60 fs), 3)
    thigh: np.ndarray
    label: Label
    fs: float


@dataclass
class Segment:
    parent: tuple            # (patient_id, minute_index)
    offset_s: float
    chest: np.ndarray        # (round(W fs), 3)
    thigh: np.ndarray
    inherited_label: Label
    fs: float


def split_epochs(rec: LabeledRecording) -> list:
    spm = rec.samples_per_minute
    out = []
    for minute, label in sorted(rec.minutes):
        a = minute * spm
        out.append(Epoch(rec.patient_id, minute, rec.chest[a:a + spm], rec.thigh[a:a + spm],
                         Label(label), rec.sampling_rate_hz))
    return out


def segment_count(window_s: float, epoch_s: float = MINUTE_S) -> int:
    hop = window_s / 2.0
    return int(math.floor((epoch_s - window_s) / hop + 1e-9)) + 1


def segment_bounds(window_s: float, fs: float, epoch_s: float = MINUTE_S) -> list:
    """``[(offset_s, start_sample, stop_sample)]`` of each segment within an epoch."""
    if not 0 < window_s <= epoch_s:
        raise WindowError(f"window must lie in (0, {epoch_s:g}] s, got {window_s:g}")
    length = int(round(window_s * fs))
    if length < 2:
        raise WindowError(f"window of {window_s:g} s holds fewer than 2 samples at {fs:g} Hz")
    hop = window_s / 2.0
    out = []
    for k in range(segment_count(window_s, epoch_s)):
        offset = k * hop
        start = int(round(offset * fs))
        out.append((offset, start, start + length))
    return out


def segment_epoch(epoch: Epoch, window_s: float) -> list:
    """Cut an epoch into half-overlapped windows; partial tail windows are dropped."""
    bounds = segment_bounds(window_s, epoch.fs, len(epoch.chest) / epoch.fs)
    parent = (epoch.patient_id, epoch.minute_index)
    return [Segment(parent, off, epoch.chest[a:b], epoch.thigh[a:b], epoch.label, epoch.fs)
            for off, a, b in bounds]
