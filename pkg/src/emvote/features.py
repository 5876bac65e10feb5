"""Orientation-insensitive segment features.

Each sensor stream yields four magnitude signals (raw, low band, high band,
time derivative of the high band) and each signal is summarised by eight
metrics, giving ``2 * 4 * 8 = 64`` attributes in the order of
:data:`FEATURE_NAMES`. That order is a public contract: models store a
digest of it and refuse vectors laid out differently.
"""
from __future__ import annotations

import hashlib
from typing import NamedTuple

import numpy as np

from . import dsp
from .errors import LengthError, ParameterError

SENSORS = ("chest", "thigh")
SIGNALS = ("mag", "low", "high", "dhigh")
METRICS = ("mean", "max", "min", "std", "median", "entropy", "rms", "iqr")
AXES = ("x", "y", "z")
ENTROPY_BINS = 16


def layout_names(sensors=SENSORS, feature_set="invariant"):
    """Canonical feature names for a sensor subset and feature family."""
    if feature_set == "invariant":
        inner = SIGNALS
    elif feature_set == "per_axis":
        inner = AXES
    else:
        raise ParameterError(f"unknown feature set {feature_set!r}")
    return [f"{s}_{sig}_{m}" for s in sensors for sig in inner for m in METRICS]


FEATURE_NAMES = tuple(layout_names())
PER_AXIS_NAMES = tuple(layout_names(feature_set="per_axis"))


def layout_digest(names) -> str:
    return hashlib.sha256("\n".join(names).encode("utf-8")).hexdigest()


FEATURE_DIGEST = layout_digest(FEATURE_NAMES)


class MetricSet(NamedTuple):
    mean: float
    max: float
    min: float
    std: float
    median: float
    entropy: float
    rms: float
    iqr: float


def histogram_entropy(values, bins: int = ENTROPY_BINS) -> np.ndarray:
    """Shannon entropy (bits) of an equal-width histogram over ``[min, max]``.

    Works along the last axis. Sample ``v`` falls in bin
    ``floor(bins * (v - min) / (max - min))``, with the maximum folded into
    the top bin. Constant rows have entropy 0.
    """
    v = np.asarray(values, dtype=float)
    flat = v.reshape(-1, v.shape[-1])
    lo = flat.min(axis=1, keepdims=True)
    hi = flat.max(axis=1, keepdims=True)
    span = hi - lo
    flat_span = span == 0
    safe = np.where(flat_span, 1.0, span)
    idx = np.floor(bins * (flat - lo) / safe).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)
    rows = flat.shape[0]
    counts = np.bincount((idx + bins * np.arange(rows)[:, None]).ravel(),
                         minlength=rows * bins).reshape(rows, bins)
    p = counts / flat.shape[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    ent = terms.sum(axis=1)
    ent[flat_span[:, 0]] = 0.0
    return ent.reshape(v.shape[:-1])


def metric_array(series) -> np.ndarray:
    """The eight metrics along the last axis; returns shape ``(..., 8)``."""
    s = np.asarray(series, dtype=float)
    if s.shape[-1] < 1:
        raise LengthError("metrics need at least one sample")
    q1, med, q3 = np.percentile(s, [25, 50, 75], axis=-1)
    lo, hi = s.min(axis=-1), s.max(axis=-1)
    flat = lo == hi
    # rounding in the mean would otherwise leave constant rows with std ~1e-16
    mean = np.where(flat, lo, np.clip(s.mean(axis=-1), lo, hi))
    std = np.where(flat, 0.0, s.std(axis=-1))
    out = np.stack([
        mean,
        hi,
        lo,
        std,
        med,
        histogram_entropy(s),
        np.sqrt(np.mean(s * s, axis=-1)),
        q3 - q1,
    ], axis=-1)
    return out


def metrics(series) -> MetricSet:
    """Summary statistics of one real sequence.

    ``std`` is the population deviation and ``iqr`` uses linearly
    interpolated quartiles.
    """
    s = np.asarray(series, dtype=float)
    if s.ndim != 1:
        raise ParameterError("metrics expects a 1-D sequence")
    return MetricSet(*(float(v) for v in metric_array(s)))


def _stream_block(xyz, fs):
    # (b, n, 3) -> (b, 4, 8)
    bands = dsp.band_split(xyz, fs)
    d_high = dsp.derivative(bands.high, fs)
    mags = [dsp.magnitude_series(a) for a in (xyz, bands.low, bands.high)]
    head = metric_array(np.stack(mags, axis=1))
    tail = metric_array(dsp.magnitude_series(d_high))[:, None, :]
    return np.concatenate([head, tail], axis=1)


def invariant_features(chest, thigh, fs: float, sensors=SENSORS) -> np.ndarray:
    """Feature matrix for a batch of equal-length segments.

    ``chest`` and ``thigh`` are ``(b, n, 3)`` arrays (either may be None
    when excluded from ``sensors``). Returns ``(b, 32 * len(sensors))``.
    """
    streams = {"chest": chest, "thigh": thigh}
    blocks = []
    for name in sensors:
        xyz = np.asarray(streams[name], dtype=float)
        if xyz.shape[-2] < 2:
            raise LengthError("segments need at least two samples per stream")
        blocks.append(_stream_block(xyz, fs).reshape(xyz.shape[0], -1))
    return np.concatenate(blocks, axis=1)


def per_axis_features(chest, thigh, fs: float, sensors=SENSORS) -> np.ndarray:
    """Orientation-dependent comparator: the eight metrics on each raw axis."""
    streams = {"chest": chest, "thigh": thigh}
    blocks = []
    for name in sensors:
        xyz = np.asarray(streams[name], dtype=float)
        per_axis = np.swapaxes(xyz, -1, -2)  # (b, 3, n)
        blocks.append(metric_array(per_axis).reshape(xyz.shape[0], -1))
    return np.concatenate(blocks, axis=1)


def segment_features(seg, fs: float | None = None) -> np.ndarray:
    """64-value feature vector of a single :class:`~emvote.windowing.Segment`."""
    fs = seg.fs if fs is None else fs
    return invariant_features(seg.chest[None], seg.thigh[None], fs)[0]


def features_for(segments, feature_set="invariant", sensors=SENSORS) -> np.ndarray:
    """Feature matrix for a list of segments sharing one length and rate."""
    if not segments:
        n = len(layout_names(sensors, feature_set))
        return np.empty((0, n))
    fs = segments[0].fs
    chest = np.stack([s.chest for s in segments]) if "chest" in sensors else None
    thigh = np.stack([s.thigh for s in segments]) if "thigh" in sensors else None
    if feature_set == "invariant":
        return invariant_features(chest, thigh, fs, sensors)
    if feature_set == "per_axis":
        return per_axis_features(chest, thigh, fs, sensors)
    raise ParameterError(f"unknown feature set {feature_set!r}")
