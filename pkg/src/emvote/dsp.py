"""Spectral decomposition and rotation-safe transforms of tri-axial signals.

Tri-axial arrays carry time on axis -2 and the (x, y, z) components on
axis -1, so a single segment is ``(n, 3)`` and a batch is ``(b, n, 3)``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import LengthError, ParameterError

LOW_CUT_HZ = 0.3
HIGH_CUT_HZ = 20.0


def dft(series) -> np.ndarray:
    """Complex spectrum of a real sequence (any length, unnormalised)."""
    s = np.asarray(series, dtype=float)
    if s.shape[-1] < 1:
        raise LengthError("dft needs at least one sample")
    return np.fft.fft(s)


def idft(spectrum) -> np.ndarray:
    """Inverse of :func:`dft`; the imaginary residue is discarded."""
    S = np.asarray(spectrum, dtype=complex)
    if S.shape[-1] < 1:
        raise LengthError("idft needs at least one bin")
    return np.fft.ifft(S).real


def bin_frequencies(n: int, fs: float) -> np.ndarray:
    """Absolute frequency (Hz) of each one-sided bin of an ``n``-point real DFT."""
    # k * fs / n rather than rfftfreq's k / (n * d), so 0.3 Hz bins come out exact
    return np.arange(n // 2 + 1) * fs / n


class BandDecomposition(NamedTuple):
    low: np.ndarray
    high: np.ndarray
    residual: np.ndarray
    high_cut: float


def effective_high_cut(fs: float, high_cut: float | None = None) -> float:
    nyquist = fs / 2.0
    return nyquist if high_cut is None else min(high_cut, nyquist)


def band_split(xyz, fs: float, low_cut: float = LOW_CUT_HZ,
               high_cut: float | None = HIGH_CUT_HZ) -> BandDecomposition:
    """Ideal spectral masking into ``|f| < low_cut`` and ``low_cut <= |f| <= high_cut``.

    ``high_cut`` is clamped to Nyquist. The DC bin always lands in the low
    band; a bin exactly at ``low_cut`` lands in the high band. ``residual``
    holds whatever lies above ``high_cut`` (all zeros once it reaches
    Nyquist), so ``low + high + residual`` reconstructs the input.
    """
    x = np.asarray(xyz, dtype=float)
    if fs <= 0:
        raise ParameterError(f"sampling rate must be positive, got {fs}")
    if high_cut is not None and high_cut <= 0:
        raise ParameterError(f"high cut must be positive, got {high_cut}")
    hc = effective_high_cut(fs, high_cut)
    if not 0 < low_cut < hc:
        raise ParameterError(f"need 0 < low_cut < high_cut <= fs/2, got {low_cut}, {hc}")
    n = x.shape[-2]
    if n < 1:
        raise LengthError("band_split needs at least one sample")

    spec = np.fft.rfft(x, axis=-2)
    f = bin_frequencies(n, fs)[:, None]
    low_mask = f < low_cut
    high_mask = (f >= low_cut) & (f <= hc)

    low = np.fft.irfft(np.where(low_mask, spec, 0), n=n, axis=-2)
    high = np.fft.irfft(np.where(high_mask, spec, 0), n=n, axis=-2)
    if hc >= fs / 2.0:
        residual = np.zeros_like(x)
    else:
        residual = np.fft.irfft(np.where(f > hc, spec, 0), n=n, axis=-2)
    return BandDecomposition(low, high, residual, hc)


def derivative(xyz, fs: float) -> np.ndarray:
    """Forward first difference scaled to per-second units; one sample shorter."""
    x = np.asarray(xyz, dtype=float)
    if x.shape[-2] < 2:
        raise LengthError("derivative needs at least two samples")
    return np.diff(x, axis=-2) * fs


def magnitude_series(xyz) -> np.ndarray:
    """Per-sample Euclidean norm over the last axis."""
    x = np.asarray(xyz, dtype=float)
    return np.sqrt(np.sum(x * x, axis=-1))
