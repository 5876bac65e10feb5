import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emvote import features as F
from emvote.errors import LengthError
from emvote.synth import random_rotation
from emvote.windowing import Segment


def brute_entropy(values, bins=16):
    lo, hi = min(values), max(values)
    if hi == lo:
        return 0.0
    width = (hi - lo) / bins
    counts = [0] * bins
    for v in values:
        k = bins - 1
        for b in range(bins):
            if v < lo + (b + 1) * width and b < bins - 1:
                k = b
                break
        counts[k] += 1
    n = len(values)
    return -sum(c / n * math.log2(c / n) for c in counts if c)


def make_segment(chest, thigh, fs=30.0):
    return Segment(("p", 0), 0.0, chest, thigh, 0, fs)


def test_metric_examples():
    m = F.metrics([1, 2, 3, 4])
    assert (m.mean, m.max, m.min, m.median) == (2.5, 4.0, 1.0, 2.5)
    assert m.std == pytest.approx(1.118033988749895, abs=1e-12)
    assert m.rms == pytest.approx(math.sqrt(7.5), abs=1e-12)
    assert m.iqr == pytest.approx(1.5, abs=1e-12)    # 3.25 - 1.75


def test_constant_series_degenerate():
    m = F.metrics([0.7, 0.7, 0.7])
    assert m.std == 0 and m.iqr == 0 and m.entropy == 0


def test_uniform_fill_entropy_is_four_bits():
    # 100 samples in each of the 16 bins
    values = np.repeat((np.arange(16) + 0.5) / 16, 100)
    values[0], values[-1] = 0.0, 1.0
    assert brute_entropy(list(values)) == pytest.approx(4.0, abs=1e-12)
    assert F.metrics(values).entropy == pytest.approx(4.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=80))
def test_entropy_matches_brute_force(values):
    assert F.metrics(values).entropy == pytest.approx(brute_entropy(values), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=60))
def test_metric_invariants(values):
    m = F.metrics(values)
    assert m.min <= m.median <= m.max
    assert m.std >= 0 and m.rms >= 0 and m.iqr >= 0
    assert 0 <= m.entropy <= 4 + 1e-12


def test_empty_series():
    with pytest.raises(LengthError):
        F.metrics([])


def test_scale_equivariance():
    rng = np.random.default_rng(2)
    s = np.abs(rng.normal(size=500))
    a, b = F.metrics(s), F.metrics(3.5 * s)
    for name in ("mean", "max", "min", "std", "median", "rms", "iqr"):
        assert getattr(b, name) == pytest.approx(3.5 * getattr(a, name), rel=1e-12)
    assert b.entropy == pytest.approx(a.entropy, abs=1e-12)


def test_layout():
    assert len(F.FEATURE_NAMES) == 64
    assert len(set(F.FEATURE_NAMES)) == 64
    assert F.FEATURE_NAMES[:9] == ("chest_mag_mean", "chest_mag_max", "chest_mag_min", "chest_mag_std",
                                   "chest_mag_median", "chest_mag_entropy", "chest_mag_rms",
                                   "chest_mag_iqr", "chest_low_mean")
    assert F.FEATURE_NAMES[-1] == "thigh_dhigh_iqr"
    assert len(F.layout_names(("chest",))) == 32
    assert len(F.PER_AXIS_NAMES) == 48


def test_zero_segment_is_all_zero():
    z = np.zeros((300, 3))
    v = F.segment_features(make_segment(z, z))
    assert v.shape == (64,)
    assert not v.any()


def test_segment_features_follow_documented_order():
    rng = np.random.default_rng(5)
    chest = rng.normal(size=(300, 3))
    thigh = rng.normal(size=(300, 3))
    v = F.segment_features(make_segment(chest, thigh))
    from emvote import dsp
    b = dsp.band_split(thigh, 30.0)
    d = dsp.derivative(b.high, 30.0)
    ref = F.metrics(dsp.magnitude_series(d))
    start = F.FEATURE_NAMES.index("thigh_dhigh_mean")
    assert np.allclose(v[start:start + 8], ref, rtol=0, atol=0)
    mag = F.metrics(dsp.magnitude_series(chest))
    assert np.array_equal(v[:8], np.array(mag))


def test_rotated_segment_features_match():
    rng = np.random.default_rng(9)
    chest = rng.normal(size=(300, 3)) * 0.3 + [0, 0, 1]
    thigh = rng.normal(size=(300, 3)) * 0.3 + [0, 1, 0]
    v = F.segment_features(make_segment(chest, thigh))
    for _ in range(10):
        r1, r2 = random_rotation(rng), random_rotation(rng)
        w = F.segment_features(make_segment(chest @ r1.T, thigh @ r2.T))
        assert np.all(np.abs(w - v) <= 1e-6 * np.abs(v) + 1e-12)


def test_batch_equals_single():
    rng = np.random.default_rng(4)
    segs = [make_segment(rng.normal(size=(120, 3)), rng.normal(size=(120, 3))) for _ in range(7)]
    batch = F.features_for(segs)
    for s, row in zip(segs, batch):
        assert np.array_equal(F.segment_features(s), row)


def test_csv_round_trip_preserves_order_and_values():
    rng = np.random.default_rng(1)
    v = F.segment_features(make_segment(rng.normal(size=(60, 3)), rng.normal(size=(60, 3))))
    buf = io.StringIO()
    buf.write(",".join(F.FEATURE_NAMES) + "\n" + ",".join(repr(float(x)) for x in v) + "\n")
    buf.seek(0)
    header, row = buf.read().splitlines()
    assert tuple(header.split(",")) == F.FEATURE_NAMES
    assert np.array_equal(np.array([float(x) for x in row.split(",")]), v)


def test_per_axis_layout_width():
    rng = np.random.default_rng(0)
    segs = [make_segment(rng.normal(size=(60, 3)), rng.normal(size=(60, 3)))]
    assert F.features_for(segs, "per_axis").shape == (1, 48)
    assert F.features_for(segs, "invariant", ("thigh",)).shape == (1, 32)
