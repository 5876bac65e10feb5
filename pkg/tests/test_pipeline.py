import numpy as np
import pytest

from emvote import model as M
from emvote.errors import CompatibilityError, DataError
from emvote.ingest import Label, LabeledRecording
from emvote.pipeline import (PipelineConfig, SensorSubset, featurize, predict_minute,
                             predict_recording, train_pipeline, vote)
from emvote.synth import SynthConfig, generate_dataset
from emvote.windowing import split_epochs

SMALL = M.TrainConfig(n_trees=3)


@pytest.fixture(scope="module")
def recs():
    return [p.labeled() for p in generate_dataset(SynthConfig(n_patients=3, minutes_per_patient=6, seed=5))]


@pytest.mark.parametrize("subset, feature_set, width", [
    (SensorSubset.BOTH, "invariant", 64),
    (SensorSubset.CHEST_ONLY, "invariant", 32),
    (SensorSubset.THIGH_ONLY, "invariant", 32),
    (SensorSubset.BOTH, "per_axis", 48),
])
def test_feature_width(recs, subset, feature_set, width):
    t = featurize(recs[0], PipelineConfig(sensor_subset=subset, feature_set=feature_set))
    assert t.X.shape == (11 * 6, width)
    assert np.all(np.isfinite(t.X))


def test_segment_rows_inherit_minute_labels(recs):
    t = featurize(recs[0], PipelineConfig(window_s=10))
    labels = dict(recs[0].minutes)
    assert len(t.y) == 11 * len(labels)
    assert all(t.y[i] == int(labels[t.minute[i]]) for i in range(len(t.y)))
    assert np.array_equal(np.unique(t.offset_s), np.arange(0, 55, 5.0))


def test_chest_only_equals_slice_of_both(recs):
    both = featurize(recs[0], PipelineConfig()).X
    chest = featurize(recs[0], PipelineConfig(sensor_subset="chest")).X
    thigh = featurize(recs[0], PipelineConfig(sensor_subset="thigh")).X
    assert np.allclose(both, np.hstack([chest, thigh]), rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("classes, scores, expected", [
    ([1, 1, 0], [0.9, 0.8, 0.2], 1),
    ([0, 0, 1], [0.1, 0.4, 0.6], 0),
    ([1, 0], [0.7, 0.4], 1),         # tie broken by mean score 0.55
    ([1, 0], [0.6, 0.2], 0),         # tie, mean 0.4
    ([1, 0], [0.5, 0.5], 0),         # tie, mean exactly 0.5
])
def test_vote_examples(classes, scores, expected):
    pred, votes, _ = vote(classes, scores)
    assert pred == expected
    assert votes == (classes.count(0), classes.count(1))


def test_vote_unanimity():
    rng = np.random.default_rng(0)
    for _ in range(50):
        k = int(rng.integers(1, 30))
        c = int(rng.integers(0, 2))
        scores = rng.uniform(0.5, 1.0, k) if c else rng.uniform(0.0, 0.5, k)
        assert vote([c] * k, scores)[0] == c


def test_train_and_predict_recording(recs):
    cfg = PipelineConfig(train=SMALL, seed=2)
    m = train_pipeline(recs[:2], cfg)
    assert m.pipeline == cfg.describe()
    preds = predict_recording(m, recs[2], cfg)
    assert [p.minute_index for p in preds] == [mi for mi, _ in recs[2].minutes]
    assert all(sum(p.segment_votes) == 11 for p in preds)


def test_predict_minute_matches_recording_path(recs):
    cfg = PipelineConfig(train=SMALL, seed=2)
    m = train_pipeline(recs[:2], cfg)
    by_rec = predict_recording(m, recs[2], cfg)
    for e, p in zip(split_epochs(recs[2]), by_rec):
        q = predict_minute(m, e, cfg)
        assert (q.minute_index, q.predicted, q.segment_votes) == (p.minute_index, p.predicted, p.segment_votes)


def test_full_minute_window_is_single_segment(recs):
    cfg = PipelineConfig(window_s=60, train=SMALL)
    m = train_pipeline(recs[:2], cfg)
    preds = predict_recording(m, recs[2], cfg)
    for p in preds:
        assert sum(p.segment_votes) == 1
        assert p.predicted == int(p.mean_score > 0.5)


def test_layout_mismatch_raises(recs):
    m = train_pipeline(recs[:2], PipelineConfig(train=SMALL))
    with pytest.raises(CompatibilityError):
        predict_recording(m, recs[2], PipelineConfig(sensor_subset="chest", train=SMALL))


def test_no_minutes():
    z = np.zeros((1800, 3))
    rec = LabeledRecording("p", 30.0, z, z, 0.0, [])
    assert featurize(rec, PipelineConfig()).X.shape == (0, 64)
    with pytest.raises(DataError):
        train_pipeline([rec], PipelineConfig())


def test_training_is_deterministic(recs):
    cfg = PipelineConfig(train=SMALL, seed=4)
    assert M.dumps(train_pipeline(recs, cfg)) == M.dumps(train_pipeline(recs, cfg))
