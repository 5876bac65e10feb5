"""Segment-level training and per-minute prediction by segment voting."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from . import features as feat
from .errors import CompatibilityError, DataError
from .ingest import LabeledRecording
from .model import BaggingModel, TrainConfig, train_bagging
from .windowing import ABLATION_WINDOWS, segment_bounds

log = logging.getLogger(__name__)


class SensorSubset(str, enum.Enum):
    CHEST_ONLY = "chest"
    THIGH_ONLY = "thigh"
    BOTH = "both"

    @property
    def sensors(self):
        return feat.SENSORS if self is SensorSubset.BOTH else (self.value,)


@dataclass(frozen=True)
class PipelineConfig:
    window_s: float = 10.0
    sensor_subset: SensorSubset = SensorSubset.BOTH
    feature_set: str = "invariant"          # or "per_axis" (comparator only)
    train: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sensor_subset", SensorSubset(self.sensor_subset))
        if float(self.window_s) not in ABLATION_WINDOWS:
            log.warning("window %g s is outside the ablation set %s", self.window_s, ABLATION_WINDOWS)

    @property
    def feature_names(self):
        return feat.layout_names(self.sensor_subset.sensors, self.feature_set)

    @property
    def digest(self):
        return feat.layout_digest(self.feature_names)

    def describe(self):
        return {"window_s": self.window_s, "sensor_subset": self.sensor_subset.value,
                "feature_set": self.feature_set}


@dataclass
class SegmentTable:
    """Feature rows for every segment of one recording, with their minute keys."""
    patient_id: str
    X: np.ndarray
    y: np.ndarray            # inherited minute label per row
    minute: np.ndarray       # minute index per row
    offset_s: np.ndarray
    minutes: list            # [(minute_index, label)] in order


@dataclass
class MinutePrediction:
    patient_id: str
    minute_index: int
    predicted: int
    segment_votes: tuple     # (votes for 0, votes for 1)
    mean_score: float


def featurize(rec: LabeledRecording, cfg: PipelineConfig) -> SegmentTable:
    """Cut every labelled minute into segments and featurize them in one batch."""
    fs = rec.sampling_rate_hz
    spm = rec.samples_per_minute
    bounds = segment_bounds(cfg.window_s, fs, spm / fs)
    starts = np.array([a for _, a, _ in bounds])
    length = bounds[0][2] - bounds[0][1]
    minutes = sorted(rec.minutes)
    n_feat = len(cfg.feature_names)
    if not minutes:
        empty = np.empty(0)
        return SegmentTable(rec.patient_id, np.empty((0, n_feat)), empty.astype(np.int64),
                            empty.astype(np.int64), empty, [])
    first = np.array([m * spm for m, _ in minutes])
    idx = (first[:, None] + starts[None, :]).ravel()[:, None] + np.arange(length)[None, :]
    sensors = cfg.sensor_subset.sensors
    chest = rec.chest[idx] if "chest" in sensors else None
    thigh = rec.thigh[idx] if "thigh" in sensors else None
    if cfg.feature_set == "invariant":
        X = feat.invariant_features(chest, thigh, fs, sensors)
    else:
        X = feat.per_axis_features(chest, thigh, fs, sensors)
    k = len(bounds)
    y = np.repeat([int(lab) for _, lab in minutes], k)
    minute = np.repeat([m for m, _ in minutes], k)
    offset = np.tile([o for o, _, _ in bounds], len(minutes))
    return SegmentTable(rec.patient_id, X, y, minute, offset, minutes)


def train_on_tables(tables, cfg: PipelineConfig, jobs: int = 1) -> BaggingModel:
    tables = [t for t in tables if len(t.y)]
    if not tables:
        raise DataError("no labelled minutes to train on")
    X = np.concatenate([t.X for t in tables])
    y = np.concatenate([t.y for t in tables])
    model = train_bagging(X, y, cfg.train, cfg.seed, cfg.feature_names, jobs=jobs)
    model.pipeline = cfg.describe()
    return model


def train_pipeline(data, cfg: PipelineConfig = PipelineConfig(), jobs: int = 1) -> BaggingModel:
    """Train on all segments of all recordings; each segment carries its minute's label."""
    return train_on_tables([featurize(rec, cfg) for rec in data], cfg, jobs)


def vote(classes, scores) -> tuple:
    """Minute decision from segment classes and class-1 scores.

    Plurality of segment classes wins. On a tie the mean segment score
    decides (class 1 above 0.5, class 0 below); an exact 0.5 gives class 0.
    Returns ``(predicted, (votes_0, votes_1), mean_score)``.
    """
    classes = np.asarray(classes)
    v1 = int(np.sum(classes == 1))
    v0 = len(classes) - v1
    mean_score = float(np.mean(scores)) if len(classes) else 0.0
    if v1 != v0:
        pred = int(v1 > v0)
    else:
        pred = int(mean_score > 0.5)
    return pred, (v0, v1), mean_score


def _check(model: BaggingModel, cfg: PipelineConfig):
    if model.feature_order_digest != cfg.digest:
        raise CompatibilityError("model was trained on a different feature layout "
                                 f"than {cfg.describe()}")


def predict_table(model: BaggingModel, table: SegmentTable, cfg: PipelineConfig) -> list:
    _check(model, cfg)
    if not len(table.y):
        return []
    classes, scores = model.predict_batch(table.X)
    out = []
    for m, _ in table.minutes:
        sel = table.minute == m
        pred, votes, mean = vote(classes[sel], scores[sel])
        out.append(MinutePrediction(table.patient_id, m, pred, votes, mean))
    return out


def predict_recording(model: BaggingModel, rec: LabeledRecording, cfg: PipelineConfig) -> list:
    return predict_table(model, featurize(rec, cfg), cfg)


def predict_minute(model: BaggingModel, epoch, cfg: PipelineConfig) -> MinutePrediction:
    """Vote over the segments of a single :class:`~emvote.windowing.Epoch`."""
    rec = LabeledRecording(epoch.patient_id, epoch.fs, epoch.chest, epoch.thigh, 0.0,
                           [(0, epoch.label)])
    pred = predict_recording(model, rec, cfg)[0]
    pred.minute_index = epoch.minute_index
    return pred
