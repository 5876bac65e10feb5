"""Leave-one-patient-out evaluation and the ablation sweeps."""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError
from .pipeline import PipelineConfig, SensorSubset, featurize, predict_table, train_on_tables
from .windowing import ABLATION_WINDOWS

MAX_EXHAUSTIVE_SUBSETS = 56
RANDOM_SUBSETS = 30


@dataclass
class EvalReport:
    per_patient_accuracy: dict           # patient_id -> accuracy
    config: dict = field(default_factory=dict)
    predictions: list = field(default_factory=list)

    @property
    def fold_count(self):
        return len(self.per_patient_accuracy)

    @property
    def mean_accuracy(self):
        return float(np.mean(list(self.per_patient_accuracy.values())))

    @property
    def instability(self):
        """Population standard deviation of the per-patient accuracies."""
        return float(np.std(list(self.per_patient_accuracy.values())))


@dataclass
class AblationRow:
    label: str
    mean_accuracy: float
    instability: float
    reports: list


def lopo_folds(patients) -> list:
    """``[(train_ids, test_id)]``, one fold per patient in sorted id order."""
    ids = sorted(set(patients))
    if len(ids) < 2:
        raise DataError("leave-one-patient-out needs at least two patients")
    folds = []
    for test in ids:
        train = [p for p in ids if p != test]
        if test in train:
            raise AssertionError(f"patient {test} leaked into its own training fold")
        folds.append((train, test))
    return folds


def _tables(data, cfg):
    tables = {}
    for rec in data:
        if rec.patient_id in tables:
            raise DataError(f"duplicate patient id {rec.patient_id!r}")
        if not rec.minutes:
            raise DataError(f"patient {rec.patient_id} has no labelled minutes")
        tables[rec.patient_id] = featurize(rec, cfg)
    return tables


def _run_fold(tables, cfg, train_ids, test_id):
    assert test_id not in set(train_ids), "train/test patient overlap"
    model = train_on_tables([tables[p] for p in train_ids], cfg)
    preds = predict_table(model, tables[test_id], cfg)
    truth = dict(tables[test_id].minutes)
    correct = sum(int(p.predicted == int(truth[p.minute_index])) for p in preds)
    return correct / len(preds), preds


def evaluate_tables(tables, cfg: PipelineConfig, patients=None, jobs: int = 1) -> EvalReport:
    ids = sorted(tables) if patients is None else sorted(patients)
    folds = lopo_folds(ids)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        sub = {p: tables[p] for p in ids}
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_fold, [sub] * len(folds), [cfg] * len(folds),
                                    [tr for tr, _ in folds], [te for _, te in folds]))
    else:
        results = [_run_fold(tables, cfg, tr, te) for tr, te in folds]
    acc, preds = {}, []
    for (_, test_id), (a, p) in zip(folds, results):
        acc[test_id] = a
        preds.extend(p)
    return EvalReport(acc, cfg.describe(), preds)


def evaluate(data, cfg: PipelineConfig = PipelineConfig(), jobs: int = 1) -> EvalReport:
    """LOPO accuracy per patient; the report's mean weights every patient equally.

    ``jobs > 1`` runs folds in worker processes; results are identical.
    """
    return evaluate_tables(_tables(data, cfg), cfg, jobs=jobs)


def _row(label, reports):
    return AblationRow(label, float(np.mean([r.mean_accuracy for r in reports])),
                       float(np.mean([r.instability for r in reports])), reports)


def ablate_windows(data, cfg: PipelineConfig = PipelineConfig(), windows=ABLATION_WINDOWS,
                   jobs: int = 1) -> list:
    rows = []
    for w in windows:
        c = replace(cfg, window_s=float(w))
        rows.append(_row(f"window={w:g}", [evaluate(data, c, jobs)]))
    return rows


def ablate_sensors(data, cfg: PipelineConfig = PipelineConfig(), subsets=tuple(SensorSubset),
                   jobs: int = 1) -> list:
    rows = []
    for s in subsets:
        c = replace(cfg, sensor_subset=SensorSubset(s))
        rows.append(_row(f"sensors={SensorSubset(s).value}", [evaluate(data, c, jobs)]))
    return rows


def patient_subsets(ids, k, seed=0):
    """Every size-``k`` subset when there are at most 56, else 30 seeded random ones."""
    ids = sorted(ids)
    if math.comb(len(ids), k) <= MAX_EXHAUSTIVE_SUBSETS:
        return [list(c) for c in itertools.combinations(ids, k)]
    rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
    return [sorted(rng.choice(ids, size=k, replace=False).tolist()) for _ in range(RANDOM_SUBSETS)]


def ablate_patient_count(data, cfg: PipelineConfig = PipelineConfig(), ks=None,
                         jobs: int = 1) -> list:
    tables = _tables(data, cfg)
    ids = sorted(tables)
    if ks is None:
        ks = range(min(5, len(ids)), len(ids) + 1)
    rows = []
    for k in ks:
        reports = [evaluate_tables(tables, cfg, sub, jobs) for sub in patient_subsets(ids, k, cfg.seed)]
        rows.append(_row(f"patients={k}", reports))
    return rows


def compare_feature_sets(data, cfg: PipelineConfig = PipelineConfig(), jobs: int = 1) -> list:
    """Invariant magnitude features against the per-axis comparator (48 attributes with both sensors)."""
    rows = []
    for fs_name in ("invariant", "per_axis"):
        c = replace(cfg, feature_set=fs_name)
        rows.append(_row(f"features={fs_name}", [evaluate(data, c, jobs)]))
    return rows


def _config_tag(config):
    return ";".join(f"{k}={v}" for k, v in sorted(config.items()))


def write_report_csv(reports, stream, tags=None) -> None:
    """Long format ``config,patient_id,accuracy`` with ``__mean__``/``__instability__`` summary rows."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["config", "patient_id", "accuracy"])
    for i, r in enumerate(reports):
        tag = tags[i] if tags else _config_tag(r.config)
        for pid, a in sorted(r.per_patient_accuracy.items()):
            w.writerow([tag, pid, repr(float(a))])
        w.writerow([tag, "__mean__", repr(r.mean_accuracy)])
        w.writerow([tag, "__instability__", repr(r.instability)])


def write_ablation_csv(rows, stream) -> None:
    """One summary row per configuration followed by the per-patient long format."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["config", "patient_id", "accuracy"])
    for row in rows:
        for j, r in enumerate(row.reports):
            tag = row.label if len(row.reports) == 1 else f"{row.label};subset={j}"
            for pid, a in sorted(r.per_patient_accuracy.items()):
                w.writerow([tag, pid, repr(float(a))])
        w.writerow([row.label, "__mean__", repr(row.mean_accuracy)])
        w.writerow([row.label, "__instability__", repr(row.instability)])


def format_table(rows) -> str:
    width = max([len("config")] + [len(r.label) for r in rows])
    lines = [f"{'config':<{width}}  accuracy  instability  folds"]
    for r in rows:
        folds = sum(rep.fold_count for rep in r.reports)
        lines.append(f"{r.label:<{width}}  {r.mean_accuracy:8.4f}  {r.instability:11.4f}  {folds:5d}")
    return "\n".join(lines)
