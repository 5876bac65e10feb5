"""Command line entry point: ``emvote <subcommand> [--flags]``.

Exit codes: 0 success, 1 usage error, 2 data or format error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import evaluate as ev
from . import model as mdl
from . import synth
from .errors import EmVoteError
from .ingest import DEFAULT_FS, load_dataset
from .model import TrainConfig
from .pipeline import PipelineConfig, SensorSubset, featurize, predict_recording, train_pipeline

log = logging.getLogger("emvote")

DATA_HELP = """\
Input layout (--data DIR), one set per patient <pid>:
  <pid>_chest.csv   header timestamp,x,y,z  (seconds or ISO-8601; acceleration in g)
  <pid>_thigh.csv   header timestamp,x,y,z
  <pid>_labels.csv  header minute,label     (0 = lying, 1 = lying with early mobility)
Minute 0 starts at the later of the two sensors' first timestamps.
"""

CONFIG_HELP = """\
--config FILE holds key=value lines using the long flag names without the
leading dashes (for example "window = 20" or "n-trees = 50"); '#' starts a
comment. Flags given on the command line win over the file.
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _window(text):
    v = float(text)
    if not 0 < v <= 60:
        raise argparse.ArgumentTypeError(f"window must lie in (0, 60] s, got {v:g}")
    return v


def _fraction(text):
    v = float(text)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {v:g}")
    return v


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _add_common(p, data=True):
    p.add_argument("--config", type=Path, help="key=value file of flag defaults (flags win)")
    if data:
        p.add_argument("--data", type=Path, required=True, help="directory of patient CSV files")
        p.add_argument("--fs", type=float, default=DEFAULT_FS, help="sampling rate in Hz (default 30)")
        p.add_argument("--gap-policy", choices=("error", "mark"), default="error",
                       help="gaps > 1 s: fail (error) or drop the affected minutes (mark)")


def _add_pipeline(p, training=True):
    p.add_argument("--window", type=_window, default=10.0, help="segment length in seconds (default 10)")
    p.add_argument("--sensors", choices=[s.value for s in SensorSubset], default="both",
                   help="sensor subset (default both)")
    p.add_argument("--feature-set", choices=("invariant", "per_axis"), default="invariant",
                   help="64 rotation-invariant features or the 48 per-axis comparator")
    if training:
        p.add_argument("--n-trees", type=_positive_int, default=100, help="bagged trees (default 100)")
        p.add_argument("--max-depth", type=_positive_int, default=None, help="tree depth limit (default none)")
        p.add_argument("--min-samples-leaf", type=_positive_int, default=2, help="default 2")
        p.add_argument("--bootstrap", type=_bool, default=True,
                       help="draw a bootstrap sample per tree (default true)")
        p.add_argument("--seed", type=int, default=0, help="bagging seed (default 0)")
        p.add_argument("--jobs", type=_positive_int, default=1,
                       help="worker processes; output is identical for any value (default 1)")


def build_parser():
    parser = _Parser(prog="emvote", description="Early-mobility detection from two accelerometers.",
                     epilog=DATA_HELP + "\n" + CONFIG_HELP,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fmt = dict(formatter_class=argparse.RawDescriptionHelpFormatter)

    p = sub.add_parser("synth", help="write a seeded synthetic dataset",
                       description="Write <pid>_chest.csv, <pid>_thigh.csv and <pid>_labels.csv per "
                                   "patient plus truth/<pid>_truth.csv "
                                   "(minute,label,splice_start_s,splice_end_s).",
                       epilog=CONFIG_HELP, **fmt)
    _add_common(p, data=False)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--patients", type=_positive_int, default=8, help="default 8")
    p.add_argument("--minutes", type=_positive_int, default=70, help="minutes per patient (default 70)")
    p.add_argument("--seed", type=int, default=0, help="default 0")
    p.add_argument("--mix-rate", type=_fraction, default=0.0,
                   help="probability a minute carries a 10-30 s splice of the other class (default 0)")
    p.add_argument("--balance", type=_fraction, default=0.5, help="probability a minute is EM (default 0.5)")
    p.add_argument("--noise", type=float, default=0.02, help="white noise std in g (default 0.02)")
    p.add_argument("--fs", type=float, default=DEFAULT_FS, help="sampling rate in Hz (default 30)")

    p = sub.add_parser("features", help="write the segment feature table",
                       description="Output CSV: patient_id,minute,offset_s,label followed by one "
                                   "column per feature.", epilog=DATA_HELP + "\n" + CONFIG_HELP, **fmt)
    _add_common(p)
    _add_pipeline(p, training=False)
    p.add_argument("--out", type=Path, required=True, help="output CSV")

    p = sub.add_parser("train", help="train a bagged-tree model on every patient",
                       description="Output: JSON model with seed, config, feature order digest and trees.",
                       epilog=DATA_HELP + "\n" + CONFIG_HELP, **fmt)
    _add_common(p)
    _add_pipeline(p)
    p.add_argument("--model", type=Path, required=True, help="output model JSON")

    p = sub.add_parser("predict", help="per-minute predictions by segment voting",
                       description="Window, sensors and feature set come from the model. Output CSV: "
                                   "patient_id,minute,predicted,votes_0,votes_1,mean_score.",
                       epilog=DATA_HELP + "\n" + CONFIG_HELP, **fmt)
    _add_common(p)
    p.add_argument("--model", type=Path, required=True, help="model JSON from 'train'")
    p.add_argument("--out", type=Path, required=True, help="output CSV")

    p = sub.add_parser("evaluate", help="leave-one-patient-out evaluation",
                       description="Output CSV: config,patient_id,accuracy with __mean__ and "
                                   "__instability__ (population std) summary rows.",
                       epilog=DATA_HELP + "\n" + CONFIG_HELP, **fmt)
    _add_common(p)
    _add_pipeline(p)
    p.add_argument("--out", type=Path, required=True, help="report CSV")

    p = sub.add_parser("ablate", help="window, sensor, patient-count or feature-set sweeps",
                       description="Output CSV: config,patient_id,accuracy per configuration plus "
                                   "__mean__/__instability__ rows; a summary table goes to stdout.",
                       epilog=DATA_HELP + "\n" + CONFIG_HELP, **fmt)
    _add_common(p)
    _add_pipeline(p)
    p.add_argument("--kind", choices=("windows", "sensors", "patients", "features"), required=True)
    p.add_argument("--out", type=Path, required=True, help="ablation CSV")
    return parser, sub.choices


def _read_config(path):
    values = {}
    with open(path) as fh:
        for n, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.lstrip("-").replace("-", "_")] = value
    return values


def parse_args(argv):
    parser, subparsers = build_parser()
    # find --config and the subcommand first, so the file can also supply required flags
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, rest = pre.parse_known_args(argv)
    command = next((a for a in rest if not a.startswith("-")), None)
    if known.config is not None and command in subparsers:
        try:
            values = _read_config(known.config)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        sp = subparsers[command]
        actions = {a.dest: a for a in sp._actions}
        for key in values:
            if key not in actions or key in ("help", "config"):
                raise UsageError(f"{known.config}: unknown key {key!r} for '{command}'")
            actions[key].required = False
        # string defaults go through each action's type conversion, so the file is validated too
        sp.set_defaults(**values)
    return parser.parse_args(argv)


def _pipeline_config(args):
    train = TrainConfig(n_trees=args.n_trees, max_depth=args.max_depth,
                        min_samples_leaf=args.min_samples_leaf, bootstrap=args.bootstrap)
    return PipelineConfig(window_s=args.window, sensor_subset=args.sensors,
                          feature_set=args.feature_set, train=train, seed=args.seed)


def _load(args):
    return load_dataset(args.data, args.fs, args.gap_policy)


def _parent(path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)


def cmd_synth(args):
    cfg = synth.SynthConfig(n_patients=args.patients, minutes_per_patient=args.minutes, fs=args.fs,
                            class_balance=args.balance, label_mix_rate=args.mix_rate,
                            noise_std=args.noise, seed=args.seed)
    paths = synth.write_dataset(synth.generate_dataset(cfg), args.out)
    log.info("wrote %d files to %s", len(paths), args.out)


def cmd_features(args):
    cfg = PipelineConfig(window_s=args.window, sensor_subset=args.sensors, feature_set=args.feature_set)
    _parent(args.out)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["patient_id", "minute", "offset_s", "label"] + list(cfg.feature_names))
        for rec in _load(args):
            t = featurize(rec, cfg)
            for i in range(len(t.y)):
                w.writerow([t.patient_id, int(t.minute[i]), repr(float(t.offset_s[i])), int(t.y[i])]
                           + [repr(float(v)) for v in t.X[i]])


def cmd_train(args):
    cfg = _pipeline_config(args)
    model = train_pipeline(_load(args), cfg, jobs=args.jobs)
    _parent(args.model)
    mdl.save(model, args.model)
    log.info("saved %d trees to %s", len(model.trees), args.model)


def cmd_predict(args):
    model = mdl.load(args.model)
    p = model.pipeline or {}
    cfg = PipelineConfig(window_s=p.get("window_s", 10.0), sensor_subset=p.get("sensor_subset", "both"),
                         feature_set=p.get("feature_set", "invariant"))
    data = _load(args)
    _parent(args.out)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["patient_id", "minute", "predicted", "votes_0", "votes_1", "mean_score"])
        for rec in data:
            for m in predict_recording(model, rec, cfg):
                w.writerow([m.patient_id, m.minute_index, m.predicted, *m.segment_votes,
                            repr(m.mean_score)])


def cmd_evaluate(args):
    cfg = _pipeline_config(args)
    report = ev.evaluate(_load(args), cfg, jobs=args.jobs)
    _parent(args.out)
    with open(args.out, "w", newline="") as fh:
        ev.write_report_csv([report], fh)
    print(f"folds={report.fold_count} accuracy={report.mean_accuracy:.4f} "
          f"instability={report.instability:.4f}")


def cmd_ablate(args):
    cfg = _pipeline_config(args)
    data = _load(args)
    run = {"windows": ev.ablate_windows, "sensors": ev.ablate_sensors,
           "patients": ev.ablate_patient_count, "features": ev.compare_feature_sets}[args.kind]
    rows = run(data, cfg, jobs=args.jobs)
    _parent(args.out)
    with open(args.out, "w", newline="") as fh:
        ev.write_ablation_csv(rows, fh)
    print(ev.format_table(rows))


COMMANDS = {"synth": cmd_synth, "features": cmd_features, "train": cmd_train,
            "predict": cmd_predict, "evaluate": cmd_evaluate, "ablate": cmd_ablate}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (EmVoteError, OSError) as exc:
        print(f"emvote {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
