import csv
import filecmp

import pytest

from emvote.cli import main
from emvote.features import FEATURE_NAMES


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert main(["synth", "--patients", "3", "--minutes", "4", "--seed", "7", "--out", str(out)]) == 0
    return out


def test_synth_file_count(tmp_path):
    out = tmp_path / "d"
    assert main(["synth", "--patients", "8", "--minutes", "2", "--seed", "7", "--out", str(out)]) == 0
    assert len(list(out.glob("*.csv"))) == 8 * 3
    assert len(list((out / "truth").glob("*.csv"))) == 8


def test_synth_reproducible(tmp_path):
    for name in ("a", "b"):
        assert main(["synth", "--patients", "2", "--minutes", "2", "--mix-rate", "0.5",
                     "--out", str(tmp_path / name)]) == 0
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only


def test_features(data, tmp_path):
    out = tmp_path / "f.csv"
    assert main(["features", "--data", str(data), "--out", str(out)]) == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["patient_id", "minute", "offset_s", "label"] + list(FEATURE_NAMES)
    assert len(rows) == 1 + 3 * 4 * 11


def test_train_predict(data, tmp_path):
    model = tmp_path / "m.json"
    out = tmp_path / "p.csv"
    assert main(["train", "--data", str(data), "--n-trees", "3", "--window", "20",
                 "--model", str(model)]) == 0
    assert main(["predict", "--data", str(data), "--model", str(model), "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 12
    assert all(int(r["votes_0"]) + int(r["votes_1"]) == 5 for r in rows)


def test_train_jobs_identical(data, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["train", "--data", str(data), "--n-trees", "3", "--model", str(a)]) == 0
    assert main(["train", "--data", str(data), "--n-trees", "3", "--jobs", "2", "--model", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_evaluate_and_jobs(data, tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["evaluate", "--data", str(data), "--window", "10", "--n-trees", "2"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--jobs", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = list(csv.reader(open(a)))
    assert [r[1] for r in rows[1:]] == ["p01", "p02", "p03", "__mean__", "__instability__"]
    assert "folds=3" in capsys.readouterr().out


def test_ablate(data, tmp_path, capsys):
    out = tmp_path / "a.csv"
    assert main(["ablate", "--data", str(data), "--kind", "sensors", "--n-trees", "2",
                 "--out", str(out)]) == 0
    assert "sensors=chest" in capsys.readouterr().out
    assert "sensors=thigh" in out.read_text()


def test_config_file_and_precedence(data, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# window from file\nwindow = 60\nn-trees = 2\nout = %s\n" % (tmp_path / "r.csv"))
    assert main(["evaluate", "--data", str(data), "--config", str(cfg)]) == 0
    assert "window_s=60.0" in (tmp_path / "r.csv").read_text()
    assert main(["evaluate", "--data", str(data), "--config", str(cfg), "--window", "30"]) == 0
    assert "window_s=30.0" in (tmp_path / "r.csv").read_text()


def test_config_errors(data, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert main(["evaluate", "--data", str(data), "--config", str(bad), "--out", "x"]) == 1
    bad.write_text("window = 99\n")
    assert main(["evaluate", "--data", str(data), "--config", str(bad), "--out", "x"]) == 1


@pytest.mark.parametrize("argv", [
    ["train", "--data", "d", "--model", "m", "--bogus"],
    ["evaluate", "--data", "d"],
    ["train", "--data", "d", "--model", "m", "--window", "0"],
    ["synth", "--out", "o", "--patients", "0"],
    ["frobnicate"],
    [],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_data_errors(tmp_path, data):
    assert main(["train", "--data", str(tmp_path / "missing"), "--model", str(tmp_path / "m")]) == 2
    assert main(["predict", "--data", str(data), "--model", str(tmp_path / "none.json"),
                 "--out", str(tmp_path / "p.csv")]) == 2
    broken = tmp_path / "broken"
    broken.mkdir()
    (broken / "p1_labels.csv").write_text("minute,label\n0,1\n")
    (broken / "p1_chest.csv").write_text("timestamp,x,y,z\n0,1,2\n")
    (broken / "p1_thigh.csv").write_text("timestamp,x,y,z\n0,1,2,3\n")
    assert main(["features", "--data", str(broken), "--out", str(tmp_path / "f.csv")]) == 2


@pytest.mark.parametrize("cmd", ["synth", "features", "train", "predict", "evaluate", "ablate"])
def test_help(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert "--config" in text and "--out" in text or "--model" in text
