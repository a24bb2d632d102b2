import json

import numpy as np
import pytest

from segsens import cli
from segsens.bench import (CSV_COLUMNS, ConfigError, ExperimentConfig, ExperimentRecord, ExperimentResult,
                           SyntheticSpec, Task, config_from_mapping, containment_audit, emit_csv, emit_json,
                           format_audit, format_summary, format_tables, load_config, read_csv, read_json,
                           run_experiment, run_trial, summarize, synthetic_split, trial_seed, two_gaussians)
from segsens.data_io import augment_bias, save_libsvm
from segsens.losses import LossKind
from segsens.regions import HalfSpaceMode

SMALL = SyntheticSpec(n_train=240, n_test=80, dim=4, seed=3)


def small_cfg(**kw):
    base = dict(c_grid=(1.0,), p_up_grid=(0.1,), trials=2, synthetic=SMALL, timing=False)
    base.update(kw)
    return ExperimentConfig(**base)


def test_two_gaussians_deterministic():
    a, b = two_gaussians(50, 3, seed=1), two_gaussians(50, 3, seed=1)
    assert a.equals(b) and set(np.unique(a.y)) == {-1.0, 1.0}


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("# sweep\nloss = squared_hinge\nc = 0.2, 0.5, 1\npup = 0.01%, 10%\n"
                    "trials = 3\nmode = paper_closed_form\ntask = labels\nbias = false\nn_train = 100\n")
    cfg = load_config(path)
    assert cfg.loss is LossKind.SQUARED_HINGE
    assert cfg.c_grid == (0.2, 0.5, 1.0)
    assert cfg.p_up_grid == pytest.approx((1e-4, 0.1))
    assert cfg.trials == 3 and cfg.task is Task.LABELS and cfg.bias is False
    assert cfg.half_space_mode is HalfSpaceMode.PAPER_CLOSED_FORM
    assert cfg.synthetic.n_train == 100
    cfg2 = config_from_mapping({"trials": "5", "c": None}, cfg)
    assert cfg2.trials == 5 and cfg2.c_grid == cfg.c_grid


@pytest.mark.parametrize("values", [{"bogus": "1"}, {"trials": "0"}, {"c": "0"}, {"c": ""},
                                    {"loss": "hinge"}, {"bias": "maybe"}, {"train": "a.svm"}])
def test_config_errors(values):
    with pytest.raises(ConfigError):
        config_from_mapping(values)


def test_zero_modification_records():
    res = run_experiment(small_cfg(p_up_grid=(0.0,)))
    for rec in res.records:
        assert rec.containment_violations == 0
        if rec.method != "Retrain":
            assert rec.mean_tightness == 0.0 and rec.error_ratio == 0.0


def test_run_is_deterministic(tmp_path):
    a, b = run_experiment(small_cfg()), run_experiment(small_cfg())
    assert a.records == b.records
    emit_csv(a.records, tmp_path / "a.csv")
    emit_csv(b.records, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_cells_reproducible_in_isolation():
    cfg = small_cfg(c_grid=(0.5, 1.0), p_up_grid=(0.05, 0.1), trials=2)
    res = run_experiment(cfg)
    train_set, test_set = synthetic_split(SMALL)
    train_set, test_set = augment_bias(train_set), augment_bias(test_set)
    recs, _ = run_trial(cfg, train_set, test_set, 1.0, 0.05, 1, trial_seed(cfg.seed, 1, 0, 1))
    assert recs == [r for r in res.records if (r.C, r.p_up, r.trial) == (1.0, 0.05, 1)]


def test_record_shape_per_task():
    res = run_experiment(small_cfg(task="coefficients", trials=1))
    sphere = res.records[0]
    assert sphere.method == "Sphere" and sphere.mean_tightness is not None and sphere.error_ratio is None
    res = run_experiment(small_cfg(task="labels", trials=1))
    assert res.records[1].mean_tightness is None and res.records[1].error_ratio is not None
    retrain = res.records[2]
    assert retrain.method == "Retrain" and retrain.mean_tightness is None and retrain.error_ratio is None


def test_gaussian_dominance_and_soundness():
    cfg = ExperimentConfig(c_grid=(1.0,), p_up_grid=(0.1,), trials=5, loss="logistic",
                           synthetic=SyntheticSpec(n_train=480, n_test=200, dim=10, seed=11))
    res = run_experiment(cfg)
    for t in range(cfg.trials):
        sph, seg, _ = [r for r in res.records if r.trial == t]
        assert seg.mean_tightness <= sph.mean_tightness + 1e-12
        assert seg.error_ratio <= sph.error_ratio
        assert sph.containment_violations == seg.containment_violations == 0
        assert sph.time_ms >= 0 and seg.time_ms >= 0


@pytest.mark.xfail(strict=True, reason="exact-mode plane through the cut point gives psi < 0; "
                                       "coordinate bounds coincide with the sphere's")
def test_gaussian_segment_strictly_tighter():
    cfg = ExperimentConfig(c_grid=(1.0,), p_up_grid=(0.1,), trials=5, loss="logistic",
                           synthetic=SyntheticSpec(n_train=480, n_test=200, dim=10, seed=11))
    res = run_experiment(cfg)
    for t in range(cfg.trials):
        sph, seg, _ = [r for r in res.records if r.trial == t]
        assert seg.mean_tightness < sph.mean_tightness


def _rec(trial=0, method="Sphere", tight=1e-3, err=0.25, t=1.5, v=0):
    return ExperimentRecord("logistic", 1.0, 0.1, trial, method, tight, err, t, v)


def test_csv_outputs(tmp_path):
    path = tmp_path / "r.csv"
    emit_csv([], path)
    assert path.read_text() == ",".join(CSV_COLUMNS) + "\n"
    emit_csv([_rec()], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2 and lines[1] == "logistic,1,0.1,0,Sphere,0.001,0.25,1.5,0"
    recs = [_rec(), _rec(1, "Retrain", None, None, 12.5, 0), _rec(2, tight=1 / 3)]
    emit_csv(recs, path)
    back = read_csv(path)
    assert back[:2] == recs[:2] and back[2].mean_tightness == float(f"{1 / 3:.9g}")


def test_json_roundtrip(tmp_path):
    recs = [_rec(), _rec(1, "Segment", 2e-3, None, 0.0, 1)]
    emit_json(recs, tmp_path / "r.json")
    assert read_json(tmp_path / "r.json") == recs
    assert list(json.loads((tmp_path / "r.json").read_text())[0]) == list(CSV_COLUMNS)


def test_summarize():
    (row,) = summarize([_rec()])
    assert (row.mean_tightness, row.error_ratio, row.time_ms, row.trials) == (1e-3, 0.25, 1.5, 1)
    (row,) = summarize([_rec(0, tight=1e-3), _rec(1, tight=3e-3)])
    assert row.mean_tightness == pytest.approx(2e-3)
    with pytest.raises(ValueError):
        summarize([])
    rows = summarize([_rec(0, "Retrain", None, None), _rec(0, "Segment"), _rec(0, "Sphere")])
    assert [r.method for r in rows] == ["Sphere", "Segment", "Retrain"]
    text = format_summary(rows)
    assert "Segment" in text and len(text.splitlines()) == 5
    assert "Tightness" in format_tables(rows)


def test_audit_report():
    res = run_experiment(small_cfg(half_space_mode="paper_closed_form", p_up_grid=(0.02, 0.1)))
    audit = containment_audit(res)
    assert set(audit) == {(1.0, 0.02), (1.0, 0.1)}
    assert all(0.0 <= v <= 1.0 for v in audit.values())
    assert "containment_rate" in format_audit(audit)


def test_real_file_path(tmp_path):
    train_set, test_set = synthetic_split(SMALL)
    save_libsvm(train_set, tmp_path / "train.svm")
    save_libsvm(test_set.subset(range(10)), tmp_path / "test.svm")
    cfg = small_cfg(train_path=str(tmp_path / "train.svm"), test_path=str(tmp_path / "test.svm"), trials=1)
    res = run_experiment(cfg)
    assert len(res.records) == 3 and res.records[0].containment_violations == 0


def test_cli_success(tmp_path, capsys):
    out = tmp_path / "o.csv"
    code = cli.main(["--c", "1", "--pup", "5%", "--trials", "1", "--no-timing", "--out", str(out),
                     "--tables"])
    assert code == 0
    assert len(read_csv(out)) == 3
    assert "Tightness" in capsys.readouterr().out


def test_cli_json_and_paper_audit(tmp_path, capsys):
    out = tmp_path / "o.json"
    code = cli.main(["--c", "1", "--pup", "0.05", "--trials", "1", "--mode", "paper_closed_form",
                     "--format", "json", "--out", str(out)])
    assert code == 0 and len(read_json(out)) == 3
    assert "containment_rate" in capsys.readouterr().out


def test_cli_config_error(tmp_path, capsys):
    assert cli.main(["--trials", "zero"]) == 1
    assert cli.main(["--config", str(tmp_path / "missing.cfg")]) == 1
    bad = tmp_path / "bad.svm"
    bad.write_text("1 2:1 1:1\n")
    assert cli.main(["--train", str(bad), "--test", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_violation_exit_code(monkeypatch):
    fake = ExperimentResult([_rec(v=3)], [])
    monkeypatch.setattr(cli, "run_experiment", lambda cfg: fake)
    assert cli.main(["-q"]) == 2
    assert cli.main(["-q", "--mode", "paper_closed_form"]) == 0
