import json

import numpy as np
import pytest

from mmgeo.errors import ConfigError
from mmgeo.lab.cli import EXIT_CONFIG, EXIT_OK, EXIT_VERDICT, cli_main
from mmgeo.lab.config import ExperimentConfig, suite_configs
from mmgeo.lab.experiments import annotate, envelope_trend, run_experiment
from mmgeo.models import two_point
from mmgeo.pyramids import PyramidApprox


# ------------------------------------------------------------------ config

def test_config_defaults_and_radius():
    cfg = ExperimentConfig("sphere-convergence", model={"kind": "projective", "field": "C"})
    assert cfg.tolerances["observable_final"] == 0.06
    assert cfg.radius(8) == pytest.approx(4.0)
    assert ExperimentConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


@pytest.mark.parametrize(
    "data",
    [
        {"experiment": "nope"},
        {"experiment": "sphere-convergence", "indices": [10, 5]},
        {"experiment": "sphere-convergence", "model": {"kind": "torus"}},
        {"experiment": "sphere-convergence", "model": {"kind": "projective", "field": "O"}},
        {"experiment": "sphere-convergence", "radius_rule": {"scale": 0}},
        {"experiment": "counterexample", "case": "missing"},
        {"experiment": "condition-matrix"},
        {"experiment": "condition-matrix", "families": [{"name": "fn9"}]},
        {"experiment": "counterexample", "case": "three_families", "expect": {"x": "yes"}},
        {"experiment": "counterexample", "case": "three_families", "typo": 1},
        {"case": "three_families"},
    ],
)
def test_config_errors(data):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(data)


def test_suite_has_every_experiment_kind():
    kinds = {c.experiment for c in suite_configs()}
    assert kinds == {"sphere-convergence", "counterexample", "condition-matrix"}


def test_envelope_trend():
    t = envelope_trend([0.3, 0.35, 0.2])
    assert t["decreasing"] and not t["strict_every_step"]
    assert not envelope_trend([0.3, 0.4, 0.3])["decreasing"]


def test_annotation_table():
    holds = {"a": True, "b": True, "c": True, "d": False, "i": False, "ii": True, "iii": True}
    notes = {n["setting"]: n for n in annotate(holds)}
    assert len(notes) == 8
    assert notes["box, forward"]["satisfied"]
    assert not notes["box, inverse"]["satisfied"]  # needs (d)
    pyr = notes["pyramids, forward (every member nondecreasing)"]
    assert not pyr["applies"] and not pyr["satisfied"]


# ------------------------------------------------------------------ experiments

def test_counterexample_cases():
    rep = run_experiment(ExperimentConfig("counterexample", case="three_families"), seed=0)
    assert all(v["holds"] for v in rep.verdicts.values()), rep.verdicts
    rep = run_experiment(ExperimentConfig("counterexample", case="escaping_pair", indices=[1, 2, 4, 8, 16]), seed=0)
    assert all(v["holds"] for v in rep.verdicts.values()), rep.verdicts


def test_limsup_case():
    rep = run_experiment(ExperimentConfig("counterexample", case="sup_overshoot"), seed=0)
    v = rep.verdicts
    assert v["obstruction"]["holds"] and not v["c"]["holds"]
    assert rep.metrics["probe"]["s"] > rep.metrics["probe"]["limit_sup"]


def test_condition_matrix():
    cfg = ExperimentConfig("condition-matrix", families=[{"name": "identity"}, {"name": "notch"}])
    rep = run_experiment(cfg, seed=0)
    assert rep.verdicts["identity:inverse_characterized"]["holds"]
    assert not rep.verdicts["notch:inverse_characterized"]["holds"]


def test_small_sphere_run_is_deterministic():
    cfg = ExperimentConfig("sphere-convergence", indices=[2, 5], samples=60, identity_samples=30, trials=2,
                           projections=[1])
    a = run_experiment(cfg, seed=3).to_dict()
    b = run_experiment(cfg, seed=3, workers=2).to_dict()
    a.pop("runtime_s"), b.pop("runtime_s")
    assert a == b
    assert a["verdicts"]["identity"]["holds"]


# ------------------------------------------------------------------ command line

@pytest.fixture
def files(tmp_path):
    X = {"labels": [0, 1, 2], "dist": [[0, 1, 3], [1, 0, 2], [3, 2, 0]], "weights": [0.2, 0.3, 0.5]}
    X2 = {**X, "weights": [0.5, 0.3, 0.2]}
    Y = {"labels": [0, 1], "dist": [[0, 1.5], [1.5, 0]], "weights": [0.5, 0.5]}
    F = {"breakpoints": [[0, 0], [2, 2]], "tail": {"kind": "constant"}}
    sq = {"builtin": "square"}
    dev = {"values": [0.1, 5.0], "masses": [0.7, 0.3]}
    P = PyramidApprox.from_chain([two_point(1.0), two_point(3.0)]).to_dict()
    out = {}
    for name, obj in dict(X=X, X2=X2, Y=Y, F=F, sq=sq, dev=dev, P=P).items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(obj))
        out[name] = str(p)
    out["dir"] = tmp_path
    return out


def _json_out(capsys):
    return json.loads(capsys.readouterr().out)


def test_cli_validate_mpf(files, capsys):
    assert cli_main(["validate-mpf", "--file", files["F"]]) == EXIT_OK
    assert _json_out(capsys)["verdicts"]["metric_preserving"]["holds"] is True
    assert cli_main(["validate-mpf", "--file", files["sq"]]) == EXIT_OK
    assert _json_out(capsys)["verdicts"]["metric_preserving"]["holds"] is False


def test_cli_transform_and_distances(files, capsys):
    assert cli_main(["transform", "--space", files["X"], "--function", files["F"]]) == EXIT_OK
    assert np.max(_json_out(capsys)["dist"]) == 2
    assert cli_main(["dist", "--metric", "prokhorov", "--a", files["X"], "--b", files["X2"]]) == EXIT_OK
    assert 0 < _json_out(capsys)["value"] <= 1
    assert cli_main(["dist", "--metric", "box", "--a", files["X"], "--b", files["Y"], "--budget", "200"]) == EXIT_OK
    br = _json_out(capsys)
    assert br["lower"] <= br["upper"]
    assert cli_main(["dist", "--metric", "kyfan", "--a", files["dev"]]) == EXIT_OK
    assert _json_out(capsys)["value"] == pytest.approx(0.3)
    assert cli_main(["dist", "--metric", "dd-lower", "--a", files["X"], "--b", files["Y"]]) == EXIT_OK


def test_cli_sample_and_pyramid(files, capsys):
    out = files["dir"] / "s.json"
    assert cli_main(["sample", "--kind", "sphere", "--n", "2", "--radius", "1", "--k", "20", "--out", str(out)]) == 0
    assert len(json.loads(out.read_text())["weights"]) == 20
    probe = files["dir"] / "probe.json"
    probe.write_text(json.dumps(two_point(2.5).to_dict()))
    assert cli_main(["pyramid", "--pyramid", files["P"], "--probe", str(probe)]) == EXIT_OK
    assert _json_out(capsys)["upper"] == 0.0


def test_cli_exit_codes(files, capsys, monkeypatch):
    assert cli_main([]) == EXIT_CONFIG
    assert cli_main(["dist", "--metric", "nope", "--a", files["X"]]) == EXIT_CONFIG
    assert cli_main(["dist", "--metric", "box", "--a", files["X"]]) == EXIT_CONFIG
    assert cli_main(["transform", "--space", files["X"], "--function", files["sq"]]) == EXIT_CONFIG
    assert cli_main(["transform", "--space", "missing.json", "--function", files["F"]]) == EXIT_CONFIG
    bad = files["dir"] / "bad.json"
    bad.write_text(json.dumps({"experiment": "counterexample", "case": "three_families", "typo": True}))
    assert cli_main(["experiment", "counterexample", "--config", str(bad)]) == EXIT_CONFIG
    monkeypatch.setenv("MMGEO_SEED", "abc")
    assert cli_main(["experiment", "counterexample", "--case", "three_families"]) == EXIT_CONFIG
    assert "MMGEO_SEED" in capsys.readouterr().err


def test_cli_experiment_and_report(files, capsys, monkeypatch):
    out = files["dir"] / "run"
    monkeypatch.setenv("MMGEO_SEED", "4")
    args = ["experiment", "counterexample", "--case", "three_families", "--out", str(out)]
    assert cli_main(args + ["--expect", "notch_ii_not_i=true"]) == EXIT_OK
    data = json.loads((out / "report.json").read_text())
    assert data["seed"] == 4 and "generated_at" in data
    assert (out / "metrics.csv").read_text().startswith("experiment,series,index,value,method")
    assert cli_main(args + ["--expect", "notch_ii_not_i=false"]) == EXIT_VERDICT
    assert cli_main(args + ["--expect", "no_such_verdict=true"]) == EXIT_VERDICT
    assert cli_main(["report", str(out / "report.json"), "--expect", "notch_ii_not_i=true"]) == EXIT_OK
    assert cli_main(["report", str(out / "report.json"), "--expect", "notch_ii_not_i=false"]) == EXIT_VERDICT
    assert cli_main(args + ["--expect", "notch_ii_not_i=maybe"]) == EXIT_CONFIG
