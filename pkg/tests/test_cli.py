import json
from pathlib import Path

import pytest

from gppalab.cli import main
from gppalab.errors import ConfigError
from gppalab.experiment import dump_config, load_config, parse_config, run_experiment
from gppalab.suite import verify_suite

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

ROTATION = {
    "operator": "rotation2",
    "x0": [1.0, 0.0],
    "schedule": {"lambda": 1.0, "c": 1.0},
    "iterations": 30,
    "certificates": [{"theorem": "Prop5_1", "kappa": 1.0}],
}


def with_changes(base, **changes):
    cfg = json.loads(json.dumps(base))
    cfg.update(changes)
    return cfg


@pytest.mark.parametrize("changes, path", [
    ({"iterations": 0}, "iterations"),
    ({"x0": [1.0]}, "x0"),
    ({"operator": "nonsense"}, "operator"),
    ({"schedule": {"lambda": 2.5}}, "schedule.lambda"),
    ({"schedule": {"c": [1.0, -1.0]}}, "schedule.c[1]"),
    ({"schedule": {"error": {"relative": 1.5}}}, "schedule.error.relative"),
    ({"certificates": [{"theorem": "Thm9_9"}]}, "certificates[0].theorem"),
    ({"certificates": [{"theorem": "Prop5_1"}]}, "certificates[0].kappa"),
    ({"seed": -1}, "seed"),
    ({"bogus": 1}, "bogus"),
])
def test_config_errors_name_the_field(changes, path):
    with pytest.raises(ConfigError) as info:
        parse_config(with_changes(ROTATION, **changes))
    assert info.value.path == path


def test_config_rejects_bad_json():
    with pytest.raises(ConfigError):
        parse_config("{not json")


def test_config_open_relaxation_precondition():
    cfg = with_changes(ROTATION, schedule={"lambda": 2.0},
                       certificates=[{"theorem": "Thm5_6", "kappa": 1.0}])
    with pytest.raises(ConfigError) as info:
        parse_config(cfg)
    assert "lambda" in str(info.value)


def test_config_round_trip():
    for name in ("rotation_tight.json", "abs_relative.json", "box_distance.json"):
        cfg = load_config(CONFIGS / name)
        again = parse_config(dump_config(cfg))
        assert again == cfg
        assert dump_config(again) == dump_config(cfg)


def test_config_formula_and_list_sequences():
    cfg = parse_config(with_changes(ROTATION, schedule={"lambda": [0.5, 1.5], "c": "harmonic-plus-one",
                                                        "error": {"summable": "geometric-half"}},
                                    certificates=[]))
    assert cfg.schedule.c(0) == 2.0
    assert cfg.schedule.lam(3) == 1.5


def test_config_matrix_operator(tmp_path):
    m = tmp_path / "m.txt"
    m.write_text("0 -1\n1 0\n")
    cfg = parse_config(with_changes(ROTATION, operator={"matrix": str(m)}))
    assert cfg.operator == f"linear:{m}"
    assert run_experiment(cfg).passed


def test_run_rotation_outputs(tmp_path):
    cfg = parse_config(ROTATION)
    rep = run_experiment(cfg, tmp_path)
    assert rep.passed
    rows = (tmp_path / "trace.csv").read_text().splitlines()
    assert len(rows) == 1 + 31
    ver = json.loads((tmp_path / "verification.json").read_text())
    assert ver[0]["overall"] == "pass"
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["overall"] == "pass"
    assert "summability" in report and report["trace"]["K"] == 30


def test_run_abs_relative_error(tmp_path):
    rep = run_experiment(load_config(CONFIGS / "abs_relative.json"), tmp_path)
    (v,) = rep.verifications
    assert v.overall and v.certificate_id == "Thm5_8"
    assert v.K_detected is not None
    ver = json.loads((tmp_path / "verification.json").read_text())
    assert ver[0]["K_detected"] == v.K_detected


def test_run_box_with_estimate(tmp_path):
    rep = run_experiment(load_config(CONFIGS / "box_distance.json"), tmp_path)
    assert rep.passed
    assert rep.estimate is not None


def test_run_is_deterministic(tmp_path):
    cfg = load_config(CONFIGS / "box_distance.json")
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    for name in ("trace.csv", "certificates.json", "verification.json", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_verify_suite_default_passes():
    results = verify_suite(seed=0, echo=None)
    assert [r.name for r in results if not r.passed] == []
    assert len(results) == 8


def test_verify_suite_flags_bad_matrix(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n-3 0\n")
    results = verify_suite(seed=0, only=["resolvent"], matrix=str(bad), echo=None)
    assert not results[0].passed and results[0].name == "resolvent"


def test_verify_suite_only_filter():
    lines = []
    results = verify_suite(only=["identities"], echo=lines.append)
    assert [r.name for r in results] == ["identities"]
    assert lines[0].startswith("PASS  identities")


def test_cli_run_exit_codes(tmp_path, capsys):
    assert main(["run", str(CONFIGS / "rotation_tight.json"), "--out", str(tmp_path / "ok")]) == 0
    assert main(["run", str(CONFIGS / "bad_lambda.json"), "--out", str(tmp_path / "bad")]) == 2
    assert "lambda" in capsys.readouterr().err
    failing = tmp_path / "fail.json"
    failing.write_text(json.dumps(with_changes(ROTATION, certificates=[{"theorem": "Prop5_1", "kappa": 0.5}])))
    assert main(["run", str(failing), "--out", str(tmp_path / "f")]) == 3


def test_cli_verify_exit_codes(tmp_path, capsys):
    assert main(["verify", "--only", "identities,recursion"]) == 0
    out = capsys.readouterr().out
    assert "identities" in out and "recursion" in out
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n-3 0\n")
    assert main(["verify", "--only", "resolvent", "--matrix", str(bad)]) == 3
    assert "resolvent" in capsys.readouterr().err
    assert main(["verify", "--only", "nope"]) == 2


def test_cli_estimate_kappa(capsys):
    assert main(["estimate-kappa", "scaled2", "--center", "0", "--delta", "1", "--samples", "200"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["kappa_hat"] == pytest.approx(0.5, abs=1e-9)
    assert main(["estimate-kappa", "cubic", "--delta", "0.1", "--samples", "100"]) == 0
    assert json.loads(capsys.readouterr().out)["kappa_hat"] == "divergent"
    assert main(["estimate-kappa", "identity", "--center", "0.5", "--delta", "1"]) == 2


def test_cli_rates(capsys):
    assert main(["rates", "Prop5_1", "--params", "kappa=1", "c=2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rho"] == pytest.approx(5 ** -0.5)
    assert main(["rates", "Thm3_4", "--params", "lambda=1"]) == 2
    assert main(["rates", "Thm3_4", "--params", "lambda=3", "kappa=1", "gamma=1"]) == 2
