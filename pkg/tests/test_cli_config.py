import json
import math

import pytest

from main import main
from models.experiment import ExperimentConfig
from properties.config import Configuration, _count
from services.experiment_service import apply_axis
from utils.config_loader import load_config, load_config_text, nest, parse_keyfile
from utils.constant import CSV_COLUMNS
from utils.errors import ConfigurationError, ConfigValidationError

TINY = """\
# tiny synthetic experiment
dataset.kind = synthetic
dataset.n_classes = 4
dataset.dim = 6
dataset.n_per_class = 30
model.hidden = [8]
fl.R = 2
fl.N = 8
fl.I = 1
fl.b = 8
fl.k = 2
flguard.batch = 8
flguard.feature_dim = 16
flguard.epochs = 1
output.name = "tiny"   # report file stem
seed = 3
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY, encoding="utf-8")
    return path


def _diagnostics(exc):
    return {d["key"]: d for d in exc.value.details["diagnostics"]}


def test_parse_keyfile_values_and_lines():
    values, lines, problems = parse_keyfile(
        'fl.N = 20\nattack.kind = lie  # trailing comment\n\noutput.name = "a#b"\nmodel.hidden = [4, 2]\n'
    )
    assert not problems
    assert values == {"fl.N": 20, "attack.kind": "lie", "output.name": "a#b", "model.hidden": [4, 2]}
    assert lines["output.name"] == 4


def test_parse_keyfile_reports_bad_lines():
    _, _, problems = parse_keyfile("fl.N = 3\nnot a pair\nfl.N = 4\n9bad = 1\n")
    assert [(p.line, p.key) for p in problems] == [(2, ""), (3, "fl.N"), (4, "9bad")]
    assert "line 1" in problems[1].message


def test_nest_rejects_leaf_and_section_clash():
    assert nest({"fl.N": 2, "seed": 1}) == {"fl": {"N": 2}, "seed": 1}
    with pytest.raises(ConfigValidationError):
        nest({"fl": 1, "fl.N": 2})


def test_keyfile_and_json_agree():
    from_keys = load_config_text(TINY)
    from_json = load_config_text(json.dumps(from_keys.model_dump(mode="json", by_alias=True)))
    assert from_keys.model_dump() == from_json.model_dump()
    flat = load_config_text(json.dumps({"fl.N": 8, "fl.R": 2, "dataset.dim": 6, "seed": 3}))
    assert flat.fl.N == 8 and flat.seed == 3


def test_cross_field_error_points_at_key_and_line():
    with pytest.raises(ConfigValidationError) as exc:
        load_config_text(TINY + "fl.M = 4\n")
    diagnostic = _diagnostics(exc)["fl.M"]
    assert diagnostic["line"] == TINY.count("\n") + 1
    assert "M/N < 0.5" in diagnostic["message"]


def test_field_errors_are_keyed():
    with pytest.raises(ConfigValidationError) as exc:
        load_config_text("fl.N = 0\nfl.bogus = 1\n")
    found = _diagnostics(exc)
    assert found["fl.N"]["line"] == 1
    assert found["fl.bogus"]["line"] == 2


def test_threat_model_legality():
    with pytest.raises(ConfigValidationError) as exc:
        load_config_text(TINY + "attack.kind = slf\nattack.threat.type = T1\n")
    assert "attack.kind" in _diagnostics(exc)
    cfg = load_config_text(TINY + "attack.kind = slf\n")
    assert cfg.attack.threat.type == "T5" and cfg.attack.threat.capability == "data"


def test_overrides_apply_last(tiny_config):
    assert load_config(tiny_config, {"seed": 99}).seed == 99
    with pytest.raises(ConfigurationError):
        load_config(tiny_config.with_name("missing.cfg"))


def test_apply_axis():
    cfg = load_config_text(TINY)
    assert apply_axis(cfg, "malicious_fraction", 0.25).fl.M == 2
    assert apply_axis(cfg, "q", 0.5).dataset.q == 0.5
    assert apply_axis(cfg, "k", 3).fl.k == 3
    with pytest.raises(ConfigurationError):
        apply_axis(cfg, "k", 1.5)
    with pytest.raises(ConfigurationError):
        apply_axis(cfg, "gamma", 1.0)


def test_flguard_window_must_cover_a_batch():
    with pytest.raises(ValueError):
        ExperimentConfig.model_validate(
            {"fl": {"N": 8, "k": 1}, "defense": {"kind": "flguard"}, "flguard": {"batch": 32}}
        )


# command line


def test_validate_command(tiny_config, capsys):
    assert main(["validate", "--config", str(tiny_config)]) == 0
    assert "valid" in capsys.readouterr().out


def test_invalid_config_exits_with_2(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text(TINY + "fl.M = 4\n", encoding="utf-8")
    assert main(["validate", "--config", str(path)]) == 2
    payload = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert payload["exit_code"] == 2
    assert payload["error"]["diagnostics"][0]["key"] == "fl.M"


def test_missing_config_exits_with_2(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_bad_environment_exits_with_2(tiny_config, monkeypatch):
    monkeypatch.setattr(Configuration, "FLSIM_FORMAT", "xml")
    assert main(["validate", "--config", str(tiny_config)]) == 2


def test_non_integer_thread_count_is_reported_not_raised(tiny_config, monkeypatch):
    monkeypatch.setenv("FLSIM_THREADS", "many")
    assert _count("FLSIM_THREADS") == 0
    monkeypatch.setattr(Configuration, "FLSIM_THREADS", _count("FLSIM_THREADS"))
    with pytest.raises(ValueError, match="FLSIM_THREADS"):
        Configuration.validate_required_config()
    assert main(["validate", "--config", str(tiny_config)]) == 2


def _oracle(tmp_path, capsys, name, fixture):
    path = tmp_path / "fixture.json"
    path.write_text(json.dumps(fixture), encoding="utf-8")
    code = main(["oracle", name, str(path)])
    return code, capsys.readouterr().out.strip()


def test_oracle_trimmed_mean(tmp_path, capsys):
    code, out = _oracle(tmp_path, capsys, "trimmed-mean", {"rows": [[1], [2], [3], [4], [100]], "m": 1})
    assert code == 0
    assert out == '{"oracle":"trimmed-mean","result":[3.0]}'


def test_oracle_ahc(tmp_path, capsys):
    code, out = _oracle(tmp_path, capsys, "ahc", {"points": [[0.0], [1.0], [10.0]]})
    assert code == 0 and json.loads(out)["result"] == [[0, 1], [2]]


def test_oracle_nt_xent(tmp_path, capsys):
    code, out = _oracle(tmp_path, capsys, "nt-xent", {"z": [[1.0, 0.0]] * 4, "tau": 0.5})
    assert code == 0
    assert json.loads(out)["result"] == pytest.approx(math.log(3))


def test_unknown_oracle_exits_with_2(tmp_path, capsys):
    code, _ = _oracle(tmp_path, capsys, "median", {"rows": [[1]]})
    assert code == 2


def test_sweep_rejects_empty_values_and_unknown_axis(tiny_config, tmp_path):
    base = ["sweep", "--config", str(tiny_config), "--out", str(tmp_path)]
    assert main(base + ["--axis", "k", "--values", ""]) == 2
    assert main(base + ["--axis", "gamma", "--values", "1"]) == 2
    assert main(base + ["--axis", "k", "--values", "one"]) == 2


def test_run_writes_identical_reports(tiny_config, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        assert main(["run", "--config", str(tiny_config), "--out", str(out), "--format", "both"]) == 0
    csv = (first / "tiny.csv").read_bytes()
    assert csv == (second / "tiny.csv").read_bytes()
    assert (first / "tiny.json").read_bytes() == (second / "tiny.json").read_bytes()

    lines = csv.decode("utf-8").splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 3

    payload = json.loads((first / "tiny.json").read_text(encoding="utf-8"))
    assert payload["config"]["seed"] == 3
    assert [r["round"] for r in payload["rounds"]] == [1, 2]


def test_seed_flag_changes_the_run(tiny_config, tmp_path):
    for seed, out in ((3, "same"), (4, "other")):
        main(["run", "--config", str(tiny_config), "--out", str(tmp_path / out), "--format", "json", "--seed", str(seed)])
    same = json.loads((tmp_path / "same" / "tiny.json").read_text(encoding="utf-8"))
    other = json.loads((tmp_path / "other" / "tiny.json").read_text(encoding="utf-8"))
    assert other["config"]["seed"] == 4
    assert same["initial_accuracy"] != other["initial_accuracy"] or same["rounds"] != other["rounds"]


def test_sweep_writes_axis_column(tiny_config, tmp_path):
    code = main(
        ["sweep", "--config", str(tiny_config), "--out", str(tmp_path), "--format", "both",
         "--axis", "k", "--values", "1,2"]
    )
    assert code == 0
    lines = (tmp_path / "tiny_sweep_k.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "k," + ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + 2 * 2
    summary = json.loads((tmp_path / "tiny_sweep_k.json").read_text(encoding="utf-8"))["summary"]
    assert [s["value"] for s in summary] == [1.0, 2.0]
