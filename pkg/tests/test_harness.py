import csv
import json

import numpy as np
import pytest

import prompate.harness as harness
from prompate.accountant import PrivacyLedger, rdp_to_dp
from prompate.errors import ConfigError, LedgerAuditError, PartialFailure, UnknownAxis
from prompate.harness import (
    ExperimentConfig,
    audit_report,
    build_source,
    get_value,
    load_checkpoint,
    load_config,
    load_report,
    resolve_key,
    run_experiment,
    run_sweep,
    save_checkpoint,
    set_value,
    teacher_phase,
    write_report,
)
from prompate.seeding import derive_seed

from conftest import TINY


@pytest.fixture(scope="module")
def tiny():
    return load_config(overrides=TINY)


@pytest.fixture(scope="module")
def tiny_report(tiny):
    return run_experiment(tiny)


def test_defaults_validate():
    config = ExperimentConfig().validate()
    assert config.prompt_spec().rescale == (28, 28)
    assert config.gnmax().threshold == 60.0


def test_dotted_set_and_get():
    config = ExperimentConfig()
    set_value(config, "aggregator.threshold", 480)
    set_value(config, "teachers.train.lr", "0.01")
    set_value(config, "prompt.rescale", 24)
    assert get_value(config, "aggregator.threshold") == 480.0
    assert config.teachers.train.lr == 0.01
    assert config.prompt.rescale == [24, 24]


@pytest.mark.parametrize("key, value, named", [
    ("aggregator.thresh", 3, "aggregator.thresh"),
    ("aggregator.threshold.x", 3, "aggregator.threshold.x"),
    ("num_teachers", "many", "num_teachers"),
    ("num_teachers", 2.5, "num_teachers"),
    ("prompt.masked", "maybe", "prompt.masked"),
])
def test_bad_settings_name_the_key(key, value, named):
    with pytest.raises(ConfigError) as err:
        set_value(ExperimentConfig(), key, value)
    assert err.value.key == named


@pytest.mark.parametrize("override, key", [
    ("target.private_fraction=0.9", "target.private_fraction"),
    ("prompt.rescale=40", "prompt.rescale"),
    ("map_kind='fc3'", "map_kind"),
    ("teachers.kind='svm'", "teachers.kind"),
    ("student.kind='transfer'", "student.kind"),
    ("aggregator.sigma1=0", "aggregator.mode"),
    ("delta=2", "delta"),
    ("repeats=0", "repeats"),
    ("student.confidence_threshold=0", "student"),
])
def test_invalid_values_name_the_key(override, key):
    with pytest.raises(ConfigError) as err:
        load_config(overrides=[override])
    assert err.value.key == key


def test_zero_noise_allowed_when_accounting_off():
    config = load_config(overrides=["aggregator.sigma1=0", "aggregator.sigma2=0",
                                    "aggregator.mode='off'"])
    assert config.accounting_mode().value == "off"


def test_toml_and_json_files(tmp_path):
    toml = tmp_path / "c.toml"
    toml.write_text("num_teachers = 7\n[aggregator]\nthreshold = 5.0\n")
    assert load_config(toml).num_teachers == 7
    js = tmp_path / "c.json"
    js.write_text(json.dumps({"aggregator": {"sigma2": 3}, "map_kind": "fc2"}))
    config = load_config(js)
    assert config.aggregator.sigma2 == 3.0 and config.map_kind == "fc2"
    bad = tmp_path / "bad.toml"
    bad.write_text("[aggregator]\nthreshhold = 1\n")
    with pytest.raises(ConfigError, match="aggregator.threshhold"):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.toml")


def test_seed_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("PROMPATE_SEED", "11")
    assert load_config().master_seed == 11
    path = tmp_path / "c.toml"
    path.write_text("master_seed = 12\n")
    assert load_config(path).master_seed == 12
    assert load_config(path, ["master_seed=13"]).master_seed == 13
    assert load_config(path, ["master_seed=13"], seed=14).master_seed == 14


def test_resolve_key():
    assert resolve_key("masked") == "prompt.masked"
    assert resolve_key("aggregator.threshold") == "aggregator.threshold"
    with pytest.raises(UnknownAxis):
        resolve_key("lr")  # present in three sections
    with pytest.raises(UnknownAxis):
        resolve_key("learning_rate")


def test_report_consistent_with_ledger(tiny_report):
    r = tiny_report
    assert 0 <= r.answered_queries <= r.queries == 40
    ledger = PrivacyLedger.from_dict(r.ledger)
    assert ledger.threshold_checks == r.queries and ledger.answered == r.answered_queries
    assert r.epsilon == round(rdp_to_dp(ledger, r.delta).epsilon, 4)
    assert len(r.accuracies_pct) == len(r.repeat_seeds) == 2
    assert len(set(r.repeat_seeds)) == 2
    assert r.accuracy_mean_pct == round(float(np.mean(r.accuracies_pct)), 2)
    assert r.repeat_seeds[0] == derive_seed(0, "student", 0)


def test_report_json_round_trip_and_audit(tiny_report, tmp_path):
    path = tmp_path / "r.json"
    write_report(tiny_report, path)
    data = load_report(path)
    assert "wall_time" not in data
    assert data == json.loads(tiny_report.to_json())
    assert list(data) == sorted(data)
    timed = json.loads(tiny_report.to_json(include_timing=True))
    assert timed["wall_time"] >= 0


def test_audit_rejects_tampered_epsilon(tiny_report):
    data = tiny_report.to_dict()
    data["epsilon"] = round(data["epsilon"] - 0.5, 4)
    with pytest.raises(LedgerAuditError):
        audit_report(data)
    data = tiny_report.to_dict()
    data["ledger"]["answered"] -= 1
    with pytest.raises(LedgerAuditError):
        audit_report(data)


def test_report_independent_of_workers(tiny, tiny_report):
    assert run_experiment(tiny, workers=3).to_json() == tiny_report.to_json()


def test_source_untouched_and_cached(tiny, tiny_report):
    source = build_source(tiny)
    assert build_source(tiny) is source
    assert source.current_fingerprint() == source.fingerprint == tiny_report.source_fingerprint


def test_accounting_off_reports_no_epsilon(tiny):
    config = tiny.copy()
    config.aggregator.mode = "off"
    report = run_experiment(config)
    assert report.epsilon is None and report.alpha_star is None
    assert audit_report(report.to_dict())["epsilon"] is None


@pytest.mark.parametrize("teachers, student", [("transfer", "vp"), ("scratch", "scratch")])
def test_ablation_kinds_run(tiny, teachers, student):
    config = tiny.copy()
    config.teachers.kind, config.student.kind = teachers, student
    config.repeats = 1
    report = run_experiment(config)
    assert report.config["teachers"]["kind"] == teachers
    assert 0 <= report.accuracy_mean_pct <= 100


def test_audit_stream(tiny, tmp_path):
    path = tmp_path / "audit.jsonl"
    phase = teacher_phase(tiny, audit_path=path)
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert len(records) == 40
    assert sum(r["outcome"] == "answered" for r in records) == phase.queries.answered_queries
    assert all("votes" not in r for r in records)


@pytest.mark.parametrize("workers", [1, 2])
def test_teacher_failure_aborts_run(tiny, monkeypatch, workers):
    real = harness.train_reteacher

    def flaky(*args, **kwargs):
        if kwargs.get("init_seed") == derive_seed(tiny.master_seed, "teacher", 2):
            raise RuntimeError("out of memory")
        return real(*args, **kwargs)

    monkeypatch.setattr(harness, "train_reteacher", flaky)
    with pytest.raises(PartialFailure, match="teacher 2"):
        run_experiment(tiny, workers=workers)


def test_sweep_shares_everything_but_the_axis(tiny, tmp_path):
    path = tmp_path / "sweep.csv"
    config = tiny.copy()
    config.repeats = 1
    reports = run_sweep(config, "masked", [True, False], csv_path=path)
    assert [r.config["prompt"]["masked"] for r in reports] == [True, False]
    assert reports[0].source_fingerprint == reports[1].source_fingerprint
    assert reports[0].repeat_seeds == reports[1].repeat_seeds
    a, b = reports[0].config, reports[1].config
    a["prompt"].pop("masked"), b["prompt"].pop("masked")
    assert a == b
    run_sweep(config, "prompt.masked", [True], csv_path=path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3 and rows[0]["axis"] == "prompt.masked"
    assert rows[0]["epsilon"] == rows[2]["epsilon"]


def test_sweep_unknown_axis(tiny):
    with pytest.raises(UnknownAxis):
        run_sweep(tiny, "teacher_count", [1, 2])


def test_checkpoint_round_trip(tiny, tmp_path):
    source = build_source(tiny)
    save_checkpoint(tmp_path / "ck", source)
    back = load_checkpoint(tmp_path / "ck")
    assert back.fingerprint == source.fingerprint
    x = np.random.default_rng(0).random((3, 1, 32, 32))
    assert np.array_equal(back.logits(x), source.logits(x))
    config = tiny.copy()
    config.source.checkpoint = str(tmp_path / "ck")
    assert build_source(config).fingerprint == source.fingerprint


def test_checkpoint_detects_corruption(tiny, tmp_path):
    from prompate.errors import CrcMismatch

    save_checkpoint(tmp_path / "ck", build_source(tiny))
    target = tmp_path / "ck" / "param_000.ptns"
    data = bytearray(target.read_bytes())
    data[20] ^= 0x01
    target.write_bytes(bytes(data))
    with pytest.raises(CrcMismatch):
        load_checkpoint(tmp_path / "ck")
