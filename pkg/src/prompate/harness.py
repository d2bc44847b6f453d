"""End-to-end experiment orchestration.

A run trains (or loads) the frozen source, builds the target task, trains
one teacher per private slice, labels public queries through
Confident-GNMax, charges the ledger, and trains the student ``repeats``
times.  Every random stream is derived from ``master_seed`` by role tag, so
reports are identical for any worker count and, within a sweep, only the
swept field changes between runs.
"""

from __future__ import annotations

import copy
import csv
import dataclasses
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .accountant import AccountingMode, PrivacyLedger, check_delta, rdp_to_dp
from .aggregator import GnMaxParams, LabeledQueries, label_query_pool
from .data import (
    Split,
    SplitFractions,
    SyntheticSpec,
    generate,
    generate_arrays,
    load_tensor,
    partition,
    save_tensor,
    split,
)
from .errors import (
    ConfigError,
    LedgerAuditError,
    PartialFailure,
    PromPateError,
    UnknownAxis,
)
from .nn import (
    FrozenSourceModel,
    Sequential,
    StudentConfig,
    TrainConfig,
    evaluate,
    train_reteacher,
    train_source,
    train_student,
)
from .nn.models import MODEL_KINDS
from .prompt import MAP_KINDS, PromptSpec
from .seeding import derive_seed

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

STUDENT_KINDS = ("vp", "scratch")


# ----------------------------------------------------------------------------
# configuration


@dataclass
class TrainSection:
    lr: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8
    lr_decay_per_epoch: float = 0.7
    batch_size: int = 16
    epochs: int = 10

    def build(self, seed: int) -> TrainConfig:
        return TrainConfig(self.lr, self.beta1, self.beta2, self.eps_hat,
                           self.lr_decay_per_epoch, self.batch_size, self.epochs, seed)


def _source_train():
    return TrainSection(lr=0.01, lr_decay_per_epoch=0.8, batch_size=32, epochs=8)


@dataclass
class SourceSection:
    classes: int = 26
    dims: list = field(default_factory=lambda: [1, 32, 32])
    family: str = "mixed"
    count: int = 3120
    test_count: int = 520
    noise_level: float = 0.1
    channels: list = field(default_factory=lambda: [8, 16])
    label_smoothing: float = 0.1
    checkpoint: str = ""  # load a saved source instead of training one
    train: TrainSection = field(default_factory=_source_train)


@dataclass
class TargetSection:
    classes: int = 10
    dims: list = field(default_factory=lambda: [1, 32, 32])
    family: str = "stripes"
    gap_knob: float = 0.8
    noise_level: float = 0.1
    count: int = 5000
    private_fraction: float = 0.7
    public_fraction: float = 0.2
    test_fraction: float = 0.1


@dataclass
class PromptSection:
    rescale: list = field(default_factory=lambda: [28, 28])
    masked: bool = True


@dataclass
class TeacherSection:
    kind: str = "vp"
    train: TrainSection = field(default_factory=TrainSection)


@dataclass
class AggregatorSection:
    threshold: float = 60.0
    sigma1: float = 20.0
    sigma2: float = 5.0
    mode: str = "per-step"


@dataclass
class StudentSection:
    kind: str = "vp"
    pseudo_label_rounds: int = 2
    confidence_threshold: float = 0.95
    train: TrainSection = field(default_factory=TrainSection)


@dataclass
class ExperimentConfig:
    source: SourceSection = field(default_factory=SourceSection)
    target: TargetSection = field(default_factory=TargetSection)
    prompt: PromptSection = field(default_factory=PromptSection)
    teachers: TeacherSection = field(default_factory=TeacherSection)
    aggregator: AggregatorSection = field(default_factory=AggregatorSection)
    student: StudentSection = field(default_factory=StudentSection)
    num_teachers: int = 100
    map_kind: str = "fc1"
    max_queries: int = 500
    delta: float = 1e-5
    repeats: int = 3
    master_seed: int = 0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def copy(self) -> "ExperimentConfig":
        return copy.deepcopy(self)

    # derived domain objects -------------------------------------------------

    def source_data_spec(self) -> SyntheticSpec:
        s = self.source
        return SyntheticSpec(s.classes, tuple(s.dims), s.family, 0.0, s.noise_level, s.count,
                             derive_seed(self.master_seed, "source-data"))

    def source_test_spec(self) -> SyntheticSpec:
        s = self.source
        return SyntheticSpec(s.classes, tuple(s.dims), s.family, 0.0, s.noise_level,
                             s.test_count, derive_seed(self.master_seed, "source-test"))

    def target_spec(self) -> SyntheticSpec:
        t = self.target
        return SyntheticSpec(t.classes, tuple(t.dims), t.family, t.gap_knob, t.noise_level,
                             t.count, derive_seed(self.master_seed, "target-data"),
                             base_family=self.source.family)

    def split_fractions(self) -> SplitFractions:
        t = self.target
        return SplitFractions(t.private_fraction, t.public_fraction, t.test_fraction)

    def prompt_spec(self) -> PromptSpec:
        return PromptSpec(tuple(self.source.dims), tuple(self.prompt.rescale),
                          self.prompt.masked)

    def gnmax(self) -> GnMaxParams:
        a = self.aggregator
        return GnMaxParams(a.threshold, a.sigma1, a.sigma2)

    def accounting_mode(self) -> AccountingMode:
        return AccountingMode.parse(self.aggregator.mode)

    def student_config(self, seed: int) -> StudentConfig:
        s = self.student
        return StudentConfig(s.train.build(seed), s.pseudo_label_rounds, s.confidence_threshold)

    def validate(self) -> "ExperimentConfig":
        """Build every nested domain object, mapping failures to the config key."""
        checks = [
            ("source", self.source_data_spec),
            ("source.test_count", self.source_test_spec),
            ("target", self.target_spec),
            ("target.private_fraction", self.split_fractions),
            ("prompt.rescale", self.prompt_spec),
            ("aggregator", self.gnmax),
            ("aggregator.mode", self.accounting_mode),
            ("student", lambda: self.student_config(0)),
            ("source.train", lambda: self.source.train.build(0)),
            ("teachers.train", lambda: self.teachers.train.build(0)),
            ("delta", lambda: check_delta(self.delta)),
        ]
        for key, build in checks:
            try:
                build()
            except (ValueError, TypeError) as exc:
                raise ConfigError(key, str(exc)) from exc
        rules = [
            ("repeats", self.repeats >= 1, "must be >= 1"),
            ("num_teachers", self.num_teachers >= 1, "must be >= 1"),
            ("max_queries", self.max_queries >= 0, "must be >= 0"),
            ("map_kind", self.map_kind in MAP_KINDS, f"must be one of {MAP_KINDS}"),
            ("teachers.kind", self.teachers.kind in MODEL_KINDS,
             f"must be one of {sorted(MODEL_KINDS)}"),
            ("student.kind", self.student.kind in STUDENT_KINDS,
             f"must be one of {STUDENT_KINDS}"),
            ("target.dims", self.target.dims[0] == self.source.dims[0],
             "target channels must match source channels"),
            ("map_kind", not (self.map_kind == "random"
                              and self.target.classes > self.source.classes),
             "random map needs target classes <= source classes"),
            ("source.label_smoothing", 0.0 <= self.source.label_smoothing < 1.0,
             "must lie in [0, 1)"),
        ]
        for key, ok, message in rules:
            if not ok:
                raise ConfigError(key, message)
        if self.aggregator.mode != "off" and min(self.aggregator.sigma1,
                                                 self.aggregator.sigma2) <= 0:
            raise ConfigError("aggregator.mode",
                              "zero noise is unaccountable; set aggregator.mode = \"off\"")
        return self


def _field_names(obj) -> dict:
    return {f.name: f for f in dataclasses.fields(obj)}


def _coerce(key: str, current, value):
    """Convert ``value`` to the type of the field it replaces."""
    if isinstance(current, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false"):
            return value.lower() == "true"
        raise ConfigError(key, f"expected a boolean, got {value!r}")
    if isinstance(current, int):
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        try:
            as_float = float(value)
        except ValueError:
            raise ConfigError(key, f"expected an integer, got {value!r}") from None
        if not as_float.is_integer():
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return int(as_float)
    if isinstance(current, float):
        if isinstance(value, bool):
            raise ConfigError(key, f"expected a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(key, f"expected a number, got {value!r}") from None
    if isinstance(current, list):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value] * len(current)  # e.g. rescale = 24 -> [24, 24]
        if not isinstance(value, (list, tuple)):
            raise ConfigError(key, f"expected a list, got {value!r}")
        return [_coerce(f"{key}[{i}]", current[0] if current else value[i], v)
                for i, v in enumerate(value)]
    if isinstance(current, str):
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    raise ConfigError(key, "not a settable field")


def set_value(config: ExperimentConfig, key: str, value) -> None:
    """Assign ``value`` to the dotted ``key`` of ``config`` in place."""
    parts = key.split(".")
    node = config
    for i, part in enumerate(parts):
        names = _field_names(node)
        if part not in names:
            raise ConfigError(".".join(parts[:i + 1]), "unknown configuration key")
        current = getattr(node, part)
        if dataclasses.is_dataclass(current):
            if i == len(parts) - 1:
                if not isinstance(value, dict):
                    raise ConfigError(key, "expected a table of settings")
                for sub, v in value.items():
                    set_value(config, f"{key}.{sub}", v)
                return
            node = current
            continue
        if i != len(parts) - 1:
            raise ConfigError(".".join(parts[:i + 2]), "unknown configuration key")
        setattr(node, part, _coerce(key, current, value))


def get_value(config: ExperimentConfig, key: str):
    node = config
    for i, part in enumerate(key.split(".")):
        if not dataclasses.is_dataclass(node) or part not in _field_names(node):
            raise ConfigError(".".join(key.split(".")[:i + 1]), "unknown configuration key")
        node = getattr(node, part)
    return node


def leaf_keys(config: ExperimentConfig | None = None, prefix: str = "") -> list[str]:
    node = config if config is not None else ExperimentConfig()
    keys = []
    for f in dataclasses.fields(node):
        value = getattr(node, f.name)
        if dataclasses.is_dataclass(value):
            keys += leaf_keys(value, f"{prefix}{f.name}.")
        else:
            keys.append(prefix + f.name)
    return keys


def resolve_key(key: str) -> str:
    """Accept a full dotted key or an unambiguous final component."""
    keys = leaf_keys()
    if key in keys:
        return key
    matches = [k for k in keys if k.split(".")[-1] == key]
    if len(matches) == 1:
        return matches[0]
    raise UnknownAxis(f"unknown or ambiguous field {key!r}")


def config_from_dict(data: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    config = base.copy() if base is not None else ExperimentConfig()
    for key, value in data.items():
        set_value(config, key, value)
    return config


def parse_override(text: str) -> tuple[str, Any]:
    """Split ``key=value``; the value is read as TOML, falling back to a string."""
    if "=" not in text:
        raise ConfigError(text, "override must look like key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def load_config(path=None, overrides: Sequence[str] = (), seed: int | None = None
                ) -> ExperimentConfig:
    """Read a TOML or JSON config, then apply ``key=value`` overrides and seed.

    Precedence, lowest first: defaults, ``PROMPATE_SEED``, file, overrides,
    ``seed``.
    """
    config = ExperimentConfig()
    env_seed = os.environ.get("PROMPATE_SEED")
    if env_seed is not None:
        set_value(config, "master_seed", env_seed)
    if path is not None:
        path = os.fspath(path)
        if not os.path.exists(path):
            raise ConfigError(path, "config file not found")
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
            if path.endswith(".json"):
                data = json.loads(raw.decode("utf-8"))
            else:
                data = tomllib.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(path, f"cannot parse config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(path, "config must be a table")
        config = config_from_dict(data, config)
    for text in overrides:
        key, value = parse_override(text)
        set_value(config, key, value)
    if seed is not None:
        config.master_seed = int(seed)
    return config.validate()


# ----------------------------------------------------------------------------
# source model and checkpoints


_SOURCE_CACHE: dict[str, FrozenSourceModel] = {}
_SOURCE_LOCK = threading.Lock()


def _source_key(config: ExperimentConfig) -> str:
    section = dataclasses.asdict(config.source)
    section.pop("checkpoint")
    return json.dumps([section, config.master_seed], sort_keys=True)


def build_source(config: ExperimentConfig) -> FrozenSourceModel:
    """Train the source for this config, reusing an identical earlier one."""
    if config.source.checkpoint:
        return load_checkpoint(config.source.checkpoint)
    key = _source_key(config)
    with _SOURCE_LOCK:
        if key in _SOURCE_CACHE:
            return _SOURCE_CACHE[key]
    s = config.source
    x, y = generate_arrays(config.source_data_spec())
    xt, yt = generate_arrays(config.source_test_spec())
    model = train_source(x, y, s.classes, s.train.build(derive_seed(config.master_seed,
                                                                     "source-train")),
                         channels=tuple(s.channels), test_images=xt, test_labels=yt,
                         init_seed=derive_seed(config.master_seed, "source-init"),
                         label_smoothing=s.label_smoothing)
    with _SOURCE_LOCK:
        _SOURCE_CACHE.setdefault(key, model)
        return _SOURCE_CACHE[key]


def save_checkpoint(directory, source: FrozenSourceModel, extra: dict | None = None) -> dict:
    """Write source parameters as PTNS tensors plus a JSON manifest."""
    os.makedirs(directory, exist_ok=True)
    tensors = {}
    for i, name in enumerate(sorted(source.params)):
        fname = f"param_{i:03d}.ptns"
        save_tensor(os.path.join(directory, fname), source.params[name])
        tensors[name] = {"file": fname, "shape": list(source.params[name].shape)}
    manifest = {"architecture": source.net.describe(), "tensors": tensors,
                "fingerprint": source.fingerprint, "seed": source.seed,
                "source_accuracy": source.source_accuracy}
    if extra:
        manifest.update(extra)
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_checkpoint(directory) -> FrozenSourceModel:
    path = os.path.join(directory, "manifest.json")
    if not os.path.exists(path):
        raise ConfigError(os.fspath(directory), "no checkpoint manifest found")
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    net = Sequential.from_description(manifest["architecture"])
    params = {name: load_tensor(os.path.join(directory, entry["file"]))
              for name, entry in manifest["tensors"].items()}
    model = FrozenSourceModel(net, params, manifest.get("source_accuracy"),
                              manifest.get("seed"))
    if model.fingerprint != manifest["fingerprint"]:
        raise PromPateError(f"checkpoint {directory} fingerprint mismatch")
    return model


# ----------------------------------------------------------------------------
# pipeline


@dataclass
class TeacherPhase:
    """Teachers trained and public queries labelled; everything before the student."""

    source: FrozenSourceModel
    splits: dict
    queries: LabeledQueries
    ledger: PrivacyLedger


def _train_teachers(config, source, private, plan, workers):
    spec = config.prompt_spec()

    def train_one(i):
        idx = plan.slice_indices(i)
        seed = derive_seed(config.master_seed, "teacher", i)
        return train_reteacher(private.images[idx], private.labels[idx], source, spec,
                               config.map_kind, config.target.classes,
                               config.teachers.train.build(seed), kind=config.teachers.kind,
                               init_seed=seed)

    n = config.num_teachers
    if workers <= 1:
        results = []
        for i in range(n):
            try:
                results.append(train_one(i))
            except Exception as exc:
                raise PartialFailure(f"teacher {i} failed: {exc}") from exc
        return results
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(train_one, i) for i in range(n)]
        results, failure = [], None
        for i, fut in enumerate(futures):
            try:
                results.append(fut.result())
            except Exception as exc:
                failure = failure or (i, exc)
    if failure is not None:
        i, exc = failure
        raise PartialFailure(f"teacher {i} failed: {exc}") from exc
    return results


def teacher_phase(config: ExperimentConfig, workers: int = 1, audit_path=None) -> TeacherPhase:
    """Train the teacher ensemble, then label public queries privately."""
    config.validate()
    source = build_source(config)
    fingerprint = source.fingerprint
    target = generate(config.target_spec())
    splits = split(target, config.split_fractions(), derive_seed(config.master_seed, "split"))
    private = splits[Split.PRIVATE_TRAIN]
    pool = splits[Split.PUBLIC_POOL]
    plan = partition(private, config.num_teachers, derive_seed(config.master_seed, "partition"))
    teachers = _train_teachers(config, source, private, plan, workers)
    if source.current_fingerprint() != fingerprint:
        raise PromPateError("frozen source changed during teacher training")
    a = config.aggregator
    ledger = PrivacyLedger(sigma1=a.sigma1, sigma2=a.sigma2, mode=config.accounting_mode())
    queries = label_query_pool(pool.images, teachers, config.gnmax(), config.max_queries,
                               ledger, derive_seed(config.master_seed, "aggregator"),
                               config.target.classes, true_labels=pool.labels,
                               workers=workers, audit_path=audit_path)
    return TeacherPhase(source, splits, queries, ledger)


def _round(x, digits):
    return None if x is None else round(float(x), digits)


@dataclass
class ExperimentReport:
    epsilon: float | None
    delta: float
    alpha_star: float | None
    queries: int
    answered_queries: int
    answer_accuracy_pct: float | None
    threshold: float
    sigma1: float
    sigma2: float
    accuracy_mean_pct: float
    accuracy_std_pct: float
    accuracies_pct: list
    repeat_seeds: list
    teacher_accuracy_pct: float | None
    source_accuracy_pct: float | None
    source_fingerprint: str
    ledger: dict
    config: dict
    wall_time: float | None = None

    def __post_init__(self):
        if self.answered_queries > self.queries:
            raise ValueError("answered queries exceed queries")
        if self.accuracy_std_pct < 0:
            raise ValueError("negative standard deviation")

    def to_dict(self, include_timing: bool = False) -> dict:
        d = dataclasses.asdict(self)
        if not include_timing:
            d.pop("wall_time")
        return d

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"

    def row(self) -> dict:
        """Flat scalar view for CSV output."""
        keys = ("epsilon", "delta", "alpha_star", "queries", "answered_queries",
                "answer_accuracy_pct", "threshold", "sigma1", "sigma2",
                "accuracy_mean_pct", "accuracy_std_pct", "teacher_accuracy_pct")
        return {k: getattr(self, k) for k in keys}


def _epsilon(ledger: PrivacyLedger, delta: float):
    if ledger.mode is AccountingMode.OFF:
        return None, None
    budget = rdp_to_dp(ledger, delta)
    return budget.epsilon, budget.alpha_star


def run_experiment(config: ExperimentConfig, workers: int = 1,
                   audit_path=None) -> ExperimentReport:
    """Teacher phase, then ``repeats`` students trained with derived seeds."""
    start = time.perf_counter()
    phase = teacher_phase(config, workers, audit_path)
    pool = phase.splits[Split.PUBLIC_POOL]
    test = phase.splits[Split.TEST]
    q = phase.queries
    answered_x = pool.images[q.indices]
    unlabeled = np.delete(pool.images, q.indices, axis=0)
    spec = config.prompt_spec()

    seeds, accs = [], []
    for r in range(config.repeats):
        seed = derive_seed(config.master_seed, "student", r)
        student = train_student(answered_x, q.labels, unlabeled, phase.source, spec,
                                config.map_kind, config.target.classes,
                                config.student_config(seed), kind=config.student.kind)
        seeds.append(seed)
        accs.append(evaluate(student, test.images, test.labels))
    phase.source.verify()

    eps, alpha = _epsilon(phase.ledger, config.delta)
    accs_pct = [100.0 * a for a in accs]
    a = config.aggregator
    return ExperimentReport(
        epsilon=_round(eps, 4), delta=config.delta, alpha_star=_round(alpha, 4),
        queries=q.queries, answered_queries=q.answered_queries,
        answer_accuracy_pct=_round(None if q.answer_accuracy is None
                                   else 100.0 * q.answer_accuracy, 2),
        threshold=a.threshold, sigma1=a.sigma1, sigma2=a.sigma2,
        accuracy_mean_pct=round(float(np.mean(accs_pct)), 2),
        accuracy_std_pct=round(float(np.std(accs_pct)), 2),
        accuracies_pct=[round(x, 2) for x in accs_pct], repeat_seeds=seeds,
        teacher_accuracy_pct=_round(None if q.teacher_accuracy is None
                                    else 100.0 * q.teacher_accuracy, 2),
        source_accuracy_pct=_round(None if phase.source.source_accuracy is None
                                   else 100.0 * phase.source.source_accuracy, 2),
        source_fingerprint=phase.source.fingerprint, ledger=phase.ledger.to_dict(),
        config=config.to_dict(), wall_time=round(time.perf_counter() - start, 3))


def audit_report(data: dict) -> dict:
    """Recompute epsilon from the serialized ledger; raise if it disagrees."""
    ledger = PrivacyLedger.from_dict(data["ledger"])
    eps, alpha = _epsilon(ledger, data["delta"])
    if _round(eps, 4) != data["epsilon"] or _round(alpha, 4) != data["alpha_star"]:
        raise LedgerAuditError(
            f"report epsilon {data['epsilon']} does not match ledger ({_round(eps, 4)})")
    if data["answered_queries"] != ledger.answered or data["queries"] != ledger.threshold_checks:
        raise LedgerAuditError("report query counts do not match the ledger")
    return data


def load_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return audit_report(json.load(fh))


def write_report(report: ExperimentReport, path, include_timing: bool = False) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(report.to_json(include_timing))
    os.replace(tmp, path)


# ----------------------------------------------------------------------------
# sweeps


def run_sweep(base: ExperimentConfig, axis: str, values: Sequence, workers: int = 1,
              csv_path=None) -> list[ExperimentReport]:
    """One report per value of ``axis``; everything else, seeds included, is shared."""
    key = resolve_key(axis)
    configs = []
    for value in values:
        config = base.copy()
        set_value(config, key, value)
        configs.append(config.validate())
    reports = []
    for value, config in zip(values, configs):
        report = run_experiment(config, workers)
        reports.append(report)
        if csv_path is not None:
            append_csv(csv_path, key, get_value(config, key), report)
    return reports


def append_csv(path, axis: str, value, report: ExperimentReport) -> None:
    row = {"axis": axis, "value": json.dumps(value)}
    row.update(report.row())
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(row))
        if new:
            writer.writeheader()
        writer.writerow(row)


def teacher_count_sweep_is_increasing(reports: Sequence[ExperimentReport]) -> bool:
    accs = [r.accuracy_mean_pct for r in reports]
    return all(b > a for a, b in zip(accs, accs[1:]))


__all__ = [
    "AggregatorSection", "ExperimentConfig", "ExperimentReport", "PromptSection",
    "SourceSection", "StudentSection", "TargetSection", "TeacherPhase", "TeacherSection",
    "TrainSection", "append_csv", "audit_report", "build_source", "config_from_dict",
    "get_value", "leaf_keys", "load_checkpoint", "load_config", "load_report",
    "parse_override", "resolve_key", "run_experiment", "run_sweep", "save_checkpoint",
    "set_value", "teacher_phase", "write_report",
]
