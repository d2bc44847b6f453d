import pytest

from prompate.data import SyntheticSpec, generate_arrays
from prompate.nn import TrainConfig, train_source

SOURCE_TRAIN = TrainConfig(lr=0.01, lr_decay_per_epoch=0.8, batch_size=32, epochs=8)

# A pipeline small enough for plumbing tests: a few seconds end to end.
TINY = [
    "num_teachers=4", "source.count=260", "source.test_count=52", "source.train.epochs=1",
    "target.count=400", "max_queries=40", "repeats=2", "teachers.train.epochs=3",
    "student.train.epochs=3", "aggregator.threshold=2", "aggregator.sigma1=1",
    "aggregator.sigma2=1",
]

_CRITERIA = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def source():
    """The default desk-scale frozen source: 26 mixed-family classes at 1x32x32."""
    x, y = generate_arrays(SyntheticSpec(classes=26, family="mixed", count=3120, seed=1))
    return train_source(x, y, 26, SOURCE_TRAIN, label_smoothing=0.1)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config.stash[_CRITERIA] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and report.passed):
        return
    detail = dict(item.user_properties).get("detail", "")
    verdict = "PASS" if report.passed else "FAIL"
    item.config.stash[_CRITERIA].append((marker.args[0], verdict, detail))


def pytest_terminal_summary(terminalreporter, config):
    lines = sorted(config.stash.get(_CRITERIA, []))
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, verdict, detail in lines:
        terminalreporter.write_line(f"criterion {number}: {verdict}  {detail}")
