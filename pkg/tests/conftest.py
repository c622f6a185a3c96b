import glob
import os

import pytest

from etopacity.model import load_model

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
MODELS = os.path.join(ROOT, "models")
CORPUS = sorted(glob.glob(os.path.join(MODELS, "corpus", "*.pta")))

_criteria: dict[str, list] = {}


def model(name):
    return load_model(os.path.join(MODELS, name))


@pytest.fixture
def two_param():
    return model("two_param.pta")


@pytest.fixture
def periodic_loop():
    return model("periodic_loop.pta")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    label = dict(report.user_properties).get("criterion")
    if label:
        _criteria.setdefault(label, []).append(report.outcome)


@pytest.fixture(autouse=True)
def _tag_criterion(request):
    marker = request.node.get_closest_marker("criterion")
    if marker:
        request.node.user_properties.append(("criterion", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_criteria):
        outcomes = _criteria[label]
        ok = all(o == "passed" for o in outcomes)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  ({len(outcomes)} checks)")
