from __future__ import annotations

import numpy as np
import pytest

_outcomes: dict[str, list[str]] = {}
_labels: dict[str, list[str]] = {}


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        crit = dict(report.user_properties).get("criterion")
        if crit is not None:
            _outcomes.setdefault(crit, []).append(report.outcome)
            label = dict(report.user_properties).get("criterion_label", "")
            seen = _labels.setdefault(crit, [])
            if label and label not in seen:
                seen.append(label)


@pytest.fixture(autouse=True)
def _tag_criterion(request, record_property):
    marker = request.node.get_closest_marker("acceptance")
    if marker is not None:
        record_property("criterion", marker.args[0])
        record_property("criterion_label", marker.kwargs.get("label", ""))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_outcomes, key=lambda c: (len(c), c)):
        results = _outcomes[crit]
        verdict = "PASS" if all(r == "passed" for r in results) else "FAIL"
        n_ok = sum(r == "passed" for r in results)
        label = "; ".join(_labels[crit])
        terminalreporter.write_line(f"{verdict}  {crit:<5} {label}  ({n_ok}/{len(results)} checks)")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
