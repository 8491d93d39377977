"""Shared fixtures: cached training runs and the acceptance summary printed after the session."""

from __future__ import annotations

import warnings

import pytest

from hypcse.pipeline import RunConfig, load_dataset, run_training

SEEDS = range(5)
CRITERIA: dict[int, tuple[bool, str]] = {}


class RunCache:
    """Full-length runs shared by the pipeline and acceptance tests; each config trains once."""

    def __init__(self):
        self._runs = {}

    def get(self, dataset: str, seed: int, **changes):
        key = (dataset, seed, tuple(sorted(changes.items())))
        if key not in self._runs:
            X, y = load_dataset(dataset)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                self._runs[key] = run_training(RunConfig(dataset=dataset, seed=seed, **changes), X, y)
        return self._runs[key]

    def seeds(self, dataset: str, **changes):
        return [self.get(dataset, s, **changes) for s in SEEDS]


@pytest.fixture(scope="session")
def runs() -> RunCache:
    return RunCache()


@pytest.fixture
def criterion():
    def record(number: int, passed: bool, detail: str):
        CRITERIA[number] = (bool(passed), detail)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        passed, detail = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
