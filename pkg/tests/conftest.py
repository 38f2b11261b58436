import time

import numpy as np
import pytest

from phoneslip.evaluation import run_full_matrix
from phoneslip.featuredb import build_database
from phoneslip.synthgen import generate_dataset

ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def default_traces():
    return generate_dataset(20, 42)


@pytest.fixture(scope="session")
def default_matrix(default_traces):
    return build_database(default_traces)


SANITY_SEEDS = (42, 43, 44)


@pytest.fixture(scope="session")
def seed_tables(default_matrix):
    """Default full-matrix run per master seed, each on data generated from that seed."""
    tables = {}
    for seed in SANITY_SEEDS:
        matrix = default_matrix if seed == 42 else build_database(generate_dataset(20, seed))
        start = time.perf_counter()
        table = run_full_matrix(matrix, master_seed=seed)
        tables[seed] = (table, time.perf_counter() - start)
    return tables


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number, title = marker.args
        status = {"passed": "PASS", "failed": "FAIL"}.get(report.outcome, "SKIP")
        ACCEPTANCE_LINES[number] = (status, title)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        status, title = ACCEPTANCE_LINES[number]
        terminalreporter.write_line(f"criterion {number}: {status} {title}")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")
