import numpy as np
import pytest

from infnet import pipeline
from infnet.presets import preset


@pytest.fixture(scope="session")
def spacecraft_run():
    """One certified design reused by several test modules."""
    cfg = preset("spacecraft-unknownD")
    return cfg, pipeline.run_pipeline(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """Store (passed, detail) per acceptance criterion; several calls are and-ed."""

    def rec(number, passed, detail=""):
        prev = ACCEPTANCE.get(number)
        if prev is not None:
            passed = passed and prev[0]
            detail = f"{prev[1]}; {detail}" if detail else prev[1]
        ACCEPTANCE[number] = (bool(passed), detail)

    return rec


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
