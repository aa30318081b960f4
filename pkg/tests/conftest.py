import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from infomarket.scenario import load_scenario  # noqa: E402


@pytest.fixture(autouse=True)
def _run_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("INFOMARKET_RUN_DIR", str(tmp_path / "runs"))


@pytest.fixture(scope="session")
def factcheck():
    return load_scenario("factcheck")


@pytest.fixture(scope="session")
def legume():
    return load_scenario("legume")


@pytest.fixture(scope="session")
def s6():
    return load_scenario("oversight-s6")


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    verdicts = getattr(acceptance, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for n in sorted(verdicts):
            terminalreporter.write_line(verdicts[n])
