import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for oracles.py

import clearbot
from clearbot.world import load_map

ACCEPTANCE_RESULTS = []  # (verdict, criterion name), printed after the run


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for verdict, name in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{verdict}  {name}")


@pytest.fixture(scope="session")
def hallway():
    return load_map(clearbot.builtin_map_text("hallway"))


@pytest.fixture(scope="session")
def hallway_known():
    return load_map(clearbot.builtin_map_text("hallway_known"))


@pytest.fixture(scope="session")
def intent_room():
    return load_map(clearbot.builtin_map_text("intent"))


@pytest.fixture()
def open_map():
    rows = ["." * 40 for _ in range(40)]
    return load_map("res=0.1 origin= 0 0 0\n" + "\n".join(rows) + "\n")
