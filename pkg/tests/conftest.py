from __future__ import annotations

import sys
from pathlib import Path

import pytest

from homearena.scenario import instantiate_world, parse_scenario

sys.path.insert(0, str(Path(__file__).parent))  # make helpers importable

REPO_ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"
CRACKER_PATH = SCENARIO_DIR / "cracker_box.json"
DOORBELL_PATH = SCENARIO_DIR / "doorbell_greeting.json"
DOORBELL_SCRIPT_PATH = SCENARIO_DIR / "doorbell_greeting.script.json"


@pytest.fixture(scope="session")
def cracker_text() -> bytes:
    return CRACKER_PATH.read_bytes()


@pytest.fixture(scope="session")
def cracker_spec(cracker_text):
    return parse_scenario(cracker_text)


@pytest.fixture(scope="session")
def doorbell_spec():
    return parse_scenario(DOORBELL_PATH.read_bytes())


@pytest.fixture()
def cracker_world(cracker_spec):
    return instantiate_world(cracker_spec)
