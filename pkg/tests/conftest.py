"""Suite-wide fixtures."""
from __future__ import annotations

import json
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def band_geometry() -> dict:
    return json.loads((DATA_DIR / "band_geometry.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def realism_fixture() -> dict:
    return json.loads((DATA_DIR / "realism_fixture.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def caption_fixture() -> dict:
    return json.loads((DATA_DIR / "caption_fixture.json").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def parse_corpus() -> list[dict]:
    return json.loads((DATA_DIR / "parse_corpus.json").read_text(encoding="utf-8"))
