from importlib import resources
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def example_yaml() -> str:
    return resources.files("primadkit").joinpath("data/example_metadata.yaml").read_text(encoding="utf-8")


@pytest.fixture(autouse=True)
def _no_probe_leak(monkeypatch):
    # tests opt in to probing explicitly
    monkeypatch.delenv("PRIMADKIT_NO_PROBE", raising=False)
    monkeypatch.delenv("PRIMADKIT_NO_GIT", raising=False)
    monkeypatch.delenv("PRIMADKIT_BACKEND", raising=False)
