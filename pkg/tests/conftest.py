from pathlib import Path

import pytest

from wts.formats import load_grammar

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / name


@pytest.fixture
def grammar():
    def load(name: str):
        return load_grammar(FIXTURES / name)
    return load
