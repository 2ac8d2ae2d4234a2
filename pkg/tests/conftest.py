import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gen import example_tree, toy_corpus


@pytest.fixture(scope="session")
def example():
    return example_tree()


@pytest.fixture(scope="session")
def corpus50():
    return toy_corpus()
