import os
import sys

import pytest

HERE = os.path.dirname(__file__)
sys.path.insert(0, HERE)

from bhl.kripke.scenario import load_scenario  # noqa: E402

CORPUS = os.path.join(HERE, os.pardir, "src", "bhl", "corpus")


def corpus(name: str) -> str:
    return os.path.normpath(os.path.join(CORPUS, name))


@pytest.fixture
def load():
    return lambda name, **kw: load_scenario(corpus(name), **kw)
