import os
import sys

import pytest

HERE = os.path.dirname(__file__)
DATA = os.path.join(HERE, "data")
sys.path.insert(0, HERE)


def data_path(name):
    return os.path.join(DATA, name)


@pytest.fixture
def load():
    from insep.io import parse_input

    return lambda name: parse_input(data_path(name))


