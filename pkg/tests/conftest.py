import pytest

from gkexpand.expansion import build_combo, build_raw


@pytest.fixture(scope="session")
def combo8():
    """Deep combo expansion shared by the weight-statistics tests."""
    return build_combo(8)


@pytest.fixture(scope="session")
def combo4():
    return build_combo(4)


@pytest.fixture(scope="session")
def raw200():
    return build_raw(200)
