import pytest

from pscpr.constellation import build_16qam


@pytest.fixture(scope="session")
def qam16():
    return build_16qam()
