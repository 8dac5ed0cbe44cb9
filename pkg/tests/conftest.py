import pytest

from allocsim.cli import default_suite_path
from allocsim.model import load_suite_path


@pytest.fixture(scope="session")
def suite():
    return load_suite_path(default_suite_path())


@pytest.fixture(scope="session")
def suite_path():
    return default_suite_path()
