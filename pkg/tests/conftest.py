import os
import sys

import pytest

# Add the project root directory to the Python path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from utils.config import ConfigLoader  # noqa: E402
from utils.decorators import _log_once_tracker  # noqa: E402


@pytest.fixture(autouse=True)
def reset_shared_state():
    """
    Forget cached configuration files and log-once messages so tests do not leak into each other.
    """
    ConfigLoader.reset()
    _log_once_tracker.clear()
    yield
    ConfigLoader.reset()


@pytest.fixture
def seed() -> int:
    return 20240611
