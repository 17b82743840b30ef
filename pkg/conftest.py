"""Shared fixtures for the test suite."""

import os
import tempfile
from pathlib import Path

# Keep test runs from writing into the working tree's logs/ directory.
os.environ.setdefault("QUASIBOSON_LOG_FILE", str(Path(tempfile.gettempdir()) / "quasiboson-tests.log"))

import pytest

from src.phi_family import UnitarySpec, build_phi_family

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def fermionic_two_mode_family():
    """epsilon=+1, m=2, d_a=d_b=4, two modes, seeded unitaries."""
    seeded = UnitarySpec.seeded(7)
    return build_phi_family(4, 4, 2, 2, seeded, seeded, seeded, epsilon=1)


@pytest.fixture
def bosonic_two_mode_family():
    """epsilon=-1, m=2, d_a=d_b=4, two modes, seeded unitaries."""
    seeded = UnitarySpec.seeded(11)
    return build_phi_family(4, 4, 2, 2, seeded, seeded, seeded, epsilon=-1)
