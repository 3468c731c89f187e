"""Pytest configuration and fixtures."""

import os

# Point pydantic-settings to load .env.test instead of .env
# This must happen BEFORE any app imports because app.config is loaded at import time
os.environ["ENV_FILE"] = ".env.test"
os.environ["ENVIRONMENT"] = "test"

# All imports below must come after environment setup
from pathlib import Path

import pytest
from hypothesis import settings

from app.channel import ChannelInstance, sample_instance
from app.models import Scheme
from app.schemes import build_orthogonal_scheme
from app.verify import scheme_to_document

REPO_ROOT = Path(__file__).parent.parent

# Exact elimination on Fractions has no useful per-example time bound
settings.register_profile("exact", deadline=None)
settings.load_profile("exact")


@pytest.fixture(scope="session", autouse=True)
def verify_test_environment() -> None:
    """Verify that the settings were loaded for the test environment."""
    from app.config import config

    assert config.ENVIRONMENT == "test"


# ============================================================================
# Instance Fixtures
# ============================================================================


@pytest.fixture
def k3_instance() -> ChannelInstance:
    """Three users, three channel uses."""
    return sample_instance(3, 3, seed=0)


@pytest.fixture
def k4_instance() -> ChannelInstance:
    """Four users, four channel uses."""
    return sample_instance(4, 4, seed=1)


@pytest.fixture
def k4_block_instance() -> ChannelInstance:
    """Four users, three channel uses, coherence length 2."""
    return sample_instance(4, 3, t=2, seed=2)


# ============================================================================
# Scheme Fixtures
# ============================================================================


@pytest.fixture
def orthogonal_scheme(k4_instance: ChannelInstance) -> Scheme:
    """One coordinate per user."""
    return build_orthogonal_scheme(4, k4_instance.l, 1, 1)


# ============================================================================
# File Fixtures
# ============================================================================


@pytest.fixture
def instance_file(tmp_path: Path, k4_instance: ChannelInstance) -> Path:
    path = tmp_path / "instance.json"
    path.write_text(k4_instance.model_dump_json())
    return path


@pytest.fixture
def scheme_file(tmp_path: Path, orthogonal_scheme: Scheme) -> Path:
    path = tmp_path / "scheme.json"
    path.write_text(scheme_to_document(orthogonal_scheme).model_dump_json())
    return path


@pytest.fixture
def patterns_dir() -> Path:
    return REPO_ROOT / "patterns"
