import pytest

from pathlib import Path

from knowmap.pipeline import build_bundle, load_config

REPO_ROOT = Path(__file__).resolve().parent.parent
DEMO_DIR = REPO_ROOT / "demo"


@pytest.fixture(scope="session")
def demo_config():
    return load_config(DEMO_DIR / "config.toml")


@pytest.fixture(scope="session")
def demo_bundle(demo_config):
    """One full demo build shared by the whole suite."""
    return build_bundle(demo_config)


@pytest.fixture(scope="session")
def demo_snapshot(demo_bundle):
    from knowmap.service import build_snapshot

    return build_snapshot(demo_bundle)
