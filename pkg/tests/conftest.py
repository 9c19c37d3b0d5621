import asyncio
from pathlib import Path

import numpy as np
import pytest

from gridopt.case_io import CaseData
from gridopt.case_loader import fetch_text, read_case
from gridopt.network import Network, build_network

# Get package root
PACKAGE_ROOT = Path(__file__).parent.parent
CASES_DIR = Path(__file__).parent / "cases"
CACHE_DIR = Path(__file__).parent / ".case_cache"

PUBLIC_CASE_URL = "https://raw.githubusercontent.com/MATPOWER/matpower/master/data/{name}.m"


@pytest.fixture
def cases_dir() -> Path:
    """Directory holding the bundled case files."""
    return CASES_DIR


@pytest.fixture
def load_fixture_case():
    """Factory fixture for loading a bundled case by name."""

    def _load(name: str) -> CaseData:
        path = CASES_DIR / f"{name}.m"
        if not path.exists():
            pytest.skip(f"Case {name} not bundled")
        return read_case(path)

    return _load


@pytest.fixture
def case9(load_fixture_case) -> CaseData:
    return load_fixture_case("case9")


@pytest.fixture
def case14(load_fixture_case) -> CaseData:
    return load_fixture_case("case14")


@pytest.fixture
def case5(load_fixture_case) -> CaseData:
    return load_fixture_case("case5")


@pytest.fixture
def net9(case9) -> Network:
    return build_network(case9)


@pytest.fixture
def net14(case14) -> Network:
    return build_network(case14)


@pytest.fixture(scope="session")
def public_case():
    """Factory fixture fetching a public MATPOWER case into a local cache.

    Tests using it are skipped when the download fails.
    """

    def _fetch(name: str) -> CaseData:
        path = CACHE_DIR / f"{name}.m"
        if not path.exists():
            try:
                text = asyncio.run(fetch_text(PUBLIC_CASE_URL.format(name=name)))
            except Exception as err:  # noqa: BLE001
                pytest.skip(f"Cannot download {name}: {err}")
            CACHE_DIR.mkdir(exist_ok=True)
            path.write_text(text, encoding="utf-8")
        return read_case(path)

    return _fetch


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)
