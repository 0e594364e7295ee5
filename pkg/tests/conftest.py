"""Shared fixtures: canonical meshes, a randomized Assumption-1 corpus and an isolated settings env."""

import random
from pathlib import Path
from typing import Callable

import pytest

from hdr.core.config import get_settings
from hdr.core.constants import ZERO_FORM
from hdr.core.enums import BoundaryMode
from hdr.models.hierarchy import RefinementDomains, contained_functions, refine_supports
from hdr.models.tensor import MultiIndex

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: corpus-scale checks (deselect with -m 'not slow')")


@pytest.fixture(autouse=True)
def _isolated_settings(monkeypatch):
    """Console-only logging and a fresh settings cache for every test."""
    monkeypatch.setenv("LOG_DIR", "")
    monkeypatch.setenv("HDR_THREADS", "1")
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def uniform_homogeneous() -> RefinementDomains:
    """p = 2, Homogeneous, 4×4 base mesh, no refinement."""
    return RefinementDomains.uniform(2, 4, BoundaryMode.HOMOGENEOUS)


@pytest.fixture
def two_function(uniform_homogeneous) -> RefinementDomains:
    """Ω₁ = supp β_(1,1) ∪ supp β_(3,3): one problematic pair at level 0."""
    return refine_supports(uniform_homogeneous, 0, [MultiIndex(1, 1), MultiIndex(3, 3)])


def diagonal_clusters(corners, degree: int = 2, intervals: int = 16) -> RefinementDomains:
    """Separated pairs (i, j) & (i+2, j+2) of level-0 supports, one problematic pair each."""
    domains = RefinementDomains.uniform(degree, intervals, BoundaryMode.HOMOGENEOUS)
    functions = []
    for i, j in corners:
        functions += [MultiIndex(i, j), MultiIndex(i + 2, j + 2)]
    return refine_supports(domains, 0, functions)


@pytest.fixture
def four_pairs() -> RefinementDomains:
    return diagonal_clusters([(3, 3), (3, 10), (10, 3), (10, 10)])


def random_domains(
    seed: int,
    degree: int = 2,
    intervals: int = 8,
    levels: int = 2,
    boundary_mode: BoundaryMode = BoundaryMode.HOMOGENEOUS,
    picks: int = 3,
) -> RefinementDomains:
    """
    Random domains satisfying Assumption 1.

    Level 0 refines the supports of random 0-forms; each further level refines
    random level-ℓ 0-forms whose supports already lie in Ω_ℓ.
    """
    rng = random.Random(seed)
    domains = RefinementDomains.uniform(degree, intervals, boundary_mode)
    for level in range(levels):
        if level == 0:
            candidates = sorted(domains.tensor_space(0, ZERO_FORM).indices())
        else:
            candidates = sorted(contained_functions(domains, level, ZERO_FORM, domains.omega(level)))
        if not candidates:
            break
        chosen = rng.sample(candidates, min(picks, len(candidates)))
        domains = refine_supports(domains, level, chosen)
    return domains


@pytest.fixture
def make_random_domains() -> Callable[..., RefinementDomains]:
    return random_domains
