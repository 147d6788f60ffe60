from __future__ import annotations

import numpy as np
import pytest

from gaprenorm.diffeo import Diffeo
from gaprenorm.gapmap import GapMap, Sign, affine_gap_map, build_gap_map
from gaprenorm.renorm import Combinatorics
from gaprenorm.search import DeepMap, deep_map

GOLDEN_MEAN_TARGET = Combinatorics.repeat(Sign.MINUS, 1, 8)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def affine_example() -> GapMap:
    return affine_gap_map(0.5, 0.5, 0.3, m=8)


@pytest.fixture
def smooth_example() -> GapMap:
    """Small smooth perturbation of the affine example, same combinatorics."""
    phi_L = Diffeo([0.1, -0.05, 0.02, 0.0, 0.0, 0.0, 0.0, 0.0])
    phi_R = Diffeo([-0.08, 0.04, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    return build_gap_map(0.5, 0.5, 0.3, phi_L, phi_R)


@pytest.fixture
def make_diffeo(rng: np.random.Generator):
    """Random Diffeo with ||eta||_C0 <= c0 and decaying coefficients."""

    def make(m: int = 16, c0: float = 2.0) -> Diffeo:
        coeffs = rng.standard_normal(m) / (1.0 + np.arange(m)) ** 2
        coeffs *= c0 / np.sum(np.abs(coeffs))
        return Diffeo(coeffs)

    return make


@pytest.fixture(scope="session")
def deep_affine() -> DeepMap:
    """Maps of levels 0..8 along ((-,1))^8 from slopes 0.99, each level centred in its window."""
    identity = Diffeo.identity(8)
    return deep_map(0.99, 0.99, identity, identity, GOLDEN_MEAN_TARGET, 8, m=8)
