from __future__ import annotations

import zlib

import numpy as np
import pytest

from hjrare.model import WorkingDomain, double_well, sis

N_CASES = 200


@pytest.fixture(scope="session")
def dw():
    return double_well()


@pytest.fixture(scope="session")
def dw_domain():
    return WorkingDomain(-1.42, 1.42, 1.0, 0.25)


@pytest.fixture(scope="session")
def sis_model():
    return sis()


@pytest.fixture(scope="session")
def sis_domain():
    return WorkingDomain(0.5, 5.0 / 6.0, 2.0 / 3.0, 0.5)


def rng_for(*key) -> np.random.Generator:
    """Deterministic generator for a property test."""
    return np.random.default_rng([zlib.crc32(k.encode()) if isinstance(k, str) else k for k in key])
