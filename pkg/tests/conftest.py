from __future__ import annotations

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from steerkit.assemblage import MeasurementAssemblage  # noqa: E402

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def projectors(p: np.ndarray) -> list[np.ndarray]:
    return [(I2 + p) / 2, (I2 - p) / 2]


def pauli_ma(*paulis: np.ndarray) -> MeasurementAssemblage:
    return MeasurementAssemblage(np.array([projectors(p) for p in paulis]))


@pytest.fixture
def xz_ma() -> MeasurementAssemblage:
    return pauli_ma(X, Z)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20261015)
