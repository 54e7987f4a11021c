from __future__ import annotations

import numpy as np
import pytest

from conftest import I2, X, Z, pauli_ma, projectors
from steerkit import linop
from steerkit.assemblage import (
    MeasurementAssemblage,
    Povm,
    StateAssemblage,
    assemblage_from_state,
    dress,
    enumerate_deterministic,
    pure_state_assemblage,
    schmidt_vector,
    seo,
    trivial_ma,
    validate_ma,
    validate_sa,
)
from steerkit.harness.sampling import InstanceSpec, random_state, sample_random_ma
from steerkit.linop import ValidationError
from steerkit.measures import steering_robustness


def _rand_ma(rng, d=2, n_x=2, n_a=2):
    return sample_random_ma(InstanceSpec(d, n_x, n_a), rng)


def test_validate_ma_examples():
    k0, k1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    assert validate_ma(MeasurementAssemblage([[k0, k1]]))
    rep = validate_ma(MeasurementAssemblage([[k0, k0]]))
    assert not rep and rep.residuals["normalization"] > 0.5
    assert validate_ma(pauli_ma(X, Z))


def test_validate_ma_negativity():
    rep = validate_ma(MeasurementAssemblage([[np.diag([1.2, 0.0]), np.diag([-0.2, 1.0])]]))
    assert not rep and rep.residuals["negativity"] == pytest.approx(0.2)


def test_validate_sa_examples(rng):
    ma = pauli_ma(X, Z)
    assert validate_sa(dress(ma, I2 / 2))
    els = np.array(dress(ma, I2 / 2).elements)
    els[1] = np.array(dress(ma, np.diag([0.9, 0.1])).elements[1])
    assert not validate_sa(StateAssemblage(els, I2 / 2))
    for _ in range(10):
        assert validate_sa(assemblage_from_state(random_state(4, rng), _rand_ma(rng)))


def test_assemblage_from_state_product(rng):
    r, t = random_state(2, rng), random_state(2, rng)
    ma = _rand_ma(rng)
    sa = assemblage_from_state(np.kron(r, t), ma)
    for x in range(2):
        for a in range(2):
            assert np.allclose(sa.elements[x, a], np.trace(r @ ma.elements[x, a]) * t)
    assert steering_robustness(sa).value < 1e-7


def test_assemblage_from_state_max_entangled():
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    ma = pauli_ma(X, Z)
    sa = assemblage_from_state(np.outer(phi, phi), ma)
    assert np.allclose(sa.elements, np.swapaxes(ma.elements, -1, -2) / 2, atol=1e-12)


def test_assemblage_from_state_trivial_ma(rng):
    rho = random_state(6, rng)
    sa = assemblage_from_state(rho, trivial_ma(2, 2, 3))
    rho_b = linop.partial_trace(rho, (2, 3), keep="B")
    assert np.allclose(sa.elements, rho_b / 3)


def test_assemblage_from_state_dimension_error():
    with pytest.raises(ValidationError):
        assemblage_from_state(np.eye(5) / 5, pauli_ma(X, Z))


def test_pure_state_assemblage_examples(rng):
    ma = pauli_ma(X, Z)
    c = np.ones(2) / np.sqrt(2)
    assert np.allclose(pure_state_assemblage(c, ma).elements, np.swapaxes(ma.elements, -1, -2) / 2)
    prod = pure_state_assemblage([1.0, 0.0], ma)
    assert steering_robustness(prod).value < 1e-7
    c = np.sqrt([0.8, 0.2])
    psi = schmidt_vector(c)
    ref = assemblage_from_state(np.outer(psi, psi.conj()), ma)
    assert np.abs(pure_state_assemblage(c, ma).elements - ref.elements).max() < 1e-10
    with pytest.raises(ValidationError):
        pure_state_assemblage([-0.6, 0.8], ma)


@pytest.mark.parametrize("d", [2, 3])
def test_pure_state_assemblage_matches_bipartite(rng, d):
    for _ in range(50):
        ma = _rand_ma(rng, d, 2, 2)
        c = np.sqrt(rng.dirichlet(np.ones(d)))
        psi = schmidt_vector(c)
        ref = assemblage_from_state(np.outer(psi, psi.conj()), ma)
        assert np.abs(pure_state_assemblage(c, ma).elements - ref.elements).max() < 1e-10


def test_dress_examples(rng):
    ma = _rand_ma(rng)
    assert np.allclose(dress(ma, I2 / 2).elements, np.asarray(ma.elements) / 2)
    psi = np.array([0.6, 0.8j])
    sa = dress(ma, np.outer(psi, psi.conj()))
    for op in sa.elements.reshape(-1, 2, 2):
        assert linop.rank(op) <= 1
        assert abs(np.vdot(psi, op @ psi) - np.trace(op)) < 1e-10
    with pytest.raises(ValidationError):
        dress(ma, np.eye(3) / 3)


@pytest.mark.parametrize("d,n_x,n_a", [(2, 2, 2), (3, 3, 2), (2, 3, 3)])
def test_seo_dress_round_trip(rng, d, n_x, n_a):
    for _ in range(20):
        ma = _rand_ma(rng, d, n_x, n_a)
        rho = random_state(d, rng)
        b, rho_b, v = seo(dress(ma, rho))
        assert np.abs(b.elements - ma.elements).max() < 1e-8
        assert np.abs(rho_b - rho).max() < 1e-12
        assert np.allclose(v, np.eye(d))


def test_seo_max_entangled_is_transpose():
    ma = pauli_ma(X, Z)
    phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    b = seo(assemblage_from_state(np.outer(phi, phi), ma)).ma
    assert np.allclose(b.elements, np.swapaxes(ma.elements, -1, -2))


def test_seo_rank_one():
    ma = pauli_ma(X, Z)
    sa = dress(ma, np.diag([1.0, 0.0]))
    b, _, v = seo(sa)
    assert b.dim == 1 and v.shape == (2, 1)
    assert np.allclose(b.elements[..., 0, 0].sum(axis=1), 1)
    assert np.all(b.elements[..., 0, 0].real >= -1e-12)
    assert np.allclose(b.elements[1, :, 0, 0], [1.0, 0.0])


def test_seo_rank_deficient_is_valid(rng):
    for _ in range(10):
        ma = _rand_ma(rng, 3, 2, 2)
        rho = random_state(3, rng, rank=2)
        b, _, v = seo(dress(ma, rho))
        assert b.dim == 2 and validate_ma(b)
        # compression of the original measurement to the range, whitened
        assert np.allclose(v.conj().T @ v, np.eye(2))


def test_enumerate_deterministic_examples():
    assert enumerate_deterministic(1, 2).n_strategies == 2
    t = enumerate_deterministic(2, 2)
    assert t.n_strategies == 4
    assert np.allclose(t.table.sum(axis=1), 1)
    assert enumerate_deterministic(3, 3).n_strategies == 27
    # mixed radix, setting 0 fastest
    assert t.answers.tolist() == [[0, 0], [1, 0], [0, 1], [1, 1]]
    with pytest.raises(ValidationError):
        enumerate_deterministic(7, 10, cap=10**6)


def test_deterministic_one_hot():
    t = enumerate_deterministic(3, 2).table
    assert set(np.unique(t)) == {0.0, 1.0}
    assert np.all(t.sum(axis=1) == 1)


def test_ragged_padding():
    ma = MeasurementAssemblage.from_settings([projectors(Z), [I2 / 3, I2 / 3, I2 / 3]])
    assert ma.elements.shape == (2, 3, 2, 2)
    assert np.allclose(ma.elements[0, 2], 0)
    assert validate_ma(ma)


def test_povm_views():
    p = Povm(projectors(X))
    assert p.n_outcomes == 2 and p.dim == 2
    assert p.as_assemblage().n_settings == 1
    assert np.allclose(pauli_ma(X, Z).povm(1).elements, projectors(Z))


def test_immutable():
    ma = pauli_ma(X, Z)
    with pytest.raises(ValueError):
        ma.elements[0, 0, 0, 0] = 3.0


def test_transpose_assemblage(rng):
    sa = dress(_rand_ma(rng), random_state(2, rng))
    st = sa.transpose()
    assert np.allclose(st.elements, np.swapaxes(sa.elements, -1, -2))
    assert validate_sa(st)
