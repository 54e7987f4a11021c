"""Seeded random instances: measurement assemblages, states, state assemblages."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from steerkit import linop
from steerkit.linop import as_rng
from steerkit.assemblage import MeasurementAssemblage, StateAssemblage, assemblage_from_state


@dataclass(frozen=True)
class InstanceSpec:
    """Shape of a random instance.

    ``rank`` limits the rank of sampled states (``None`` for full rank);
    ``pure`` makes the bipartite state behind a state assemblage pure.
    """

    dim: int = 2
    n_settings: int = 2
    n_outcomes: int = 2
    rank: int | None = None
    pure: bool = False

    def __post_init__(self) -> None:
        if min(self.dim, self.n_settings, self.n_outcomes) < 1:
            raise linop.ValidationError("dimensions must be positive")
        if self.rank is not None and not 1 <= self.rank <= self.dim:
            raise linop.ValidationError("rank must lie in [1, dim]")


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    if d == 1:
        return np.ones((1, 1), dtype=complex)
    return unitary_group.rvs(d, random_state=rng)


def random_state(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt (Ginibre) random state of the given rank."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ g.conj().T
    return linop.hermitize(rho / np.trace(rho).real)


def random_pure_state(d: int, rng: np.random.Generator) -> np.ndarray:
    return random_state(d, rng, rank=1)


def random_povm_projective(d: int, n_a: int, rng: np.random.Generator) -> np.ndarray:
    """Rotated computational-basis projectors, coarse-grained into ``n_a`` bins.

    Basis vector ``j`` goes to outcome ``j mod n_a``; outcomes beyond ``d``
    receive zero operators.
    """
    u = random_unitary(d, rng)
    out = np.zeros((n_a, d, d), dtype=complex)
    for j in range(d):
        v = u[:, j]
        out[j % n_a] += np.outer(v, v.conj())
    return out


def sample_random_ma(spec: InstanceSpec, seed, visibility: float | None = None) -> MeasurementAssemblage:
    """Random projective settings mixed with white noise.

    Each setting has its own visibility drawn uniformly from ``[0.5, 1]``
    unless ``visibility`` is given.
    """
    rng = as_rng(seed)
    d, n_a = spec.dim, spec.n_outcomes
    els = []
    for _ in range(spec.n_settings):
        p = random_povm_projective(d, n_a, rng)
        v = rng.uniform(0.5, 1.0) if visibility is None else visibility
        els.append(v * p + (1 - v) * np.eye(d) / n_a)
    return MeasurementAssemblage(linop.hermitize(np.array(els)))


def sample_random_state(spec: InstanceSpec, seed) -> np.ndarray:
    return random_state(spec.dim, as_rng(seed), spec.rank)


def sample_random_bipartite(spec: InstanceSpec, seed) -> np.ndarray:
    """State on ``dim x dim``; pure if ``spec.pure``, else Hilbert-Schmidt of rank ``spec.rank``."""
    rng = as_rng(seed)
    dd = spec.dim * spec.dim
    return random_state(dd, rng, 1 if spec.pure else spec.rank)


def sample_random_sa(spec: InstanceSpec, seed) -> StateAssemblage:
    rng = as_rng(seed)
    rho = sample_random_bipartite(spec, rng)
    ma = sample_random_ma(spec, rng)
    return assemblage_from_state(rho, ma)


@dataclass(frozen=True)
class Sampler:
    """Per-trial generators derived from a master seed.

    Trial ``i`` uses ``numpy.random.default_rng([master_seed, i])``, so trials
    are reproducible independently of one another and of execution order.
    """

    master_seed: int
    spec: InstanceSpec = InstanceSpec()

    def rng(self, i: int) -> np.random.Generator:
        return np.random.default_rng([self.master_seed, i])

    def sub_seed(self, i: int) -> int:
        return int(np.random.SeedSequence([self.master_seed, i]).generate_state(1)[0])

    def ma(self, i: int) -> MeasurementAssemblage:
        return sample_random_ma(self.spec, self.rng(i))

    def sa(self, i: int) -> StateAssemblage:
        return sample_random_sa(self.spec, self.rng(i))

    def state(self, i: int) -> np.ndarray:
        return sample_random_state(self.spec, self.rng(i))
