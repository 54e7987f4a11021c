"""Local filters: Kraus maps followed by post-selection.

A filter acts as ``rho -> E(rho) / tr E(rho)``.  Three classes are supported:
trace-non-increasing CP maps, channels, and the positive but not completely
positive maps obtained by composing a CP map with the transpose,
``E(X) = sum_k K_k X^T K_k^dagger``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import numpy.typing as npt

from steerkit import linop
from steerkit.assemblage import MeasurementAssemblage, StateAssemblage, assemblage_from_state
from steerkit.linop import ValidationError, as_rng

BLOCK_THRESHOLD = 1e-12
CLASS_TOL = 1e-9

__all__ = [
    "MapClass",
    "FilterMap",
    "FilterOutcome",
    "FilterBlocked",
    "apply_to_state",
    "apply_to_assemblage",
    "adjoint_probabilities",
    "optimal_lf1",
    "random_filter",
    "alice_filtered_assemblage",
    "alice_filtered_pure",
    "alice_filtered_vector",
    "filtered_measurement",
]


class MapClass(str, Enum):
    CPTNI = "CPTNI"
    CPTP = "CPTP"
    POSITIVE_NON_CP = "POSITIVE_NON_CP"


class FilterBlocked(ValidationError):
    """Post-selection probability below :data:`BLOCK_THRESHOLD`."""


@dataclass(frozen=True)
class FilterMap:
    """Kraus representation ``(n_kraus, dim_out, dim_in)`` with a class tag.

    For ``POSITIVE_NON_CP`` the Kraus list is the CP base that is composed
    with the transpose.
    """

    kraus: np.ndarray
    map_class: MapClass = MapClass.CPTNI

    def __post_init__(self) -> None:
        k = np.array(self.kraus, dtype=np.complex128)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3:
            raise ValidationError(f"Kraus operators must form a (k, d_out, d_in) array, got {k.shape}")
        k.setflags(write=False)
        object.__setattr__(self, "kraus", k)
        object.__setattr__(self, "map_class", MapClass(self.map_class))
        s = self.kraus_sum()
        w = linop.eig_hermitian(s)[0]
        if self.map_class is MapClass.CPTP:
            if linop.maxabs(s - np.eye(self.dim_in)) > CLASS_TOL:
                raise ValidationError("CPTP filter requires sum K^dag K = 1")
        elif w[0] > 1 + CLASS_TOL:
            raise ValidationError(f"trace-increasing filter (largest eigenvalue {w[0]:.3g})")

    @property
    def dim_in(self) -> int:
        return self.kraus.shape[2]

    @property
    def dim_out(self) -> int:
        return self.kraus.shape[1]

    @property
    def n_kraus(self) -> int:
        return self.kraus.shape[0]

    @property
    def transpose(self) -> bool:
        return self.map_class is MapClass.POSITIVE_NON_CP

    @classmethod
    def identity(cls, dim: int) -> FilterMap:
        return cls(np.eye(dim)[None], MapClass.CPTP)

    def kraus_sum(self) -> np.ndarray:
        k = self.kraus
        return linop.hermitize(np.einsum("kji,kjl->il", k.conj(), k))

    def __call__(self, x: npt.ArrayLike) -> np.ndarray:
        """Apply the map to an operator or a stack of operators."""
        x = np.asarray(x, dtype=np.complex128)
        if self.transpose:
            x = np.swapaxes(x, -1, -2)
        k = self.kraus
        return np.einsum("kij,...jl,kml->...im", k, x, k.conj())

    def adjoint(self, y: npt.ArrayLike) -> np.ndarray:
        """Heisenberg-picture map ``E^dagger`` (also on stacks)."""
        y = np.asarray(y, dtype=np.complex128)
        k = self.kraus
        out = np.einsum("kji,...jl,klm->...im", k.conj(), y, k)
        if self.transpose:
            out = np.swapaxes(out, -1, -2)
        return out

    def effect(self) -> np.ndarray:
        """``E^dagger(1)``: pass probability of a state is ``tr[effect rho]``."""
        return linop.hermitize(self.adjoint(np.eye(self.dim_out)))

    def compose_transpose(self) -> FilterMap:
        return FilterMap(self.kraus, MapClass.POSITIVE_NON_CP)


@dataclass(frozen=True)
class FilterOutcome:
    output: np.ndarray
    pass_probability: float


def _pass(f: FilterMap, rho: np.ndarray) -> tuple[np.ndarray, float]:
    if rho.shape[-1] != f.dim_in:
        raise ValidationError(f"filter acts on dimension {f.dim_in}, state has {rho.shape[-1]}")
    out = f(rho)
    p = float(np.trace(out).real)
    if p < BLOCK_THRESHOLD:
        raise FilterBlocked(f"pass probability {p:.3g} below {BLOCK_THRESHOLD}")
    return out, p


def apply_to_state(f: FilterMap, rho: npt.ArrayLike) -> FilterOutcome:
    rho = linop.check_hermitian(rho, tol=1e-10)
    out, p = _pass(f, rho)
    return FilterOutcome(linop.hermitize(out / p), p)


def apply_to_assemblage(f: FilterMap, sa: StateAssemblage) -> tuple[StateAssemblage, float]:
    """Filter every element and renormalize by the pass probability of ``rho_B``."""
    red, p = _pass(f, sa.reduced_state)
    els = linop.hermitize(f(sa.elements) / p)
    return StateAssemblage(els, linop.hermitize(red / p)), p


def adjoint_probabilities(f: FilterMap, ma: MeasurementAssemblage, rho: npt.ArrayLike) -> np.ndarray:
    """Filtered statistics ``p(a|x) = tr[E^dag(M_{a|x}) rho] / tr[E^dag(1) rho]``."""
    rho = linop.check_hermitian(rho, tol=1e-10)
    if ma.dim != f.dim_out or rho.shape[0] != f.dim_in:
        raise ValidationError("dimension mismatch between filter, assemblage and state")
    den = float(np.trace(f.effect() @ rho).real)
    if den < BLOCK_THRESHOLD:
        raise FilterBlocked(f"pass probability {den:.3g} below {BLOCK_THRESHOLD}")
    num = np.einsum("xaij,ji->xa", f.adjoint(ma.elements), rho).real
    return num / den


def optimal_lf1(sa: StateAssemblage, target_rho: npt.ArrayLike, range_tol: float = 1e-8) -> FilterMap:
    """Single-Kraus filter steering ``sa`` to the dressing of its SEO by ``target_rho``.

    ``K = c * target^{1/2} zeta^{-1/2}`` with ``zeta`` the reduced state of
    ``sa`` and ``c`` the inverse operator norm, so ``K^dag K <= 1`` holds
    with equality on the top singular direction.
    """
    rho = linop.check_hermitian(target_rho, tol=1e-10)
    zeta = sa.reduced_state
    outside = rho - linop.range_projector(zeta) @ rho
    if linop.maxabs(outside) > range_tol * max(1.0, linop.maxabs(rho)):
        raise ValidationError("target state is not supported on the range of the reduced state")
    k = linop.sqrt_psd(rho) @ linop.pinv_sqrt_on_range(zeta)
    nrm = np.linalg.norm(k, 2)
    if nrm <= 0:
        raise ValidationError("target state is zero")
    return FilterMap((k / nrm)[None], MapClass.CPTNI)


def random_filter(
    dim: int,
    n_kraus: int,
    map_class: MapClass | str = MapClass.CPTNI,
    seed=None,
    dim_out: int | None = None,
) -> FilterMap:
    """Gaussian Kraus operators, rescaled to the requested class.

    CPTNI (and the transpose-composed class) rescales jointly so that
    ``||sum K^dag K||`` is uniform in ``[0.2, 1]``; CPTP normalizes
    ``sum K^dag K`` to the identity.
    """
    if n_kraus < 1:
        raise ValidationError("n_kraus must be at least 1")
    map_class = MapClass(map_class)
    rng = as_rng(seed)
    do = dim if dim_out is None else dim_out
    k = rng.standard_normal((n_kraus, do, dim)) + 1j * rng.standard_normal((n_kraus, do, dim))
    s = linop.hermitize(np.einsum("kji,kjl->il", k.conj(), k))
    if map_class is MapClass.CPTP:
        w, v = np.linalg.eigh(s)
        k = k @ ((v / np.sqrt(w)) @ v.conj().T)
    else:
        target = rng.uniform(0.2, 1.0)
        k = k * np.sqrt(target / np.linalg.eigvalsh(s)[-1])
    return FilterMap(k, map_class)


# ---------------------------------------------------------------------------
# filters on the measuring side of a bipartite state


def alice_filtered_assemblage(f: FilterMap, rho_ab: npt.ArrayLike, ma: MeasurementAssemblage) -> StateAssemblage:
    """Assemblage after filtering the first subsystem of ``rho_ab``.

    Computed as ``assemblage_from_state((E x id)(rho_AB) / p, ma)``.  Only
    defined for CP filters: the transpose-composed class is not positive on
    the bipartite space.
    """
    if f.transpose:
        raise ValidationError("the bipartite action needs a completely positive filter")
    rho_ab = np.asarray(rho_ab, dtype=np.complex128)
    d_a = f.dim_in
    d_b = rho_ab.shape[0] // d_a
    kk = np.stack([np.kron(k, np.eye(d_b)) for k in f.kraus])
    out = np.einsum("kij,jl,kml->im", kk, rho_ab, kk.conj())
    p = float(np.trace(out).real)
    if p < BLOCK_THRESHOLD:
        raise FilterBlocked(f"pass probability {p:.3g} below {BLOCK_THRESHOLD}")
    return assemblage_from_state(linop.hermitize(out / p), ma)


def alice_filtered_pure(f: FilterMap, schmidt_coeffs: npt.ArrayLike, ma: MeasurementAssemblage) -> StateAssemblage:
    """Closed form for a pure state in Schmidt form.

    ``sigma'_{a|x} = [rho^{1/2} E^dag(A_{a|x}) rho^{1/2}]^T / p`` with
    ``rho = diag(c^2)``, ``p = tr[rho E^dag(1)]`` and the transpose taken in
    the Schmidt basis.  Valid for every positive filter.
    """
    c = np.asarray(schmidt_coeffs, dtype=float)
    if np.any(c < 0) or c.size != ma.dim:
        raise ValidationError("Schmidt coefficients must be non-negative, one per dimension")
    rho = np.diag(c ** 2).astype(complex)
    eff = f.adjoint(ma.elements)
    p = float(np.trace(f.effect() @ rho).real)
    if p < BLOCK_THRESHOLD:
        raise FilterBlocked(f"pass probability {p:.3g} below {BLOCK_THRESHOLD}")
    sig = c[:, None] * eff * c[None, :] / p
    sig = np.swapaxes(sig, -1, -2)
    return StateAssemblage(linop.hermitize(sig), linop.hermitize((c[:, None] * f.effect() * c[None, :] / p).T))


def alice_filtered_vector(f: FilterMap, psi: npt.ArrayLike, ma: MeasurementAssemblage) -> StateAssemblage:
    """Closed-form Alice-side filtering for an arbitrary pure state vector.

    The vector is brought to Schmidt form by a singular value decomposition;
    :func:`alice_filtered_pure` is applied in that frame and the result is
    rotated back to Bob's computational basis.
    """
    psi = np.asarray(psi, dtype=np.complex128).ravel()
    d_a = ma.dim
    mat = psi.reshape(d_a, -1)
    if mat.shape[1] != d_a:
        raise ValidationError("the closed form needs equal local dimensions")
    u, s, wh = np.linalg.svd(mat)
    bob = wh.T  # column k is Bob's k-th Schmidt vector
    ma_s = MeasurementAssemblage(u.conj().T @ ma.elements @ u)
    f_s = FilterMap(u.conj().T @ f.kraus @ u, f.map_class) if not f.transpose else FilterMap(
        u.conj().T @ f.kraus @ u.conj(), f.map_class
    )
    sig = alice_filtered_pure(f_s, s / np.linalg.norm(s), ma_s)
    els = bob @ sig.elements @ bob.conj().T
    red = bob @ sig.reduced_state @ bob.conj().T
    return StateAssemblage(linop.hermitize(els), linop.hermitize(red))


def filtered_measurement(f: FilterMap, ma: MeasurementAssemblage, rank_tol: float = linop.RANK_TOL):
    """Measurement seen through a filter, normalized on the range of ``E^dag(1)``.

    Returns ``(C, V)`` with ``C_{a|x} = V^dag E^-1/2 E^dag(M_{a|x}) E^-1/2 V``
    where ``E = E^dag(1)`` and ``V`` is an isometry onto its range.  The
    statistics of ``C`` on the compressed state reproduce
    :func:`adjoint_probabilities`.
    """
    if ma.dim != f.dim_out:
        raise ValidationError("filter output dimension must match the measurement")
    eff = f.effect()
    w, v = linop.range_basis(eff, rank_tol)
    if w.size == 0:
        raise FilterBlocked("filter blocks every input")
    s = 1.0 / np.sqrt(w)
    c = s[:, None] * (v.conj().T @ f.adjoint(ma.elements) @ v) * s[None, :]
    return MeasurementAssemblage(linop.hermitize(c)), v
