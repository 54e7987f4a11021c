"""Measurement and state assemblages, steering-equivalent observables.

Assemblages are stored as complex arrays of shape ``(n_settings, n_outcomes,
dim, dim)``; element ``[x, a]`` is ``M_{a|x}`` (or ``sigma_{a|x}``).  Settings
with fewer outcomes are padded with zero operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
import numpy.typing as npt

from steerkit import linop
from steerkit.linop import ValidationError

STRATEGY_CAP = 10**6


def _frozen(a: npt.ArrayLike, ndim: int) -> np.ndarray:
    a = np.array(a, dtype=np.complex128)
    if a.ndim != ndim or a.shape[-1] != a.shape[-2]:
        raise ValidationError(f"expected {ndim}-d array of square operators, got {a.shape}")
    a.setflags(write=False)
    return a


def pad_ragged(settings: Sequence[Sequence[npt.ArrayLike]]) -> np.ndarray:
    """Stack a ragged list ``[[M_{0|x}, M_{1|x}, ...] for x]`` with zero padding."""
    n_a = max(len(row) for row in settings)
    d = np.asarray(settings[0][0]).shape[0]
    out = np.zeros((len(settings), n_a, d, d), dtype=np.complex128)
    for x, row in enumerate(settings):
        for a, op in enumerate(row):
            out[x, a] = op
    return out


@dataclass(frozen=True)
class Povm:
    elements: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", _frozen(self.elements, 3))

    @property
    def dim(self) -> int:
        return self.elements.shape[-1]

    @property
    def n_outcomes(self) -> int:
        return self.elements.shape[0]

    def as_assemblage(self) -> MeasurementAssemblage:
        return MeasurementAssemblage(self.elements[None])


@dataclass(frozen=True)
class MeasurementAssemblage:
    elements: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", _frozen(self.elements, 4))

    @classmethod
    def from_settings(cls, settings: Sequence[Sequence[npt.ArrayLike]]) -> MeasurementAssemblage:
        return cls(pad_ragged(settings))

    @property
    def dim(self) -> int:
        return self.elements.shape[-1]

    @property
    def n_settings(self) -> int:
        return self.elements.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.elements.shape[1]

    def povm(self, x: int) -> Povm:
        return Povm(self.elements[x])


@dataclass(frozen=True)
class StateAssemblage:
    elements: np.ndarray
    reduced_state: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        els = _frozen(self.elements, 4)
        object.__setattr__(self, "elements", els)
        rho = self.reduced_state
        if rho is None:
            rho = linop.hermitize(els.sum(axis=1).mean(axis=0))
        rho = np.array(rho, dtype=np.complex128)
        rho.setflags(write=False)
        object.__setattr__(self, "reduced_state", rho)

    @property
    def dim(self) -> int:
        return self.elements.shape[-1]

    @property
    def n_settings(self) -> int:
        return self.elements.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.elements.shape[1]

    def transpose(self) -> StateAssemblage:
        return StateAssemblage(np.swapaxes(self.elements, -1, -2), self.reduced_state.T)


@dataclass(frozen=True)
class DeterministicStrategyTable:
    """All deterministic response functions ``D(a|x, lambda)``.

    ``answers[lam, x]`` is the outcome strategy ``lam`` assigns to setting
    ``x``; ``lam = sum_x answers[lam, x] * n_outcomes**x``.
    """

    n_settings: int
    n_outcomes: int
    answers: np.ndarray

    @property
    def n_strategies(self) -> int:
        return self.answers.shape[0]

    @property
    def table(self) -> np.ndarray:
        """0/1 array of shape ``(n_settings, n_outcomes, n_strategies)``."""
        d = np.zeros((self.n_settings, self.n_outcomes, self.n_strategies))
        lam = np.arange(self.n_strategies)
        for x in range(self.n_settings):
            d[x, self.answers[:, x], lam] = 1.0
        return d


def enumerate_deterministic(
    n_settings: int, n_outcomes: int, cap: int = STRATEGY_CAP
) -> DeterministicStrategyTable:
    count = n_outcomes**n_settings
    if count > cap:
        raise ValidationError(f"{count} deterministic strategies exceed the cap {cap}")
    lam = np.arange(count)
    answers = np.stack([(lam // n_outcomes**x) % n_outcomes for x in range(n_settings)], axis=1)
    answers.setflags(write=False)
    return DeterministicStrategyTable(n_settings, n_outcomes, answers)


@dataclass
class ValidationReport:
    passed: bool
    residuals: dict[str, float]
    tol: float

    def __bool__(self) -> bool:
        return self.passed


def validate_ma(ma: MeasurementAssemblage, tol: float = 1e-9) -> ValidationReport:
    els = ma.elements
    herm = linop.maxabs(els - np.swapaxes(els, -1, -2).conj())
    mins = np.linalg.eigvalsh(linop.hermitize(els))[..., 0]
    neg = float(max(0.0, -mins.min()))
    norm = linop.maxabs(els.sum(axis=1) - np.eye(ma.dim))
    res = {"hermiticity": herm, "negativity": neg, "normalization": norm}
    return ValidationReport(all(v <= tol for v in res.values()), res, tol)


def validate_sa(sa: StateAssemblage, tol: float = 1e-8) -> ValidationReport:
    els = sa.elements
    herm = linop.maxabs(els - np.swapaxes(els, -1, -2).conj())
    mins = np.linalg.eigvalsh(linop.hermitize(els))[..., 0]
    neg = float(max(0.0, -mins.min()))
    marg = linop.maxabs(els.sum(axis=1) - sa.reduced_state[None])
    trace = abs(np.trace(sa.reduced_state).real - 1.0)
    res = {"hermiticity": herm, "negativity": neg, "marginals": marg, "trace": trace}
    ok = herm <= tol and neg <= tol and marg <= tol and trace <= 1e-10 + tol
    return ValidationReport(bool(ok), res, tol)


def assemblage_from_state(rho_ab: npt.ArrayLike, ma: MeasurementAssemblage) -> StateAssemblage:
    """``sigma_{a|x} = tr_A[rho_AB (A_{a|x} (x) 1)]``."""
    rho_ab = linop.as_operator(rho_ab)
    d_a = ma.dim
    if rho_ab.shape[0] % d_a:
        raise ValidationError(f"state of dimension {rho_ab.shape[0]} incompatible with d_A={d_a}")
    d_b = rho_ab.shape[0] // d_a
    t = rho_ab.reshape(d_a, d_b, d_a, d_b)
    sigma = np.einsum("ijkl,xaki->xajl", t, ma.elements)
    rho_b = linop.partial_trace(rho_ab, (d_a, d_b), keep="B")
    return StateAssemblage(linop.hermitize(sigma), linop.hermitize(rho_b))


def schmidt_vector(schmidt_coeffs: npt.ArrayLike) -> np.ndarray:
    c = np.asarray(schmidt_coeffs, dtype=float)
    d = c.size
    psi = np.zeros(d * d, dtype=np.complex128)
    psi[np.arange(d) * (d + 1)] = c
    return psi


def pure_state_assemblage(schmidt_coeffs: npt.ArrayLike, ma: MeasurementAssemblage) -> StateAssemblage:
    """Assemblage of ``sum_i c_i |ii>`` measured by ``ma`` on Alice's side.

    Equals ``[rho^{1/2} A_{a|x} rho^{1/2}]^T`` with ``rho = diag(c**2)``.
    """
    c = np.asarray(schmidt_coeffs, dtype=float)
    if np.any(c < 0):
        raise ValidationError("Schmidt coefficients must be non-negative")
    if c.size != ma.dim:
        raise ValidationError(f"{c.size} coefficients for a dimension-{ma.dim} assemblage")
    if abs(np.sum(c**2) - 1.0) > 1e-10:
        raise ValidationError("squared Schmidt coefficients must sum to 1")
    sigma = c[:, None] * ma.elements * c[None, :]
    return StateAssemblage(np.swapaxes(sigma, -1, -2), np.diag(c**2).astype(np.complex128))


def dress(ma: MeasurementAssemblage, rho_b: npt.ArrayLike) -> StateAssemblage:
    """``sigma_{a|x} = rho^{1/2} B_{a|x} rho^{1/2}``."""
    rho_b = linop.check_hermitian(rho_b, tol=1e-10)
    if rho_b.shape[0] != ma.dim:
        raise ValidationError(f"state of dimension {rho_b.shape[0]} for a dimension-{ma.dim} assemblage")
    r = linop.sqrt_psd(rho_b)
    return StateAssemblage(linop.hermitize(r @ ma.elements @ r), linop.hermitize(rho_b))


class SteeringEquivalent(NamedTuple):
    ma: MeasurementAssemblage
    rho_b: np.ndarray
    isometry: np.ndarray  # (dim, rank); identity when rho_b is full rank


def seo(sa: StateAssemblage, rank_tol: float = linop.RANK_TOL) -> SteeringEquivalent:
    """Steering-equivalent observables ``rho^{-1/2} sigma rho^{-1/2}``.

    For rank-deficient ``rho`` everything is compressed to its range using the
    isometry from :func:`steerkit.linop.range_basis`, so the returned
    assemblage has dimension ``rank(rho)``.
    """
    rho = sa.reduced_state
    w, v = linop.range_basis(rho, rank_tol)
    if w.size == sa.dim:
        q = linop.pinv_sqrt_on_range(rho, rank_tol)
        b = q @ sa.elements @ q
        v = np.eye(sa.dim, dtype=np.complex128)
    else:
        s = 1.0 / np.sqrt(w)
        b = s[:, None] * (v.conj().T @ sa.elements @ v) * s[None, :]
    # whitening amplifies rounding by 1/lambda_min; restore sum_a B = 1 exactly
    b = b + (np.eye(b.shape[-1]) - b.sum(axis=1, keepdims=True)) / sa.n_outcomes
    return SteeringEquivalent(MeasurementAssemblage(linop.hermitize(b)), rho, v)


def trivial_ma(dim: int, n_settings: int, n_outcomes: int) -> MeasurementAssemblage:
    els = np.broadcast_to(np.eye(dim) / n_outcomes, (n_settings, n_outcomes, dim, dim))
    return MeasurementAssemblage(els)
