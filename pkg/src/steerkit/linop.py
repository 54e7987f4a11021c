"""Dense complex-Hermitian linear algebra shared by the rest of the package.

Operators are plain ``numpy`` arrays of dtype ``complex128``.  Every tolerance
below is measured in the max-abs-entry norm.
"""

from __future__ import annotations

import numpy as np
import numpy.typing as npt

ComplexArray = npt.NDArray[np.complex128]

#: eigenvalues down to ``-PSD_CLIP * max(1, |P|)`` are clipped to zero
PSD_CLIP = 1e-9
#: relative eigenvalue cutoff for range projections
RANK_TOL = 1e-9


class ValidationError(ValueError):
    """Input does not satisfy a structural precondition."""


class NotPSDError(ValidationError):
    """Operator has an eigenvalue too negative to be clipped."""


def maxabs(a: npt.ArrayLike) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def as_operator(h: npt.ArrayLike) -> ComplexArray:
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {h.shape}")
    return h


def is_hermitian(h: npt.ArrayLike, tol: float = 1e-12) -> bool:
    h = as_operator(h)
    return maxabs(h - h.conj().T) <= tol * max(1.0, maxabs(h))


def check_hermitian(h: npt.ArrayLike, tol: float = 1e-12) -> ComplexArray:
    h = as_operator(h)
    if not is_hermitian(h, tol):
        raise ValidationError(
            f"operator is not Hermitian (residual {maxabs(h - h.conj().T):.3e})"
        )
    return h


def hermitize(h: npt.ArrayLike) -> ComplexArray:
    h = np.asarray(h, dtype=np.complex128)
    return 0.5 * (h + np.swapaxes(h, -1, -2).conj())


def eig_hermitian(h: npt.ArrayLike) -> tuple[np.ndarray, ComplexArray]:
    """Eigen-decomposition with eigenvalues sorted in descending order.

    Returns ``(w, v)`` such that ``h = v @ diag(w) @ v^†``.
    """
    h = check_hermitian(h)
    w, v = np.linalg.eigh(hermitize(h))
    return w[::-1].copy(), v[:, ::-1].copy()


def _psd_eig(p: npt.ArrayLike) -> tuple[np.ndarray, ComplexArray, float]:
    p = check_hermitian(p, tol=1e-10)
    w, v = eig_hermitian(p)
    scale = max(1.0, maxabs(p))
    if w.size and w[-1] < -PSD_CLIP * scale:
        raise NotPSDError(f"minimum eigenvalue {w[-1]:.3e} is below the clipping threshold")
    return np.clip(w, 0.0, None), v, scale


def sqrt_psd(p: npt.ArrayLike) -> ComplexArray:
    """Principal square root of a PSD operator (tiny negative eigenvalues clipped)."""
    w, v, _ = _psd_eig(p)
    return hermitize((v * np.sqrt(w)) @ v.conj().T)


def range_basis(p: npt.ArrayLike, rank_tol: float = RANK_TOL) -> tuple[np.ndarray, ComplexArray]:
    """Eigenvalues and isometry ``V`` onto the range of a PSD operator.

    Columns are ordered by descending eigenvalue.  Each column's phase is fixed
    so that its largest-magnitude component is real and positive, which makes
    range compressions deterministic.
    """
    w, v, _ = _psd_eig(p)
    if not w.size or w[0] <= 0.0:
        return w[:0], v[:, :0]
    keep = w > rank_tol * w[0]
    w, v = w[keep], v[:, keep]
    idx = np.argmax(np.abs(v), axis=0)
    phase = v[idx, np.arange(v.shape[1])]
    v = v * (np.abs(phase) / phase)
    return w, v


def pinv_sqrt_on_range(p: npt.ArrayLike, rank_tol: float = RANK_TOL) -> ComplexArray:
    """``P^{-1/2}`` restricted to the range of ``P`` (zero on the kernel).

    A zero operator maps to the zero operator; use :func:`rank` to detect it.
    """
    p = as_operator(p)
    w, v = range_basis(p, rank_tol)
    return hermitize((v / np.sqrt(w)) @ v.conj().T) if w.size else np.zeros_like(p)


def range_projector(p: npt.ArrayLike, rank_tol: float = RANK_TOL) -> ComplexArray:
    _, v = range_basis(p, rank_tol)
    return v @ v.conj().T


def rank(p: npt.ArrayLike, rank_tol: float = RANK_TOL) -> int:
    return int(range_basis(p, rank_tol)[0].size)


def is_psd(h: npt.ArrayLike, tol: float = 1e-9) -> bool:
    """True iff ``lambda_min(h) >= -tol * max(1, |h|)``."""
    h = check_hermitian(h, tol=1e-10)
    lmin = np.linalg.eigvalsh(hermitize(h))[0] if h.size else 0.0
    return bool(lmin >= -tol * max(1.0, maxabs(h)))


def kron(a: npt.ArrayLike, b: npt.ArrayLike) -> np.ndarray:
    """Kronecker product; the first factor is the slow (left) index."""
    return np.kron(a, b)


def partial_trace(m: npt.ArrayLike, dims: tuple[int, int], keep: str | int = "B") -> ComplexArray:
    """Partial trace of a bipartite operator on ``C^{dA} (x) C^{dB}``.

    ``keep`` selects the surviving subsystem: ``"A"``/``0`` or ``"B"``/``1``.
    """
    d_a, d_b = dims
    m = np.asarray(m, dtype=np.complex128)
    if m.shape != (d_a * d_b, d_a * d_b):
        raise ValidationError(f"operator of shape {m.shape} does not match dims {dims}")
    t = m.reshape(d_a, d_b, d_a, d_b)
    if keep in ("A", 0):
        return np.einsum("ijkj->ik", t)
    if keep in ("B", 1):
        return np.einsum("ijil->jl", t)
    raise ValidationError(f"unknown subsystem tag {keep!r}")


def random_hermitian(d: int, rng: np.random.Generator) -> ComplexArray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return hermitize(g)


def as_rng(seed=None) -> np.random.Generator:
    """Generator from a seed, a ``SeedSequence`` or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
