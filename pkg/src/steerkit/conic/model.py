"""Small modelling layer over :mod:`steerkit.conic` for complex-Hermitian SDPs.

Hermitian PSD variables become real-embedded blocks of twice the size; matrix
equations are imposed through the coordinates against an orthonormal basis of
Hermitian matrices, so a ``d x d`` equation contributes ``d**2`` real rows.
"""

from __future__ import annotations

import hashlib
from contextlib import contextmanager
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .problem import ConicProblem, ConicSolution, Settings, embed_complex, extract_complex
from .solver import RowReduction, reduce_rows, solve, symmetrize_columns


_CAPTURED: list[list[ConicProblem]] = []


@contextmanager
def capture_problems():
    """Record every problem compiled by :meth:`Model.solve` inside the block.

    Yields the list the problems are appended to (used for debug dumps).
    """
    sink: list[ConicProblem] = []
    _CAPTURED.append(sink)
    try:
        yield sink
    finally:
        _CAPTURED.remove(sink)


@lru_cache(maxsize=None)
def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal basis of d x d Hermitian matrices, shape ``(d*d, d, d)``."""
    out = np.zeros((d * d, d, d), dtype=complex)
    k = 0
    for i in range(d):
        out[k, i, i] = 1.0
        k += 1
    r = 1.0 / np.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            out[k, i, j] = out[k, j, i] = r
            out[k + 1, i, j] = 1j * r
            out[k + 1, j, i] = -1j * r
            k += 2
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _embedded_basis(d: int) -> np.ndarray:
    # row k: coefficients of tr(E_k X) against the embedded block, flattened
    out = embed_complex(hermitian_basis(d)).reshape(d * d, 4 * d * d) / 2.0
    out.setflags(write=False)
    return out


def coords(h: np.ndarray) -> np.ndarray:
    """Real coordinates ``tr(E_k H)`` of (a stack of) Hermitian matrices."""
    h = np.asarray(h)
    d = h.shape[-1]
    return np.einsum("kij,...ji->...k", hermitian_basis(d), h).real


def from_coords(v: np.ndarray, d: int) -> np.ndarray:
    return np.einsum("...k,kij->...ij", np.asarray(v, dtype=float), hermitian_basis(d))


@dataclass(frozen=True, eq=False)
class HermVar:
    d: int
    kind: str  # "psd" or "free"
    index: int


@dataclass(frozen=True, eq=False)
class ScalarVar:
    kind: str  # "nonneg" or "free"
    index: int


@dataclass(frozen=True, eq=False)
class Equation:
    rows: slice
    d: int | None  # None for scalar equations


_REDUCTIONS: dict[bytes, RowReduction] = {}


def _cached_reduction(A: np.ndarray) -> RowReduction:
    key = hashlib.blake2b(A.tobytes(), digest_size=16).digest() + repr(A.shape).encode()
    red = _REDUCTIONS.get(key)
    if red is None:
        if len(_REDUCTIONS) > 256:
            _REDUCTIONS.clear()
        red = _REDUCTIONS[key] = reduce_rows(A)
    return red


class Model:
    """Accumulates variables, linear equations and a linear objective."""

    def __init__(self) -> None:
        self._psd: list[int] = []
        self._free_herm: list[int] = []
        self._n_nonneg = 0
        self._n_free = 0
        self._eqs: list[tuple[list, list, np.ndarray | float, int | None]] = []
        self._n_rows = 0
        self._obj: tuple[list, list] = ([], [])
        self.sense = "min"
        self.offset = 0.0

    # variables ---------------------------------------------------------
    def psd(self, d: int) -> HermVar:
        self._psd.append(d)
        return HermVar(d, "psd", len(self._psd) - 1)

    def free_hermitian(self, d: int) -> HermVar:
        self._free_herm.append(d)
        return HermVar(d, "free", len(self._free_herm) - 1)

    def nonneg(self) -> ScalarVar:
        self._n_nonneg += 1
        return ScalarVar("nonneg", self._n_nonneg - 1)

    def free(self) -> ScalarVar:
        self._n_free += 1
        return ScalarVar("free", self._n_free - 1)

    # constraints -------------------------------------------------------
    def matrix_eq(self, herm_terms, scalar_terms, rhs) -> Equation:
        """``sum alpha*X + sum s*H = rhs`` with Hermitian ``rhs``.

        ``herm_terms`` holds ``(alpha, HermVar)`` pairs and ``scalar_terms``
        holds ``(H, ScalarVar)`` pairs.
        """
        rhs = np.asarray(rhs, dtype=complex)
        d = rhs.shape[0]
        eq = Equation(slice(self._n_rows, self._n_rows + d * d), d)
        self._eqs.append((list(herm_terms), list(scalar_terms), rhs, d))
        self._n_rows += d * d
        return eq

    def scalar_eq(self, herm_terms, scalar_terms, rhs: float) -> Equation:
        """``sum tr(C X) + sum alpha*s = rhs``."""
        eq = Equation(slice(self._n_rows, self._n_rows + 1), None)
        self._eqs.append((list(herm_terms), list(scalar_terms), float(rhs), None))
        self._n_rows += 1
        return eq

    def objective(self, herm_terms, scalar_terms, sense: str = "min", offset: float = 0.0) -> None:
        """``sum tr(C X) + sum alpha*s + offset``."""
        self._obj = (list(herm_terms), list(scalar_terms))
        self.sense = sense
        self.offset = float(offset)

    # compilation -------------------------------------------------------
    def _layout(self):
        free_cols = []
        off = self._n_free
        for d in self._free_herm:
            free_cols.append(off)
            off += d * d
        n_free = off
        lp0 = n_free
        psd_cols = []
        off = lp0 + self._n_nonneg
        for d in self._psd:
            psd_cols.append(off)
            off += 4 * d * d
        return n_free, lp0, free_cols, psd_cols, off

    def _col(self, v, lay):
        n_free, lp0, free_cols, psd_cols, _ = lay
        if isinstance(v, ScalarVar):
            return v.index if v.kind == "free" else lp0 + v.index
        if v.kind == "free":
            return free_cols[v.index]
        return psd_cols[v.index]

    def compile(self) -> ConicProblem:
        lay = self._layout()
        n = lay[-1]
        A = np.zeros((self._n_rows, n))
        b = np.zeros(self._n_rows)
        row = 0
        for herm_terms, scalar_terms, rhs, d in self._eqs:
            if d is None:
                for C, v in herm_terms:
                    o = self._col(v, lay)
                    cv = coords(np.asarray(C, dtype=complex))
                    if v.kind == "psd":
                        A[row, o:o + 4 * v.d ** 2] += cv @ _embedded_basis(v.d)
                    else:
                        A[row, o:o + v.d ** 2] += cv
                for a, v in scalar_terms:
                    A[row, self._col(v, lay)] += a
                b[row] = rhs
                row += 1
                continue
            rows = slice(row, row + d * d)
            for a, v in herm_terms:
                if v.d != d:
                    raise ValueError("dimension mismatch in matrix equation")
                o = self._col(v, lay)
                if v.kind == "psd":
                    A[rows, o:o + 4 * d * d] += a * _embedded_basis(d)
                else:
                    A[rows, o:o + d * d] += a * np.eye(d * d)
            for H, v in scalar_terms:
                A[rows, self._col(v, lay)] += coords(np.asarray(H, dtype=complex))
            b[rows] = coords(rhs)
            row += d * d
        c = np.zeros(n)
        for C, v in self._obj[0]:
            o = self._col(v, lay)
            cv = coords(np.asarray(C, dtype=complex))
            if v.kind == "psd":
                c[o:o + 4 * v.d ** 2] += cv @ _embedded_basis(v.d)
            else:
                c[o:o + v.d ** 2] += cv
        for a, v in self._obj[1]:
            c[self._col(v, lay)] += a
        return ConicProblem(
            c, A, b, n_free=lay[0], n_lp=self._n_nonneg,
            psd=tuple(2 * d for d in self._psd),
            complex_blocks=(True,) * len(self._psd),
            sense=self.sense, offset=self.offset,
        )

    def solve(self, settings: Settings | None = None) -> "ModelSolution":
        prob = self.compile()
        for sink in _CAPTURED:
            sink.append(prob)
        red = _cached_reduction(symmetrize_columns(prob))
        sol = solve(prob, settings, reduction=red)
        return ModelSolution(self, sol, self._layout())


class ModelSolution:
    """Solver output mapped back to Hermitian variables and multipliers.

    Multipliers follow the minimization convention: for an equation with
    right-hand side ``R`` the multiplier ``Z`` contributes ``tr(Z R)`` to the
    dual objective.  In a maximization the dual is the minimization of that
    same expression.
    """

    def __init__(self, model: Model, sol: ConicSolution, layout):
        self.model = model
        self.conic = sol
        self._lay = layout

    @property
    def status(self) -> str:
        return self.conic.status

    @property
    def objective(self) -> float:
        return self.conic.primal_objective

    @property
    def dual_objective(self) -> float:
        return self.conic.dual_objective

    def value(self, v):
        o = self.model._col(v, self._lay)
        x = self.conic.x
        if isinstance(v, ScalarVar):
            return float(x[o])
        if v.kind == "free":
            return from_coords(x[o:o + v.d ** 2], v.d)
        blk = x[o:o + 4 * v.d ** 2].reshape(2 * v.d, 2 * v.d)
        return extract_complex(blk)

    def slack(self, v: HermVar) -> np.ndarray:
        """Hermitian dual slack paired with a PSD variable."""
        o = self.model._col(v, self._lay)
        blk = self.conic.s[o:o + 4 * v.d ** 2].reshape(2 * v.d, 2 * v.d)
        return 2.0 * extract_complex(blk)

    def dual(self, eq: Equation):
        y = self.conic.y[eq.rows]
        if eq.d is None:
            return float(y[0])
        return from_coords(y, eq.d)
