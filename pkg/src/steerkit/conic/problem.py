"""Problem and solution containers for the dense conic solver.

Variables are laid out as ``[free | nonneg | psd block 0 | psd block 1 | ...]``
where every PSD block of size ``n`` occupies ``n*n`` entries of its full
(row-major, symmetric) matrix.  The primal problem is

    minimize  c @ x + offset   s.t.  A @ x = b,  x in K

and its dual ``maximize b @ y + offset  s.t.  c - A.T @ y = s in K*`` (the dual
slack of a free variable is zero).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Settings:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iter: int = 100
    step: float = 0.99


@dataclass
class ConicProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    n_free: int = 0
    n_lp: int = 0
    psd: tuple[int, ...] = ()
    complex_blocks: tuple[bool, ...] = ()
    sense: str = "min"
    offset: float = 0.0

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.asarray(self.A, dtype=float).reshape(-1, self.c.size)
        self.b = np.asarray(self.b, dtype=float)
        self.psd = tuple(int(n) for n in self.psd)
        if not self.complex_blocks:
            self.complex_blocks = (False,) * len(self.psd)
        if self.sense not in ("min", "max"):
            raise ValueError(f"unknown sense {self.sense!r}")
        if any(n < 1 for n in self.psd):
            raise ValueError("PSD block dimensions must be positive")
        n = self.n_free + self.n_lp + sum(k * k for k in self.psd)
        if self.c.size != n or self.A.shape != (self.b.size, n):
            raise ValueError(
                f"inconsistent shapes: c {self.c.shape}, A {self.A.shape}, b {self.b.shape}, layout {n}"
            )
        for flag, k in zip(self.complex_blocks, self.psd):
            if flag and k % 2:
                raise ValueError("complex-embedded blocks must have even size")

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_constraints(self) -> int:
        return self.b.size

    def block_offsets(self) -> list[int]:
        off = [self.n_free + self.n_lp]
        for k in self.psd[:-1]:
            off.append(off[-1] + k * k)
        return off

    def block(self, vec: np.ndarray, i: int) -> np.ndarray:
        k = self.psd[i]
        o = self.block_offsets()[i]
        return vec[o : o + k * k].reshape(k, k)


@dataclass
class ConicSolution:
    status: str
    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    primal_objective: float
    dual_objective: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    problem: ConicProblem = field(repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    @property
    def value(self) -> float:
        return self.primal_objective

    def primal_block(self, i: int) -> np.ndarray:
        return self.problem.block(self.x, i)

    def dual_block(self, i: int) -> np.ndarray:
        return self.problem.block(self.s, i)


def embed_complex(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding ``[[Re H, -Im H], [Im H, Re H]]``."""
    h = np.asarray(h, dtype=np.complex128)
    re, im = h.real, h.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def extract_complex(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`embed_complex`, averaging over the embedding symmetry."""
    x = np.asarray(x, dtype=float)
    h = x.shape[-1] // 2
    re = 0.5 * (x[..., :h, :h] + x[..., h:, h:])
    im = 0.5 * (x[..., h:, :h] - x[..., :h, h:])
    return re + 1j * im
