"""Export of conic problems in the SDPA sparse text format.

The problem ``min c.x s.t. A x = b, x in K`` is written as the SDPA dual form
``max F0 . Y s.t. Fi . Y = ci, Y psd`` with ``Fi`` the constraint rows,
``ci = b_i`` and ``F0 = -c`` (``+c`` for maximizations).  Free variables are
split into two non-negative ones; non-negative variables form one diagonal
block.  The objective offset is recorded in a comment line.
"""

from __future__ import annotations

import io
from typing import TextIO

import numpy as np

from .problem import ConicProblem

__all__ = ["write_sdpa", "to_sdpa"]


def _fmt(v: float) -> str:
    return repr(float(v))


def write_sdpa(problem: ConicProblem, out: TextIO) -> None:
    p = problem
    nf, nl = p.n_free, p.n_lp
    sign = 1.0 if p.sense == "max" else -1.0
    # columns of the diagonal block: free+, free-, nonneg
    diag_cols = [(j, 1.0) for j in range(nf)] + [(j, -1.0) for j in range(nf)] + [(nf + j, 1.0) for j in range(nl)]
    blocks: list[int] = []
    if diag_cols:
        blocks.append(-len(diag_cols))
    blocks.extend(p.psd)
    out.write(f"* steerkit conic problem, sense={p.sense}, objective offset={_fmt(p.offset)}\n")
    out.write(f"* objective = {'+' if sign > 0 else '-'}(F0 . Y) + offset\n")
    out.write(f"{p.n_constraints}\n{len(blocks)}\n")
    out.write(" ".join(str(k) for k in blocks) + "\n")
    out.write(" ".join(_fmt(v) for v in p.b) + "\n")
    rows = [sign * p.c] + list(p.A)
    psd_first = 2 if diag_cols else 1
    offs = p.block_offsets()
    for mat, row in enumerate(rows):
        if diag_cols:
            for k, (j, s) in enumerate(diag_cols):
                v = s * row[j]
                if v != 0.0:
                    out.write(f"{mat} 1 {k + 1} {k + 1} {_fmt(v)}\n")
        for bi, (o, n) in enumerate(zip(offs, p.psd)):
            blk = row[o:o + n * n].reshape(n, n)
            sym = 0.5 * (blk + blk.T)
            ii, jj = np.nonzero(np.triu(sym))
            for i, j in zip(ii, jj):
                out.write(f"{mat} {psd_first + bi} {i + 1} {j + 1} {_fmt(sym[i, j])}\n")


def to_sdpa(problem: ConicProblem) -> str:
    buf = io.StringIO()
    write_sdpa(problem, buf)
    return buf.getvalue()
