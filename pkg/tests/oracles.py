"""Independent reference computations used by the tests.

Nothing here goes through the library's conic solver:

* joint measurability of real qubit assemblages is decided by a linear
  program (scipy HiGHS) over deterministic strategies, with the Bloch-ball
  positivity constraint replaced by inscribed / circumscribed polygons;
  bisection on the noise weight then brackets the robustness;
* general SDP formulations are written directly in cvxpy and solved with
  CLARABEL.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

# ---------------------------------------------------------------------------
# polygon LP oracle for real qubit assemblages


def bloch_xz(op: np.ndarray) -> tuple[float, float, float]:
    """``op = alpha 1 + rx X + rz Z`` for a real symmetric 2x2 operator."""
    op = np.asarray(op)
    if np.abs(op.imag).max() > 1e-12 or abs(op[0, 1] - op[1, 0]) > 1e-12:
        raise ValueError("oracle needs real symmetric qubit operators")
    op = op.real
    return (op[0, 0] + op[1, 1]) / 2, op[0, 1], (op[0, 0] - op[1, 1]) / 2


def _strategies(n_x: int, n_a: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(n_a), repeat=n_x))


def jm_lp_feasible(elements: np.ndarray, t: float, noise: str, n_sides: int, inner: bool) -> bool:
    """Is ``(M + t N) / (1 + t)`` jointly measurable for some admissible noise?

    ``noise='white'`` fixes ``N_{a|x} = 1/n_a``; ``noise='general'`` lets
    ``N`` range over all POVMs.  Positivity ``alpha >= |r|`` is replaced by
    a regular polygon: inscribed (``inner=True``, sufficient) or
    circumscribed (necessary).
    """
    n_x, n_a = elements.shape[:2]
    strat = _strategies(n_x, n_a)
    n_l = len(strat)
    n_g = 3 * n_l
    n_n = 3 * n_x * n_a if noise == "general" else 0
    nv = n_g + n_n

    def g(l, c):
        return 3 * l + c

    def nn(x, a, c):
        return n_g + 3 * (x * n_a + a) + c

    a_eq, b_eq = [], []
    for x in range(n_x):
        for a in range(n_a):
            m = bloch_xz(elements[x, a])
            for c in range(3):
                row = np.zeros(nv)
                for l, s in enumerate(strat):
                    if s[x] == a:
                        row[g(l, c)] = 1.0
                rhs = m[c]
                if noise == "general":
                    row[nn(x, a, c)] = -t
                else:
                    rhs = rhs + (t / n_a if c == 0 else 0.0)
                a_eq.append(row)
                b_eq.append(rhs)
        if noise == "general":
            for c in range(3):
                row = np.zeros(nv)
                for a in range(n_a):
                    row[nn(x, a, c)] = 1.0
                a_eq.append(row)
                b_eq.append(1.0 if c == 0 else 0.0)
    ang = 2 * np.pi * np.arange(n_sides) / n_sides
    rad = np.cos(np.pi / n_sides) if inner else 1.0
    blocks = [(g(l, 0), g(l, 1), g(l, 2)) for l in range(n_l)]
    if noise == "general":
        blocks += [(nn(x, a, 0), nn(x, a, 1), nn(x, a, 2)) for x in range(n_x) for a in range(n_a)]
    a_ub = np.zeros((len(blocks) * n_sides, nv))
    for k, (i0, i1, i2) in enumerate(blocks):
        rows = slice(k * n_sides, (k + 1) * n_sides)
        a_ub[rows, i0] = -rad
        a_ub[rows, i1] = np.cos(ang)
        a_ub[rows, i2] = np.sin(ang)
    # right-hand side of the JM identity is scaled by (1 + t): absorb it in G
    res = linprog(np.zeros(nv), A_ub=a_ub, b_ub=np.zeros(a_ub.shape[0]), A_eq=np.array(a_eq),
                  b_eq=np.array(b_eq), bounds=[(None, None)] * nv, method="highs")
    return res.status == 0


def robustness_bracket(elements: np.ndarray, noise: str, n_sides: int = 4096,
                       hi: float = 4.0, iters: int = 45) -> tuple[float, float]:
    """Lower and upper bounds on the robustness from the two polygon LPs."""

    def critical(inner: bool) -> float:
        lo_, hi_ = 0.0, hi
        if jm_lp_feasible(elements, 0.0, noise, n_sides, inner):
            return 0.0
        for _ in range(iters):
            mid = 0.5 * (lo_ + hi_)
            if jm_lp_feasible(elements, mid, noise, n_sides, inner):
                hi_ = mid
            else:
                lo_ = mid
        return hi_

    return critical(False), critical(True)


# ---------------------------------------------------------------------------
# cvxpy reference formulations


def _cp():
    import cvxpy as cp

    return cp


def _solve(prob) -> float:
    cp = _cp()
    prob.solve(solver=cp.CLARABEL)
    assert prob.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE), prob.status
    return float(prob.value)


def _det(n_x: int, n_a: int) -> np.ndarray:
    strat = _strategies(n_x, n_a)
    d = np.zeros((n_x, n_a, len(strat)))
    for l, s in enumerate(strat):
        for x in range(n_x):
            d[x, s[x], l] = 1.0
    return d


def cvx_ma_robustness(elements: np.ndarray, noise: str = "general") -> float:
    """``min t`` with ``M + t N = sum_l D G_l`` (``G_l`` unnormalized parents)."""
    cp = _cp()
    n_x, n_a, d = elements.shape[0], elements.shape[1], elements.shape[2]
    dt = _det(n_x, n_a)
    t = cp.Variable()
    G = [cp.Variable((d, d), hermitian=True) for _ in range(dt.shape[2])]
    cons = [gl >> 0 for gl in G]
    if noise == "general":
        N = [[cp.Variable((d, d), hermitian=True) for _ in range(n_a)] for _ in range(n_x)]
        for x in range(n_x):
            cons += [nn >> 0 for nn in N[x]]
        cons += [sum(G) == (1 + t) * np.eye(d)]
        for x in range(n_x):
            for a in range(n_a):
                cons.append(elements[x, a] + N[x][a] == sum(dt[x, a, l] * G[l] for l in range(len(G))))
    elif noise == "white":
        for x in range(n_x):
            for a in range(n_a):
                cons.append(elements[x, a] + t * np.eye(d) / n_a == sum(dt[x, a, l] * G[l] for l in range(len(G))))
    elif noise == "jm":
        H = [cp.Variable((d, d), hermitian=True) for _ in range(dt.shape[2])]
        cons += [h >> 0 for h in H] + [sum(H) == t * np.eye(d)]
        for x in range(n_x):
            for a in range(n_a):
                cons.append(elements[x, a] + sum(dt[x, a, l] * H[l] for l in range(len(H)))
                            == sum(dt[x, a, l] * G[l] for l in range(len(G))))
    else:
        raise ValueError(noise)
    return _solve(cp.Problem(cp.Minimize(t), cons))


def cvx_sa_robustness(elements: np.ndarray, noise: str = "general", rho: np.ndarray | None = None) -> float:
    """``min t`` with ``sigma + t xi`` LHS, for the listed noise sets."""
    cp = _cp()
    n_x, n_a, d = elements.shape[0], elements.shape[1], elements.shape[2]
    if rho is None:
        rho = elements[0].sum(axis=0)
    dt = _det(n_x, n_a)
    t = cp.Variable()
    S = [cp.Variable((d, d), hermitian=True) for _ in range(dt.shape[2])]
    cons = [s >> 0 for s in S]
    if noise in ("general", "consistent"):
        X = [[cp.Variable((d, d), hermitian=True) for _ in range(n_a)] for _ in range(n_x)]
        for x in range(n_x):
            cons += [xx >> 0 for xx in X[x]]
            if noise == "consistent":
                cons.append(sum(X[x]) == t * rho)
        if noise == "general":
            cons += [cp.real(cp.trace(sum(X[0]))) == t]
            for x in range(1, n_x):
                cons.append(sum(X[x]) == sum(X[0]))
        for x in range(n_x):
            for a in range(n_a):
                cons.append(elements[x, a] + X[x][a] == sum(dt[x, a, l] * S[l] for l in range(len(S))))
    elif noise == "white":
        for x in range(n_x):
            for a in range(n_a):
                cons.append(elements[x, a] + t * rho / n_a == sum(dt[x, a, l] * S[l] for l in range(len(S))))
    elif noise == "clhs":
        H = [cp.Variable((d, d), hermitian=True) for _ in range(dt.shape[2])]
        cons += [h >> 0 for h in H] + [sum(H) == t * rho]
        for x in range(n_x):
            for a in range(n_a):
                cons.append(elements[x, a] + sum(dt[x, a, l] * H[l] for l in range(len(H)))
                            == sum(dt[x, a, l] * S[l] for l in range(len(S))))
    else:
        raise ValueError(noise)
    return _solve(cp.Problem(cp.Minimize(t), cons))


def cvx_incompatible_weight(elements: np.ndarray) -> float:
    cp = _cp()
    n_x, n_a, d = elements.shape[0], elements.shape[1], elements.shape[2]
    dt = _det(n_x, n_a)
    s = cp.Variable()
    G = [cp.Variable((d, d), hermitian=True) for _ in range(dt.shape[2])]
    cons = [gl >> 0 for gl in G] + [sum(G) == s * np.eye(d)]
    for x in range(n_x):
        for a in range(n_a):
            cons.append(elements[x, a] - sum(dt[x, a, l] * G[l] for l in range(len(G))) >> 0)
    return 1.0 - _solve(cp.Problem(cp.Maximize(s), cons))


def cvx_steerable_weight(elements: np.ndarray) -> float:
    cp = _cp()
    n_x, n_a, d = elements.shape[0], elements.shape[1], elements.shape[2]
    dt = _det(n_x, n_a)
    S = [cp.Variable((d, d), hermitian=True) for _ in range(dt.shape[2])]
    cons = [s >> 0 for s in S]
    for x in range(n_x):
        for a in range(n_a):
            cons.append(elements[x, a] - sum(dt[x, a, l] * S[l] for l in range(len(S))) >> 0)
    total = cp.real(cp.trace(sum(S)))
    return 1.0 - _solve(cp.Problem(cp.Maximize(total), cons))


def cvx_rom(elements: np.ndarray) -> float:
    """``min t`` with ``M_a + t N_a = q_a (1 + t) 1``."""
    cp = _cp()
    n_a, d = elements.shape[0], elements.shape[1]
    t = cp.Variable()
    q = cp.Variable(n_a)
    N = [cp.Variable((d, d), hermitian=True) for _ in range(n_a)]
    cons = [nn >> 0 for nn in N] + [q >= 0, cp.sum(q) == 1 + t]
    cons += [elements[a] + N[a] == q[a] * np.eye(d) for a in range(n_a)]
    return _solve(cp.Problem(cp.Minimize(t), cons))


def helstrom_trace_norm(p0: float, rho0: np.ndarray, p1: float, rho1: np.ndarray) -> float:
    """Optimal two-state discrimination from the trace norm."""
    return 0.5 * (1.0 + np.abs(np.linalg.eigvalsh(p0 * rho0 - p1 * rho1)).sum())
