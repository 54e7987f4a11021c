from __future__ import annotations

import numpy as np
import pytest

from steerkit.conic import ConicProblem, Settings, embed_complex, extract_complex, solve, to_sdpa
from steerkit.conic.model import Model, capture_problems
from steerkit.linop import random_hermitian


def sym_vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m, dtype=float).ravel()


def test_embed_complex_examples(rng):
    h = np.array([[1.0, 2.0], [2.0, -1.0]])
    e = embed_complex(h)
    assert np.allclose(e, np.block([[h, 0 * h], [0 * h, h]]))
    y = np.array([[0, -1j], [1j, 0]])
    ey = embed_complex(y)
    assert np.allclose(ey, ey.T)
    assert np.allclose(np.sort(np.linalg.eigvalsh(ey)), [-1, -1, 1, 1])
    hr = random_hermitian(3, rng)
    w = np.linalg.eigvalsh(hr)
    assert np.allclose(np.sort(np.linalg.eigvalsh(embed_complex(hr))), np.sort(np.repeat(w, 2)))
    assert np.allclose(extract_complex(embed_complex(hr)), hr)


def test_toy_trace_one():
    # min tr(diag(1,2) X) s.t. tr X = 1, X psd
    c = sym_vec(np.diag([1.0, 2.0]))
    A = sym_vec(np.eye(2))[None]
    sol = solve(ConicProblem(c, A, [1.0], psd=(2,)))
    assert sol.status == "optimal"
    assert abs(sol.value - 1.0) < 1e-9
    assert np.abs(sol.primal_block(0) - np.diag([1.0, 0.0])).max() < 1e-9


def test_toy_max_eigen_bound():
    # max s s.t. diag(2,3) - s 1 = S psd  (variables [s | S])
    n = 1 + 4
    c = np.zeros(n)
    c[0] = 1.0
    A = np.zeros((4, n))
    b = sym_vec(np.diag([2.0, 3.0]))
    A[:, 0] = sym_vec(np.eye(2))
    A[:, 1:] = np.eye(4)
    sol = solve(ConicProblem(c, A, b, n_free=1, psd=(2,), sense="max"))
    assert sol.status == "optimal"
    assert abs(sol.value - 2.0) < 1e-9


def test_toy_lp():
    # min x1 + 2 x2 s.t. x1 + x2 = 1, x >= 0
    sol = solve(ConicProblem([1.0, 2.0], [[1.0, 1.0]], [1.0], n_lp=2))
    assert sol.status == "optimal"
    assert abs(sol.value - 1.0) < 1e-9
    assert np.allclose(sol.x, [1, 0], atol=1e-9)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_complex_eigenvalue_sdp(rng, d):
    h = random_hermitian(d, rng)
    m = Model()
    x = m.psd(d)
    m.scalar_eq([(np.eye(d), x)], [], 1.0)
    m.objective([(h, x)], [], "min")
    sol = m.solve()
    assert sol.status == "optimal"
    assert abs(sol.objective - np.linalg.eigvalsh(h)[0]) < 1e-9
    m.objective([(h, x)], [], "max")
    sol = m.solve()
    assert abs(sol.objective - np.linalg.eigvalsh(h)[-1]) < 1e-9


def test_infeasible():
    sol = solve(ConicProblem([1.0], [[1.0]], [-1.0], n_lp=1))
    assert sol.status == "infeasible"


def test_unbounded():
    # min -x s.t. x - y = 0, x, y >= 0
    sol = solve(ConicProblem([-1.0, 0.0], [[1.0, -1.0]], [0.0], n_lp=2))
    assert sol.status == "unbounded"


def test_redundant_rows_presolved():
    c = sym_vec(np.diag([1.0, 2.0]))
    A = np.vstack([sym_vec(np.eye(2)), 2 * sym_vec(np.eye(2))])
    sol = solve(ConicProblem(c, A, [1.0, 2.0], psd=(2,)))
    assert sol.status == "optimal" and abs(sol.value - 1.0) < 1e-9


def _random_sdp(rng, n=3, m=4):
    """Feasible and bounded: b from an interior point, c from a dual interior point."""
    basis = [random_hermitian(n, rng).real for _ in range(m)]
    A = np.array([sym_vec(a) for a in basis])
    g = rng.normal(size=(n, n))
    x0 = g @ g.T + np.eye(n)
    y0 = rng.normal(size=m)
    s0 = rng.normal(size=(n, n))
    c = sym_vec(s0 @ s0.T + np.eye(n) + sum(yi * a for yi, a in zip(y0, basis)))
    return ConicProblem(c, A, A @ sym_vec(x0), psd=(n,))


def test_weak_duality_and_health(rng):
    for _ in range(10):
        sol = solve(_random_sdp(rng))
        assert sol.status == "optimal"
        assert sol.primal_objective >= sol.dual_objective - 1e-12 - 1e-8
        assert abs(sol.gap) <= 1e-8
        assert sol.primal_residual <= 1e-8 and sol.dual_residual <= 1e-8
        x = sol.primal_block(0)
        s = sol.dual_block(0)
        assert np.linalg.eigvalsh(x)[0] >= -1e-9
        assert np.linalg.eigvalsh(s)[0] >= -1e-9


def test_deterministic(rng):
    p = _random_sdp(rng)
    a, b = solve(p), solve(p)
    assert a.iterations == b.iterations
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)


@pytest.mark.parametrize("alpha", [0.1, 7.5, 1e3])
def test_scale_invariance_unique_argmin(rng, alpha):
    # unique optimum X* = v v^T (non-degenerate smallest eigenvalue)
    for _ in range(5):
        h = random_hermitian(4, rng).real
        p = ConicProblem(sym_vec(h), sym_vec(np.eye(4))[None], [1.0], psd=(4,))
        q = ConicProblem(alpha * p.c, p.A, p.b, psd=p.psd)
        assert np.abs(solve(p).primal_block(0) - solve(q).primal_block(0)).max() < 1e-7


def test_scale_invariance_value(rng):
    # random instances are ill-conditioned: X* moves by ~1e-6, the value scales exactly
    for _ in range(5):
        p = _random_sdp(rng)
        q = ConicProblem(7.5 * p.c, p.A, p.b, psd=p.psd)
        v1, v2 = solve(p).value, solve(q).value
        assert abs(7.5 * v1 - v2) <= 1e-8 * max(1.0, abs(v2))
        assert np.abs(solve(p).primal_block(0) - solve(q).primal_block(0)).max() < 1e-5


def test_settings_respected():
    p = ConicProblem(sym_vec(np.diag([1.0, 2.0])), sym_vec(np.eye(2))[None], [1.0], psd=(2,))
    sol = solve(p, Settings(max_iter=1))
    assert sol.status == "max-iter"


# ---------------------------------------------------------------------------
# independent cross-checks


def test_matches_cvxpy(rng):
    cp = pytest.importorskip("cvxpy")
    for _ in range(5):
        p = _random_sdp(rng, n=4, m=5)
        n = p.psd[0]
        X = cp.Variable((n, n), symmetric=True)
        cons = [X >> 0] + [cp.sum(cp.multiply(p.A[i].reshape(n, n), X)) == p.b[i] for i in range(p.b.size)]
        ref = cp.Problem(cp.Minimize(cp.sum(cp.multiply(p.c.reshape(n, n), X))), cons)
        ref.solve(solver=cp.CLARABEL)
        assert abs(solve(p).value - ref.value) < 1e-6


def read_sdpa(text: str):
    """Minimal SDPA sparse reader: returns (m, blocks, c, entries, sense, offset)."""
    head = [ln for ln in text.splitlines() if ln.startswith("*")]
    sense = "max" if "sense=max" in head[0] else "min"
    offset = float(head[0].split("offset=")[1])
    body = [ln for ln in text.splitlines() if ln and not ln.startswith(("*", '"'))]
    m = int(body[0])
    nb = int(body[1])
    blocks = [int(t) for t in body[2].split()][:nb]
    cvec = np.array([float(t) for t in body[3].split()]) if m else np.zeros(0)
    entries = []
    for ln in body[4:]:
        k, blk, i, j, v = ln.split()
        entries.append((int(k), int(blk) - 1, int(i) - 1, int(j) - 1, float(v)))
    return m, blocks, cvec, entries, sense, offset


def solve_sdpa_with_cvxpy(text: str) -> float:
    cp = pytest.importorskip("cvxpy")
    m, blocks, cvec, entries, sense, offset = read_sdpa(text)
    Y = []
    cons = []
    for n in blocks:
        if n < 0:
            v = cp.Variable(-n, nonneg=True)
            Y.append(v)
        else:
            v = cp.Variable((n, n), symmetric=True)
            cons.append(v >> 0)
            Y.append(v)
    mats = [[{} for _ in blocks] for _ in range(m + 1)]
    for k, blk, i, j, v in entries:
        mats[k][blk][(i, j)] = v

    def inner(k):
        expr = 0
        for bi, n in enumerate(blocks):
            for (i, j), v in mats[k][bi].items():
                if n < 0:
                    expr = expr + v * Y[bi][i]
                else:
                    expr = expr + (v if i == j else 2 * v) * Y[bi][i, j]
        return expr

    for k in range(1, m + 1):
        cons.append(inner(k) == cvec[k - 1])
    prob = cp.Problem(cp.Maximize(inner(0)), cons)
    prob.solve(solver=cp.CLARABEL)
    assert prob.status == cp.OPTIMAL
    return (prob.value if sense == "max" else -prob.value) + offset


def test_sdpa_dump_solved_externally(xz_ma):
    from steerkit.measures import incompatibility_robustness, steerable_weight
    from steerkit.assemblage import dress

    with capture_problems() as probs:
        ir = incompatibility_robustness(xz_ma).value
    assert len(probs) == 1
    assert abs(solve_sdpa_with_cvxpy(to_sdpa(probs[0])) - solve(probs[0]).value) < 1e-6
    assert abs(ir - (3 - 2 * np.sqrt(2))) < 1e-7
    with capture_problems() as probs:
        steerable_weight(dress(xz_ma, np.diag([0.7, 0.3])))
    assert abs(solve_sdpa_with_cvxpy(to_sdpa(probs[0])) - solve(probs[0]).value) < 1e-6


def test_sdpa_lp_and_free_columns():
    # max s s.t. diag(2,3) - s 1 psd, plus an LP column
    n = 1 + 1 + 4
    c = np.zeros(n)
    c[0] = 1.0
    c[1] = -1.0
    A = np.zeros((4, n))
    A[:, 0] = sym_vec(np.eye(2))
    A[:, 2:] = np.eye(4)
    p = ConicProblem(c, A, sym_vec(np.diag([2.0, 3.0])), n_free=1, n_lp=1, psd=(2,), sense="max", offset=0.25)
    assert abs(solve_sdpa_with_cvxpy(to_sdpa(p)) - 2.25) < 1e-6
    assert abs(solve(p).value - 2.25) < 1e-9
