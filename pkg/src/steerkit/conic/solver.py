"""Homogeneous self-dual interior-point method for small dense SDPs.

Nesterov-Todd scaling with a Mehrotra predictor-corrector.  Same-size PSD
blocks are batched as ``(k, n, n)`` stacks so that a problem with dozens of
tiny blocks costs a handful of vectorized numpy calls per iteration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .problem import ConicProblem, ConicSolution, Settings

__all__ = ["solve", "reduce_rows", "symmetrize_columns", "RowReduction"]


@dataclass(frozen=True)
class RowReduction:
    """Maximal independent subset of constraint rows.

    Dropped rows satisfy ``A[drop] = T @ A[keep]``.
    """

    keep: np.ndarray
    drop: np.ndarray
    T: np.ndarray

    def consistent(self, b: np.ndarray, tol: float = 1e-9) -> bool:
        if self.drop.size == 0:
            return True
        resid = b[self.drop] - self.T @ b[self.keep]
        return bool(np.max(np.abs(resid)) <= tol * (1.0 + np.max(np.abs(b))))


def symmetrize_columns(problem: ConicProblem) -> np.ndarray:
    """Replace each PSD block's coefficients by their symmetric part.

    Equivalent on symmetric variables, and it exposes rows that only differ
    by which triangle they address (so that :func:`reduce_rows` drops them).
    """
    A = problem.A.copy()
    for o, n in zip(problem.block_offsets(), problem.psd):
        blk = A[:, o:o + n * n].reshape(-1, n, n)
        A[:, o:o + n * n] = (0.5 * (blk + blk.transpose(0, 2, 1))).reshape(-1, n * n)
    return A


def reduce_rows(A: np.ndarray, tol: float = 1e-10) -> RowReduction:
    m = A.shape[0]
    if m == 0:
        e = np.zeros(0, dtype=int)
        return RowReduction(e, e, np.zeros((0, 0)))
    _, r, piv = sla.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > tol * max(diag[0], 1e-300))) if diag.size else 0
    keep = np.sort(piv[:rank])
    drop = np.setdiff1d(np.arange(m), keep)
    if drop.size:
        # A[drop].T = A[keep].T @ T.T
        coef, *_ = np.linalg.lstsq(A[keep].T, A[drop].T, rcond=None)
        T = coef.T
    else:
        T = np.zeros((0, rank))
    return RowReduction(keep, drop, T)


# ---------------------------------------------------------------------------
# cone bookkeeping


class _Group:
    """Stack of same-size PSD blocks."""

    def __init__(self, n: int, cplx: bool, cols: np.ndarray, A: np.ndarray, c: np.ndarray):
        k = cols.shape[0]
        self.n, self.k, self.cplx = n, k, cplx
        self.cols = cols  # (k, n*n) column indices
        Ag = A[:, cols.ravel()].reshape(A.shape[0], k, n, n)
        Ag = 0.5 * (Ag + Ag.transpose(0, 1, 3, 2))
        self.A = Ag.reshape(A.shape[0], k * n * n)
        cg = c[cols.ravel()].reshape(k, n, n)
        self.c = 0.5 * (cg + cg.transpose(0, 2, 1))

    def apply(self, X: np.ndarray) -> np.ndarray:
        return self.A @ X.ravel()

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        return (y @ self.A).reshape(self.k, self.n, self.n)


def _sym(X):
    return 0.5 * (X + X.transpose(0, 2, 1))


def _j_average(X):
    h = X.shape[-1] // 2
    P = 0.5 * (X[:, :h, :h] + X[:, h:, h:])
    Q = 0.5 * (X[:, :h, h:] - X[:, :h, h:].transpose(0, 2, 1))
    return np.concatenate([np.concatenate([P, Q], axis=2), np.concatenate([-Q, P], axis=2)], axis=1)


class _Cone:
    """Primal/dual iterate pieces: free part, LP part and PSD groups."""

    __slots__ = ("f", "l", "g")

    def __init__(self, f, l, g):
        self.f, self.l, self.g = f, l, g

    def axpy(self, a, other):
        return _Cone(self.f + a * other.f, self.l + a * other.l,
                     [x + a * o for x, o in zip(self.g, other.g)])

    def dot(self, other):
        return float(self.f @ other.f + self.l @ other.l
                     + sum(np.vdot(x, o) for x, o in zip(self.g, other.g)))

    def maxabs(self):
        vals = [np.max(np.abs(v)) for v in (self.f, self.l, *self.g) if v.size]
        return float(max(vals)) if vals else 0.0


class _Data:
    def __init__(self, prob: ConicProblem, A: np.ndarray, b: np.ndarray, c: np.ndarray):
        nf, nl = prob.n_free, prob.n_lp
        self.m = A.shape[0]
        self.b = b
        self.Af, self.Al = A[:, :nf], A[:, nf:nf + nl]
        offs = prob.block_offsets()
        by_key: dict[tuple[int, bool], list[int]] = {}
        for i, (n, cx) in enumerate(zip(prob.psd, prob.complex_blocks)):
            by_key.setdefault((n, cx), []).append(i)
        self.groups: list[_Group] = []
        self.members: list[list[int]] = []
        for (n, cx), idx in by_key.items():
            cols = np.stack([np.arange(offs[i], offs[i] + n * n) for i in idx])
            self.groups.append(_Group(n, cx, cols, A, c))
            self.members.append(idx)
        self.c = _Cone(c[:nf].copy(), c[nf:nf + nl].copy(), [g.c for g in self.groups])
        self.nu = nl + sum(g.k * g.n for g in self.groups)

    def A_op(self, x: _Cone) -> np.ndarray:
        r = self.Af @ x.f + self.Al @ x.l
        for g, X in zip(self.groups, x.g):
            r = r + g.apply(X)
        return r

    def AT_op(self, y: np.ndarray) -> _Cone:
        return _Cone(self.Af.T @ y, self.Al.T @ y, [g.adjoint(y) for g in self.groups])

    def unpack(self, x: _Cone, prob: ConicProblem) -> np.ndarray:
        out = np.zeros(prob.n_vars)
        nf, nl = prob.n_free, prob.n_lp
        out[:nf] = x.f
        out[nf:nf + nl] = x.l
        for g, X in zip(self.groups, x.g):
            out[g.cols.ravel()] = X.ravel()
        return out


# ---------------------------------------------------------------------------
# scaling


class _Scaling:
    def __init__(self, data: _Data, x: _Cone, s: _Cone):
        self.wl = np.sqrt(x.l / s.l)
        self.laml = np.sqrt(x.l * s.l)
        self.R, self.Rinv, self.W, self.lam = [], [], [], []
        for X, S in zip(x.g, s.g):
            Lx = np.linalg.cholesky(X)
            Ls = np.linalg.cholesky(S)
            U, lam, Vt = np.linalg.svd(Ls.transpose(0, 2, 1) @ Lx)
            rs = 1.0 / np.sqrt(lam)
            R = (Lx @ Vt.transpose(0, 2, 1)) * rs[:, None, :]
            Rinv = rs[:, :, None] * (U.transpose(0, 2, 1) @ Ls.transpose(0, 2, 1))
            self.R.append(R)
            self.Rinv.append(Rinv)
            self.W.append(R @ R.transpose(0, 2, 1))
            self.lam.append(lam)

    def D(self, v: _Cone) -> _Cone:
        return _Cone(np.zeros_like(v.f), self.wl ** 2 * v.l,
                     [W @ V @ W for W, V in zip(self.W, v.g)])

    def to_scaled_x(self, dx: _Cone):
        return dx.l / self.wl, [Ri @ D @ Ri.transpose(0, 2, 1) for Ri, D in zip(self.Rinv, dx.g)]

    def to_scaled_s(self, ds: _Cone):
        return ds.l * self.wl, [R.transpose(0, 2, 1) @ D @ R for R, D in zip(self.R, ds.g)]

    def lyap(self, rl, rg) -> _Cone:
        """Solve ``lam o Z = r`` in the scaled space and map back: ``Q = R Z R^T``."""
        ql = self.wl * (rl / self.laml)
        qg = []
        for R, lam, r in zip(self.R, self.lam, rg):
            Z = 2.0 * r / (lam[:, :, None] + lam[:, None, :])
            qg.append(R @ Z @ R.transpose(0, 2, 1))
        return _Cone(np.zeros(0), ql, qg)


def _max_step(lam_l, dl, lam_g, dg) -> float:
    alpha = np.inf
    if dl.size:
        ratio = dl / lam_l
        mn = ratio.min()
        if mn < 0:
            alpha = min(alpha, -1.0 / mn)
    for lam, D in zip(lam_g, dg):
        rs = 1.0 / np.sqrt(lam)
        M = _sym(rs[:, :, None] * D * rs[:, None, :])
        mn = np.linalg.eigvalsh(M)[:, 0].min()
        if mn < 0:
            alpha = min(alpha, -1.0 / mn)
    return alpha


# ---------------------------------------------------------------------------
# main loop

_POLISH = 1e-2


def _kkt_factor(M, Af):
    """Factorizations of the KKT matrix to try, most trusted first."""
    nf = Af.shape[1]
    K = M if nf == 0 else np.block([[M, Af], [Af.T, np.zeros((nf, nf))]])
    if nf == 0:
        try:
            return K, [("chol", sla.cho_factor(M, lower=True, check_finite=False))]
        except (np.linalg.LinAlgError, sla.LinAlgError):
            pass
    cands = []
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu = sla.lu_factor(K, check_finite=False)
    if np.all(np.isfinite(lu[0])) and np.min(np.abs(np.diag(lu[0]))) > 0.0:
        cands.append(("lu", lu))
    if nf == 0:
        # static regularization; refinement against K removes most of its bias
        delta = 1e-13 * max(float(np.max(np.diag(M), initial=0.0)), 1e-300)
        try:
            cands.append(("chol", sla.cho_factor(M + delta * np.eye(M.shape[0]), lower=True, check_finite=False)))
        except (np.linalg.LinAlgError, sla.LinAlgError):
            pass
    if not cands:
        cands.append(("pinv", np.linalg.pinv(K, rcond=1e-14)))
    return K, cands


def _kkt_solve(fac, r1, r2, refine: int = 2):
    K, cands = fac
    rhs = np.concatenate([r1, r2])
    scale = np.max(np.abs(rhs), initial=0.0)
    for kind, F in cands:

        def raw(v):
            if kind == "chol":
                return sla.cho_solve(F, v, check_finite=False)
            if kind == "lu":
                return sla.lu_solve(F, v, check_finite=False)
            return F @ v

        out = raw(rhs)
        # iterative refinement: the Schur complement is ill-conditioned near the optimum
        for _ in range(refine):
            res = rhs - K @ out
            if not np.all(np.isfinite(res)) or np.max(np.abs(res), initial=0.0) <= 1e-15 * scale:
                break
            out = out + raw(res)
        # accept unless the solve is clearly broken; later candidates are the fallback
        err = np.max(np.abs(rhs - K @ out), initial=0.0)
        if np.isfinite(err) and err <= 1e-6 * scale:
            break
    m = r1.size
    return out[:m], out[m:]


# optional per-iteration callback (diagnostics)
_TRACE = None


def _ipm(data: _Data, st: Settings):
    m = data.m
    b, c = data.b, data.c
    x = _Cone(np.zeros(data.Af.shape[1]), np.ones(data.Al.shape[1]),
              [np.broadcast_to(np.eye(g.n), (g.k, g.n, g.n)).copy() for g in data.groups])
    s = _Cone(np.zeros_like(x.f), np.ones_like(x.l), [X.copy() for X in x.g])
    y = np.zeros(m)
    tau = kappa = 1.0
    nb = 1.0 + (np.max(np.abs(b)) if b.size else 0.0)
    nc = 1.0 + c.maxabs()
    status, it = "max-iter", 0
    best = None
    stall = 0

    for it in range(st.max_iter + 1):
        Ax = data.A_op(x)
        ATy = data.AT_op(y)
        cx = c.dot(x)
        by = float(b @ y)
        Rp = Ax - b * tau
        Rd = ATy.axpy(1.0, s).axpy(-tau, c)
        Rg = by - cx - kappa

        pres = (np.max(np.abs(Rp)) if m else 0.0) / tau / nb
        dres = Rd.maxabs() / tau / nc
        pobj, dobj = cx / tau, by / tau
        gap = abs(pobj - dobj)
        score = max(pres / st.feas_tol, dres / st.feas_tol, gap / (st.gap_tol * max(1.0, abs(pobj))))
        if _TRACE is not None:
            _TRACE(it, pres, dres, gap, tau, kappa)
        if best is None or score < 0.5 * best[0]:
            stall = 0
        else:
            stall += 1
        if best is None or score < best[0]:
            best = (score, x, y, s, tau, kappa)
        if stall >= 4 and best[0] <= 1.0:
            break
        # keep polishing past the requested accuracy while it is cheap
        if score <= _POLISH:
            status = "optimal"
            break

        # infeasibility certificates
        if tau < kappa:
            if by > 0:
                ATyc = data.AT_op(y / by)
                r = ATyc.axpy(1.0 / by, s).maxabs()
                if r <= st.feas_tol or tau / kappa < 1e-8:
                    status = "infeasible"
                    break
            if cx < 0:
                r = np.max(np.abs(Ax / -cx)) if m else 0.0
                if r <= st.feas_tol or tau / kappa < 1e-8:
                    status = "unbounded"
                    break
        if it == st.max_iter:
            break

        try:
            sc = _Scaling(data, x, s)
        except np.linalg.LinAlgError:
            status = "numerical-failure"
            break

        # Schur complement
        M = data.Al @ (sc.wl[:, None] ** 2 * data.Al.T)
        for g, W in zip(data.groups, sc.W):
            Ag = g.A.reshape(m, g.k, g.n, g.n)
            WAW = (W[None] @ Ag @ W[None]).reshape(m, -1)
            M = M + g.A @ WAW.T
        M = 0.5 * (M + M.T)
        fac = _kkt_factor(M, data.Af)

        Dc = sc.D(c)
        h1 = data.A_op(Dc) + b
        v1, v2 = _kkt_solve(fac, h1, c.f)
        qx = data.AT_op(v1).axpy(-1.0, c)
        qx = sc.D(qx)
        qx.f = v2

        mu = (x.dot(s) + tau * kappa) / (data.nu + 1)
        lam2_l = sc.laml ** 2
        lam2_g = [np.zeros((g.k, g.n, g.n)) for g in data.groups]
        for L2, lam in zip(lam2_g, sc.lam):
            idx = np.arange(lam.shape[1])
            L2[:, idx, idx] = lam ** 2

        def newton(r1, r2, r3, r4, r5):
            """Solve the linearized system for targets ``r1..r5``.

            ``A dx - b dtau = r1``, ``A^T dy + ds - c dtau = r2``,
            ``b.dy - c.dx - dkappa = r3``, ``dx + D ds = r4`` (cone part),
            ``kappa dtau + tau dkappa = r5``.
            """
            base = r4.axpy(-1.0, sc.D(r2))
            base.f = np.zeros_like(x.f)
            u1, u2 = _kkt_solve(fac, r1 - data.A_op(base), r2.f)
            px = sc.D(data.AT_op(u1)).axpy(1.0, base)
            px.f = u2
            num = r3 - b @ u1 + c.dot(px) + r5 / tau
            den = b @ v1 - c.dot(qx) + kappa / tau
            dtau = num / den
            dy = u1 + v1 * dtau
            dx = px.axpy(dtau, qx)
            ds = r2.axpy(-1.0, data.AT_op(dy)).axpy(dtau, c)
            ds.f = np.zeros_like(x.f)
            dkappa = (r5 - kappa * dtau) / tau
            return dx, dy, ds, dtau, dkappa

        def direction(gamma, rl, rg, rtk):
            Q = sc.lyap(rl, rg)
            Q.f = np.zeros_like(x.f)
            r2 = _Cone(-gamma * Rd.f, -gamma * Rd.l, [-gamma * G for G in Rd.g])
            r1, r3 = -gamma * Rp, -gamma * Rg
            return newton(r1, r2, r3, Q, rtk)

        def step_len(dx, ds, dtau, dkappa):
            dxl, dxg = sc.to_scaled_x(dx)
            dsl, dsg = sc.to_scaled_s(ds)
            a = min(_max_step(sc.laml, dxl, sc.lam, dxg), _max_step(sc.laml, dsl, sc.lam, dsg))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkappa < 0:
                a = min(a, -kappa / dkappa)
            return a, (dxl, dxg, dsl, dsg)

        # predictor
        dx, dy, ds, dtau, dkappa = direction(1.0, -lam2_l, [-L for L in lam2_g], -tau * kappa)
        a_aff, (dxl, dxg, dsl, dsg) = step_len(dx, ds, dtau, dkappa)
        a_aff = min(1.0, a_aff)
        sigma = (1.0 - a_aff) ** 3
        # corrector
        rl = sigma * mu - lam2_l - dxl * dsl
        rg = []
        for L2, Dx, Ds, g in zip(lam2_g, dxg, dsg, data.groups):
            P = Dx @ Ds
            rg.append(sigma * mu * np.eye(g.n)[None] - L2 - 0.5 * (P + P.transpose(0, 2, 1)))
        rtk = sigma * mu - tau * kappa - dtau * dkappa
        dx, dy, ds, dtau, dkappa = direction(1.0 - sigma, rl, rg, rtk)
        a, _ = step_len(dx, ds, dtau, dkappa)
        if a < 0.5 * a_aff:
            # second-order term hurts: fall back to the plain centered direction
            rl = sigma * mu - lam2_l
            rg = [sigma * mu * np.eye(g.n)[None] - L2 for L2, g in zip(lam2_g, data.groups)]
            alt = direction(1.0 - sigma, rl, rg, sigma * mu - tau * kappa)
            a_alt, _ = step_len(alt[0], alt[2], alt[3], alt[4])
            if a_alt > a:
                (dx, dy, ds, dtau, dkappa), a = alt, a_alt
        a = min(1.0, st.step * a)
        if not np.isfinite(a) or a <= 1e-14:
            status = "numerical-failure"
            break

        x = x.axpy(a, dx)
        s = s.axpy(a, ds)
        s.f = np.zeros_like(s.f)
        y = y + a * dy
        tau += a * dtau
        kappa += a * dkappa
        for i, g in enumerate(data.groups):
            x.g[i] = _sym(x.g[i])
            s.g[i] = _sym(s.g[i])
            if g.cplx:
                x.g[i] = _j_average(x.g[i])
                s.g[i] = _j_average(s.g[i])
        if not (np.isfinite(tau) and np.isfinite(kappa)) or tau <= 0 or kappa <= 0:
            status = "numerical-failure"
            break

    if status in ("max-iter", "numerical-failure") and best is not None:
        score, x, y, s, tau, kappa = best
        if score <= 1.0:
            status = "optimal"
    return status, it, x, y, s, tau, kappa


def solve(problem: ConicProblem, settings: Settings | None = None,
          reduction: RowReduction | None = None) -> ConicSolution:
    """Solve a conic problem.

    Parameters
    ----------
    problem : ConicProblem
    settings : Settings, optional
    reduction : RowReduction, optional
        Precomputed row reduction of ``problem.A``; computed when omitted.

    Returns
    -------
    ConicSolution
        Objective values are reported in the sense of ``problem`` (including
        its offset).  Dual multipliers ``y`` follow the convention
        ``c - A.T @ y = s`` of the minimization form.
    """
    st = settings or Settings()
    sign = 1.0 if problem.sense == "min" else -1.0
    c = sign * problem.c
    A, b = problem.A, problem.b
    m = b.size
    A = symmetrize_columns(problem)
    red = reduction if reduction is not None else reduce_rows(A)
    nvar = problem.n_vars

    def _out(status, x, y, s, it):
        pobj = sign * float(c @ x) + problem.offset
        dobj = sign * float(b @ y) + problem.offset
        pr = float(np.max(np.abs(A @ x - b))) if m else 0.0
        dr_vec = c - A.T @ y - s
        dr = float(np.max(np.abs(dr_vec))) if nvar else 0.0
        return ConicSolution(status, x, sign * y, s, pobj, dobj, abs(pobj - dobj),
                             pr, dr, it, problem)

    if not red.consistent(b):
        z = np.zeros(nvar)
        return _out("infeasible", z, np.zeros(m), z.copy(), 0)

    data = _Data(problem, A[red.keep], b[red.keep], c)
    status, it, x, yk, s, tau, kappa = _ipm(data, st)
    y = np.zeros(m)
    if status in ("infeasible", "unbounded"):
        xv, sv = data.unpack(x, problem), data.unpack(s, problem)
        y[red.keep] = yk
        return _out(status, xv, y, sv, it)
    xv = data.unpack(x, problem) / tau
    sv = data.unpack(s, problem) / tau
    y[red.keep] = yk / tau
    return _out(status, xv, y, sv, it)
