"""Incompatibility and steering measures as semidefinite programs.

Every measure returns a :class:`MeasureResult` holding the optimal value, the
convex decomposition that attains it and the dual variables that certify it.
Joint measurability and local-hidden-state membership are encoded through the
full table of deterministic strategies ``D(a|x, lam)``.

Robustness decompositions satisfy ``(M + t N) / (1 + t) = F`` with ``F`` free
(jointly measurable, or LHS).  Weight decompositions satisfy
``M = (1 - w) F + w N``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from steerkit import linop
from steerkit.assemblage import (
    MeasurementAssemblage,
    Povm,
    StateAssemblage,
    dress,
    enumerate_deterministic,
    seo,
    trivial_ma,
)
from steerkit.conic import Settings
from steerkit.conic.model import Model, ModelSolution

Assemblage = Union[MeasurementAssemblage, StateAssemblage]

__all__ = [
    "MeasureResult",
    "SolverError",
    "incompatibility_robustness",
    "steering_robustness",
    "consistent_steering_robustness",
    "random_robustness_ma",
    "random_robustness_sa",
    "jm_robustness",
    "consistent_lhs_robustness",
    "incompatible_weight",
    "incompatible_weight_dual",
    "steerable_weight",
    "robustness_of_measurement",
    "optimal_state_from_iw_dual",
    "optimal_state_for_ir",
    "jm_feasible",
    "MEASURES",
]


class SolverError(RuntimeError):
    """The conic solver did not return an optimal status."""

    def __init__(self, status: str, measure: str):
        super().__init__(f"{measure}: solver status {status}")
        self.status = status


@dataclass
class MeasureResult:
    """Optimal value of a measure with its decomposition and certificate.

    Attributes
    ----------
    measure : str
        Short name (``"ir"``, ``"sr"``, ``"iw"``, ...).
    value : float
    free : MeasurementAssemblage or StateAssemblage or Povm
        Jointly measurable / LHS / trivial component.
    noise : MeasurementAssemblage or StateAssemblage or Povm
    parents : ndarray
        Hidden-variable components ``(n_lam, d, d)``; parent POVM ``G_lam``
        for measurement assemblages, subnormalized ``sigma_lam`` for state
        assemblages, so that ``free[x, a] = sum_lam D(a|x,lam) parents[lam]``.
    certificate : dict of str to ndarray
        Dual variables.
    status : str
    """

    measure: str
    value: float
    free: object
    noise: object
    parents: np.ndarray
    certificate: dict = field(default_factory=dict)
    status: str = "optimal"
    primal_objective: float = float("nan")
    dual_objective: float = float("nan")

    @property
    def gap(self) -> float:
        return abs(self.primal_objective - self.dual_objective)

    def reconstruction_residual(self, target: Assemblage | Povm) -> float:
        """Max-abs violation of the defining identity against ``target``."""
        t = self.value
        m = target.elements
        f, n = self.free.elements, self.noise.elements
        if self.measure in ("iw", "iw-dual", "sw"):
            return linop.maxabs((1 - t) * f + t * n - m)
        return linop.maxabs((m + t * n) / (1 + t) - f)


def _check(sol: ModelSolution, name: str) -> None:
    if sol.status != "optimal":
        raise SolverError(sol.status, name)


def _strategy_terms(n_x: int, n_a: int):
    """``terms[x][a]`` lists the strategies with ``D(a|x,lam) = 1``."""
    tab = enumerate_deterministic(n_x, n_a)
    return tab, [[list(np.flatnonzero(tab.answers[:, x] == a)) for a in range(n_a)] for x in range(n_x)]


def _lhs_sum(tab, parents: np.ndarray) -> np.ndarray:
    """``sum_lam D(a|x,lam) P_lam`` for a stack of parents, shape ``(n_x, n_a, d, d)``."""
    return np.einsum("xal,lij->xaij", tab.table, parents)


# below solver accuracy the noise component is numerically undefined
NOISE_CUTOFF = 1e-8


def _normalize(ops: np.ndarray, weight: float, fallback: np.ndarray) -> np.ndarray:
    if weight <= NOISE_CUTOFF:
        return np.array(fallback, dtype=complex)
    return ops / weight


def _single_setting(name: str, obj: Assemblage) -> MeasureResult:
    """A single setting is its own parent: every measure vanishes exactly.

    The parents are the elements themselves (strategy ``lam`` answers ``a = lam``)
    and the zero dual variables certify optimality.
    """
    els = obj.elements
    d = obj.dim
    zero = np.zeros_like(els)
    cls = type(obj)
    if cls is StateAssemblage:
        free, noise = obj, StateAssemblage(np.broadcast_to(obj.reduced_state / obj.n_outcomes, els.shape), obj.reduced_state)
        cert = {"F": zero}
    else:
        free, noise = obj, trivial_ma(d, 1, obj.n_outcomes)
        cert = {"omega": zero, "X": np.zeros((d, d), dtype=complex)}
    return MeasureResult(name, 0.0, free, noise, np.array(els[0]), cert, "optimal", 0.0, 0.0)


# ---------------------------------------------------------------------------
# measurement-assemblage robustness


def _ma_robustness(ma: MeasurementAssemblage, noise: str, settings: Settings | None) -> MeasureResult:
    if ma.n_settings == 1:
        return _single_setting({"general": "ir", "random": "ir-random", "jm": "ir-jm"}[noise], ma)
    n_x, n_a, d = ma.n_settings, ma.n_outcomes, ma.dim
    tab, terms = _strategy_terms(n_x, n_a)
    mdl = Model()
    t = mdl.nonneg()
    G = [mdl.psd(d) for _ in range(tab.n_strategies)]
    eye = np.eye(d)
    if noise == "general":
        N = [[mdl.psd(d) for _ in range(n_a)] for _ in range(n_x)]
    elif noise == "jm":
        Gn = [mdl.psd(d) for _ in range(tab.n_strategies)]
    eqs = [[None] * n_a for _ in range(n_x)]
    for x in range(n_x):
        for a in range(n_a):
            herm = [(1.0, G[l]) for l in terms[x][a]]
            scal = []
            if noise == "general":
                herm.append((-1.0, N[x][a]))
            elif noise == "random":
                scal.append((-eye / n_a, t))
            else:
                herm += [(-1.0, Gn[l]) for l in terms[x][a]]
            eqs[x][a] = mdl.matrix_eq(herm, scal, ma.elements[x, a])
    norm = mdl.matrix_eq([(1.0, g) for g in G], [(-eye, t)], eye)
    if noise == "jm":
        mdl.matrix_eq([(1.0, g) for g in Gn], [(-eye, t)], np.zeros((d, d)))
    mdl.objective([], [(1.0, t)], "min")
    sol = mdl.solve(settings)
    name = {"general": "ir", "random": "ir-random", "jm": "ir-jm"}[noise]
    _check(sol, name)

    tv = max(sol.value(t), 0.0)
    Gt = np.stack([sol.value(g) for g in G])
    parents = Gt / (1 + tv)
    free = _lhs_sum(tab, parents)
    triv = trivial_ma(d, n_x, n_a).elements
    if noise == "general":
        noise_ops = _normalize(np.array([[sol.value(N[x][a]) for a in range(n_a)] for x in range(n_x)]), tv, triv)
    elif noise == "random":
        noise_ops = triv
    else:
        noise_ops = _normalize(_lhs_sum(tab, np.stack([sol.value(g) for g in Gn])), tv, triv)
    omega = np.array([[sol.dual(eqs[x][a]) for a in range(n_a)] for x in range(n_x)])
    cert = {"omega": omega, "X": -sol.dual(norm)}
    return MeasureResult(
        name, tv, MeasurementAssemblage(linop.hermitize(free)), MeasurementAssemblage(linop.hermitize(noise_ops)),
        parents, cert, sol.status, sol.objective, sol.dual_objective,
    )


def incompatibility_robustness(ma: MeasurementAssemblage, settings: Settings | None = None) -> MeasureResult:
    """Incompatibility robustness with general (arbitrary POVM) noise.

    ``certificate`` holds ``omega[x, a]`` and ``X`` with
    ``sum_{a,x} D(a|x,lam) omega_{a|x} <= X`` and
    ``value = sum tr(omega M) - tr X``.
    """
    return _ma_robustness(ma, "general", settings)


def random_robustness_ma(ma: MeasurementAssemblage, settings: Settings | None = None) -> MeasureResult:
    """Robustness against white noise ``N_{a|x} = 1/n_a``."""
    return _ma_robustness(ma, "random", settings)


def jm_robustness(ma: MeasurementAssemblage, settings: Settings | None = None) -> MeasureResult:
    """Robustness against jointly measurable noise."""
    return _ma_robustness(ma, "jm", settings)


# ---------------------------------------------------------------------------
# state-assemblage robustness


def _compress(sa: StateAssemblage):
    """Restrict an assemblage to the range of its reduced state."""
    w, v = linop.range_basis(sa.reduced_state)
    if w.size == sa.dim:
        return sa, None
    vh = v.conj().T
    els = linop.hermitize(vh @ sa.elements @ v)
    return StateAssemblage(els, np.diag(w).astype(complex)), v


def _lift(ops: np.ndarray, v: np.ndarray | None) -> np.ndarray:
    if v is None:
        return ops
    return v @ ops @ v.conj().T


def _sa_robustness(sa: StateAssemblage, noise: str, settings: Settings | None) -> MeasureResult:
    """Robustness of a state assemblage.

    Every program is restricted to the range of the reduced state ``rho``,
    which leaves the optimum unchanged, and its variables are congruence
    transformed so that they stay bounded when ``rho`` is nearly singular.
    When the noise shares the reduced state the transform is
    ``rho^{-1/2}`` and the data become the steering-equivalent observables.
    With general noise the objective would then weigh the variables by
    ``rho`` itself, so the balanced ``(rho + delta)^{-1/2}`` with
    ``delta = sqrt(lambda_min lambda_max)`` is used instead.
    """
    name = {"general": "sr", "consistent": "sr-consistent", "random": "sr-random", "clhs": "sr-clhs"}[noise]
    if sa.n_settings == 1:
        return _single_setting(name, sa)
    sa_c, iso = _compress(sa)
    n_x, n_a, d = sa_c.n_settings, sa_c.n_outcomes, sa_c.dim
    rho = sa_c.reduced_state
    eye = np.eye(d)
    if noise == "general":
        # balanced congruence (rho + delta)^{-1/2}: splits the conditioning
        # between the data and the objective weight rho + delta
        w = np.linalg.eigvalsh(rho)
        shifted = rho + np.sqrt(max(w[0], 0.0) * w[-1]) * eye
        r = linop.sqrt_psd(shifted)
        q = np.linalg.inv(r)
        b = linop.hermitize(q @ sa_c.elements @ q)
    else:
        r = linop.sqrt_psd(rho)
        q = linop.pinv_sqrt_on_range(rho)
        b = seo(sa).ma.elements
    tab, terms = _strategy_terms(n_x, n_a)
    mdl = Model()
    R = [mdl.psd(d) for _ in range(tab.n_strategies)]
    t = None if noise == "general" else mdl.nonneg()
    if noise in ("general", "consistent"):
        Xi = [[mdl.psd(d) for _ in range(n_a)] for _ in range(n_x)]
    elif noise == "clhs":
        Rn = [mdl.psd(d) for _ in range(tab.n_strategies)]
    eqs = [[None] * n_a for _ in range(n_x)]
    for x in range(n_x):
        for a in range(n_a):
            herm = [(1.0, R[l]) for l in terms[x][a]]
            scal = []
            if noise in ("general", "consistent"):
                herm.append((-1.0, Xi[x][a]))
            elif noise == "random":
                scal.append((-eye / n_a, t))
            else:
                herm += [(-1.0, Rn[l]) for l in terms[x][a]]
            eqs[x][a] = mdl.matrix_eq(herm, scal, b[x, a])
    norm = None
    if noise == "consistent":
        norm = mdl.matrix_eq([(1.0, v) for v in R], [(-eye, t)], eye)
    elif noise == "clhs":
        norm = mdl.matrix_eq([(1.0, v) for v in Rn], [(-eye, t)], np.zeros((d, d)))
    if noise == "general":
        mdl.objective([(r @ r, v) for v in R], [], "min", offset=-1.0)
    else:
        mdl.objective([], [(1.0, t)], "min")
    sol = mdl.solve(settings)
    _check(sol, name)

    def up(v):
        return r @ sol.value(v) @ r

    Rt = np.stack([up(v) for v in R])
    tv = max(sol.objective, 0.0) if noise == "general" else max(sol.value(t), 0.0)
    parents = Rt / (1 + tv)
    free = _lhs_sum(tab, parents)
    triv = np.broadcast_to(rho / n_a, (n_x, n_a, d, d))
    if noise in ("general", "consistent"):
        noise_ops = _normalize(np.array([[up(Xi[x][a]) for a in range(n_a)] for x in range(n_x)]), tv, triv)
    elif noise == "random":
        noise_ops = triv
    else:
        noise_ops = _normalize(_lhs_sum(tab, np.stack([up(v) for v in Rn])), tv, triv)
    F = np.array([[q @ sol.dual(eqs[x][a]) @ q for a in range(n_a)] for x in range(n_x)])
    cert = {"F": linop.hermitize(_lift(F, iso))}
    if norm is not None:
        cert["Z"] = linop.hermitize(_lift(q @ sol.dual(norm) @ q, iso))
    free, noise_ops, parents = (linop.hermitize(_lift(o, iso)) for o in (free, noise_ops, parents))
    rho_full = sa.reduced_state
    return MeasureResult(
        name, tv,
        StateAssemblage(free, linop.hermitize(free.sum(axis=1).mean(axis=0))),
        StateAssemblage(noise_ops, linop.hermitize(noise_ops.sum(axis=1).mean(axis=0)) if tv > NOISE_CUTOFF else rho_full),
        parents, cert, sol.status, sol.objective, sol.dual_objective,
    )


def steering_robustness(sa: StateAssemblage, settings: Settings | None = None) -> MeasureResult:
    """Steering robustness with general noise assemblages.

    ``certificate["F"]`` satisfies ``F >= 0``, ``sum D(a|x,lam) F_{a|x} <= 1``
    and ``value = sum tr(F sigma) - 1``.
    """
    return _sa_robustness(sa, "general", settings)


def consistent_steering_robustness(sa: StateAssemblage, settings: Settings | None = None) -> MeasureResult:
    """Steering robustness with noise sharing the reduced state of ``sa``."""
    return _sa_robustness(sa, "consistent", settings)


def random_robustness_sa(sa: StateAssemblage, settings: Settings | None = None) -> MeasureResult:
    """Robustness against the noise ``xi_{a|x} = rho_B / n_a``."""
    return _sa_robustness(sa, "random", settings)


def consistent_lhs_robustness(sa: StateAssemblage, settings: Settings | None = None) -> MeasureResult:
    """Robustness against LHS noise with the reduced state of ``sa``."""
    return _sa_robustness(sa, "clhs", settings)


# ---------------------------------------------------------------------------
# weights


def incompatible_weight(ma: MeasurementAssemblage, settings: Settings | None = None) -> MeasureResult:
    """Incompatible weight from the primal program ``max s``.

    Solves ``B_{a|x} >= sum D(a|x,lam) G_lam``, ``G_lam >= 0``,
    ``sum G_lam = s 1`` and returns ``1 - s``.
    """
    if ma.n_settings == 1:
        return _single_setting("iw", ma)
    n_x, n_a, d = ma.n_settings, ma.n_outcomes, ma.dim
    tab, terms = _strategy_terms(n_x, n_a)
    mdl = Model()
    s = mdl.nonneg()
    G = [mdl.psd(d) for _ in range(tab.n_strategies)]
    P = [[mdl.psd(d) for _ in range(n_a)] for _ in range(n_x)]
    eqs = [[mdl.matrix_eq([(1.0, G[l]) for l in terms[x][a]] + [(1.0, P[x][a])], [], ma.elements[x, a])
            for a in range(n_a)] for x in range(n_x)]
    eye = np.eye(d)
    norm = mdl.matrix_eq([(1.0, g) for g in G], [(-eye, s)], np.zeros((d, d)))
    mdl.objective([], [(1.0, s)], "max")
    sol = mdl.solve(settings)
    _check(sol, "iw")
    sv = min(max(sol.value(s), 0.0), 1.0)
    w = 1.0 - sv
    Gs = np.stack([sol.value(g) for g in G])
    triv = trivial_ma(d, n_x, n_a).elements
    parents = _normalize(Gs, sv, np.broadcast_to(eye / tab.n_strategies, Gs.shape))
    free = _lhs_sum(tab, parents)
    noise = _normalize(ma.elements - _lhs_sum(tab, Gs), w, triv)
    cert = {
        "omega": np.array([[sol.dual(eqs[x][a]) for a in range(n_a)] for x in range(n_x)]),
        "X": -sol.dual(norm),
    }
    return MeasureResult(
        "iw", w, MeasurementAssemblage(linop.hermitize(free)), MeasurementAssemblage(linop.hermitize(noise)),
        parents, cert, sol.status, 1.0 - sol.objective, 1.0 - sol.dual_objective,
    )


def incompatible_weight_dual(ma: MeasurementAssemblage, settings: Settings | None = None) -> MeasureResult:
    """Incompatible weight from the dual program.

    Minimizes ``sum tr(omega_{a|x} B_{a|x})`` subject to
    ``sum D(a|x,lam) omega_{a|x} >= X`` for every ``lam``, ``tr X = 1`` and
    ``omega >= 0`` with ``X`` Hermitian but otherwise free.  The minimum is
    ``1 - IW``.  The multipliers of the strategy constraints give the parent
    POVM of the jointly measurable part.
    """
    if ma.n_settings == 1:
        return _single_setting("iw-dual", ma)
    n_x, n_a, d = ma.n_settings, ma.n_outcomes, ma.dim
    tab, terms = _strategy_terms(n_x, n_a)
    mdl = Model()
    om = [[mdl.psd(d) for _ in range(n_a)] for _ in range(n_x)]
    X = mdl.free_hermitian(d)
    Y = [mdl.psd(d) for _ in range(tab.n_strategies)]
    eqs = []
    for l in range(tab.n_strategies):
        herm = [(1.0, om[x][tab.answers[l, x]]) for x in range(n_x)] + [(-1.0, X), (-1.0, Y[l])]
        eqs.append(mdl.matrix_eq(herm, [], np.zeros((d, d))))
    mdl.scalar_eq([(np.eye(d), X)], [], 1.0)
    mdl.objective([(ma.elements[x, a], om[x][a]) for x in range(n_x) for a in range(n_a)], [], "min")
    sol = mdl.solve(settings)
    _check(sol, "iw-dual")
    sv = min(max(sol.objective, 0.0), 1.0)
    w = 1.0 - sv
    # the multiplier of strategy equation lam is the dual slack of Y_lam, i.e. G_lam >= 0
    Gs = np.stack([linop.hermitize(sol.dual(e)) for e in eqs])
    eye = np.eye(d)
    triv = trivial_ma(d, n_x, n_a).elements
    parents = _normalize(Gs, sv, np.broadcast_to(eye / tab.n_strategies, Gs.shape))
    free = _lhs_sum(tab, parents)
    noise = _normalize(ma.elements - _lhs_sum(tab, Gs), w, triv)
    omega = np.array([[sol.value(om[x][a]) for a in range(n_a)] for x in range(n_x)])
    cert = {"omega": omega, "X": sol.value(X)}
    return MeasureResult(
        "iw-dual", w, MeasurementAssemblage(linop.hermitize(free)), MeasurementAssemblage(linop.hermitize(noise)),
        parents, cert, sol.status, 1.0 - sol.objective, 1.0 - sol.dual_objective,
    )


def steerable_weight(sa: StateAssemblage, settings: Settings | None = None) -> MeasureResult:
    """Steerable weight through ``1 - SW = min sum tr(F sigma)``.

    The program runs over ``F_{a|x} >= 0`` with
    ``sum D(a|x,lam) F_{a|x} >= 1``; the multipliers of those constraints are
    the unnormalized hidden states of the LHS part.  It is solved on the
    range of the reduced state after the substitution
    ``F = rho^{-1/2} G rho^{-1/2}`` (constraint ``sum G >= rho``), which keeps
    the variables bounded when ``rho`` is close to singular.
    """
    if sa.n_settings == 1:
        return _single_setting("sw", sa)
    n_x, n_a = sa.n_settings, sa.n_outcomes
    tab, _ = _strategy_terms(n_x, n_a)
    sa_c, iso = _compress(sa)
    rho_c, d = sa_c.reduced_state, sa_c.dim
    r = linop.sqrt_psd(rho_c)
    q = linop.pinv_sqrt_on_range(rho_c)
    b = seo(sa).ma.elements
    mdl = Model()
    G = [[mdl.psd(d) for _ in range(n_a)] for _ in range(n_x)]
    Y = [mdl.psd(d) for _ in range(tab.n_strategies)]
    eqs = []
    for l in range(tab.n_strategies):
        herm = [(1.0, G[x][tab.answers[l, x]]) for x in range(n_x)] + [(-1.0, Y[l])]
        eqs.append(mdl.matrix_eq(herm, [], rho_c))
    mdl.objective([(b[x, a], G[x][a]) for x in range(n_x) for a in range(n_a)], [], "min")
    sol = mdl.solve(settings)
    _check(sol, "sw")
    sv = min(max(sol.objective, 0.0), 1.0)
    w = 1.0 - sv
    rt = _lift(np.stack([linop.hermitize(r @ sol.dual(e) @ r) for e in eqs]), iso)
    rho = sa.reduced_state
    parents = _normalize(rt, sv, np.broadcast_to(rho / tab.n_strategies, rt.shape))
    free = _lhs_sum(tab, parents)
    noise = _normalize(sa.elements - _lhs_sum(tab, rt), w, np.broadcast_to(rho / n_a, sa.elements.shape))
    F = _lift(np.array([[q @ sol.value(G[x][a]) @ q for a in range(n_a)] for x in range(n_x)]), iso)
    if iso is not None:
        F = F + (np.eye(sa.dim) - iso @ iso.conj().T) / n_x
    free = linop.hermitize(free)
    noise = linop.hermitize(noise)
    return MeasureResult(
        "sw", w,
        StateAssemblage(free, linop.hermitize(free.sum(axis=1).mean(axis=0))),
        StateAssemblage(noise, linop.hermitize(noise.sum(axis=1).mean(axis=0))),
        parents, {"F": linop.hermitize(F)}, sol.status,
        1.0 - sol.objective, 1.0 - sol.dual_objective,
    )


# ---------------------------------------------------------------------------
# single POVM


def robustness_of_measurement(povm: Povm, settings: Settings | None = None) -> MeasureResult:
    """Noise needed to turn a POVM into a trivial one ``q(a) 1``.

    Zero elements are left out of the program: their optimal ``q(a)`` and
    noise are both zero.
    """
    n_a, d = povm.n_outcomes, povm.dim
    live = [a for a in range(n_a) if linop.maxabs(povm.elements[a]) > 0.0]
    mdl = Model()
    q = {a: mdl.nonneg() for a in live}
    N = {a: mdl.psd(d) for a in live}
    eye = np.eye(d)
    eqs = {a: mdl.matrix_eq([(-1.0, N[a])], [(eye, q[a])], povm.elements[a]) for a in live}
    mdl.objective([], [(1.0, qa) for qa in q.values()], "min", offset=-1.0)
    sol = mdl.solve(settings)
    _check(sol, "rom")
    tv = max(sol.objective, 0.0)
    qs = np.zeros(n_a)
    noise = np.zeros((n_a, d, d), dtype=complex)
    omega = np.zeros((n_a, d, d), dtype=complex)
    for a in live:
        qs[a] = sol.value(q[a])
        noise[a] = sol.value(N[a])
        omega[a] = sol.dual(eqs[a])
    free = (qs / (1 + tv))[:, None, None] * eye
    noise = _normalize(noise, tv, np.broadcast_to(eye / n_a, (n_a, d, d)))
    cert = {"omega": omega}
    return MeasureResult(
        "rom", tv, Povm(linop.hermitize(free)), Povm(linop.hermitize(noise)),
        (qs / (1 + tv))[:, None, None] * eye, cert, sol.status, sol.objective, sol.dual_objective,
    )


# ---------------------------------------------------------------------------
# optimal reduced states


def optimal_state_from_iw_dual(ma: MeasurementAssemblage, settings: Settings | None = None) -> np.ndarray:
    """State ``X+ / tr X+`` from the dual incompatible-weight program."""
    res = incompatible_weight_dual(ma, settings)
    w, v = linop.eig_hermitian(res.certificate["X"])
    wp = np.clip(w, 0.0, None)
    if wp.sum() <= 1e-12:
        raise linop.ValidationError("positive part of the dual variable vanishes")
    xp = (v * wp) @ v.conj().T
    return linop.hermitize(xp / np.trace(xp).real)


def optimal_state_for_ir(
    ma: MeasurementAssemblage,
    settings: Settings | None = None,
    tol: float = 1e-5,
    max_rounds: int = 20,
) -> np.ndarray:
    """Reduced state whose dressing of ``ma`` is as steerable as ``ma`` is incompatible.

    The maximally mixed state is tried first.  Otherwise the candidate is the
    dual variable ``X`` of the robustness program: with
    ``F = X^{-1/2} omega X^{-1/2}`` the dual of the steering program is feasible
    and attains ``IR``, so ``SR(dress(ma, X)) >= IR``.  If numerical trouble
    prevents equality, a line search over mixtures with the maximally mixed
    state follows and the best state found is returned with a warning.
    """
    d = ma.dim
    ir = incompatibility_robustness(ma, settings)
    mixed = np.eye(d, dtype=complex) / d
    if ir.value <= tol:
        return mixed
    best_rho, best_val = mixed, steering_robustness(dress(ma, mixed), settings).value
    if best_val >= ir.value - tol:
        return mixed
    x = linop.hermitize(ir.certificate["X"])
    w, v = linop.eig_hermitian(x)
    w = np.clip(w, 0.0, None)
    if w.sum() > 1e-12:
        cand = linop.hermitize((v * w) @ v.conj().T / w.sum())
        val = steering_robustness(dress(ma, cand), settings).value
        if val > best_val:
            best_rho, best_val = cand, val
    if best_val < ir.value - tol:
        # golden-section search on mixtures p*cand + (1-p)*mixed
        lo, hi = 0.0, 1.0
        g = (np.sqrt(5) - 1) / 2
        base = best_rho
        for _ in range(max_rounds):
            p1, p2 = hi - g * (hi - lo), lo + g * (hi - lo)
            v1 = steering_robustness(dress(ma, p1 * base + (1 - p1) * mixed), settings).value
            v2 = steering_robustness(dress(ma, p2 * base + (1 - p2) * mixed), settings).value
            if v1 > best_val:
                best_rho, best_val = p1 * base + (1 - p1) * mixed, v1
            if v2 > best_val:
                best_rho, best_val = p2 * base + (1 - p2) * mixed, v2
            if best_val >= ir.value - tol:
                break
            if v1 > v2:
                hi = p2
            else:
                lo = p1
    if best_val < ir.value - tol:
        warnings.warn(
            f"optimal_state_for_ir: best steering robustness {best_val:.3g} below IR {ir.value:.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    return best_rho


# ---------------------------------------------------------------------------
# membership test


def jm_feasible(ma: MeasurementAssemblage, settings: Settings | None = None, tol: float = 1e-7) -> bool:
    """Whether ``ma`` admits a parent POVM (to tolerance ``tol``).

    Minimizes ``t`` such that ``-t 1 <= sum D(a|x,lam) G_lam - M_{a|x} <= t 1``
    for a POVM ``G``; the assemblage is jointly measurable iff the minimum is 0.
    """
    n_x, n_a, d = ma.n_settings, ma.n_outcomes, ma.dim
    tab, terms = _strategy_terms(n_x, n_a)
    mdl = Model()
    t = mdl.nonneg()
    G = [mdl.psd(d) for _ in range(tab.n_strategies)]
    Pp = [[mdl.psd(d) for _ in range(n_a)] for _ in range(n_x)]
    Pm = [[mdl.psd(d) for _ in range(n_a)] for _ in range(n_x)]
    eye = np.eye(d)
    for x in range(n_x):
        for a in range(n_a):
            # sum D G - M = E with t1 - E = Pp, t1 + E = Pm
            mdl.matrix_eq([(1.0, G[l]) for l in terms[x][a]] + [(1.0, Pp[x][a])], [(-eye, t)], ma.elements[x, a])
            mdl.matrix_eq([(-1.0, G[l]) for l in terms[x][a]] + [(1.0, Pm[x][a])], [(-eye, t)], -ma.elements[x, a])
    mdl.matrix_eq([(1.0, g) for g in G], [], eye)
    mdl.objective([], [(1.0, t)], "min")
    sol = mdl.solve(settings)
    _check(sol, "jm-membership")
    return sol.value(t) <= tol


MEASURES = {
    "ir": incompatibility_robustness,
    "ir-random": random_robustness_ma,
    "ir-jm": jm_robustness,
    "iw": incompatible_weight,
    "iw-dual": incompatible_weight_dual,
    "sr": steering_robustness,
    "sr-consistent": consistent_steering_robustness,
    "sr-random": random_robustness_sa,
    "sr-clhs": consistent_lhs_robustness,
    "sw": steerable_weight,
    "rom": robustness_of_measurement,
}
