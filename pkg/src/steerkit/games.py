"""State discrimination and exclusion games with prior information.

A game assigns a prior ``p(a, x)`` and a state ``rho_{a|x}`` to every cell of
the outcome/setting grid of a measurement assemblage.  A player measuring
setting ``x`` wins a discrimination round when the outcome equals ``a``;
an exclusion round is won when the outcome differs from ``a``.

The guess-only baseline is the best-prior rule: without measuring, the
player announces for every setting the label with the largest prior, which
wins with probability ``sum_x max_a p(a, x)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from steerkit import linop
from steerkit.assemblage import MeasurementAssemblage, Povm, enumerate_deterministic
from steerkit.conic import Settings
from steerkit.conic.model import Model
from steerkit.filters import BLOCK_THRESHOLD, FilterBlocked, FilterMap, MapClass
from steerkit.linop import ValidationError
from steerkit.measures import SolverError

__all__ = [
    "GameEnsemble",
    "succ_discr",
    "max_jm_succ_discr",
    "guess_only",
    "filter_ensemble",
    "succ_excl",
    "max_jm_succ_excl",
    "err_excl",
    "min_jm_err_excl",
    "counterexample_game",
    "counterexample_measurement",
    "counterexample_filter",
    "naive_ratio",
    "proper_ratio",
    "rom_ratio",
    "random_game",
    "helstrom",
]


@dataclass(frozen=True)
class GameEnsemble:
    """Priors ``(n_x, n_a)`` and states ``(n_x, n_a, d, d)``."""

    priors: np.ndarray
    states: np.ndarray

    def __post_init__(self) -> None:
        p = np.array(self.priors, dtype=float)
        s = np.array(self.states, dtype=np.complex128)
        if p.ndim == 1:
            p, s = p[None], s[None]
        if s.shape[:2] != p.shape or s.ndim != 4:
            raise ValidationError(f"priors {p.shape} and states {s.shape} do not share an index grid")
        if np.any(p < -1e-15) or abs(p.sum() - 1.0) > 1e-10:
            raise ValidationError("priors must be non-negative and sum to 1")
        tr = np.einsum("xaii->xa", s).real
        if np.max(np.abs(tr - 1.0)) > 1e-10:
            raise ValidationError("game states must have unit trace")
        for op in s.reshape(-1, s.shape[-1], s.shape[-1]):
            if not linop.is_psd(linop.check_hermitian(op, tol=1e-10), tol=1e-9):
                raise ValidationError("game states must be positive semidefinite")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "priors", p)
        object.__setattr__(self, "states", s)

    @property
    def dim(self) -> int:
        return self.states.shape[-1]

    @property
    def n_settings(self) -> int:
        return self.priors.shape[0]

    @property
    def n_outcomes(self) -> int:
        return self.priors.shape[1]

    def weighted(self) -> np.ndarray:
        """``p(a, x) rho_{a|x}``."""
        return self.priors[..., None, None] * self.states


def _grid(obj) -> MeasurementAssemblage:
    return obj.as_assemblage() if isinstance(obj, Povm) else obj


def _check_grid(ma: MeasurementAssemblage, g: GameEnsemble) -> None:
    if ma.elements.shape[:2] != g.priors.shape or ma.dim != g.dim:
        raise ValidationError(
            f"assemblage grid {ma.elements.shape[:2]} (dim {ma.dim}) does not match game "
            f"{g.priors.shape} (dim {g.dim})"
        )


def succ_discr(ma: MeasurementAssemblage | Povm, g: GameEnsemble) -> float:
    """``sum_{a,x} p(a,x) tr[M_{a|x} rho_{a|x}]``."""
    ma = _grid(ma)
    _check_grid(ma, g)
    return float(np.einsum("xaij,xaji->", ma.elements, g.weighted()).real)


def err_excl(ma: MeasurementAssemblage | Povm, g: GameEnsemble) -> float:
    """Exclusion error: probability that the outcome equals the state label."""
    return succ_discr(ma, g)


def succ_excl(ma: MeasurementAssemblage | Povm, g: GameEnsemble) -> float:
    """``sum_{a,x} p(a,x) (1 - tr[M_{a|x} rho_{a|x}])``."""
    return 1.0 - succ_discr(ma, g)


def guess_only(g: GameEnsemble) -> float:
    """Best-prior guessing without measurement, ``sum_x max_a p(a, x)``."""
    return float(g.priors.max(axis=1).sum())


def _jm_extreme(g: GameEnsemble, sense: str, settings: Settings | None) -> float:
    """Optimize ``sum_lam tr[G_lam Q_lam]`` over parent POVMs."""
    tab = enumerate_deterministic(g.n_settings, g.n_outcomes)
    q = np.einsum("xal,xaij->lij", tab.table, g.weighted())
    d = g.dim
    mdl = Model()
    G = [mdl.psd(d) for _ in range(tab.n_strategies)]
    mdl.matrix_eq([(1.0, v) for v in G], [], np.eye(d))
    mdl.objective([(q[l], G[l]) for l in range(tab.n_strategies)], [], sense)
    sol = mdl.solve(settings)
    if sol.status != "optimal":
        raise SolverError(sol.status, "jm-game")
    return sol.objective


def max_jm_succ_discr(g: GameEnsemble, settings: Settings | None = None) -> float:
    """Best discrimination success over jointly measurable assemblages."""
    return _jm_extreme(g, "max", settings)


def min_jm_err_excl(g: GameEnsemble, settings: Settings | None = None) -> float:
    """Smallest exclusion error over jointly measurable assemblages."""
    return _jm_extreme(g, "min", settings)


def max_jm_succ_excl(g: GameEnsemble, settings: Settings | None = None) -> float:
    return 1.0 - min_jm_err_excl(g, settings)


def filter_ensemble(f: FilterMap, g: GameEnsemble) -> GameEnsemble:
    """Post-selected game: states ``E(rho)/p(w|a,x)``, priors ``propto p(a,x) p(w|a,x)``.

    Cells the filter blocks entirely keep prior 0 and the maximally mixed
    state as a placeholder.
    """
    out = f(g.states)
    pw = np.einsum("xaii->xa", out).real
    joint = g.priors * pw
    total = joint.sum()
    if total < BLOCK_THRESHOLD:
        raise FilterBlocked(f"total pass probability {total:.3g} below {BLOCK_THRESHOLD}")
    d = f.dim_out
    ok = pw >= BLOCK_THRESHOLD
    safe = np.where(ok, pw, 1.0)
    states = np.where(ok[..., None, None], out / safe[..., None, None], np.eye(d) / d)
    pri = np.where(ok, joint, 0.0) / np.where(ok, joint, 0.0).sum()
    return GameEnsemble(pri, linop.hermitize(states))


# ---------------------------------------------------------------------------
# counterexample with probability manipulation


def counterexample_game(N: int, eps: float) -> GameEnsemble:
    """Qubit game: ``|0><0|`` with prior ``eps``, then ``N`` copies of ``|1><1|`` with prior ``(1-eps)/N``.

    The ``N + 1`` states are the outcomes of a single setting.
    """
    if N < 1 or not 0 < eps < 1:
        raise ValidationError("need N >= 1 and 0 < eps < 1")
    pri = np.full(N + 1, (1 - eps) / N)
    pri[0] = eps
    st = np.zeros((N + 1, 2, 2), dtype=complex)
    st[0, 0, 0] = 1.0
    st[1:, 1, 1] = 1.0
    return GameEnsemble(pri[None], st[None])


def counterexample_measurement(N: int) -> Povm:
    """``{|0><0|, |1><1|, 0, ..., 0}`` with ``N + 1`` outcomes."""
    els = np.zeros((N + 1, 2, 2), dtype=complex)
    els[0, 0, 0] = 1.0
    els[1, 1, 1] = 1.0
    return Povm(els)


def counterexample_filter() -> FilterMap:
    return FilterMap(np.diag([1.0, 0.0])[None], MapClass.CPTNI)


def naive_ratio(ma: MeasurementAssemblage | Povm, f: FilterMap, g: GameEnsemble) -> float:
    """Filtered success divided by the guess-only value of the unfiltered game."""
    den = guess_only(g)
    if den <= 0:
        raise ValidationError("guess-only value is zero")
    return succ_discr(ma, filter_ensemble(f, g)) / den


def proper_ratio(ma: MeasurementAssemblage | Povm, f: FilterMap, g: GameEnsemble,
                 settings: Settings | None = None) -> float:
    """Filtered success divided by the best jointly measurable success on the same filtered game."""
    fg = filter_ensemble(f, g)
    den = max_jm_succ_discr(fg, settings)
    if den <= 0:
        raise ValidationError("jointly measurable success is zero")
    return succ_discr(ma, fg) / den


def rom_ratio(povm: Povm, g: GameEnsemble, f: FilterMap | None = None) -> float:
    """Success of ``povm`` over guess-only on the (optionally filtered) game itself."""
    fg = g if f is None else filter_ensemble(f, g)
    return succ_discr(povm, fg) / guess_only(fg)


def random_game(dim: int, n_settings: int, n_outcomes: int, rng: np.random.Generator, rank: int | None = None) -> GameEnsemble:
    """Dirichlet priors and Hilbert-Schmidt states."""
    from steerkit.harness.sampling import random_state

    pri = rng.dirichlet(np.ones(n_settings * n_outcomes)).reshape(n_settings, n_outcomes)
    st = np.array([[random_state(dim, rng, rank) for _ in range(n_outcomes)] for _ in range(n_settings)])
    return GameEnsemble(pri, st)


def helstrom(p0: float, rho0: npt.ArrayLike, p1: float, rho1: npt.ArrayLike) -> float:
    """Optimal two-state discrimination ``(1 + ||p0 rho0 - p1 rho1||_1) / 2``."""
    w = np.linalg.eigvalsh(p0 * np.asarray(rho0) - p1 * np.asarray(rho1))
    return 0.5 * (1.0 + np.abs(w).sum())
