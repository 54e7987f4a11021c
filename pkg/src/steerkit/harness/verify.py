"""Randomized verification of the filtering no-go statements.

Each ``verify_*`` function checks one instance against many sampled filters
(or states) and returns a :class:`VerificationReport`.  :func:`run_campaign`
draws instances from a master seed, runs them (optionally in parallel
processes) and merges the records by trial index.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from steerkit import linop
from steerkit.assemblage import (
    MeasurementAssemblage,
    StateAssemblage,
    assemblage_from_state,
    dress,
    pure_state_assemblage,
    schmidt_vector,
    seo,
    validate_sa,
)
from steerkit.conic import Settings
from steerkit.filters import (
    FilterMap,
    MapClass,
    alice_filtered_assemblage,
    alice_filtered_vector,
    apply_to_assemblage,
    filtered_measurement,
    optimal_lf1,
    random_filter,
)
from steerkit.games import (
    counterexample_filter,
    counterexample_game,
    counterexample_measurement,
    filter_ensemble,
    guess_only,
    naive_ratio,
    proper_ratio,
    rom_ratio,
    succ_discr,
)
from steerkit.harness.report import TrialRecord, VerificationReport
from steerkit.harness.sampling import InstanceSpec, Sampler, random_state
from steerkit.measures import (
    consistent_lhs_robustness,
    incompatibility_robustness,
    incompatible_weight,
    incompatible_weight_dual,
    jm_robustness,
    optimal_state_for_ir,
    optimal_state_from_iw_dual,
    random_robustness_ma,
    random_robustness_sa,
    robustness_of_measurement,
    steerable_weight,
    steering_robustness,
)

CHECK_TOL = 1e-5

__all__ = [
    "CHECKS",
    "run_campaign",
    "thread_cap",
    "verify_result1",
    "verify_result2",
    "verify_eq7",
    "verify_result3",
    "verify_result4",
    "verify_result5",
    "verify_result6",
    "verify_obs1",
    "verify_sr_le_ir",
    "verify_appc",
]


class _Log:
    """Collects records for one instance."""

    def __init__(self, trial: int, seed: int, summary: str = ""):
        self.trial, self.seed, self.summary = trial, seed, summary
        self.records: list[TrialRecord] = []
        self.extra: dict = {}

    def add(self, label, lhs, rhs, relation="le", tol=CHECK_TOL, item=0):
        self.records.append(TrialRecord(self.trial, self.seed, label, lhs, rhs, relation, tol, self.summary, item))

    def report(self, check: str, t0: float, params: dict | None = None) -> VerificationReport:
        return VerificationReport(check, self.records, time.perf_counter() - t0, params or {}, self.extra)


def _summary(obj) -> str:
    if isinstance(obj, (MeasurementAssemblage, StateAssemblage)):
        kind = "ma" if isinstance(obj, MeasurementAssemblage) else "sa"
        return f"{kind} d={obj.dim} x={obj.n_settings} a={obj.n_outcomes}"
    return type(obj).__name__


def _rank(rho: np.ndarray) -> int:
    return linop.rank(rho, 1e-7)


def _lifted_optimal_state(sa: StateAssemblage, settings: Settings | None):
    """IR of the SEO, and an optimal reduced state lifted to the full space."""
    b, _, v = seo(sa)
    ir = incompatibility_robustness(b, settings).value
    rc = optimal_state_for_ir(b, settings)
    return ir, linop.hermitize(v @ rc @ v.conj().T)


# ---------------------------------------------------------------------------
# per-instance checks


def verify_result1(
    ma: MeasurementAssemblage,
    n_filters: int = 200,
    seed: int = 0,
    tol: float = CHECK_TOL,
    max_kraus: int = 3,
    settings: Settings | None = None,
    trial: int = 0,
) -> VerificationReport:
    """Filtered measurements never become more incompatible.

    The baseline is ``IR(ma)``; the equality with the steerability reached at
    the optimal reduced state is recorded as ``baseline``.  Each sampled
    filter (alternating CP trace-non-increasing and transpose-composed) gives
    the filtered measurement ``C`` whose maximal steerability is ``IR(C)``.
    """
    t0 = time.perf_counter()
    log = _Log(trial, seed, _summary(ma))
    rng = np.random.default_rng(seed)
    base = incompatibility_robustness(ma, settings).value
    rho = optimal_state_for_ir(ma, settings)
    log.add("baseline", steering_robustness(dress(ma, rho), settings).value, base, "eq", tol)
    log.extra["optimal_state_rank"] = _rank(rho)
    for j in range(n_filters):
        cls = MapClass.CPTNI if j % 2 == 0 else MapClass.POSITIVE_NON_CP
        f = random_filter(ma.dim, int(rng.integers(1, max_kraus + 1)), cls, rng)
        c, _ = filtered_measurement(f, ma)
        log.add("filtered", incompatibility_robustness(c, settings).value, base, "le", tol, item=j)
    return log.report("result1", t0, {"n_filters": n_filters, "max_kraus": max_kraus})


def verify_result2(
    ma: MeasurementAssemblage,
    f: FilterMap,
    n_states: int = 10,
    seed: int = 0,
    tol: float = CHECK_TOL,
    settings: Settings | None = None,
    trial: int = 0,
) -> VerificationReport:
    """Both monotonicity forms for a positive map.

    ``measurement``: incompatibility of the filtered measurement.
    ``assemblage``: largest SEO incompatibility of the filtered dressed
    assemblage over the maximally mixed state and ``n_states`` random states.
    """
    t0 = time.perf_counter()
    log = _Log(trial, seed, _summary(ma))
    rng = np.random.default_rng(seed)
    base = incompatibility_robustness(ma, settings).value
    c, _ = filtered_measurement(f, ma)
    log.add("measurement", incompatibility_robustness(c, settings).value, base, "le", tol)
    states = [np.eye(ma.dim) / ma.dim] + [random_state(ma.dim, rng) for _ in range(n_states)]
    best = 0.0
    for rho in states:
        out, _ = apply_to_assemblage(f, dress(ma, rho))
        best = max(best, incompatibility_robustness(seo(out).ma, settings).value)
    log.add("assemblage", best, base, "le", tol)
    return log.report("result2", t0, {"n_states": n_states, "map_class": f.map_class.value})


def verify_eq7(
    sa: StateAssemblage,
    n_filters: int = 100,
    seed: int = 0,
    tol: float = CHECK_TOL,
    settings: Settings | None = None,
    trial: int = 0,
) -> VerificationReport:
    """The optimal single-Kraus filter reaches ``IR(seo(sa))``; random ones never exceed it."""
    t0 = time.perf_counter()
    log = _Log(trial, seed, _summary(sa))
    rng = np.random.default_rng(seed)
    ir, rho = _lifted_optimal_state(sa, settings)
    out, _ = apply_to_assemblage(optimal_lf1(sa, rho), sa)
    log.add("optimal-lf1", steering_robustness(out, settings).value, ir, "eq", tol)
    log.extra["optimal_state_rank"] = _rank(rho)
    for j in range(n_filters):
        f = random_filter(sa.dim, 1, MapClass.CPTNI, rng)
        out, _ = apply_to_assemblage(f, sa)
        log.add("random-lf1", steering_robustness(out, settings).value, ir, "le", tol, item=j)
    return log.report("eq7", t0, {"n_filters": n_filters})


def verify_result3(
    sa: StateAssemblage,
    n_filters: int = 200,
    max_kraus: int = 4,
    seed: int = 0,
    tol: float = CHECK_TOL,
    settings: Settings | None = None,
    trial: int = 0,
) -> VerificationReport:
    """Multi-Kraus filters do not beat the single-Kraus optimum.

    Every third filter is a channel; the rest are trace-non-increasing.
    """
    t0 = time.perf_counter()
    log = _Log(trial, seed, _summary(sa))
    rng = np.random.default_rng(seed)
    ir, rho = _lifted_optimal_state(sa, settings)
    out, _ = apply_to_assemblage(optimal_lf1(sa, rho), sa)
    opt = steering_robustness(out, settings).value
    log.add("lf1-optimum", opt, ir, "eq", tol)
    for j in range(n_filters):
        cls = MapClass.CPTP if j % 3 == 0 else MapClass.CPTNI
        k = int(rng.integers(2, max_kraus + 1)) if max_kraus >= 2 else 1
        f = random_filter(sa.dim, k, cls, rng)
        out, _ = apply_to_assemblage(f, sa)
        log.add("multi-kraus", steering_robustness(out, settings).value, opt, "le", tol, item=j)
    return log.report("result3", t0, {"n_filters": n_filters, "max_kraus": max_kraus})


def verify_result4(
    schmidt_coeffs,
    ma: MeasurementAssemblage,
    n_filters: int = 200,
    seed: int = 0,
    tol: float = CHECK_TOL,
    settings: Settings | None = None,
    trial: int = 0,
) -> VerificationReport:
    """Filters on the measuring side cannot add steerability once Bob's side is optimal.

    Bob first applies the optimal single-Kraus filter to the pure state.
    Alice's filters (CP, channels, transpose-composed) then act through the
    closed form in the Schmidt frame; for CP filters the bipartite route
    ``(E x id)(rho)`` is recorded as a consistency check.
    """
    t0 = time.perf_counter()
    log = _Log(trial, seed, _summary(ma))
    rng = np.random.default_rng(seed)
    c = np.asarray(schmidt_coeffs, dtype=float)
    sa = pure_state_assemblage(c, ma)
    ir, rho = _lifted_optimal_state(sa, settings)
    k = optimal_lf1(sa, rho).kraus[0]
    psi = np.kron(np.eye(ma.dim), k) @ schmidt_vector(c)
    psi = psi / np.linalg.norm(psi)
    base_sa = assemblage_from_state(np.outer(psi, psi.conj()), ma)
    base = steering_robustness(base_sa, settings).value
    log.add("bob-optimal", base, ir, "eq", tol)
    classes = [MapClass.CPTNI, MapClass.CPTP, MapClass.POSITIVE_NON_CP]
    worst_route = 0.0
    for j in range(n_filters):
        cls = classes[j % 3]
        f = random_filter(ma.dim, int(rng.integers(1, 4)), cls, rng)
        out = alice_filtered_vector(f, psi, ma)
        if cls is not MapClass.POSITIVE_NON_CP:
            alt = alice_filtered_assemblage(f, np.outer(psi, psi.conj()), ma)
            worst_route = max(worst_route, linop.maxabs(alt.elements - out.elements))
        log.add("alice-filter", steering_robustness(out, settings).value, base, "le", tol, item=j)
    log.add("bipartite-route", worst_route, 0.0, "eq", 1e-9)
    return log.report("result4", t0, {"n_filters": n_filters, "schmidt": c.tolist()})


_PAIRS = {
    "random": (random_robustness_ma, random_robustness_sa),
    "jm": (jm_robustness, consistent_lhs_robustness),
}


def verify_result5(
    ma: MeasurementAssemblage,
    sa: StateAssemblage | None = None,
    seed: int = 0,
    n_states: int = 5,
    n_filters: int = 20,
    tol: float = CHECK_TOL,
    settings: Settings | None = None,
    trial: int = 0,
) -> VerificationReport:
    """The no-go checks with white-noise and jointly measurable noise.

    For each pair: dressing with any full-rank state preserves the value
    (``lemma``), filtered measurements do not increase it (``filtered``),
    and with ``sa`` given, its steering value equals that of its SEO when the
    reduced state has full rank (``seo``).
    """
    t0 = time.perf_counter()
    log = _Log(trial, seed, _summary(ma))
    rng = np.random.default_rng(seed)
    states = [random_state(ma.dim, rng) for _ in range(n_states)]
    filters = [random_filter(ma.dim, int(rng.integers(1, 4)),
                             MapClass.CPTNI if j % 2 == 0 else MapClass.POSITIVE_NON_CP, rng)
               for j in range(n_filters)]
    for name, (irf, srf) in _PAIRS.items():
        base = irf(ma, settings).value
        for j, rho in enumerate(states):
            log.add(f"{name}-lemma", srf(dress(ma, rho), settings).value, base, "eq", tol, item=j)
        for j, f in enumerate(filters):
            c, _ = filtered_measurement(f, ma)
            log.add(f"{name}-filtered", irf(c, settings).value, base, "le", tol, item=j)
        if sa is not None and linop.rank(sa.reduced_state) == sa.dim:
            log.add(f"{name}-seo", srf(sa, settings).value, irf(seo(sa).ma, settings).value, "eq", tol)
    return log.report("result5", t0, {"n_states": n_states, "n_filters": n_filters})


def verify_result6(
    ma: MeasurementAssemblage,
    sa: StateAssemblage | None = None,
    seed: int = 0,
    n_states: int = 10,
    n_filters: int = 20,
    tol: float = CHECK_TOL,
    settings: Settings | None = None,
    trial: int = 0,
) -> VerificationReport:
    """The weight versions.

    Records primal/dual agreement (tolerance 2e-8), equality at the state
    ``X+/tr X+`` from the dual, the bound for random states (1e-6),
    monotonicity under filtered measurements, and with ``sa`` given the
    single-Kraus optimum for weights.
    """
    t0 = time.perf_counter()
    log = _Log(trial, seed, _summary(ma))
    rng = np.random.default_rng(seed)
    iw = incompatible_weight(ma, settings).value
    log.add("primal-dual", incompatible_weight_dual(ma, settings).value, iw, "eq", 2e-8)
    eta = optimal_state_from_iw_dual(ma, settings)
    log.add("eta-state", steerable_weight(dress(ma, eta), settings).value, iw, "eq", tol)
    log.extra["eta_rank"] = _rank(eta)
    for j in range(n_states):
        rho = random_state(ma.dim, rng)
        log.add("random-state", steerable_weight(dress(ma, rho), settings).value, iw, "le", 1e-6, item=j)
    for j in range(n_filters):
        f = random_filter(ma.dim, int(rng.integers(1, 4)),
                          MapClass.CPTNI if j % 2 == 0 else MapClass.POSITIVE_NON_CP, rng)
        c, _ = filtered_measurement(f, ma)
        log.add("filtered", incompatible_weight(c, settings).value, iw, "le", tol, item=j)
    if sa is not None:
        b, _, v = seo(sa)
        target = v @ optimal_state_from_iw_dual(b, settings) @ v.conj().T
        out, _ = apply_to_assemblage(optimal_lf1(sa, linop.hermitize(target)), sa)
        log.add("seo-optimum", steerable_weight(out, settings).value, incompatible_weight(b, settings).value, "eq", tol)
    return log.report("result6", t0, {"n_states": n_states, "n_filters": n_filters})


def verify_obs1(
    ma: MeasurementAssemblage,
    seed: int = 0,
    tol: float = 1e-6,
    settings: Settings | None = None,
    trial: int = 0,
) -> VerificationReport:
    """Reduced states of the optimal steering decomposition at the optimal state.

    The decomposition is built from the robustness decomposition of ``ma`` by
    dressing every element with the optimal state; the records check its
    reduced states, that it reconstructs the assemblage, and that its weight
    matches the steering robustness solved independently.
    """
    t0 = time.perf_counter()
    log = _Log(trial, seed, _summary(ma))
    res = incompatibility_robustness(ma, settings)
    rho = optimal_state_for_ir(ma, settings)
    sa = dress(ma, rho)
    r = linop.sqrt_psd(rho)
    xi = linop.hermitize(r @ res.noise.elements @ r)
    tau = linop.hermitize(r @ res.free.elements @ r)
    t = res.value
    log.add("xi-reduced", linop.maxabs(xi.sum(axis=1) - rho), 0.0, "eq", tol)
    log.add("tau-reduced", linop.maxabs(tau.sum(axis=1) - rho), 0.0, "eq", tol)
    log.add("reconstruction", linop.maxabs((sa.elements + t * xi) / (1 + t) - tau), 0.0, "eq", 1e-7)
    valid = bool(validate_sa(StateAssemblage(xi, rho))) and bool(validate_sa(StateAssemblage(tau, rho)))
    log.add("valid-parts", 0.0 if valid else 1.0, 0.0, "eq", 0.5)
    sr = steering_robustness(sa, settings)
    log.add("optimality", t, sr.value, "eq", CHECK_TOL)
    # the solver's own optimal decomposition need not be unique; logged only
    log.extra["solver_xi_reduced_dev"] = linop.maxabs(sr.noise.elements.sum(axis=1) - rho) if sr.value > 1e-9 else 0.0
    log.extra["optimal_state_rank"] = _rank(rho)
    return log.report("obs1", t0)


def verify_sr_le_ir(
    rho_ab: np.ndarray,
    ma: MeasurementAssemblage,
    seed: int = 0,
    tol: float = CHECK_TOL,
    settings: Settings | None = None,
    trial: int = 0,
) -> VerificationReport:
    """Steerability of any state measured with ``ma`` is at most ``IR(ma)``."""
    t0 = time.perf_counter()
    log = _Log(trial, seed, _summary(ma))
    sa = assemblage_from_state(rho_ab, ma)
    log.add("sr-le-ir", steering_robustness(sa, settings).value, incompatibility_robustness(ma, settings).value, "le", tol)
    return log.report("sr-le-ir", t0)


def verify_appc(
    N: int = 1000,
    eps: float = 0.01,
    threshold: float = 100.0,
    tol: float = CHECK_TOL,
    settings: Settings | None = None,
) -> VerificationReport:
    """Probability-manipulation counterexample for filtered game ratios.

    Records the three closed forms (tolerance 1e-12), that the naive ratio
    exceeds ``threshold``, and that the ratios with a consistent baseline
    stay within their bounds.
    """
    t0 = time.perf_counter()
    log = _Log(0, 0, f"N={N} eps={eps}")
    g = counterexample_game(N, eps)
    m = counterexample_measurement(N)
    f = counterexample_filter()
    log.add("guess-only", guess_only(g), (1 - eps) / N, "eq", 1e-12)
    log.add("measured", succ_discr(m, g), eps + (1 - eps) / N, "eq", 1e-12)
    log.add("filtered", succ_discr(m, filter_ensemble(f, g)), 1.0, "eq", 1e-12)
    log.add("naive-ratio", naive_ratio(m, f, g), threshold, "gt", 0.0)
    ir = incompatibility_robustness(m.as_assemblage(), settings).value
    log.add("proper-ratio", proper_ratio(m, f, g, settings), 1 + ir, "le", tol)
    rom = robustness_of_measurement(m, settings).value
    log.add("rom-ratio", rom_ratio(m, g, f), 1 + rom, "le", tol)
    return log.report("appc-counterexample", t0, {"N": N, "eps": eps, "threshold": threshold})


# ---------------------------------------------------------------------------
# campaigns


def thread_cap() -> int:
    env = os.environ.get("STEERKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _spec(params: dict) -> InstanceSpec:
    return InstanceSpec(int(params.get("dim", 2)), int(params.get("settings", 2)), int(params.get("outcomes", 2)))


def _trial(check: str, i: int, master: int, params: dict) -> VerificationReport:
    spec = _spec(params)
    sampler = Sampler(master, spec)
    rng = sampler.rng(i)
    seed = sampler.sub_seed(i)
    tol = float(params.get("tol", CHECK_TOL))
    kw = {"trial": i}
    n_filt = 200 if spec.dim == 2 else 100
    if check == "result1":
        return verify_result1(sampler.ma(i), int(params.get("filters", n_filt)), seed, tol,
                              int(params.get("kraus", 3)), **kw)
    if check == "result2":
        ma = sampler.ma(i)
        frng = np.random.default_rng(seed)
        cls = MapClass.POSITIVE_NON_CP if i % 2 else MapClass.CPTNI
        f = random_filter(spec.dim, int(frng.integers(1, 4)), cls, frng)
        return verify_result2(ma, f, int(params.get("states", 10)), seed, tol, **kw)
    if check == "eq7":
        return verify_eq7(sampler.sa(i), int(params.get("filters", n_filt)), seed, tol, **kw)
    if check == "result3":
        return verify_result3(sampler.sa(i), int(params.get("filters", n_filt)), int(params.get("kraus", 4)),
                              seed, tol, **kw)
    if check == "result4":
        c = np.sqrt(rng.dirichlet(np.ones(spec.dim)))
        ma = sampler.ma(i)
        return verify_result4(c, ma, int(params.get("filters", n_filt)), seed, tol, **kw)
    if check == "result5":
        return verify_result5(sampler.ma(i), sampler.sa(i), seed, int(params.get("states", 5)),
                              int(params.get("filters", 20)), tol, **kw)
    if check == "result6":
        return verify_result6(sampler.ma(i), sampler.sa(i), seed, int(params.get("states", 10)),
                              int(params.get("filters", 20)), tol, **kw)
    if check == "obs1":
        return verify_obs1(sampler.ma(i), seed, float(params.get("tol", 1e-6)), **kw)
    if check == "sr-le-ir":
        rho = random_state(spec.dim ** 2, rng)
        return verify_sr_le_ir(rho, sampler.ma(i), seed, tol, **kw)
    raise ValueError(f"unknown check {check!r}")


CHECKS = (
    "result1", "result2", "result3", "result4", "result5", "result6",
    "obs1", "eq7", "sr-le-ir", "appc-counterexample",
)


def run_campaign(
    check: str,
    trials: int = 10,
    seed: int = 0,
    params: dict | None = None,
    threads: int | None = None,
) -> VerificationReport:
    """Run ``trials`` seeded instances of a check and merge their records.

    Trial ``i`` draws its instance from ``default_rng([seed, i])``; results do
    not depend on ``threads``.
    """
    params = dict(params or {})
    if check not in CHECKS:
        raise ValueError(f"unknown check {check!r}; expected one of {', '.join(CHECKS)}")
    t0 = time.perf_counter()
    if check == "appc-counterexample":
        rep = verify_appc(int(params.get("N", 1000)), float(params.get("eps", 0.01)),
                          float(params.get("threshold", 100.0)), float(params.get("tol", CHECK_TOL)))
        rep.params.update(params)
        return rep
    n_workers = min(thread_cap() if threads is None else max(1, threads), trials)
    if n_workers <= 1:
        parts = [_trial(check, i, seed, params) for i in range(trials)]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as ex:
            parts = list(ex.map(_trial, [check] * trials, range(trials), [seed] * trials, [params] * trials))
    records = [r for p in parts for r in p.records]
    extra = {"per_trial": [p.extra for p in parts]} if any(p.extra for p in parts) else {}
    return VerificationReport(check, records, time.perf_counter() - t0,
                              {"trials": trials, "seed": seed, **params}, extra)
