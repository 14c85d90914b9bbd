"""End-to-end reproduction checks for the bundled example families.

Each check exercises one headline claim through the public API and verifies it
against an independent oracle: a hand value, a dense finite-state solve, or a
Monte Carlo estimate.  The CLI ``reproduce`` subcommand and the acceptance
test suite both run this registry.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from . import criteria, poisson, simulator
from .criteria import AnalysisOptions, Status
from .model import (RateRow, SingleBirthModel, SingleDeathModel, SingleDeathRow,
                    build_tabulated, model_birth_death, model_constant_column,
                    model_uniform_catastrophe)
from .sequences import CoefficientVector, compute_sequences, f_column, partial_row_sums

OPTS = AnalysisOptions()


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, 0]))


def random_single_birth(rng: np.random.Generator, N: int) -> SingleBirthModel:
    """A well-conditioned random model: contained down mass so increments stay O(1)."""
    rows = [RateRow(up=float(rng.uniform(1.0, 2.0)))]
    for i in range(1, N + 1):
        down = {i - 1: float(rng.uniform(0.05, 0.2))}
        for j in range(i - 1):
            if rng.random() < min(2.0 / i, 0.3):
                down[j] = float(rng.uniform(0.01, 0.1))
        rows.append(RateRow(up=float(rng.uniform(1.0, 2.0)), down=down))
    return build_tabulated(rows, label="random")


def random_ergodic_model(rng: np.random.Generator, idx: int) -> SingleBirthModel:
    if idx % 2 == 0:
        drift = float(rng.uniform(1.5, 3.0))
        return model_birth_death(lambda i: 1.0, lambda i: drift,
                                 label=f"random_bd(down={drift:.3f})")
    a = float(rng.uniform(0.5, 2.0))
    b = float(rng.uniform(0.5, 2.0))
    return model_uniform_catastrophe(a, b, float(rng.uniform(0.5, 1.5)))


# ---------------------------------------------------------------------------
# individual checks; each returns (passed, detail)


def check_catastrophe_laplace():
    """Transform of the return time is independent of the birth scale b."""
    lam, N = 0.5, 500
    outputs = {}
    for b in (3.0, 0.5, 5.0):
        model = model_uniform_catastrophe(2.0, b, 1.0)
        outputs[b] = criteria.laplace_return(model, lam, N, OPTS).values
    base = outputs[3.0]
    errs = [abs(base[0] - 8.0 / 15.0)]
    errs += [abs(base[n] - 0.8) for n in range(1, 21)]
    cross = max(float(np.max(np.abs(outputs[b][:21] - base[:21]))) for b in (0.5, 5.0))
    worst = max(errs)
    ok = worst <= 1e-6 and cross <= 1e-6
    return ok, f"max formula error {worst:.2e}, max b-dependence {cross:.2e}"


def check_catastrophe_strong_ergodicity():
    model = model_uniform_catastrophe(1.0, 1.0, 1.0)
    report = criteria.analyze(model, 1000, OPTS)
    d = report.quantities.get("d")
    strong = report.verdicts.get("strongly_ergodic")
    ok = isinstance(d, float) and abs(d - 1.0) <= 1e-6 \
        and strong is not None and strong.holds
    _, E, _ = criteria.exp_moment_return(model, 0.5, 1000, OPTS)
    errs = [abs(E.values[n] - 2.0) for n in range(1, 21)]
    ok = ok and max(errs) <= 1e-6
    return ok, f"d = {d}, strongly_ergodic = {strong.status.value if strong else 'missing'}, " \
               f"max |E_n exp - 2| = {max(errs):.2e}"


def check_growth_dichotomy():
    """Quadratic up rates explode; linear ones give a strongly ergodic chain."""
    fast = model_constant_column(lambda i: 1.0, lambda i: float((i + 1) ** 2))
    uq_fast = criteria.uniqueness(fast, 1000, OPTS)
    kp = uq_fast.diagnostics.get("kappa_prime")
    ok = uq_fast.fails and kp is not None and kp > 1.0

    slow = model_constant_column(lambda i: 1.0, lambda i: float(i + 1))
    report = criteria.analyze(slow, 1000, OPTS)
    uq_slow = report.verdicts.get("unique")
    strong = report.verdicts.get("strongly_ergodic")
    d = report.quantities.get("d")
    ok = ok and uq_slow is not None and uq_slow.holds \
        and strong is not None and strong.holds \
        and isinstance(d, float) and abs(d - 1.0) <= 1e-6
    return ok, f"quadratic: unique={uq_fast.status.value}, kappa'={kp}; " \
               f"linear: unique={uq_slow.status.value if uq_slow else '?'}, " \
               f"strong={strong.status.value if strong else '?'}, d={d}"


def check_poisson_residuals():
    rng = _rng(11)
    worst = 0.0
    for _ in range(200):
        N = 50
        model = random_single_birth(rng, N)
        cvals = -rng.uniform(0.0, 0.2, N + 1)
        fvals = rng.uniform(-1.0, 1.0, N + 1)
        c = CoefficientVector.from_function(lambda i, cv=cvals: float(cv[i]))
        f = lambda i, fv=fvals: float(fv[i])  # noqa: E731
        g0 = float(rng.uniform(-1.0, 1.0))
        sol = poisson.solve_poisson(poisson.PoissonProblem(model, c, f, g0, N))
        worst = max(worst, sol.residual)
    return worst <= 1e-9, f"max residual over 200 random systems: {worst:.2e}"


def _random_single_death(rng: np.random.Generator, N: int) -> SingleDeathModel:
    rows = [SingleDeathRow(down=0.0, ups={j: float(rng.uniform(0.05, 0.3))
                                          for j in range(1, N + 1) if rng.random() < 0.4})]
    for i in range(1, N + 1):
        ups = {j: float(rng.uniform(0.02, 0.2))
               for j in range(i + 1, N + 1) if rng.random() < 0.3}
        rows.append(SingleDeathRow(down=float(rng.uniform(1.0, 2.0)), ups=ups))
    c = -rng.uniform(0.05, 0.5, N + 1)
    return SingleDeathModel(rows, c)


def check_finite_state_oracles():
    rng = _rng(23)
    worst = 0.0
    for _ in range(100):
        N = int(rng.integers(3, 21))
        model = random_single_birth(rng, N)
        cvals = -rng.uniform(0.05, 0.5, N + 1)
        fvals = rng.uniform(-1.0, 1.0, N + 1)
        c = CoefficientVector.from_function(lambda i, cv=cvals: float(cv[i]))
        f = lambda i, fv=fvals: float(fv[i])  # noqa: E731
        sol = poisson.solve_poisson_finite(model, c, f, N)
        dense = np.linalg.solve(poisson.dense_omega_single_birth(model, c, N), fvals)
        scale = max(1.0, float(np.max(np.abs(dense))))
        worst = max(worst, float(np.max(np.abs(sol.g - dense))) / scale)
        zero = poisson.solve_poisson_finite(model, c, lambda i: 0.0, N)
        worst = max(worst, float(np.max(np.abs(zero.g))))
    for _ in range(100):
        N = int(rng.integers(3, 21))
        sd = _random_single_death(rng, N)
        fvals = rng.uniform(-1.0, 1.0, N + 1)
        f = lambda i, fv=fvals: float(fv[i])  # noqa: E731
        sol = poisson.solve_poisson_single_death_finite(sd, f)
        dense = np.linalg.solve(poisson.dense_omega_single_death(sd), fvals)
        scale = max(1.0, float(np.max(np.abs(dense))))
        worst = max(worst, float(np.max(np.abs(sol.g - dense))) / scale)
        zero = poisson.solve_poisson_single_death_finite(sd, lambda i: 0.0)
        worst = max(worst, float(np.max(np.abs(zero.g))))
    return worst <= 1e-10, f"max relative gap vs dense solves: {worst:.2e}"


def check_mean_return_oracles():
    model = model_birth_death(lambda i: 1.0, lambda i: 2.0)
    d, E, _, strong = criteria.mean_return_time(model, 1000, OPTS)
    e0 = float(E.values[0])
    ok = abs(e0 - 2.0) <= 1e-9 and strong.fails

    # stationary oracle on a truncated dense generator: E_0 sigma_0 = 1/(pi_0 q_0)
    K = 80
    Q = poisson.dense_omega_single_birth(model, CoefficientVector.zero(), K)
    A = np.vstack([Q.T, np.ones(K + 1)])
    b = np.concatenate([np.zeros(K + 1), [1.0]])
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    stat = 1.0 / (pi[0] * model.q(0))
    ok = ok and abs(e0 - stat) <= 1e-6

    est = simulator.estimate_return_time_moment(model, 0, 1, samples=100_000, rng_seed=7)
    gap_se = abs(est.mean - e0) / est.std_error
    ok = ok and gap_se <= 3.0
    return ok, f"E0 = {e0:.12f}, stationary oracle {stat:.9f}, " \
               f"MC {est.mean:.4f} +- {est.std_error:.4f} ({gap_se:.2f} SE), " \
               f"strongly_ergodic = {strong.status.value}"


def check_moment_recursion():
    rng = _rng(31)
    worst = 0.0
    for idx in range(20):
        model = random_ergodic_model(rng, idx)
        N = 300
        d, E, _, _ = criteria.mean_return_time(model, N, OPTS)
        y, H = criteria.hitting_moment(model, 0, 1, N, OPTS)
        upto = min(E.trusted_upto or N, H.trusted_upto or N, N)
        a, b = E.values[: upto + 1], H.values[: upto + 1]
        rel = float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))))
        worst = max(worst, rel)
    ok = worst <= 1e-8

    model = model_birth_death(lambda i: 1.0, lambda i: 2.0)
    y2, _ = criteria.hitting_moment(model, 0, 2, 1000, OPTS)
    est = simulator.estimate_return_time_moment(model, 0, 2, samples=100_000, rng_seed=13)
    gap_se = abs(est.mean - y2) / est.std_error
    ok = ok and gap_se <= 3.0
    return ok, f"max first-moment gap {worst:.2e}; second moment {y2:.6f} vs " \
               f"MC {est.mean:.4f} +- {est.std_error:.4f} ({gap_se:.2f} SE)"


def check_transform_calculus():
    model = model_uniform_catastrophe(1.0, 1.0, 1.0)
    N = 500
    lam = 1e-5
    hi = criteria.laplace_return(model, 1.5 * lam, N, OPTS).values
    lo = criteria.laplace_return(model, 0.5 * lam, N, OPTS).values
    deriv = (hi - lo) / lam
    _, E, _, _ = criteria.mean_return_time(model, N, OPTS)
    rel = np.abs(deriv[:11] + E.values[:11]) / np.maximum(1.0, np.abs(E.values[:11]))
    worst = float(np.max(rel))
    ok = worst <= 1e-4

    lap = criteria.laplace_return(model, 0.5, N, OPTS).values
    in_range = bool(np.all(lap > 0.0) and np.all(lap <= 1.0 + 1e-12))
    _, Eexp, _ = criteria.exp_moment_return(model, 0.5, N, OPTS)
    above_one = bool(np.all(Eexp.values >= 1.0 - 1e-12))
    ok = ok and in_range and above_one
    return ok, f"max derivative mismatch {worst:.2e}; laplace in (0,1]: {in_range}; " \
               f"exp moments >= 1: {above_one}"


def bundled_models():
    return [
        ("catastrophe(1,1,1)", model_uniform_catastrophe(1.0, 1.0, 1.0), 1.0),
        ("catastrophe(2,3,1)", model_uniform_catastrophe(2.0, 3.0, 1.0), 2.0),
        ("linear_growth", model_constant_column(lambda i: 1.0, lambda i: float(i + 1)), 1.0),
        ("quadratic_growth", model_constant_column(lambda i: 1.0, lambda i: float((i + 1) ** 2)), 1.0),
        ("bd_drift_down", model_birth_death(lambda i: 1.0, lambda i: 2.0), None),
        ("bd_drift_up", model_birth_death(lambda i: 2.0, lambda i: 1.0), None),
        ("bd_balanced", model_birth_death(lambda i: 1.0, lambda i: 1.0), None),
    ]


def check_sequence_identities():
    worst = 0.0
    for name, model, pos_cap in bundled_models():
        presets = [CoefficientVector.zero(), CoefficientVector.constant(-0.5)]
        if pos_cap is not None:
            # the +lambda preset keeps the tilted prefixes nonnegative only
            # below the smallest return rate
            presets.append(CoefficientVector.constant(0.5 * pos_cap))
        for c in presets:
            table = compute_sequences(model, c, 1000)
            worst = max(worst, table.identity_gap())
    ok_identity = worst <= 1e-12

    # dual representation of the triangle at small size
    rng = _rng(41)
    worst_dual = 0.0
    for trial in range(10):
        N = 30
        model = random_single_birth(rng, N)
        c = [CoefficientVector.zero(), CoefficientVector.constant(-0.3)][trial % 2]
        cols = [f_column(model, c, N, base=i) for i in range(N + 1)]

        def F(n, i):
            s, l = cols[i]
            return float(s[n]) * math.exp(l[n]) if s[n] else 0.0

        for i in range(N):
            for n in range(i + 1, N + 1):
                direct = F(n, i)
                dual = sum(F(n, k) * (partial_row_sums(model, k)[i] - c(k)) / model.up(k)
                           for k in range(i + 1, n + 1))
                worst_dual = max(worst_dual, abs(direct - dual) / max(1.0, abs(direct)))
    ok_dual = worst_dual <= 1e-10

    # propagator comparison inequality on random nonnegative systems
    rng = _rng(43)
    ok_gamma = True
    for _ in range(500):
        N = int(rng.integers(3, 26))
        alpha = np.tril(rng.uniform(0.0, 1.0, (N + 1, N + 1)), k=-1)
        alpha[rng.uniform(size=alpha.shape) < 0.3] = 0.0
        alpha = np.tril(alpha, k=-1)
        beta = rng.uniform(0.5, 2.0, N + 1)
        gamma = poisson.gamma_full(alpha, beta)
        for n in range(N + 1):
            for i in range(n + 1):
                lhs = gamma[n, :i + 1]
                rhs = gamma[n, i] * gamma[i, :i + 1]
                if np.any(lhs < rhs - 1e-12 * np.maximum(1.0, rhs)):
                    ok_gamma = False
    ok = ok_identity and ok_dual and ok_gamma
    return ok, f"identity gap {worst:.2e}; dual gap {worst_dual:.2e}; " \
               f"comparison inequality: {'ok' if ok_gamma else 'violated'}"


def check_monotone_limit():
    """The killed weights decrease to the plain weights as the kill rate vanishes.

    The per-entry closeness at the smallest grid rate is checked in relative
    terms together with the linear-in-rate scaling of the gap, since the
    absolute gap necessarily inherits the growth of the weights themselves.
    """
    model = model_uniform_catastrophe(1.0, 1.0, 1.0)
    N = 1000
    grid = [1.0, 0.1, 0.01, 0.001]
    logs = {}
    base = compute_sequences(model, CoefficientVector.zero(), N).m_logs
    for lam in grid:
        logs[lam] = compute_sequences(model, CoefficientVector.constant(-lam), N).m_logs
    monotone = True
    for hi, lo in zip(grid, grid[1:]):
        if np.any(logs[hi] < logs[lo] - 1e-12):
            monotone = False
    if np.any(logs[grid[-1]] < base - 1e-12):
        monotone = False
    rel_gap = float(np.max(np.expm1(logs[0.001] - base)))
    rel_prev = float(np.max(np.expm1(logs[0.01] - base)))
    scaling = rel_gap / rel_prev if rel_prev > 0 else 0.0
    ok = monotone and rel_gap <= 1e-2 and 0.05 <= scaling <= 0.2
    return ok, f"monotone: {monotone}; relative gap at 0.001: {rel_gap:.2e}; " \
               f"gap scaling 0.001/0.01: {scaling:.3f}"


def check_bounded_double_sum():
    est1, v1 = criteria.mz_sufficient_condition(
        model_uniform_catastrophe(1.0, 1.0, 1.0), 1000, OPTS)
    ok = v1.holds and est1.is_finite
    est2, v2 = criteria.mz_sufficient_condition(
        model_constant_column(lambda i: 1.0, lambda i: 2.0 * (i + 1)), 1000, OPTS)
    ok = ok and v2.fails and est2.is_infinite
    return ok, f"exponential family: M = {est1.value:.6g} ({v1.status.value}); " \
               f"linear family: M infinite certified ({v2.status.value})"


CHECKS: list[tuple[str, str, Callable]] = [
    ("catastrophe-laplace", "return-time Laplace transform, b-independence", check_catastrophe_laplace),
    ("catastrophe-strong", "strong ergodicity and exponential moment of the catastrophe model", check_catastrophe_strong_ergodicity),
    ("growth-dichotomy", "explosive vs strongly ergodic constant-column growth rates", check_growth_dichotomy),
    ("poisson-residual", "residual of the half-line Poisson solver on random models", check_poisson_residuals),
    ("finite-oracles", "finite-state solvers vs dense linear algebra", check_finite_state_oracles),
    ("mean-return-oracles", "mean return time vs stationary and Monte Carlo oracles", check_mean_return_oracles),
    ("moment-recursion", "moment order recursion consistency and MC cross-check", check_moment_recursion),
    ("transform-calculus", "transform derivative and range properties", check_transform_calculus),
    ("sequence-identities", "fundamental sequence identities and propagator comparison", check_sequence_identities),
    ("monotone-limit", "monotone convergence of killed weights", check_monotone_limit),
    ("bounded-double-sum", "sufficient-condition supremum finite/infinite certification", check_bounded_double_sum),
]


def run_suite(name_filter: Optional[str] = None, printer=print) -> bool:
    all_ok = True
    for key, desc, fn in CHECKS:
        if name_filter and name_filter not in key:
            continue
        try:
            ok, detail = fn()
        except Exception as exc:  # noqa: BLE001 - the table must report, not abort
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok = all_ok and ok
        printer(f"[{'PASS' if ok else 'FAIL'}] {key}: {desc} -- {detail}")
    return all_ok
