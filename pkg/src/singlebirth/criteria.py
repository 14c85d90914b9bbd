"""Classification criteria and closed-form quantities for upwardly skip-free chains.

Everything funnels through the three fundamental sequences: uniqueness is the
divergence of (m), recurrence the divergence of (F), ergodicity the finiteness
of the ratio limit d of the d and F sequences, and the transform formulas are
tilted variants of the same objects.  Series divergence is only semidecidable
at a finite truncation, so every classification comes back as a three-valued
verdict with an explicit numeric certificate, never a bare boolean.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import scaled
from .errors import (ConditionViolated, DomainError, FeasibilityViolated,
                     InconclusiveSeries, NotExplosive, NotRecurrent,
                     PreviousOrderInfinite, RateBoundViolated)
from .model import SingleBirthModel
from .scaled import NEG_INF, sl_add
from .sequences import (CoefficientVector, SequenceTable, compute_sequences,
                        forward_inhomogeneous)


# ---------------------------------------------------------------------------
# verdicts, options, limit estimates


class Status(str, Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class Verdict:
    status: Status
    diagnostics: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS

    @property
    def fails(self) -> bool:
        return self.status is Status.FAILS

    def to_dict(self) -> dict:
        return {"status": self.status.value, "diagnostics": _jsonable(self.diagnostics)}

    @staticmethod
    def from_dict(d: dict) -> "Verdict":
        return Verdict(Status(d["status"]), dict(d.get("diagnostics", {})))


@dataclass(frozen=True)
class AnalysisOptions:
    N: int = 1000
    window: int = 50
    ratio_tol: float = 1e-8
    divergence_threshold: float = 1e12
    kummer_margin: float = 0.1
    cancellation_floor: float = 1e-12   # |a-b| below max(|a|,|b|)*floor is resolution noise
    negligible_abs: float = 1e-9        # absolute size below which noise is harmless
    max_ell: int = 6


DEFAULT_OPTIONS = AnalysisOptions()


@dataclass
class LimitEstimate:
    """A windowed limsup estimate.

    ``value`` is a finite float, ``math.inf`` (certified divergence), or None
    (unknown).  ``converged`` means the last window of estimates agreed to
    within ``tolerance``; a value of +inf is certified by growth, not by
    window agreement, so it carries ``converged = False``.
    """

    value: Optional[float]
    window_estimates: list
    converged: bool
    tolerance: float

    @property
    def is_finite(self) -> bool:
        return self.value is not None and math.isfinite(self.value)

    @property
    def is_infinite(self) -> bool:
        return self.value is not None and math.isinf(self.value)

    def to_dict(self) -> dict:
        return {"value": _num(self.value), "window_estimates": [_num(v) for v in self.window_estimates[-8:]],
                "converged": self.converged, "tolerance": self.tolerance}


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def _unnum(x):
    if x is None or isinstance(x, (int, float)):
        return x
    return {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}[x]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return _num(float(obj))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (Verdict, LimitEstimate)):
        return obj.to_dict()
    return obj


@dataclass
class MomentVector:
    """Values of one expectation over the states 0..N."""

    values: np.ndarray
    quantity: str
    trusted_upto: Optional[int] = None   # last index with full cancellation resolution

    def to_list(self, upto: Optional[int] = None) -> list:
        vals = self.values if upto is None else self.values[: upto + 1]
        return [_num(v) for v in vals]


# ---------------------------------------------------------------------------
# series classification


@dataclass
class SeriesDiagnosis:
    conclusion: str                 # "diverges" | "converges" | "inconclusive"
    partial_sum_log: float
    total_log: Optional[float]      # estimated log of the full sum when convergent
    kappa: LimitEstimate
    diagnostics: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        if self.conclusion == "diverges":
            return math.inf
        if self.total_log is None:
            return math.nan
        return math.exp(self.total_log) if self.total_log <= scaled.MAX_REPRESENTABLE_LOG else math.inf


def _window(values, W: int):
    return values[-min(W, len(values)):]


def _kummer_estimate(kappas: np.ndarray, positions: np.ndarray,
                     opts: AnalysisOptions) -> LimitEstimate:
    if len(kappas) == 0:
        return LimitEstimate(None, [], False, opts.ratio_tol)
    win = _window(kappas, opts.window)
    spread = float(np.max(win) - np.min(win))
    scale = 1.0 + abs(float(win[-1]))
    if spread <= 1e-6 * scale:
        return LimitEstimate(float(np.max(win)), list(map(float, win)), True, 1e-6 * scale)
    value = _doubling_divergence(kappas, positions)
    return LimitEstimate(value, list(map(float, win)), False, 1e-6 * scale)


def _doubling_divergence(values: np.ndarray, positions: np.ndarray) -> Optional[float]:
    """Certify growth to +inf when the value keeps doubling as the index doubles.

    Catches every polynomial growth rate; logarithmic growth stays Unknown,
    which errs on the honest side.
    """
    if len(values) < 3:
        return None
    top = positions[-1]
    v_top = values[-1]
    v_half = values[np.searchsorted(positions, top // 2)]
    v_quarter = values[np.searchsorted(positions, top // 4)]
    if v_top > 10.0 and v_half > 0 and v_quarter > 0 \
            and v_top >= 1.9 * v_half and v_half >= 1.9 * v_quarter:
        return math.inf
    return None


def classify_positive_series(logs: np.ndarray, opts: AnalysisOptions = DEFAULT_OPTIONS) -> SeriesDiagnosis:
    """Decide Sum(exp(logs)) = inf / finite / unknown with an explicit certificate.

    Certificates: partial sums past the divergence threshold, or a stably
    signed ratio-test margin (the difference form with weights v_n = n), plus
    a geometric tail bound on the convergent side.
    """
    logs = np.asarray(logs, dtype=float)
    with np.errstate(invalid="ignore"):
        prefix = np.logaddexp.accumulate(logs) if len(logs) else np.array([NEG_INF])
    S_log = float(prefix[-1])
    # difference-form ratio margin kappa_n = n * u_n/u_{n+1} - (n+1)
    finite = np.isfinite(logs)
    idx = np.nonzero(finite[:-1] & finite[1:])[0]
    idx = idx[idx >= 1]
    kappas = idx * np.exp(logs[idx] - logs[idx + 1]) - (idx + 1)
    kappa = _kummer_estimate(kappas, idx, opts)
    win = _window(kappas, opts.window)
    diag = {"n_terms": int(len(logs)), "partial_sum_log": S_log,
            "last_terms_log": [float(v) for v in logs[-4:]]}

    if S_log > math.log(opts.divergence_threshold):
        return SeriesDiagnosis("diverges", S_log, None, kappa,
                               {**diag, "certificate": "partial-sum-threshold"})
    if len(win) >= min(10, max(2, len(kappas))) and len(win) > 0:
        if np.all(win < -opts.kummer_margin):
            return SeriesDiagnosis("diverges", S_log, None, kappa,
                                   {**diag, "certificate": "ratio-margin"})
        if np.all(win > opts.kummer_margin):
            tail_log = _tail_estimate(logs, kappas, opts)
            total_log = float(np.logaddexp(S_log, tail_log))
            return SeriesDiagnosis("converges", S_log, total_log, kappa,
                                   {**diag, "certificate": "ratio-margin",
                                    "tail_log": tail_log})
    return SeriesDiagnosis("inconclusive", S_log, None, kappa, diag)


def _tail_estimate(logs: np.ndarray, kappas: np.ndarray, opts: AnalysisOptions) -> float:
    """Log of the estimated tail beyond the truncation, for a certified-convergent series."""
    finite = logs[np.isfinite(logs)]
    if len(finite) < 2:
        return NEG_INF
    ratios = np.exp(np.diff(finite[-min(opts.window, len(finite)):]))
    r = float(np.max(ratios))
    last = float(finite[-1])
    if r < 1.0 - 1e-9:
        return last + math.log(r) - math.log1p(-r)
    # polynomial-like decay: integral-test scale n/kappa
    k = max(float(_window(kappas, opts.window)[-1]), opts.kummer_margin)
    return last + math.log(len(logs) / k)


# ---------------------------------------------------------------------------
# ratio limits (the d-type quantities)


def ratio_limit(num_signs, num_logs, den_signs, den_logs,
                opts: AnalysisOptions = DEFAULT_OPTIONS) -> LimitEstimate:
    """Windowed limsup of num_n/den_n over the indices where den_n > 0."""
    num_signs = np.asarray(num_signs)
    den_signs = np.asarray(den_signs)
    mask = den_signs > 0
    pos = np.nonzero(mask)[0]
    if len(pos) == 0:
        return LimitEstimate(None, [], False, opts.ratio_tol)
    with np.errstate(over="ignore"):
        ratios = num_signs[pos] * np.exp(np.asarray(num_logs)[pos] - np.asarray(den_logs)[pos])
    win = _window(ratios, opts.window)
    spread = float(np.max(win) - np.min(win))
    scale = max(1.0, abs(float(win[-1])))
    tol = opts.ratio_tol * scale
    if spread <= tol and np.all(np.isfinite(win)):
        return LimitEstimate(float(np.max(win)), list(map(float, win)), True, tol)
    value = _doubling_divergence(ratios, pos)
    return LimitEstimate(value, list(map(float, win)), False, tol)


def _signed_cumsum(signs, logs):
    out_s = np.zeros(len(signs), dtype=np.int64)
    out_l = np.full(len(signs), NEG_INF)
    acc = (0, NEG_INF)
    for i in range(len(signs)):
        acc = sl_add(acc[0], acc[1], int(signs[i]), float(logs[i]))
        out_s[i], out_l[i] = acc
    return out_s, out_l


def d_estimate(seqs: SequenceTable, opts: AnalysisOptions = DEFAULT_OPTIONS) -> LimitEstimate:
    """The ratio limit d (or its tilted version) from a sequence table.

    With an everywhere-positive F column the term ratio d_n/F_n is used (the
    difference form of the defining partial-sum ratio, which converges much
    faster); otherwise the partial-sum ratio restricted to indices with a
    positive F partial sum.
    """
    if np.all(seqs.F0_signs[1:] > 0):
        return ratio_limit(seqs.d_signs[1:], seqs.d_logs[1:],
                           seqs.F0_signs[1:], seqs.F0_logs[1:], opts)
    SF = _signed_cumsum(seqs.F0_signs, seqs.F0_logs)
    Sd = _signed_cumsum(seqs.d_signs, seqs.d_logs)
    return ratio_limit(Sd[0], Sd[1], SF[0], SF[1], opts)


# ---------------------------------------------------------------------------
# compensated sums a_k * y - b_k (the chronic cancellation pattern)


def _compensated_terms(a_signs, a_logs, b_signs, b_logs, y: float,
                       opts: AnalysisOptions):
    """Terms t_k = y*a_k - b_k with resolution tracking.

    When the two summands agree to within the cancellation floor the result
    carries no information at double precision; such terms are snapped to an
    exact zero and marked unresolved unless their resolution bound is
    negligible in absolute terms.  ``precise`` is the stricter flag: the
    resolution bound is negligible either absolutely or relative to the term
    itself, so the value carries close to full relative precision.
    """
    n = len(a_signs)
    log_y = math.log(y) if y > 0 else NEG_INF
    t_s = np.zeros(n, dtype=np.int64)
    t_l = np.full(n, NEG_INF)
    trusted = np.ones(n, dtype=bool)
    precise = np.ones(n, dtype=bool)
    bound_l = np.full(n, NEG_INF)
    log_floor = math.log(opts.cancellation_floor)
    log_neg = math.log(opts.negligible_abs)
    log_rel = math.log(opts.ratio_tol)
    for k in range(n):
        sa = int(a_signs[k]) if y > 0 else 0
        la = float(a_logs[k]) + log_y if y > 0 else NEG_INF
        sb, lb = int(b_signs[k]), float(b_logs[k])
        s, l = sl_add(sa, la, -sb, lb)
        ref = max(la if sa else NEG_INF, lb if sb else NEG_INF)
        bound = ref + log_floor if ref > NEG_INF else NEG_INF
        if s != 0 and l < bound:
            s, l = 0, NEG_INF
        if s == 0 and bound > log_neg:
            trusted[k] = False
        if bound > log_neg and (s == 0 or bound > l + log_rel):
            precise[k] = False
        t_s[k], t_l[k] = s, l
        bound_l[k] = bound
    return t_s, t_l, trusted, precise, bound_l


def _trusted_region(trusted: np.ndarray) -> int:
    """Length of the prefix on which every term is fully resolved."""
    bad = np.nonzero(~trusted)[0]
    return int(bad[0]) if len(bad) else len(trusted)


def _bounded_partial_sums_verdict(t_s, t_l, trusted, opts: AnalysisOptions,
                                  limit_tight: bool) -> Verdict:
    """Is sup_n of the partial sums finite?

    Works on the resolved prefix only; ``limit_tight`` records that the ratio
    limit feeding the terms was itself certified to window tolerance, which is
    what justifies reading a flat resolved prefix as a global bound.
    """
    region = _trusted_region(trusted)
    ts = scaled.to_floats(t_s[:region], t_l[:region])
    diag = {"resolved_upto": region - 1, "n_terms": len(t_s)}
    if region == 0:
        return Verdict(Status.INCONCLUSIVE, {**diag, "reason": "no resolved terms"})
    S = np.cumsum(ts)
    diag["last_partial_sum"] = float(S[-1])
    diag["sup_partial_sum"] = float(np.max(S))
    if np.max(S) > opts.divergence_threshold:
        return Verdict(Status.FAILS, {**diag, "certificate": "partial-sum-threshold"})
    win = _window(S, opts.window)
    spread = float(np.max(win) - np.min(win))
    stable = spread <= max(opts.ratio_tol * (1.0 + abs(float(S[-1]))), opts.negligible_abs)
    if stable and (region == len(t_s) or limit_tight):
        note = "resolution-limited beyond the resolved prefix" if region < len(t_s) else None
        if note:
            diag["note"] = note
        return Verdict(Status.HOLDS, diag)
    # growth certificate on the resolved prefix when the terms are nonnegative
    if np.all(ts >= 0):
        sub = classify_positive_series(np.log(np.maximum(ts, 1e-300)), opts)
        if sub.conclusion == "diverges":
            return Verdict(Status.FAILS, {**diag, "certificate": sub.diagnostics.get("certificate"),
                                          "kappa": sub.kappa.to_dict()})
        if sub.conclusion == "converges":
            return Verdict(Status.HOLDS, {**diag, "certificate": "ratio-margin"})
    return Verdict(Status.INCONCLUSIVE, {**diag, "window_spread": spread})


# ---------------------------------------------------------------------------
# classification operations


def uniqueness(model: SingleBirthModel, N: Optional[int] = None,
               opts: AnalysisOptions = DEFAULT_OPTIONS) -> Verdict:
    """Non-explosion: Holds iff the m series diverges."""
    N = opts.N if N is None else N
    seqs = compute_sequences(model, CoefficientVector.zero(), N)
    diag = classify_positive_series(seqs.m_logs, opts)
    status = {"diverges": Status.HOLDS, "converges": Status.FAILS,
              "inconclusive": Status.INCONCLUSIVE}[diag.conclusion]
    d = {"N": N, "series": "m", **diag.diagnostics, "kappa": diag.kappa.to_dict()}
    if diag.kappa.window_estimates:
        # shifted form used by the constant-column growth criterion
        d["kappa_prime"] = float(diag.kappa.window_estimates[-1]) + 1.0
    if diag.conclusion == "converges":
        d["total_m_log"] = diag.total_log
    return Verdict(status, d)


def recurrence(model: SingleBirthModel, N: Optional[int] = None,
               opts: AnalysisOptions = DEFAULT_OPTIONS) -> Verdict:
    """Holds iff the F series diverges.  Assumes the chain is non-explosive;
    evaluated regardless and annotated by analyze()."""
    N = opts.N if N is None else N
    seqs = compute_sequences(model, CoefficientVector.zero(), N)
    diag = classify_positive_series(seqs.F0_logs, opts)
    status = {"diverges": Status.HOLDS, "converges": Status.FAILS,
              "inconclusive": Status.INCONCLUSIVE}[diag.conclusion]
    return Verdict(status, {"N": N, "series": "F", **diag.diagnostics,
                            "kappa": diag.kappa.to_dict()})


def return_probability(model: SingleBirthModel, N: Optional[int] = None,
                       opts: AnalysisOptions = DEFAULT_OPTIONS) -> MomentVector:
    """P_n(return to 0 in finite time) for n = 0..N.

    All ones in the recurrent case; tail ratios of the convergent F series
    otherwise.
    """
    N = opts.N if N is None else N
    seqs = compute_sequences(model, CoefficientVector.zero(), N)
    diag = classify_positive_series(seqs.F0_logs, opts)
    if diag.conclusion == "diverges":
        return MomentVector(np.ones(N + 1), "return_probability")
    if diag.conclusion != "converges":
        raise InconclusiveSeries(
            "neither divergence nor tail convergence of the F series was certified")
    total_log = diag.total_log
    tail_log = diag.diagnostics["tail_log"]
    # suffix sums: sum_{k>=n} F_k plus the beyond-truncation tail
    suffix = np.logaddexp.accumulate(seqs.F0_logs[::-1])[::-1]
    suffix = np.logaddexp(suffix, tail_log)
    values = np.exp(suffix - total_log)
    # from 0 the first jump is upward, so only the mass at levels >= 1 counts
    values[0] = math.exp((suffix[1] if N >= 1 else tail_log) - total_log)
    return MomentVector(np.clip(values, 0.0, 1.0), "return_probability")


def mean_return_time(model: SingleBirthModel, N: Optional[int] = None,
                     opts: AnalysisOptions = DEFAULT_OPTIONS):
    """Return (d, E, ergodic, strongly_ergodic).

    d is the ratio limit of the d and F sequences; E_0 = 1/q01 + d and
    E_n = sum_{k<n} (F_k d - d_k).  Ergodicity is d < inf; strong ergodicity is
    boundedness of the partial sums of the same compensated terms.  The
    strong-ergodicity reading only needs non-explosion, not recurrence, so it
    is evaluated even when the recurrence verdict is not at hand.
    """
    N = opts.N if N is None else N
    seqs = compute_sequences(model, CoefficientVector.zero(), N)
    d = d_estimate(seqs, opts)

    if d.value is None:
        raise InconclusiveSeries("the ratio limit d did not converge at this truncation")

    if math.isinf(d.value):
        E = MomentVector(np.full(N + 1, math.inf), "mean_return_time")
        return d, E, Verdict(Status.FAILS, {"d": "inf"}), Verdict(Status.FAILS, {"d": "inf"})

    t_s, t_l, trusted, precise, _ = _compensated_terms(seqs.F0_signs, seqs.F0_logs,
                                                       seqs.d_signs, seqs.d_logs,
                                                       d.value, opts)
    # snapped terms enter the sums as exact zeros (best point estimate);
    # trusted_upto records where full relative precision ends
    ts = scaled.to_floats(t_s, t_l)
    values = np.empty(N + 1)
    values[0] = 1.0 / model.up(0) + d.value
    values[1:] = np.cumsum(ts)[:N]
    E = MomentVector(values, "mean_return_time", trusted_upto=_trusted_region(precise))

    ergodic = Verdict(Status.HOLDS, {"d": d.value, "converged": d.converged})
    strongly = _bounded_partial_sums_verdict(t_s, t_l, trusted, opts, limit_tight=d.converged)
    strongly.diagnostics["d"] = d.value
    return d, E, ergodic, strongly


# ---------------------------------------------------------------------------
# polynomial moments (hitting times and the explosion time)


def hitting_moment(model: SingleBirthModel, i0: int, ell: int,
                   N: Optional[int] = None,
                   opts: AnalysisOptions = DEFAULT_OPTIONS):
    """(E_{i0} sigma_{i0}^ell, MomentVector over 0..N) by recursion on ell."""
    N = opts.N if N is None else N
    if ell < 1:
        raise DomainError("moment order must be a positive integer")
    if ell > opts.max_ell:
        raise DomainError(f"moment order {ell} exceeds the configured cap {opts.max_ell}")
    if i0 < 0 or i0 > N:
        raise DomainError("hitting target must lie inside the truncation")

    zero = CoefficientVector.zero()
    if ell == 1:
        prev = np.ones(N + 1)
    else:
        y_prev, E_prev = hitting_moment(model, i0, ell - 1, N, opts)
        prev = E_prev.values
        if not np.all(np.isfinite(prev)):
            raise PreviousOrderInfinite(
                f"moments of order {ell - 1} are not finite on the truncation")

    # u: weight-kernel solution with the return rates into i0 as inhomogeneity
    base = max(i0 - 1, 0)
    h = np.zeros(N + 1)
    for j in range(base, N + 1):
        if j == i0 - 1:
            h[j] = model.up(j)
        elif j != i0:
            h[j] = model.row(j).down.get(i0, 0.0)
    u_s, u_l = forward_inhomogeneous(model, zero, N, *scaled.from_floats(h), base=base)
    # v: same kernel driven by the previous-order moments
    v_s, v_l = forward_inhomogeneous(model, zero, N, *scaled.from_floats(prev))

    # y = ell * limsup (sum_{i0<=k<=n} v_k) / (1 + sum_{i0<=k<=n} u_k)
    SV = _signed_cumsum(v_s[i0:], v_l[i0:])
    u_with_one_s = np.concatenate(([1], u_s[i0:]))
    u_with_one_l = np.concatenate(([0.0], u_l[i0:]))
    SU = _signed_cumsum(u_with_one_s, u_with_one_l)
    ratio = ratio_limit(SV[0], SV[1], SU[0][1:], SU[1][1:], opts)
    if ratio.value is None:
        raise InconclusiveSeries("the moment ratio did not converge at this truncation")
    y = ell * ratio.value
    if math.isinf(y):
        return y, MomentVector(np.full(N + 1, math.inf), f"hitting_moment(i0={i0}, ell={ell})")

    values = np.full(N + 1, math.nan)
    values[i0] = y
    # below the target: E_n = ell sum_{n<=k<i0} v_k + (1 - sum_{n<=k<i0} u_k) y
    for n in range(i0):
        sv = scaled.to_floats(v_s[n:i0], v_l[n:i0]).sum()
        su = scaled.to_floats(u_s[n:i0], u_l[n:i0]).sum()
        values[n] = ell * sv + (1.0 - su) * y
    # above: E_n = y + sum_{i0<=k<n} (y u_k - ell v_k), compensated
    t_s, t_l, trusted, precise, _ = _compensated_terms(u_s[i0:], u_l[i0:],
                                                       v_s[i0:], v_l[i0:] + math.log(ell),
                                                       y, opts)
    ts = scaled.to_floats(t_s, t_l)
    values[i0 + 1:] = y + np.cumsum(ts)[: N - i0]
    return y, MomentVector(values, f"hitting_moment(i0={i0}, ell={ell})",
                           trusted_upto=i0 + _trusted_region(precise))


def lifetime_moment(model: SingleBirthModel, ell: int, N: Optional[int] = None,
                    opts: AnalysisOptions = DEFAULT_OPTIONS) -> MomentVector:
    """E_n (explosion time)^ell for an explosive model, by recursion on ell."""
    N = opts.N if N is None else N
    if ell < 1:
        raise DomainError("moment order must be a positive integer")
    if ell > opts.max_ell:
        raise DomainError(f"moment order {ell} exceeds the configured cap {opts.max_ell}")
    uq = uniqueness(model, N, opts)
    if uq.holds:
        raise NotExplosive("lifetime moments require an explosive model")
    if not uq.fails:
        raise InconclusiveSeries("explosiveness was not certified at this truncation")

    if ell == 1:
        prev = np.ones(N + 1)
    else:
        E_prev = lifetime_moment(model, ell - 1, N, opts)
        prev = E_prev.values
        if not np.all(np.isfinite(prev)):
            raise PreviousOrderInfinite(
                f"lifetime moments of order {ell - 1} are not finite on the truncation")

    mb_s, mb_l = forward_inhomogeneous(model, CoefficientVector.zero(), N,
                                       *scaled.from_floats(prev))
    if not np.all(mb_s >= 0):
        raise InconclusiveSeries("weight kernel produced a negative term")
    diag = classify_positive_series(mb_l, opts)
    if diag.conclusion == "diverges":
        raise PreviousOrderInfinite(f"moments of order {ell} are infinite")
    if diag.conclusion != "converges":
        raise InconclusiveSeries("tail of the weight series was not certified")
    tail_log = diag.diagnostics["tail_log"]
    suffix = np.logaddexp.accumulate(mb_l[::-1])[::-1]
    suffix = np.logaddexp(suffix, tail_log)
    return MomentVector(ell * np.exp(suffix), f"lifetime_moment(ell={ell})")


# ---------------------------------------------------------------------------
# exponential moments and Laplace transforms


def _check_rate_bound(model: SingleBirthModel, lam: float, N: int) -> None:
    if lam <= 0:
        raise DomainError("the tilt rate must be strictly positive")
    if lam >= model.up(0):
        raise RateBoundViolated(f"rate {lam} is not below q01 = {model.up(0)}")
    for i in range(N + 1):
        if lam >= model.q(i):
            raise RateBoundViolated(f"rate {lam} is not below the exit rate at state {i}")


def exp_moment_return(model: SingleBirthModel, lam: float, N: Optional[int] = None,
                      opts: AnalysisOptions = DEFAULT_OPTIONS):
    """(feasible, E, d_tilde) for E_n exp(lam * return time)."""
    N = opts.N if N is None else N
    _check_rate_bound(model, lam, N)
    seqs = compute_sequences(model, CoefficientVector.constant(lam), N)
    dt = d_estimate(seqs, opts)

    # positivity side condition on every prefix with a nonpositive F partial sum
    SF = _signed_cumsum(seqs.F0_signs, seqs.F0_logs)
    if np.any(SF[0] <= 0) and dt.is_finite:
        Sd = _signed_cumsum(seqs.d_signs, seqs.d_logs)
        for n in range(N + 1):
            if SF[0][n] <= 0:
                lhs = scaled.ScaledReal.from_float(dt.value) * scaled.ScaledReal(int(SF[0][n]), float(SF[1][n]))
                gap = lhs - scaled.ScaledReal(int(Sd[0][n]), float(Sd[1][n]))
                if gap.sign <= 0:
                    raise ConditionViolated(
                        f"positivity side condition fails at prefix length {n + 1}", index=n)

    if dt.value is None:
        feasible = Verdict(Status.INCONCLUSIVE, {"d_tilde": dt.to_dict()})
        return feasible, MomentVector(np.full(N + 1, math.nan), "exp_moment_return"), dt
    if math.isinf(dt.value):
        feasible = Verdict(Status.FAILS, {"d_tilde": "inf"})
        return feasible, MomentVector(np.full(N + 1, math.inf), "exp_moment_return"), dt

    values = np.empty(N + 1)
    values[0] = model.up(0) * (1.0 + lam * dt.value) / (model.up(0) - lam)
    t_s, t_l, _, precise, _ = _compensated_terms(seqs.F0_signs, seqs.F0_logs,
                                                 seqs.d_signs, seqs.d_logs,
                                                 dt.value, opts)
    ts = scaled.to_floats(t_s, t_l)
    values[1:] = 1.0 + lam * np.cumsum(ts)[:N]
    feasible = Verdict(Status.HOLDS, {"d_tilde": dt.value, "converged": dt.converged})
    return feasible, MomentVector(values, "exp_moment_return",
                                  trusted_upto=_trusted_region(precise)), dt


def laplace_return(model: SingleBirthModel, lam: float, N: Optional[int] = None,
                   opts: AnalysisOptions = DEFAULT_OPTIONS) -> MomentVector:
    """E_n exp(-lam * return time); values lie in (0, 1] for a recurrent chain."""
    N = opts.N if N is None else N
    if lam <= 0:
        raise DomainError("the transform rate must be strictly positive")
    seqs = compute_sequences(model, CoefficientVector.constant(-lam), N)
    dt = d_estimate(seqs, opts)
    if dt.value is None or math.isinf(dt.value):
        raise InconclusiveSeries("the tilted ratio limit did not converge")
    values = np.empty(N + 1)
    values[0] = model.up(0) * (1.0 - lam * dt.value) / (model.up(0) + lam)
    t_s, t_l, _, precise, _ = _compensated_terms(seqs.F0_signs, seqs.F0_logs,
                                                 seqs.d_signs, seqs.d_logs,
                                                 dt.value, opts)
    ts = scaled.to_floats(t_s, t_l)
    values[1:] = 1.0 - lam * np.cumsum(ts)[:N]
    return MomentVector(values, "laplace_return", trusted_upto=_trusted_region(precise))


def lifetime_transforms(model: SingleBirthModel, lam: float,
                        N: Optional[int] = None, direction: str = "laplace",
                        opts: AnalysisOptions = DEFAULT_OPTIONS) -> MomentVector:
    """Transforms of the explosion time: E_n exp(-lam tau) or E_n exp(+lam tau)."""
    N = opts.N if N is None else N
    if lam <= 0:
        raise DomainError("the transform rate must be strictly positive")
    if direction not in ("laplace", "exp_moment"):
        raise DomainError(f"unknown direction {direction!r}")
    uq = uniqueness(model, N, opts)
    if uq.holds:
        raise NotExplosive("lifetime transforms require an explosive model")
    if not uq.fails:
        raise InconclusiveSeries("explosiveness was not certified at this truncation")

    if direction == "laplace":
        seqs = compute_sequences(model, CoefficientVector.constant(-lam), N)
        diag = classify_positive_series(seqs.m_logs, opts)
        if diag.conclusion != "converges":
            raise InconclusiveSeries("the tilted weight series was not certified convergent")
        total = diag.total
        prefix = np.concatenate(([0.0], np.cumsum(seqs.m_floats())))[: N + 1]
        return MomentVector((1.0 + lam * prefix) / (1.0 + lam * total),
                            "lifetime_laplace")

    seqs = compute_sequences(model, CoefficientVector.constant(lam), N)
    if np.any(seqs.m_signs < 0):
        raise FeasibilityViolated("tilted weights went negative; rate too large")
    S = np.cumsum(seqs.m_floats())
    if np.any(lam * S >= 1.0):
        raise FeasibilityViolated(
            f"lam * partial weight sum reaches {float(np.max(lam * S)):.6g} >= 1")
    cbar = ratio_limit(*scaled.from_floats(S), *scaled.from_floats(1.0 - lam * S), opts)
    if cbar.value is None or math.isinf(cbar.value):
        raise InconclusiveSeries("the exponential-moment limsup did not converge")
    prefix = np.concatenate(([0.0], S))[: N + 1]
    values = 1.0 + lam * (cbar.value * (1.0 - lam * prefix) - prefix)
    return MomentVector(values, "lifetime_exp_moment")


@dataclass
class DecayProfile:
    g: np.ndarray
    first_nonpositive: Optional[int]


def decay_profile(model: SingleBirthModel, lam: float, g0: float,
                  N: Optional[int] = None,
                  opts: AnalysisOptions = DEFAULT_OPTIONS) -> DecayProfile:
    """The harmonic profile g_n = g0 (1 - lam * sum_{k<n} mtilde_k) for c = +lam."""
    N = opts.N if N is None else N
    seqs = compute_sequences(model, CoefficientVector.constant(lam), N)
    prefix = np.concatenate(([0.0], np.cumsum(seqs.m_floats())))[: N + 1]
    g = g0 * (1.0 - lam * prefix)
    nonpos = np.nonzero(g <= 0.0)[0] if g0 > 0 else np.array([], dtype=int)
    return DecayProfile(g=g, first_nonpositive=int(nonpos[0]) if len(nonpos) else None)


# ---------------------------------------------------------------------------
# explicit series tests


def kummer_test(u, v, opts: AnalysisOptions = DEFAULT_OPTIONS):
    """(kappa estimate, conclusion) for the weighted ratio test.

    kappa_n = v_n u_n / u_{n+1} - v_{n+1}; a stably positive margin certifies
    convergence of Sum(u), a stably negative one divergence, provided the
    caller's weights satisfy Sum(1/v) = inf.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if len(u) != len(v) or len(u) < 2:
        raise DomainError("need two aligned sequences of length >= 2")
    if np.any(u <= 0) or np.any(v <= 0):
        raise DomainError("the test requires strictly positive sequences")
    kappas = v[:-1] * u[:-1] / u[1:] - v[1:]
    est = _kummer_estimate(kappas, np.arange(len(kappas)), opts)
    win = _window(kappas, opts.window)
    if np.all(win > opts.kummer_margin):
        conclusion = "Converges"
    elif np.all(win < -opts.kummer_margin):
        conclusion = "Diverges"
    else:
        conclusion = "Inconclusive"
    return est, conclusion


def mz_sufficient_condition(model: SingleBirthModel, N: Optional[int] = None,
                            opts: AnalysisOptions = DEFAULT_OPTIONS):
    """(M, sufficient): M = sup_n [sum_{1<=k<n} F_k][sum_{j>=n} 1/(q_{j,j+1} F_j)].

    Finiteness of M is a sufficient (not necessary) condition for strong
    ergodicity of a recurrent chain.
    """
    N = opts.N if N is None else N
    seqs = compute_sequences(model, CoefficientVector.zero(), N)
    rec = classify_positive_series(seqs.F0_logs, opts)
    if rec.conclusion == "converges":
        raise NotRecurrent("the condition applies to recurrent chains only")
    if rec.conclusion != "diverges":
        raise InconclusiveSeries("recurrence was not certified at this truncation")

    inner_logs = -np.log(seqs.ups) - seqs.F0_logs
    inner = classify_positive_series(inner_logs, opts)
    if inner.conclusion == "diverges":
        est = LimitEstimate(math.inf, [], False, opts.ratio_tol)
        return est, Verdict(Status.FAILS, {"inner_series": "diverges",
                                           "kappa": inner.kappa.to_dict()})
    if inner.conclusion != "converges":
        raise InconclusiveSeries("the inner series was not certified either way")

    tail_log = inner.diagnostics["tail_log"]
    suffix = np.logaddexp.accumulate(inner_logs[::-1])[::-1]
    suffix = np.logaddexp(suffix, tail_log)
    outer_prefix = np.logaddexp.accumulate(seqs.F0_logs[1:])   # sum_{1<=k<=n}
    # M_n for n = 2..N pairs outer prefix up to n-1 with inner suffix from n
    M_logs = outer_prefix[:-1] + suffix[2:]
    M_log = float(np.max(M_logs))
    M_val = math.exp(M_log) if M_log <= scaled.MAX_REPRESENTABLE_LOG else math.inf
    win = _window(M_logs, opts.window)
    spread = float(np.max(win) - np.min(win))
    stabilized = spread <= 1e-6 * (1.0 + abs(float(win[-1])))
    decreasing = bool(np.all(np.diff(win) <= 0))
    peaked = float(np.max(win)) < M_log - 1e-9
    est = LimitEstimate(M_val, [float(math.exp(min(v, 700.0))) for v in win[-8:]],
                        stabilized, 1e-6)
    if math.isfinite(M_val) and (stabilized or decreasing or peaked):
        return est, Verdict(Status.HOLDS, {"M": M_val, "argmax": int(np.argmax(M_logs)) + 2})
    return est, Verdict(Status.INCONCLUSIVE, {"M_truncated": M_val,
                                              "edge_trend": "increasing"})


# ---------------------------------------------------------------------------
# the aggregate report


@dataclass
class AnalysisReport:
    model_echo: dict
    N: int
    verdicts: dict
    quantities: dict
    diagnostics: dict
    errors: dict
    notes: list
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "model_echo": _jsonable(self.model_echo),
            "N": self.N,
            "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()},
            "quantities": _jsonable(self.quantities),
            "diagnostics": _jsonable(self.diagnostics),
            "errors": dict(self.errors),
            "notes": list(self.notes),
            "wall_time": self.wall_time,
        }

    @staticmethod
    def from_dict(d: dict) -> "AnalysisReport":
        return AnalysisReport(
            model_echo=d["model_echo"],
            N=d["N"],
            verdicts={k: Verdict.from_dict(v) for k, v in d["verdicts"].items()},
            quantities=d["quantities"],
            diagnostics=d["diagnostics"],
            errors=dict(d["errors"]),
            notes=list(d["notes"]),
            wall_time=d.get("wall_time", 0.0),
        )


def analyze(model: SingleBirthModel, N: Optional[int] = None,
            opts: AnalysisOptions = DEFAULT_OPTIONS,
            exp_lambda: Optional[float] = None,
            model_echo: Optional[dict] = None) -> AnalysisReport:
    """Run the full classification pipeline; per-entry failures do not abort the rest."""
    N = opts.N if N is None else N
    t0 = time.perf_counter()
    verdicts: dict = {}
    quantities: dict = {}
    diagnostics: dict = {}
    errors: dict = {}
    notes: list = list(model.irreducibility_warnings(min(N, 200)))

    def attempt(name, fn):
        try:
            return fn()
        except Exception as exc:  # noqa: BLE001 - aggregation point by contract
            errors[name] = f"{type(exc).__name__}: {exc}"
            return None

    uq = attempt("unique", lambda: uniqueness(model, N, opts))
    if uq is not None:
        verdicts["unique"] = uq
    rec = attempt("recurrent", lambda: recurrence(model, N, opts))
    if rec is not None:
        verdicts["recurrent"] = rec
        if uq is not None and not uq.holds:
            notes.append("the recurrence criterion assumes non-explosion, "
                         "which was not certified here")

    probs = attempt("return_prob", lambda: return_probability(model, N, opts))
    if probs is not None:
        quantities["return_prob"] = probs.to_list(min(N, 20))

    mrt = attempt("mean_return_time", lambda: mean_return_time(model, N, opts))
    if mrt is not None:
        d, E, ergodic, strongly = mrt
        verdicts["ergodic"] = ergodic
        verdicts["strongly_ergodic"] = strongly
        quantities["d"] = _num(d.value)
        quantities["E0_sigma0"] = _num(E.values[0])
        quantities["E_sigma0"] = E.to_list(min(N, 20))
        diagnostics["d"] = d.to_dict()
        if rec is not None and not rec.holds:
            notes.append("strong ergodicity was evaluated under non-explosion alone, "
                         "a weaker hypothesis than recurrence")

    if exp_lambda is not None:
        em = attempt("exp_ergodic", lambda: exp_moment_return(model, exp_lambda, N, opts))
        if em is not None:
            feasible, E, dt = em
            verdicts["exp_ergodic"] = feasible
            quantities["exp_lambda"] = exp_lambda
            quantities["d_tilde"] = _num(dt.value)
            quantities["E_exp"] = E.to_list(min(N, 20))
        elif "exp_ergodic" in errors and errors["exp_ergodic"].startswith("ConditionViolated"):
            verdicts["exp_ergodic"] = Verdict(Status.FAILS, {"reason": errors["exp_ergodic"]})

    return AnalysisReport(
        model_echo=model_echo if model_echo is not None else {"label": model.label},
        N=N,
        verdicts=verdicts,
        quantities=quantities,
        diagnostics=diagnostics,
        errors=errors,
        notes=notes,
        wall_time=time.perf_counter() - t0,
    )
