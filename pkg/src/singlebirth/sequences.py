"""The three fundamental sequences and their triangular recursions.

Everything here is computed in sign/log space (see :mod:`singlebirth.scaled`):
the sequences of the catastrophe model grow like a geometric product and leave
double range near level 700.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import scaled
from .errors import HorizonExceeded
from .model import SingleBirthModel
from .scaled import ScaledReal, sl_dot


@dataclass(frozen=True)
class CoefficientVector:
    """The diagonal perturbation c of the generator (killing when c <= 0)."""

    kind: str
    lam: float = 0.0
    fn: Optional[Callable[[int], float]] = None

    @staticmethod
    def zero() -> "CoefficientVector":
        return CoefficientVector("zero")

    @staticmethod
    def constant(lam: float) -> "CoefficientVector":
        """c == lam everywhere; pass a negative lam for the killing preset."""
        return CoefficientVector("constant", lam=float(lam))

    @staticmethod
    def from_function(fn: Callable[[int], float]) -> "CoefficientVector":
        return CoefficientVector("custom", fn=fn)

    def __call__(self, i: int) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return self.lam
        value = float(self.fn(i))
        if not math.isfinite(value):
            raise ValueError(f"coefficient at {i} is not finite: {value!r}")
        return value


def partial_row_sums(model: SingleBirthModel, n: int) -> np.ndarray:
    """Prefix sums of the down rates of row n: entry k is the total rate from n
    into {0..k}.  Empty for n = 0.  Cached on the model instance so the cache
    dies with the model."""
    if n == 0:
        model.row(0)
        return np.zeros(0)
    cache = model.__dict__.setdefault("_prefix_sums", {})
    if n not in cache:
        cache[n] = np.cumsum(model.dense_down(n))
    return cache[n]


def _tilted_prefix(model: SingleBirthModel, c: CoefficientVector, n: int) -> np.ndarray:
    return partial_row_sums(model, n) - c(n)


@dataclass
class SequenceTable:
    """F (base-0 column), m and d up to a truncation, in sign/log form."""

    model: SingleBirthModel
    c: CoefficientVector
    N: int
    F0_signs: np.ndarray
    F0_logs: np.ndarray
    m_signs: np.ndarray
    m_logs: np.ndarray
    d_signs: np.ndarray
    d_logs: np.ndarray
    ups: np.ndarray

    def F0(self, n: int) -> ScaledReal:
        return ScaledReal(int(self.F0_signs[n]), float(self.F0_logs[n]))

    def m(self, n: int) -> ScaledReal:
        return ScaledReal(int(self.m_signs[n]), float(self.m_logs[n]))

    def d(self, n: int) -> ScaledReal:
        return ScaledReal(int(self.d_signs[n]), float(self.d_logs[n]))

    def F0_floats(self) -> np.ndarray:
        return scaled.to_floats(self.F0_signs, self.F0_logs)

    def m_floats(self) -> np.ndarray:
        return scaled.to_floats(self.m_signs, self.m_logs)

    def d_floats(self) -> np.ndarray:
        return scaled.to_floats(self.d_signs, self.d_logs)

    def identity_gap(self) -> float:
        """Max log-space gap in m_n = F_n^(0)/q01 + d_n over the table.

        Returns the largest |log m_n - log(F_n^(0)/q01 + d_n)|; entries where
        either side is zero or of mixed sign contribute their absolute gap
        relative to the larger magnitude instead.
        """
        q01 = self.ups[0]
        worst = 0.0
        for n in range(self.N + 1):
            lhs = self.m(n)
            rhs = ScaledReal(int(self.F0_signs[n]), float(self.F0_logs[n] - math.log(q01))) + self.d(n)
            if lhs.sign > 0 and rhs.sign > 0:
                gap = abs(lhs.log_mag - rhs.log_mag)
            else:
                diff = lhs - rhs
                scale = max(lhs.log_mag, rhs.log_mag, 0.0)
                gap = 0.0 if diff.sign == 0 else math.exp(diff.log_mag - scale)
            worst = max(worst, gap)
        return worst


def compute_sequences(model: SingleBirthModel, c: CoefficientVector, N: int) -> SequenceTable:
    """One forward pass producing the F (base 0), m and d vectors up to N."""
    model.require_horizon(N)
    ups = np.array([model.up(n) for n in range(N + 1)])

    F_s = np.zeros(N + 1, dtype=np.int64)
    F_l = np.full(N + 1, scaled.NEG_INF)
    m_s = np.zeros(N + 1, dtype=np.int64)
    m_l = np.full(N + 1, scaled.NEG_INF)
    d_s = np.zeros(N + 1, dtype=np.int64)
    d_l = np.full(N + 1, scaled.NEG_INF)

    F_s[0], F_l[0] = 1, 0.0
    m_s[0], m_l[0] = 1, -math.log(ups[0])
    # d_0 = 0 stays (0, -inf)

    one = (1, 0.0)
    for n in range(1, N + 1):
        qt = _tilted_prefix(model, c, n)
        log_up = math.log(ups[n])
        s, l = sl_dot(qt, F_s[:n], F_l[:n])
        F_s[n], F_l[n] = s, l - log_up
        s, l = sl_dot(qt, m_s[:n], m_l[:n], extra=one)
        m_s[n], m_l[n] = s, l - log_up
        s, l = sl_dot(qt, d_s[:n], d_l[:n], extra=one)
        d_s[n], d_l[n] = s, l - log_up
    return SequenceTable(model, c, N, F_s, F_l, m_s, m_l, d_s, d_l, ups)


def forward_inhomogeneous(model: SingleBirthModel, c: CoefficientVector, N: int,
                          inhom_signs: np.ndarray, inhom_logs: np.ndarray,
                          base: int = 0,
                          init: Optional[tuple[int, float]] = None) -> tuple[np.ndarray, np.ndarray]:
    """Solve x_n = (h_n + sum_{k=base..n-1} qtilde_n^(k) x_k) / q_{n,n+1}.

    Entries below ``base`` are zero.  When ``init`` is given it overrides the
    value at ``base`` (used for the F-column convention x_base = 1).
    """
    model.require_horizon(N)
    if N < base:
        raise HorizonExceeded(f"truncation {N} below base {base}")
    x_s = np.zeros(N + 1, dtype=np.int64)
    x_l = np.full(N + 1, scaled.NEG_INF)
    if init is not None:
        x_s[base], x_l[base] = init
    else:
        x_s[base] = inhom_signs[base]
        x_l[base] = inhom_logs[base] - math.log(model.up(base))
    for n in range(base + 1, N + 1):
        qt = _tilted_prefix(model, c, n)[base:]
        s, l = sl_dot(qt, x_s[base:n], x_l[base:n],
                      extra=(int(inhom_signs[n]), float(inhom_logs[n])))
        x_s[n], x_l[n] = s, l - math.log(model.up(n))
    return x_s, x_l


def f_column(model: SingleBirthModel, c: CoefficientVector, N: int,
             base: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """The F column with unit value at ``base``, up to N."""
    zeros_s = np.zeros(N + 1, dtype=np.int64)
    zeros_l = np.full(N + 1, scaled.NEG_INF)
    return forward_inhomogeneous(model, c, N, zeros_s, zeros_l, base=base, init=(1, 0.0))


class FTriangle:
    """Full triangular table of F values for 0 <= i <= n <= N (small N only)."""

    def __init__(self, model: SingleBirthModel, c: CoefficientVector, N: int):
        self.N = N
        self._cols = [f_column(model, c, N, base=i) for i in range(N + 1)]

    def entry(self, n: int, i: int) -> ScaledReal:
        s, l = self._cols[i]
        return ScaledReal(int(s[n]), float(l[n]))

    def entry_float(self, n: int, i: int) -> float:
        return self.entry(n, i).to_float()


def f_table(model: SingleBirthModel, c: CoefficientVector, N: int) -> FTriangle:
    return FTriangle(model, c, N)


def m_sequence(model: SingleBirthModel, c: CoefficientVector, N: int) -> np.ndarray:
    return compute_sequences(model, c, N).m_floats()


def d_sequence(model: SingleBirthModel, c: CoefficientVector, N: int) -> np.ndarray:
    return compute_sequences(model, c, N).d_floats()
