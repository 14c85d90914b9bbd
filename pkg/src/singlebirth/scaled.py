"""Sign + log-magnitude arithmetic.

The fundamental sequences of this library grow (or decay) geometrically, so
plain doubles overflow long before the truncation levels we care about.  All
sequence values are therefore carried as a sign in {-1, 0, +1} together with
the natural log of the absolute value.  A scalar wrapper (:class:`ScaledReal`)
is provided for the public API; the hot loops operate on parallel numpy arrays
of signs and log magnitudes through the ``sl_*`` helpers below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericOverflow

# Log magnitudes beyond this are treated as a hard failure rather than inf.
LOG_LIMIT = 1e6

# |x| <= exp(MAX_REPRESENTABLE_LOG) still converts to a finite double.
MAX_REPRESENTABLE_LOG = math.log(np.finfo(float).max)

NEG_INF = float("-inf")


@dataclass(frozen=True)
class ScaledReal:
    """A real number stored as sign and natural log of its magnitude."""

    sign: int
    log_mag: float

    @staticmethod
    def from_float(x: float) -> "ScaledReal":
        if x == 0.0:
            return ScaledReal(0, NEG_INF)
        if not math.isfinite(x):
            raise NumericOverflow(f"cannot scale non-finite value {x!r}")
        return ScaledReal(1 if x > 0 else -1, math.log(abs(x)))

    def to_float(self) -> float:
        """Convert back to a double; overflows to signed inf."""
        if self.sign == 0:
            return 0.0
        if self.log_mag > MAX_REPRESENTABLE_LOG:
            return math.inf * self.sign
        return self.sign * math.exp(self.log_mag)

    @property
    def representable(self) -> bool:
        return self.sign == 0 or self.log_mag <= MAX_REPRESENTABLE_LOG

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def __neg__(self) -> "ScaledReal":
        return ScaledReal(-self.sign, self.log_mag)

    def __add__(self, other: "ScaledReal") -> "ScaledReal":
        s, l = sl_add(self.sign, self.log_mag, other.sign, other.log_mag)
        return ScaledReal(s, l)

    def __sub__(self, other: "ScaledReal") -> "ScaledReal":
        return self + (-other)

    def __mul__(self, other: "ScaledReal") -> "ScaledReal":
        if self.sign == 0 or other.sign == 0:
            return ScaledReal(0, NEG_INF)
        return _checked(self.sign * other.sign, self.log_mag + other.log_mag)

    def __truediv__(self, other: "ScaledReal") -> "ScaledReal":
        if other.sign == 0:
            raise ZeroDivisionError("scaled division by zero")
        if self.sign == 0:
            return ScaledReal(0, NEG_INF)
        return _checked(self.sign * other.sign, self.log_mag - other.log_mag)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        if self.sign == 0:
            return "ScaledReal(0)"
        return f"ScaledReal({'+' if self.sign > 0 else '-'}exp({self.log_mag:.6g}))"


def _checked(sign: int, log_mag: float) -> ScaledReal:
    if log_mag > LOG_LIMIT:
        raise NumericOverflow(f"log magnitude {log_mag:.3g} exceeds limit {LOG_LIMIT:.0e}")
    return ScaledReal(sign, log_mag)


def sl_add(s1: int, l1: float, s2: int, l2: float) -> tuple[int, float]:
    """Signed addition of two (sign, log) pairs."""
    if s1 == 0:
        return s2, l2
    if s2 == 0:
        return s1, l1
    if l1 < l2:
        s1, l1, s2, l2 = s2, l2, s1, l1
    if s1 == s2:
        return s1, l1 + math.log1p(math.exp(l2 - l1))
    diff = math.exp(l2 - l1)
    if diff >= 1.0:
        # Equal magnitudes with opposite signs cancel exactly.
        return 0, NEG_INF
    return s1, l1 + math.log1p(-diff)


def sl_sum(signs: np.ndarray, logs: np.ndarray) -> tuple[int, float]:
    """Signed log-sum-exp over parallel sign/log arrays."""
    mask = signs != 0
    if not np.any(mask):
        return 0, NEG_INF
    s = signs[mask]
    l = logs[mask]
    m = float(np.max(l))
    acc = float(np.sum(s * np.exp(l - m)))
    if acc == 0.0:
        return 0, NEG_INF
    sign = 1 if acc > 0 else -1
    log_mag = m + math.log(abs(acc))
    if log_mag > LOG_LIMIT:
        raise NumericOverflow(f"log magnitude {log_mag:.3g} exceeds limit {LOG_LIMIT:.0e}")
    return sign, log_mag


def sl_dot(weights: np.ndarray, signs: np.ndarray, logs: np.ndarray,
           extra: tuple[int, float] | None = None) -> tuple[int, float]:
    """Signed log-domain dot product of plain-float weights with a scaled vector.

    ``extra`` appends one more (sign, log) term to the reduction, which lets a
    triangular recursion fold its inhomogeneous term into the same pass.
    """
    with np.errstate(divide="ignore"):
        term_logs = np.log(np.abs(weights)) + logs
    term_signs = np.sign(weights).astype(np.int64) * signs
    term_signs[weights == 0.0] = 0
    if extra is not None:
        term_signs = np.append(term_signs, extra[0])
        term_logs = np.append(term_logs, extra[1])
    return sl_sum(term_signs, term_logs)


def from_floats(values) -> tuple[np.ndarray, np.ndarray]:
    """Split a float array into (signs, logs)."""
    arr = np.asarray(values, dtype=float)
    signs = np.sign(arr).astype(np.int64)
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(arr))
    return signs, logs


def to_floats(signs: np.ndarray, logs: np.ndarray) -> np.ndarray:
    """Convert (signs, logs) back to doubles; out-of-range entries become +-inf."""
    out = np.where(logs > MAX_REPRESENTABLE_LOG, np.inf, np.exp(np.minimum(logs, MAX_REPRESENTABLE_LOG)))
    return signs * out
