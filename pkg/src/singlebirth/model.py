"""Rate matrices for upwardly skip-free chains and their builders."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import DomainError, HorizonExceeded, StructureError


def _check_rate(value, what: str) -> float:
    x = float(value)
    if not math.isfinite(x):
        raise StructureError(f"{what} must be finite, got {x!r}")
    if x < 0.0:
        raise StructureError(f"{what} must be nonnegative, got {x!r}")
    return x


@dataclass(frozen=True)
class RateRow:
    """One row of the rate matrix: a single up rate plus sparse down rates."""

    up: float
    down: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        up = float(self.up)
        if not math.isfinite(up) or up <= 0.0:
            raise StructureError(f"up rate must be strictly positive, got {up!r}")
        object.__setattr__(self, "up", up)
        clean = {}
        for j, r in self.down.items():
            rate = _check_rate(r, f"down rate to state {j}")
            if rate > 0.0:
                clean[int(j)] = rate
        object.__setattr__(self, "down", clean)

    @property
    def total_rate(self) -> float:
        """Exit rate of the state (minus the diagonal entry)."""
        return self.up + sum(self.down.values())


class SingleBirthModel:
    """An upwardly skip-free rate matrix on the nonnegative integers.

    Rows are either tabulated up front or produced lazily by a rate function;
    generated rows are memoized under a lock so models can be shared across
    threads.  States are 0, 1, 2, ... with no offset.
    """

    def __init__(self, *, rows: Optional[Sequence[RateRow]] = None,
                 rate_function: Optional[Callable[[int], RateRow]] = None,
                 declared_horizon: Optional[int] = None,
                 label: str = "single-birth"):
        if (rows is None) == (rate_function is None):
            raise StructureError("exactly one of rows / rate_function is required")
        self.label = label
        self.state_offset = 0
        if rows is not None:
            self.kind = "tabulated"
            rows = list(rows)
            if not rows:
                raise StructureError("a tabulated model needs at least one row")
            for i, row in enumerate(rows):
                _validate_row_placement(i, row)
            self._rows: dict[int, RateRow] = dict(enumerate(rows))
            self.horizon: Optional[int] = len(rows) - 1
        else:
            self.kind = "generated"
            self._fn = rate_function
            self._rows = {}
            self.horizon = declared_horizon
        self._lock = threading.Lock()

    def require_horizon(self, n: int) -> None:
        if self.horizon is not None and n > self.horizon:
            raise HorizonExceeded(f"state {n} is beyond the model horizon {self.horizon}")

    def row(self, i: int) -> RateRow:
        if i < 0:
            raise HorizonExceeded(f"negative state {i}")
        self.require_horizon(i)
        try:
            return self._rows[i]
        except KeyError:
            pass
        with self._lock:
            if i not in self._rows:
                row = self._fn(i)
                _validate_row_placement(i, row)
                self._rows[i] = row
            return self._rows[i]

    def up(self, i: int) -> float:
        return self.row(i).up

    def q(self, i: int) -> float:
        """Exit rate q_i of state i."""
        return self.row(i).total_rate

    def dense_down(self, n: int) -> np.ndarray:
        """Down rates of row n as a dense vector over states 0..n-1."""
        out = np.zeros(n)
        for j, r in self.row(n).down.items():
            out[j] = r
        return out

    def down_reaches_zero(self, upto: int) -> bool:
        """Whether every state <= upto can reach 0 through down jumps alone."""
        ok = [True] + [False] * upto
        for i in range(1, upto + 1):
            ok[i] = any(ok[j] for j in self.row(i).down)
        return all(ok)

    def irreducibility_warnings(self, upto: int) -> list[str]:
        warnings = []
        if not self.down_reaches_zero(upto):
            warnings.append(
                f"non-irreducible-down: some state <= {upto} cannot reach 0 via down rates"
            )
        if self.kind == "generated" and self.horizon is None:
            warnings.append("irreducibility beyond the inspected prefix is an unchecked hypothesis")
        return warnings


def _validate_row_placement(i: int, row: RateRow) -> None:
    for j in row.down:
        if j >= i:
            raise StructureError(
                f"row {i} has a rate at state {j}; only the up rate to {i + 1} "
                "and down rates to states below are allowed"
            )
        if j < 0:
            raise StructureError(f"row {i} has a rate at negative state {j}")


def build_tabulated(rows: Sequence[RateRow], label: str = "tabulated") -> SingleBirthModel:
    """Validate and wrap an explicit row table."""
    return SingleBirthModel(rows=rows, label=label)


def model_uniform_catastrophe(a: float, b: float, q01: float) -> SingleBirthModel:
    """Birth rate b*i with a uniform catastrophe rate a to every lower state.

    Row 0 gets the explicit rate ``q01`` instead of b*0 = 0 so the chain is
    irreducible.
    """
    if a <= 0 or b <= 0 or q01 <= 0:
        raise DomainError("uniform catastrophe parameters must be strictly positive")

    def fn(i: int) -> RateRow:
        if i == 0:
            return RateRow(up=q01)
        return RateRow(up=b * i, down={j: a for j in range(i)})

    return SingleBirthModel(rate_function=fn,
                            label=f"uniform_catastrophe(a={a}, b={b}, q01={q01})")


def model_constant_column(q_i0: Callable[[int], float], up: Callable[[int], float],
                          label: str = "constant_column") -> SingleBirthModel:
    """Only two rates per row: up to i+1 and straight back to 0."""

    def fn(i: int) -> RateRow:
        u = float(up(i))
        if u <= 0:
            raise DomainError(f"up rate at {i} must be positive, got {u!r}")
        if i == 0:
            return RateRow(up=u)
        r0 = float(q_i0(i))
        if r0 <= 0:
            raise DomainError(f"return rate at {i} must be positive, got {r0!r}")
        return RateRow(up=u, down={0: r0})

    return SingleBirthModel(rate_function=fn, label=label)


def model_birth_death(up: Callable[[int], float], down: Callable[[int], float],
                      label: str = "birth_death") -> SingleBirthModel:
    """Classical nearest-neighbour special case."""

    def fn(i: int) -> RateRow:
        u = float(up(i))
        if u <= 0:
            raise DomainError(f"up rate at {i} must be positive, got {u!r}")
        if i == 0:
            return RateRow(up=u)
        d = float(down(i))
        if d <= 0:
            raise DomainError(f"down rate at {i} must be positive, got {d!r}")
        return RateRow(up=u, down={i - 1: d})

    return SingleBirthModel(rate_function=fn, label=label)


@dataclass(frozen=True)
class SingleDeathRow:
    """Row of a single death matrix: one down rate plus sparse up rates."""

    down: float
    ups: Mapping[int, float] = field(default_factory=dict)


class SingleDeathModel:
    """Downwardly skip-free matrix on the finite space {0..N}, with killing."""

    def __init__(self, rows: Sequence[SingleDeathRow], c: Sequence[float]):
        rows = list(rows)
        n_states = len(rows)
        if n_states < 2:
            raise StructureError("a single death model needs at least two states")
        if len(c) != n_states:
            raise StructureError("killing vector length must match the state count")
        for i, row in enumerate(rows):
            if i == 0:
                if row.down != 0.0:
                    raise StructureError("state 0 has no down rate")
            else:
                if not (row.down > 0 and math.isfinite(row.down)):
                    raise StructureError(f"row {i} needs a strictly positive down rate")
            for j, r in row.ups.items():
                if j <= i or j >= n_states:
                    raise StructureError(f"row {i} has an up rate at invalid state {j}")
                _check_rate(r, f"up rate {i}->{j}")
        self.rows = rows
        self.c = np.asarray(c, dtype=float)
        self.N = n_states - 1

    def q(self, i: int) -> float:
        row = self.rows[i]
        return row.down + sum(row.ups.values())

    def dense_up(self, n: int) -> np.ndarray:
        """Up rates of row n as a dense vector over states 0..N (zeros below n+1)."""
        out = np.zeros(self.N + 1)
        for j, r in self.rows[n].ups.items():
            out[j] = r
        return out
