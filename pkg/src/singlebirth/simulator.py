"""Monte Carlo oracle: jump-chain simulation of the minimal process.

The embedded chain jumps from i with probabilities q_ik/q_i and holds for an
exponential time with rate q_i.  Estimates from sample paths cross-validate
the closed-form engine; capped paths are counted, never silently mixed into
uncapped estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import AllCapped, DomainError
from .model import SingleBirthModel

_BLOCK = 8192
_ALIAS_THRESHOLD = 8


# ---------------------------------------------------------------------------
# stop rules


@dataclass(frozen=True)
class FirstReturnTo:
    """Stop on arrival at ``target`` after at least one jump."""
    target: int


@dataclass(frozen=True)
class FirstHit:
    """Stop on arrival at ``target`` (immediately if already there)."""
    target: int


@dataclass(frozen=True)
class TimeHorizon:
    T: float


@dataclass(frozen=True)
class LevelCap:
    L: int


StopRule = Union[FirstReturnTo, FirstHit, TimeHorizon, LevelCap]


@dataclass
class Trajectory:
    states: list
    jump_times: list
    terminal: tuple      # ("hit", time) | ("horizon_capped",) | ("level_capped", level)

    @property
    def capped(self) -> bool:
        return self.terminal[0] != "hit"


@dataclass
class EstimateWithError:
    mean: float
    std_error: float
    samples: int
    capped_fraction: float
    bias_warning: bool = False
    bracket: Optional[tuple] = None

    def __post_init__(self):
        if self.capped_fraction > 0.0:
            self.bias_warning = True


# ---------------------------------------------------------------------------
# RNG plumbing: counter-based generator, block-drawn variates


def make_rng(seed: int, worker: int = 0) -> np.random.Generator:
    """Independent stream per (seed, worker) from a counter-based generator."""
    return np.random.Generator(np.random.Philox(key=[seed, worker]))


class _Blocks:
    """Serve scalar variates out of pre-drawn arrays."""

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._u = rng.random(_BLOCK)
        self._e = rng.standard_exponential(_BLOCK)
        self._iu = 0
        self._ie = 0

    def uniform(self) -> float:
        if self._iu == _BLOCK:
            self._u = self._rng.random(_BLOCK)
            self._iu = 0
        x = self._u[self._iu]
        self._iu += 1
        return x

    def exponential(self) -> float:
        if self._ie == _BLOCK:
            self._e = self._rng.standard_exponential(_BLOCK)
            self._ie = 0
        x = self._e[self._ie]
        self._ie += 1
        return x


class _AliasTable:
    """Walker alias sampling: O(1) per draw for dense rows."""

    def __init__(self, probs: np.ndarray):
        n = len(probs)
        scaled_p = probs * n
        self.prob = np.ones(n)
        self.alias = np.arange(n)
        small = [i for i in range(n) if scaled_p[i] < 1.0]
        large = [i for i in range(n) if scaled_p[i] >= 1.0]
        scaled_p = scaled_p.copy()
        while small and large:
            s = small.pop()
            l = large.pop()
            self.prob[s] = scaled_p[s]
            self.alias[s] = l
            scaled_p[l] -= 1.0 - scaled_p[s]
            (small if scaled_p[l] < 1.0 else large).append(l)
        self.n = n

    def sample(self, u1: float, u2: float) -> int:
        k = min(int(u1 * self.n), self.n - 1)
        return k if u2 < self.prob[k] else int(self.alias[k])


class _RowSampler:
    def __init__(self, model: SingleBirthModel, i: int):
        row = model.row(i)
        targets = [i + 1] + sorted(row.down)
        rates = np.array([row.up] + [row.down[j] for j in sorted(row.down)])
        self.q = float(rates.sum())
        self.targets = np.array(targets)
        self.probs = rates / self.q
        self.cum = np.cumsum(self.probs)
        self.alias = _AliasTable(self.probs) if len(targets) >= _ALIAS_THRESHOLD else None

    def next_state(self, blocks: _Blocks) -> int:
        if self.alias is not None:
            return int(self.targets[self.alias.sample(blocks.uniform(), blocks.uniform())])
        u = blocks.uniform()
        k = int(np.searchsorted(self.cum, u, side="right"))
        return int(self.targets[min(k, len(self.targets) - 1)])


class _ModelSampler:
    def __init__(self, model: SingleBirthModel):
        self.model = model
        self._rows: dict[int, _RowSampler] = {}

    def row(self, i: int) -> _RowSampler:
        try:
            return self._rows[i]
        except KeyError:
            rs = _RowSampler(self.model, i)
            self._rows[i] = rs
            return rs


# ---------------------------------------------------------------------------
# path generation


def _default_horizon(min_q: float) -> float:
    return 1e6 / min_q


def _run_path(sampler: _ModelSampler, blocks: _Blocks, start: int, stop: StopRule,
              time_horizon: Optional[float], level_cap: Optional[int],
              record: Optional[Trajectory] = None) -> tuple:
    """Returns ("hit", time), ("horizon_capped", state) or ("level_capped", state, time)."""
    if isinstance(stop, FirstHit) and start == stop.target:
        return ("hit", 0.0)
    i = start
    t = 0.0
    min_q = math.inf
    while True:
        rs = sampler.row(i)
        min_q = min(min_q, rs.q)
        horizon = time_horizon if time_horizon is not None else _default_horizon(min_q)
        if isinstance(stop, TimeHorizon):
            horizon = min(horizon, stop.T)
        t_next = t + blocks.exponential() / rs.q
        if t_next > horizon:
            return ("horizon_capped", i)
        t = t_next
        i = rs.next_state(blocks)
        if record is not None:
            record.states.append(i)
            record.jump_times.append(t)
        if isinstance(stop, (FirstReturnTo, FirstHit)) and i == stop.target:
            return ("hit", t)
        if (isinstance(stop, LevelCap) and i >= stop.L) or \
                (level_cap is not None and i >= level_cap):
            return ("level_capped", i, t)


def simulate(model: SingleBirthModel, start: int, stop: StopRule, rng_seed: int = 0,
             time_horizon: Optional[float] = None,
             level_cap: Optional[int] = None) -> Trajectory:
    """One trajectory of the minimal process; deterministic given the seed."""
    sampler = _ModelSampler(model)
    blocks = _Blocks(make_rng(rng_seed))
    traj = Trajectory(states=[start], jump_times=[0.0], terminal=())
    terminal = _run_path(sampler, blocks, start, stop, time_horizon, level_cap, record=traj)
    traj.terminal = terminal
    return traj


# ---------------------------------------------------------------------------
# estimators


def _moment_stats(values: np.ndarray) -> tuple[float, float]:
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else math.inf
    return mean, se


def estimate_return_time_moment(model: SingleBirthModel, n: int, ell: int,
                                samples: int, rng_seed: int = 0,
                                time_horizon: Optional[float] = None,
                                level_cap: Optional[int] = None) -> EstimateWithError:
    """Sample mean of (time to reach 0)^ell from state n; from 0 itself the
    return time after the first jump.  Capped paths are excluded and counted."""
    if samples <= 0:
        raise DomainError("need a positive sample count")
    if ell < 1:
        raise DomainError("moment order must be a positive integer")
    stop: StopRule = FirstReturnTo(0) if n == 0 else FirstHit(0)
    sampler = _ModelSampler(model)
    blocks = _Blocks(make_rng(rng_seed))
    times = np.empty(samples)
    good = 0
    capped = 0
    for _ in range(samples):
        terminal = _run_path(sampler, blocks, n, stop, time_horizon, level_cap)
        if terminal[0] == "hit":
            times[good] = terminal[1]
            good += 1
        else:
            capped += 1
    if good == 0:
        raise AllCapped("every path hit a cap before reaching the target")
    mean, se = _moment_stats(times[:good] ** ell)
    return EstimateWithError(mean=mean, std_error=se, samples=good,
                             capped_fraction=capped / samples)


def estimate_stop(model: SingleBirthModel, start: int, stop: StopRule,
                  samples: int, rng_seed: int = 0,
                  time_horizon: Optional[float] = None,
                  level_cap: Optional[int] = None) -> EstimateWithError:
    """Mean of the stop functional: the stop time for hit-type rules, the
    final state for a time-horizon rule."""
    if samples <= 0:
        raise DomainError("need a positive sample count")
    sampler = _ModelSampler(model)
    blocks = _Blocks(make_rng(rng_seed))
    vals = np.empty(samples)
    good = 0
    capped = 0
    for _ in range(samples):
        terminal = _run_path(sampler, blocks, start, stop, time_horizon, level_cap)
        if isinstance(stop, TimeHorizon):
            vals[good] = float(terminal[1])
            good += 1
        elif terminal[0] == "hit":
            vals[good] = terminal[1]
            good += 1
        else:
            capped += 1
    if good == 0:
        raise AllCapped("every path hit a cap before reaching the target")
    mean, se = _moment_stats(vals[:good])
    return EstimateWithError(mean=mean, std_error=se, samples=good,
                             capped_fraction=capped / samples)


def estimate_transform(model: SingleBirthModel, n: int, lam: float, of: str,
                       samples: int, rng_seed: int = 0,
                       time_horizon: Optional[float] = None,
                       level_cap: Optional[int] = None) -> EstimateWithError:
    """Sample mean of exp(lam * T) for T the return time or the (capped) life time.

    Life-time paths stop at a high level; the time already accrued is a lower
    bound for the explosion time, so for lam < 0 the estimate is an upper
    bracket (reported in ``bracket``).
    """
    if samples <= 0:
        raise DomainError("need a positive sample count")
    if of not in ("return_time", "lifetime"):
        raise DomainError(f"unknown transform target {of!r}")
    if of == "lifetime" and level_cap is None:
        level_cap = 2000
    if lam > 0:
        cap_t = time_horizon if time_horizon is not None else 1e6 / 1.0
        if lam * cap_t > scaled_log_max():
            raise DomainError("exp(lam * horizon) is not representable; tighten the caps")

    if of == "return_time":
        stop: StopRule = FirstReturnTo(0) if n == 0 else FirstHit(0)
    else:
        stop = LevelCap(level_cap)

    sampler = _ModelSampler(model)
    blocks = _Blocks(make_rng(rng_seed))
    vals = np.empty(samples)
    good = 0
    capped = 0
    for _ in range(samples):
        terminal = _run_path(sampler, blocks, n, stop, time_horizon,
                             None if of == "lifetime" else level_cap)
        if terminal[0] == "hit":
            vals[good] = math.exp(lam * terminal[1])
            good += 1
        elif of == "lifetime" and terminal[0] == "level_capped":
            # accrued time is a lower bound for the explosion time
            vals[good] = math.exp(lam * terminal[2])
            good += 1
        else:
            capped += 1
    if good == 0:
        raise AllCapped("every path hit a cap before producing a sample")
    mean, se = _moment_stats(vals[:good])
    bracket = None
    if of == "lifetime":
        bracket = (0.0, mean) if lam < 0 else (mean, math.inf)
    return EstimateWithError(mean=mean, std_error=se, samples=good,
                             capped_fraction=capped / samples, bracket=bracket)


def scaled_log_max() -> float:
    return math.log(np.finfo(float).max)


def jump_frequencies(model: SingleBirthModel, i: int, draws: int,
                     rng_seed: int = 0) -> dict[int, float]:
    """Empirical one-step distribution out of state i (sampler self-test)."""
    sampler = _ModelSampler(model)
    blocks = _Blocks(make_rng(rng_seed))
    rs = sampler.row(i)
    counts: dict[int, int] = {}
    for _ in range(draws):
        k = rs.next_state(blocks)
        counts[k] = counts.get(k, 0) + 1
    return {k: v / draws for k, v in counts.items()}
