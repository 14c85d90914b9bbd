"""Triangular linear recursions and the Poisson equation solver.

The central identity: writing w_k = g_{k+1} - g_k, the equation (Q + c)g = f
turns into a forward triangular recursion for w whose coefficients are the
tilted row prefix sums.  Solving that recursion and accumulating w reproduces
the explicit representation of g; substituting g back row by row gives an
independent residual check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import scaled
from .errors import DegenerateBoundary
from .model import SingleBirthModel, SingleDeathModel
from .scaled import ScaledReal, sl_add
from .sequences import CoefficientVector, forward_inhomogeneous, partial_row_sums


# ---------------------------------------------------------------------------
# generic triangular systems


@dataclass(frozen=True)
class TriangularSystem:
    """g_n = (sum_{k<n} alpha[n,k] g_k + f_n) / beta_n with strictly lower alpha."""

    alpha: np.ndarray
    f: np.ndarray
    beta: Optional[np.ndarray] = None

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if alpha.shape != (len(f), len(f)):
            raise ValueError("alpha must be square and match f")
        if np.any(np.triu(alpha) != 0.0):
            raise ValueError("alpha must be strictly lower triangular")
        beta = self.beta
        if beta is not None:
            beta = np.asarray(beta, dtype=float)
            if np.any(beta == 0.0):
                raise ValueError("beta entries must be nonzero")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "beta", beta)

    @property
    def size(self) -> int:
        return len(self.f)


def solve_triangular(system: TriangularSystem) -> np.ndarray:
    """Forward substitution."""
    n = system.size
    beta = system.beta if system.beta is not None else np.ones(n)
    g = np.zeros(n)
    for i in range(n):
        g[i] = (system.alpha[i, :i] @ g[:i] + system.f[i]) / beta[i]
    return g


def solve_triangular_via_gamma(system: TriangularSystem) -> np.ndarray:
    """Same solution through the propagator table: g_n = sum_k gamma[n,k]/beta_k f_k."""
    n = system.size
    beta = system.beta if system.beta is not None else np.ones(n)
    gamma = gamma_full(system.alpha, beta)
    return gamma @ (system.f / beta)


def gamma_full(alpha: np.ndarray, beta: Optional[np.ndarray] = None) -> np.ndarray:
    """Propagator table: gamma[k,k] = 1, gamma[n,k] = (1/beta_n) sum_{k<=j<n} alpha[n,j] gamma[j,k]."""
    n = len(alpha)
    beta = beta if beta is not None else np.ones(n)
    gamma = np.eye(n)
    for i in range(n):
        for k in range(i):
            gamma[i, k] = alpha[i, k:i] @ gamma[k:i, k] / beta[i]
    return gamma


def gamma_table(alpha: np.ndarray, beta: Optional[np.ndarray], k: int, N: int) -> np.ndarray:
    """Column k of the propagator, entries n = k..N."""
    full = gamma_full(np.asarray(alpha, dtype=float)[: N + 1, : N + 1],
                      None if beta is None else np.asarray(beta, dtype=float)[: N + 1])
    return full[k:, k]


def gamma_alternative(alpha: np.ndarray, beta: Optional[np.ndarray] = None) -> np.ndarray:
    """Propagator via the dual recursion gamma[n,i] = sum_{i<k<=n} gamma[n,k]/beta_k alpha[k,i]."""
    n = len(alpha)
    beta = beta if beta is not None else np.ones(n)
    gamma = np.eye(n)
    for row in range(n):
        for i in range(row - 1, -1, -1):
            ks = np.arange(i + 1, row + 1)
            gamma[row, i] = np.sum(gamma[row, ks] / beta[ks] * alpha[ks, i])
    return gamma


# ---------------------------------------------------------------------------
# the Poisson equation on the half line


@dataclass(frozen=True)
class PoissonProblem:
    model: SingleBirthModel
    c: CoefficientVector
    f: Callable[[int], float]
    g0: float
    N: int


@dataclass
class PoissonSolution:
    g: np.ndarray               # doubles; +-inf where not representable
    residual: float             # max row residual over 0..N-1 (nan if overflowed)
    w: np.ndarray               # increments g_{k+1} - g_k
    overflow: bool = False
    g_scaled: list = field(default_factory=list, repr=False)


def solve_poisson(problem: PoissonProblem) -> PoissonSolution:
    model, c, N = problem.model, problem.c, problem.N
    ftilde = np.array([problem.f(j) - c(j) * problem.g0 for j in range(N)])
    h_s, h_l = scaled.from_floats(ftilde)
    if N > 0:
        w_s, w_l = forward_inhomogeneous(model, c, N - 1, h_s, h_l)
    else:
        w_s, w_l = np.zeros(0, dtype=np.int64), np.zeros(0)

    g_scaled = [ScaledReal.from_float(problem.g0) if problem.g0 != 0 else ScaledReal(0, scaled.NEG_INF)]
    acc = (g_scaled[0].sign, g_scaled[0].log_mag)
    for k in range(N):
        acc = sl_add(acc[0], acc[1], int(w_s[k]), float(w_l[k]))
        g_scaled.append(ScaledReal(*acc))

    g = np.array([v.to_float() for v in g_scaled])
    overflow = bool(np.any(~np.isfinite(g)))
    w = scaled.to_floats(w_s, w_l)
    residual = math.nan if overflow else poisson_residual(model, c, problem.f, g, N)
    return PoissonSolution(g=g, residual=residual, w=w, overflow=overflow, g_scaled=g_scaled)


def poisson_residual(model: SingleBirthModel, c: CoefficientVector,
                     f: Callable[[int], float], g: np.ndarray, N: int) -> float:
    """max_i |(Omega g)_i - f_i| over 0 <= i <= N-1, by direct substitution."""
    if len(g) < N + 1:
        raise ValueError("g must cover states 0..N")
    g = np.asarray(g, dtype=float)
    w = np.diff(g[: N + 1])
    worst = 0.0
    for i in range(N):
        qt = partial_row_sums(model, i) - c(i)
        omega = model.up(i) * w[i] - (qt @ w[:i] if i else 0.0) + c(i) * g[0]
        worst = max(worst, abs(omega - f(i)))
    return worst


# ---------------------------------------------------------------------------
# finite state space


@dataclass
class FiniteSolution:
    g: np.ndarray
    boundary_ok: bool
    g0: float                 # the anchor value actually used (g_N for single death)
    status: str               # "determined" | "checked" | "underdetermined"


def _affine_w(model: SingleBirthModel, c: CoefficientVector, f: Callable[[int], float],
              N: int) -> tuple[np.ndarray, np.ndarray]:
    """Increments w as an affine function of the anchor: w = wa + g0 * wb."""
    fa = np.array([f(j) for j in range(N)])
    fb = np.array([-c(j) for j in range(N)])
    wa = scaled.to_floats(*forward_inhomogeneous(model, c, N - 1, *scaled.from_floats(fa)))
    wb = scaled.to_floats(*forward_inhomogeneous(model, c, N - 1, *scaled.from_floats(fb)))
    return wa, wb


def solve_poisson_finite(model: SingleBirthModel, c: CoefficientVector,
                         f: Callable[[int], float], N: int,
                         g0: Optional[float] = None,
                         tol: float = 1e-9) -> FiniteSolution:
    """Poisson equation on {0..N}; the up rate of row N is ignored.

    The boundary row either determines the anchor g_0 (generic case), leaves it
    free (reported as "underdetermined"), or admits no solution at all.
    """
    wa, wb = _affine_w(model, c, f, N)
    qtN = partial_row_sums(model, N) - c(N)
    A = c(N) - qtN @ wb
    B = qtN @ wa + f(N)
    scale = 1.0 + abs(B) + float(np.max(np.abs(qtN), initial=0.0))
    if abs(A) > tol * scale:
        anchor = B / A
        status = "determined"
    elif abs(B) <= tol * scale:
        anchor = g0 if g0 is not None else 0.0
        status = "underdetermined"
    else:
        raise DegenerateBoundary(
            f"boundary row is inconsistent: 0 * g0 = {B!r} has no solution")
    w = wa + anchor * wb
    g = np.concatenate(([anchor], anchor + np.cumsum(w)))
    lhs = c(N) * anchor
    rhs = qtN @ w + f(N)
    boundary_ok = abs(lhs - rhs) <= tol * (1.0 + abs(lhs) + abs(rhs))
    return FiniteSolution(g=g, boundary_ok=boundary_ok, g0=anchor, status=status)


def solve_poisson_single_death_finite(sd: SingleDeathModel, f: Callable[[int], float],
                                      gN: Optional[float] = None,
                                      tol: float = 1e-9) -> FiniteSolution:
    """Dual solver: downward recursion anchored at the top state N."""
    N = sd.N

    def suffix_tilted(n: int) -> np.ndarray:
        # entry k (for k = n+1..N): total rate from n into {k..N}, minus c_n
        ups = sd.dense_up(n)
        suff = np.cumsum(ups[::-1])[::-1]
        return suff[n + 1:] - sd.c[n]

    def backward(ft: np.ndarray) -> np.ndarray:
        # w_i = (ft_i + sum_{k>i} qtilde_i^(k) w_k) / q_{i,i-1}, i = N..1
        w = np.zeros(N + 1)
        for i in range(N, 0, -1):
            qt = suffix_tilted(i)
            w[i] = (ft[i] + qt @ w[i + 1:]) / sd.rows[i].down
        return w[1:]

    fa = np.array([f(j) for j in range(N + 1)])
    fb = -sd.c
    wa = backward(fa)
    wb = backward(fb)
    qt0 = suffix_tilted(0)
    A = sd.c[0] - qt0 @ wb
    B = qt0 @ wa + f(0)
    scale = 1.0 + abs(B) + float(np.max(np.abs(qt0), initial=0.0))
    if abs(A) > tol * scale:
        anchor = B / A
        status = "determined"
    elif abs(B) <= tol * scale:
        anchor = gN if gN is not None else 0.0
        status = "underdetermined"
    else:
        raise DegenerateBoundary(
            f"boundary row is inconsistent: 0 * gN = {B!r} has no solution")
    w = wa + anchor * wb          # w_k = g_{k-1} - g_k, k = 1..N
    g = np.zeros(N + 1)
    g[N] = anchor
    for n in range(N - 1, -1, -1):
        g[n] = g[n + 1] + w[n]
    lhs = sd.c[0] * anchor
    rhs = qt0 @ w + f(0)
    boundary_ok = abs(lhs - rhs) <= tol * (1.0 + abs(lhs) + abs(rhs))
    return FiniteSolution(g=g, boundary_ok=boundary_ok, g0=anchor, status=status)


# ---------------------------------------------------------------------------
# dense oracles (used by tests and the reproduction suite)


def dense_omega_single_birth(model: SingleBirthModel, c: CoefficientVector, N: int) -> np.ndarray:
    """The (N+1)x(N+1) matrix of Q + diag(c), dropping the up rate of row N."""
    M = np.zeros((N + 1, N + 1))
    for i in range(N + 1):
        row = model.row(i)
        total = 0.0
        if i < N:
            M[i, i + 1] = row.up
            total += row.up
        for j, r in row.down.items():
            M[i, j] = r
            total += r
        M[i, i] = -total + c(i)
    return M


def dense_omega_single_death(sd: SingleDeathModel) -> np.ndarray:
    N = sd.N
    M = np.zeros((N + 1, N + 1))
    for i in range(N + 1):
        total = 0.0
        if i > 0:
            M[i, i - 1] = sd.rows[i].down
            total += sd.rows[i].down
        for j, r in sd.rows[i].ups.items():
            M[i, j] = r
            total += r
        M[i, i] = -total + sd.c[i]
    return M
