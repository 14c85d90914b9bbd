import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singlebirth import (CoefficientVector, PoissonProblem, SingleDeathModel,
                         SingleDeathRow, gamma_full, model_birth_death,
                         model_uniform_catastrophe, poisson_residual,
                         solve_poisson, solve_poisson_finite,
                         solve_poisson_single_death_finite, solve_triangular)
from singlebirth.errors import DegenerateBoundary
from singlebirth.poisson import (TriangularSystem, dense_omega_single_birth,
                                 dense_omega_single_death, gamma_alternative,
                                 gamma_table, solve_triangular_via_gamma)
from tests.conftest import make_random_model

ZERO = CoefficientVector.zero()


class TestTriangular:
    def test_hand_case(self):
        alpha = np.array([[0.0, 0.0], [2.0, 0.0]])
        system = TriangularSystem(alpha=alpha, f=np.array([1.0, 1.0]))
        assert np.allclose(solve_triangular(system), [1.0, 3.0])

    def test_beta_scaling(self):
        alpha = np.array([[0.0, 0.0], [2.0, 0.0]])
        system = TriangularSystem(alpha=alpha, f=np.array([1.0, 1.0]),
                                  beta=np.array([2.0, 4.0]))
        assert np.allclose(solve_triangular(system), [0.5, 0.5])

    def test_upper_entries_rejected(self):
        with pytest.raises(ValueError):
            TriangularSystem(alpha=np.array([[0.0, 1.0], [0.0, 0.0]]),
                             f=np.array([1.0, 1.0]))

    @given(st.integers(0, 2**31), st.integers(2, 15))
    @settings(max_examples=50, deadline=None)
    def test_gamma_route_matches_substitution(self, seed, n):
        rng = np.random.default_rng(seed)
        alpha = np.tril(rng.uniform(0.0, 1.0, (n, n)), k=-1)
        beta = rng.uniform(0.5, 2.0, n)
        f = rng.uniform(-1.0, 1.0, n)
        system = TriangularSystem(alpha=alpha, f=f, beta=beta)
        direct = solve_triangular(system)
        via = solve_triangular_via_gamma(system)
        assert np.allclose(via, direct, rtol=1e-10, atol=1e-12)

    @given(st.integers(0, 2**31), st.integers(2, 12))
    @settings(max_examples=50, deadline=None)
    def test_gamma_recursions_agree(self, seed, n):
        rng = np.random.default_rng(seed)
        alpha = np.tril(rng.uniform(0.0, 1.0, (n, n)), k=-1)
        beta = rng.uniform(0.5, 2.0, n)
        assert np.allclose(gamma_full(alpha, beta), gamma_alternative(alpha, beta),
                           rtol=1e-12, atol=1e-14)

    @given(st.integers(0, 2**31), st.integers(3, 12))
    @settings(max_examples=50, deadline=None)
    def test_gamma_comparison_inequality(self, seed, n):
        # gamma[n,j] >= gamma[n,i] gamma[i,j] for nonnegative coefficients
        rng = np.random.default_rng(seed)
        alpha = np.tril(rng.uniform(0.0, 1.0, (n, n)), k=-1)
        alpha[rng.uniform(size=alpha.shape) < 0.3] = 0.0
        alpha = np.tril(alpha, k=-1)
        beta = rng.uniform(0.5, 2.0, n)
        gamma = gamma_full(alpha, beta)
        for row in range(n):
            for i in range(row + 1):
                lhs = gamma[row, : i + 1]
                rhs = gamma[row, i] * gamma[i, : i + 1]
                assert np.all(lhs >= rhs - 1e-12 * np.maximum(1.0, rhs))

    def test_gamma_table_column(self):
        alpha = np.tril(np.full((5, 5), 0.5), k=-1)
        col = gamma_table(alpha, None, 1, 4)
        full = gamma_full(alpha)
        assert np.allclose(col, full[1:, 1])


class TestHalfLine:
    def test_residual_small_on_random_models(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            N = 40
            model = make_random_model(rng, N)
            cvals = -rng.uniform(0.0, 0.2, N + 1)
            fvals = rng.uniform(-1.0, 1.0, N + 1)
            c = CoefficientVector.from_function(lambda i, cv=cvals: float(cv[i]))
            sol = solve_poisson(PoissonProblem(model, c,
                                               lambda i, fv=fvals: float(fv[i]),
                                               0.3, N))
            assert sol.residual <= 1e-9

    def test_residual_detects_perturbation(self):
        N = 20
        model = model_birth_death(lambda i: 1.0, lambda i: 2.0)
        sol = solve_poisson(PoissonProblem(model, ZERO, lambda i: 1.0, 0.0, N))
        clean = poisson_residual(model, ZERO, lambda i: 1.0, sol.g, N)
        g_bad = sol.g.copy()
        g_bad[7] += 1e-3
        dirty = poisson_residual(model, ZERO, lambda i: 1.0, g_bad, N)
        assert dirty >= 1e-3 * model.up(7) * 0.5
        assert dirty > 100 * max(clean, 1e-15)

    def test_increments_reported(self):
        N = 10
        model = model_birth_death(lambda i: 1.0, lambda i: 2.0)
        sol = solve_poisson(PoissonProblem(model, ZERO, lambda i: 1.0, 2.0, N))
        assert np.allclose(np.diff(sol.g), sol.w)
        assert sol.g[0] == 2.0

    def test_overflow_keeps_scaled_values(self):
        model = model_birth_death(lambda i: 1.0, lambda i: 3.0)
        sol = solve_poisson(PoissonProblem(model, ZERO, lambda i: 1.0, 0.0, 1000))
        assert sol.overflow
        assert math.isnan(sol.residual)
        assert all(v.sign == 0 or math.isfinite(v.log_mag) for v in sol.g_scaled)

    def test_harmonic_profile_solves_killed_equation(self):
        from singlebirth import decay_profile
        lam, N = 0.5, 60
        model = model_uniform_catastrophe(1.0, 1.0, 1.0)
        prof = decay_profile(model, lam, 1.0, N)
        res = poisson_residual(model, CoefficientVector.constant(lam),
                               lambda i: 0.0, prof.g, N)
        # the profile grows geometrically; the residual is roundoff on its scale
        assert res <= 1e-11 * float(np.max(np.abs(prof.g)))


def _random_single_death(rng, N):
    rows = [SingleDeathRow(down=0.0, ups={j: float(rng.uniform(0.05, 0.3))
                                          for j in range(1, N + 1) if rng.random() < 0.4})]
    for i in range(1, N + 1):
        ups = {j: float(rng.uniform(0.02, 0.2))
               for j in range(i + 1, N + 1) if rng.random() < 0.3}
        rows.append(SingleDeathRow(down=float(rng.uniform(1.0, 2.0)), ups=ups))
    return SingleDeathModel(rows, -rng.uniform(0.05, 0.5, N + 1))


class TestFiniteState:
    def test_matches_dense(self):
        rng = np.random.default_rng(29)
        for _ in range(20):
            N = int(rng.integers(3, 15))
            model = make_random_model(rng, N)
            cvals = -rng.uniform(0.05, 0.5, N + 1)
            fvals = rng.uniform(-1.0, 1.0, N + 1)
            c = CoefficientVector.from_function(lambda i, cv=cvals: float(cv[i]))
            sol = solve_poisson_finite(model, c,
                                       lambda i, fv=fvals: float(fv[i]), N)
            dense = np.linalg.solve(dense_omega_single_birth(model, c, N), fvals)
            assert sol.status == "determined"
            assert sol.boundary_ok
            assert np.allclose(sol.g, dense, rtol=1e-9, atol=1e-11)

    def test_zero_rhs_gives_zero(self):
        rng = np.random.default_rng(31)
        model = make_random_model(rng, 8)
        c = CoefficientVector.constant(-0.3)
        sol = solve_poisson_finite(model, c, lambda i: 0.0, 8)
        assert np.allclose(sol.g, 0.0, atol=1e-12)

    def test_underdetermined_without_killing(self):
        model = model_birth_death(lambda i: 1.0, lambda i: 2.0)
        sol = solve_poisson_finite(model, ZERO, lambda i: 0.0, 6, g0=1.5)
        assert sol.status == "underdetermined"
        # the kernel of the conservative generator is the constants
        assert np.allclose(sol.g, 1.5)

    def test_degenerate_boundary(self):
        model = model_birth_death(lambda i: 1.0, lambda i: 2.0)
        with pytest.raises(DegenerateBoundary):
            solve_poisson_finite(model, ZERO, lambda i: 1.0, 6)

    def test_single_death_matches_dense(self):
        rng = np.random.default_rng(37)
        for _ in range(20):
            N = int(rng.integers(3, 15))
            sd = _random_single_death(rng, N)
            fvals = rng.uniform(-1.0, 1.0, N + 1)
            sol = solve_poisson_single_death_finite(sd, lambda i, fv=fvals: float(fv[i]))
            dense = np.linalg.solve(dense_omega_single_death(sd), fvals)
            assert sol.status == "determined"
            assert np.allclose(sol.g, dense, rtol=1e-9, atol=1e-11)

    def test_single_death_underdetermined(self):
        sd = SingleDeathModel([SingleDeathRow(down=0.0, ups={1: 1.0}),
                               SingleDeathRow(down=2.0)], c=[0.0, 0.0])
        sol = solve_poisson_single_death_finite(sd, lambda i: 0.0, gN=0.7)
        assert sol.status == "underdetermined"
        assert np.allclose(sol.g, 0.7)
