import math

import numpy as np
import pytest

from singlebirth import (FirstHit, FirstReturnTo, RateRow, TimeHorizon,
                         build_tabulated, estimate_return_time_moment,
                         estimate_transform, model_birth_death,
                         model_constant_column, model_uniform_catastrophe,
                         simulate)
from singlebirth.errors import AllCapped, DomainError
from singlebirth.simulator import estimate_stop, jump_frequencies, make_rng

BD_DOWN = model_birth_death(lambda i: 1.0, lambda i: 2.0)


class TestSampling:
    def test_jump_frequencies_small_row(self):
        model = build_tabulated([RateRow(up=1.0),
                                 RateRow(up=1.0, down={0: 3.0})])
        freqs = jump_frequencies(model, 1, 200_000, rng_seed=2)
        # binomial SE at p=0.75 and 200k draws is about 0.001
        assert abs(freqs[0] - 0.75) <= 4 * 0.001
        assert abs(freqs[2] - 0.25) <= 4 * 0.001

    def test_jump_frequencies_alias_row(self):
        # 10 down targets plus the up jump: the alias-table path
        model = model_uniform_catastrophe(1.0, 1.0, 1.0)
        i = 10
        freqs = jump_frequencies(model, i, 200_000, rng_seed=3)
        row = model.row(i)
        expected = {i + 1: row.up / model.q(i)}
        expected.update({j: r / model.q(i) for j, r in row.down.items()})
        for j, p in expected.items():
            se = math.sqrt(p * (1 - p) / 200_000)
            assert abs(freqs.get(j, 0.0) - p) <= 4 * se

    def test_trajectory_records_path(self):
        traj = simulate(BD_DOWN, 3, FirstHit(0), rng_seed=5)
        assert traj.states[0] == 3
        assert traj.states[-1] == 0
        assert traj.terminal[0] == "hit"
        assert not traj.capped
        assert np.all(np.diff(traj.jump_times) > 0)

    def test_first_hit_at_start_is_instant(self):
        traj = simulate(BD_DOWN, 0, FirstHit(0), rng_seed=5)
        assert traj.terminal == ("hit", 0.0)


class TestEstimates:
    def test_mean_return_time_matches_closed_form(self):
        est = estimate_return_time_moment(BD_DOWN, 0, 1, 50_000, rng_seed=7)
        assert est.capped_fraction == 0.0
        assert abs(est.mean - 2.0) <= 4 * est.std_error

    def test_holding_time_mean(self):
        # from state 0 of a pure-exponential clock: hit 1 immediately after
        # one exponential(4) hold
        model = model_birth_death(lambda i: 4.0, lambda i: 1.0)
        est = estimate_stop(model, 0, FirstHit(1), 50_000, rng_seed=9)
        assert abs(est.mean - 0.25) <= 4 * est.std_error

    def test_seed_determinism(self):
        a = estimate_return_time_moment(BD_DOWN, 0, 1, 5000, rng_seed=11)
        b = estimate_return_time_moment(BD_DOWN, 0, 1, 5000, rng_seed=11)
        c = estimate_return_time_moment(BD_DOWN, 0, 1, 5000, rng_seed=12)
        assert a.mean == b.mean and a.std_error == b.std_error
        assert a.mean != c.mean

    def test_worker_streams_differ(self):
        assert make_rng(1, 0).random() != make_rng(1, 1).random()

    def test_error_scales_with_samples(self):
        small = estimate_return_time_moment(BD_DOWN, 0, 1, 4000, rng_seed=13)
        large = estimate_return_time_moment(BD_DOWN, 0, 1, 16000, rng_seed=13)
        ratio = large.std_error / small.std_error
        assert 0.3 <= ratio <= 0.7    # expect about 1/2

    def test_validation(self):
        with pytest.raises(DomainError):
            estimate_return_time_moment(BD_DOWN, 0, 1, 0)
        with pytest.raises(DomainError):
            estimate_return_time_moment(BD_DOWN, 0, 0, 100)


class TestCaps:
    def test_all_capped(self):
        surge = model_birth_death(lambda i: 100.0, lambda i: 0.01)
        with pytest.raises(AllCapped):
            estimate_return_time_moment(surge, 5, 1, 20, rng_seed=3,
                                        level_cap=10)

    def test_capped_paths_counted_not_mixed(self):
        up = model_birth_death(lambda i: 2.0, lambda i: 1.0)
        est = estimate_return_time_moment(up, 1, 1, 2000, rng_seed=5,
                                          level_cap=30)
        assert 0.0 < est.capped_fraction < 1.0
        assert est.bias_warning

    def test_explosive_lifetime_bracket(self):
        model = model_constant_column(lambda i: 1.0, lambda i: float((i + 1) ** 2))
        est = estimate_transform(model, 0, -0.5, "lifetime", 2000, rng_seed=17,
                                 level_cap=500)
        assert est.bracket is not None
        assert est.bracket[0] == 0.0 and est.bracket[1] >= est.mean

    def test_time_horizon_stop(self):
        est = estimate_stop(BD_DOWN, 0, TimeHorizon(5.0), 500, rng_seed=19)
        assert est.samples == 500
        assert est.mean >= 0.0


class TestTransformEstimates:
    def test_laplace_return_cross_check(self):
        from singlebirth import laplace_return
        exact = laplace_return(BD_DOWN, 0.5, 500).values[0]
        est = estimate_transform(BD_DOWN, 0, -0.5, "return_time", 50_000,
                                 rng_seed=23)
        assert abs(est.mean - exact) <= 4 * est.std_error

    def test_unknown_target(self):
        with pytest.raises(DomainError):
            estimate_transform(BD_DOWN, 0, -0.5, "sojourn", 100)
