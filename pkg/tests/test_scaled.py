import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from singlebirth import ScaledReal
from singlebirth.errors import NumericOverflow
from singlebirth.scaled import (LOG_LIMIT, NEG_INF, from_floats, sl_add,
                                sl_dot, sl_sum, to_floats)

finite = st.floats(min_value=-1e12, max_value=1e12,
                   allow_nan=False, allow_infinity=False)
nonzeroish = finite.filter(lambda x: x == 0.0 or abs(x) > 1e-12)


def as_pair(x: float):
    v = ScaledReal.from_float(x)
    return v.sign, v.log_mag


def close12(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


class TestScalarRoundTrip:
    @given(nonzeroish)
    def test_round_trip(self, x):
        assert close12(ScaledReal.from_float(x).to_float(), x)

    def test_zero(self):
        v = ScaledReal.from_float(0.0)
        assert v.sign == 0 and v.to_float() == 0.0 and v.is_zero

    def test_nonfinite_rejected(self):
        with pytest.raises(NumericOverflow):
            ScaledReal.from_float(math.inf)


class TestArithmeticAgreesWithFloats:
    @given(nonzeroish, nonzeroish)
    def test_add(self, x, y):
        s, l = sl_add(*as_pair(x), *as_pair(y))
        # cancellation error is relative to the operands, not the result
        scale = max(1.0, abs(x), abs(y))
        assert abs(ScaledReal(s, l).to_float() - (x + y)) <= 1e-12 * scale

    @given(nonzeroish, nonzeroish)
    def test_mul(self, x, y):
        got = (ScaledReal.from_float(x) * ScaledReal.from_float(y)).to_float()
        assert close12(got, x * y)

    @given(nonzeroish, nonzeroish.filter(lambda y: y != 0.0))
    def test_div(self, x, y):
        got = (ScaledReal.from_float(x) / ScaledReal.from_float(y)).to_float()
        assert close12(got, x / y)

    @given(nonzeroish)
    def test_exact_cancellation(self, x):
        got = ScaledReal.from_float(x) - ScaledReal.from_float(x)
        assert got.sign == 0

    def test_div_by_zero(self):
        with pytest.raises(ZeroDivisionError):
            ScaledReal.from_float(1.0) / ScaledReal(0, NEG_INF)

    def test_overflow_guard(self):
        big = ScaledReal(1, 0.75 * LOG_LIMIT)
        with pytest.raises(NumericOverflow):
            big * big


class TestVectorHelpers:
    @given(st.lists(nonzeroish, min_size=0, max_size=30))
    @settings(max_examples=200)
    def test_sum(self, values):
        arr = np.asarray(values, dtype=float)
        s, l = sl_sum(*from_floats(arr))
        expect = float(arr.sum()) if len(arr) else 0.0
        got = float(ScaledReal(s, l).to_float())
        # cancellation can legitimately shrink the result; compare on the
        # scale of the inputs
        scale = max(1.0, float(np.max(np.abs(arr))) if len(arr) else 1.0)
        assert abs(got - expect) <= 1e-10 * scale

    @given(st.lists(st.tuples(finite, nonzeroish), min_size=1, max_size=20))
    @settings(max_examples=200)
    def test_dot(self, pairs):
        w = np.array([p[0] for p in pairs])
        x = np.array([p[1] for p in pairs])
        s, l = sl_dot(w, *from_floats(x))
        expect = float(w @ x)
        scale = max(1.0, float(np.max(np.abs(w * x))))
        assert abs(ScaledReal(s, l).to_float() - expect) <= 1e-10 * scale

    @given(st.lists(nonzeroish, min_size=1, max_size=20), nonzeroish)
    def test_dot_extra_term(self, values, extra):
        x = np.asarray(values, dtype=float)
        w = np.ones(len(x))
        s, l = sl_dot(w, *from_floats(x), extra=as_pair(extra))
        expect = float(x.sum()) + extra
        scale = max(1.0, float(np.max(np.abs(x))), abs(extra))
        assert abs(ScaledReal(s, l).to_float() - expect) <= 1e-10 * scale

    @given(st.lists(nonzeroish, min_size=0, max_size=30))
    def test_array_round_trip(self, values):
        arr = np.asarray(values, dtype=float)
        back = to_floats(*from_floats(arr))
        assert np.allclose(back, arr, rtol=1e-12, atol=0.0)

    def test_to_floats_overflow_saturates(self):
        signs = np.array([1, -1])
        logs = np.array([1e5, 1e5])
        out = to_floats(signs, logs)
        assert out[0] == math.inf and out[1] == -math.inf
