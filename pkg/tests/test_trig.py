"""Torus trig polynomials: canonical storage, algebra, calculus, evaluation."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specflow import ConfigError, TrigPoly

coef = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
mode = st.integers(-3, 3)


def random_poly(draw_terms):
    return TrigPoly([((kx, ky), (c, s)) for kx, ky, c, s in draw_terms])


poly_strategy = st.lists(
    st.tuples(mode, mode, coef, coef), min_size=0, max_size=4
).map(random_poly)


def grid_eval(p: TrigPoly, n: int = 7):
    xs = np.linspace(0, 1, n, endpoint=False)
    ys = np.linspace(0, 1, n, endpoint=False) + 0.013
    return p(xs[:, None], ys[None, :])


class TestCanonicalStorage:
    def test_negative_modes_fold_onto_representatives(self):
        a = TrigPoly({(1, -2): (0.5, 0.3)})
        b = TrigPoly({(-1, 2): (0.5, -0.3)})
        assert a == b
        assert list(a.terms) == [(1, -2)]

    def test_zero_mode_sine_dropped(self):
        p = TrigPoly({(0, 0): (1.5, 7.0)})
        assert p.terms == {(0, 0): (1.5, 0.0)}
        assert p.mean == 1.5

    def test_cancelling_terms_vanish(self):
        p = TrigPoly([((1, 0), (0.5, 0.0)), ((1, 0), (-0.5, 0.0))])
        assert p.is_zero()
        assert p.terms == {}

    def test_coincident_terms_accumulate(self):
        p = TrigPoly([((2, 1), (0.25, 0.5)), ((-2, -1), (0.25, 0.5))])
        assert p.terms == {(2, 1): (0.5, 0.0)}

    def test_evaluation_respects_folding(self):
        a = TrigPoly({(-1, 2): (0.7, 0.4)})
        xs, ys = 0.31, 0.87
        direct = 0.7 * math.cos(2 * math.pi * (-xs + 2 * ys)) + 0.4 * math.sin(
            2 * math.pi * (-xs + 2 * ys)
        )
        assert a(xs, ys) == pytest.approx(direct, abs=1e-14)


class TestStructure:
    def test_constant_and_zero_predicates(self):
        assert TrigPoly.zero().is_zero()
        assert TrigPoly.constant(2.0).is_constant()
        assert not TrigPoly.constant(2.0).is_zero()
        assert not TrigPoly.term(1, 0, cos=0.1).is_constant()
        assert TrigPoly.term(1, 0, cos=1e-12).is_constant(tol=1e-10)

    def test_degree(self):
        assert TrigPoly.zero().degree() == 0
        assert TrigPoly.term(2, -3, sin=1.0).degree() == 5
        assert TrigPoly.constant(4).degree() == 0

    def test_mean_is_torus_integral(self):
        p = TrigPoly({(0, 0): (0.8, 0.0), (1, 1): (5.0, -2.0)})
        xs = np.linspace(0, 1, 256, endpoint=False)
        quad = float(np.mean(p(xs[:, None], xs[None, :])))
        assert quad == pytest.approx(p.mean, abs=1e-12)

    def test_config_round_trip(self):
        src = [{"kx": 1, "ky": 0, "cos": 0.5}, {"kx": 0, "ky": 2, "sin": -0.25}]
        p = TrigPoly.from_config(src)
        assert TrigPoly.from_config(p.to_config()) == p

    def test_bad_config_rejected(self):
        with pytest.raises(ConfigError):
            TrigPoly.from_config([{"kx": 1}])
        with pytest.raises(ConfigError):
            TrigPoly.from_config([{"kx": "a", "ky": 0}])


class TestAlgebra:
    @given(p=poly_strategy, q=poly_strategy)
    @settings(max_examples=30)
    def test_sum_evaluates_pointwise(self, p, q):
        assert np.allclose(grid_eval(p + q), grid_eval(p) + grid_eval(q), atol=1e-10)

    @given(p=poly_strategy, q=poly_strategy)
    @settings(max_examples=30)
    def test_product_evaluates_pointwise(self, p, q):
        assert np.allclose(grid_eval(p * q), grid_eval(p) * grid_eval(q), atol=1e-9)

    @given(p=poly_strategy)
    @settings(max_examples=30)
    def test_neg_sub_scale(self, p):
        assert (p - p).is_zero(tol=1e-12)
        assert np.allclose(grid_eval(-p), -grid_eval(p), atol=1e-12)
        assert np.allclose(grid_eval(2.5 * p), 2.5 * grid_eval(p), atol=1e-12)

    def test_product_identity(self):
        # 2 cos^2 t = 1 + cos 2t, as coefficients
        p = TrigPoly.term(1, 0, cos=1.0)
        sq = p * p
        assert sq.terms[(0, 0)] == pytest.approx((0.5, 0.0))
        assert sq.terms[(2, 0)][0] == pytest.approx(0.5)

    def test_product_mean_uses_parseval(self):
        p = TrigPoly({(1, 2): (0.6, -0.8), (0, 0): (0.3, 0.0)})
        sq = p * p
        # mean of p^2 = c0^2 + sum (c^2 + s^2)/2
        assert sq.mean == pytest.approx(0.3**2 + (0.6**2 + 0.8**2) / 2)


class TestCalculus:
    def test_derivative_closed_form(self):
        p = TrigPoly.term(3, -1, cos=2.0, sin=0.5)
        dx = p.derivative(0)
        w = 2 * math.pi * 3
        assert dx.terms[(3, -1)] == pytest.approx((w * 0.5, -w * 2.0))

    @given(p=poly_strategy)
    @settings(max_examples=25)
    def test_derivative_matches_finite_differences(self, p):
        h = 1e-6
        xs = np.array([0.123, 0.45, 0.81])
        ys = np.array([0.27, 0.64, 0.09])
        for axis in (0, 1):
            d = p.derivative(axis)
            dx, dy = (h, 0.0) if axis == 0 else (0.0, h)
            num = (p(xs + dx, ys + dy) - p(xs - dx, ys - dy)) / (2 * h)
            assert np.allclose(d(xs, ys), num, atol=1e-4 * max(1.0, p.sup_bound()))

    def test_derivative_axis_checked(self):
        with pytest.raises(ConfigError):
            TrigPoly.constant(1.0).derivative(2)

    def test_integer_shift_is_structural_identity(self):
        p = TrigPoly({(1, 2): (0.3, -0.7), (2, 0): (0.1, 0.0)})
        assert p.shift(3, -2) is p
        assert p.shift(0, 0) is p

    def test_fractional_shift_evaluates_correctly(self):
        p = TrigPoly({(1, 2): (0.3, -0.7), (0, 1): (0.0, 0.4)})
        q = p.shift(0.37, -0.21)
        xs = np.array([0.0, 0.5, 0.93])
        ys = np.array([0.11, 0.77, 0.02])
        assert np.allclose(q(xs, ys), p(xs + 0.37, ys - 0.21), atol=1e-12)


class TestEvaluation:
    @given(p=poly_strategy)
    @settings(max_examples=25)
    def test_compiled_path_matches_generic(self, p):
        xs = np.linspace(0, 1, 11)
        ys = np.linspace(0, 1, 11) * 0.7 + 0.1
        assert np.allclose(p.eval_compiled(xs, ys), p(xs, ys), atol=1e-12)

    def test_scalar_call_returns_float(self):
        p = TrigPoly.term(1, 1, cos=1.0)
        out = p(0.25, 0.25)
        assert isinstance(out, float)

    def test_periodicity(self):
        p = TrigPoly({(2, -3): (0.4, 0.9), (1, 0): (0.0, -0.2)})
        assert p(0.3, 0.6) == pytest.approx(p(1.3, -0.4), abs=1e-12)

    @given(p=poly_strategy)
    @settings(max_examples=25)
    def test_bounds_contain_the_range(self, p):
        vals = grid_eval(p, n=17)
        assert float(np.max(np.abs(vals))) <= p.sup_bound() + 1e-9
        assert float(np.min(vals)) >= p.lower_bound() - 1e-9
