"""Special flow engine: exact group law, measure, sampling, rigidity tables."""

import math
from fractions import Fraction

import numpy as np
import pytest

from specflow import (
    ConfigError,
    PreconditionError,
    correlation,
    dk_audit,
    flow_map,
    flow_map_batch,
    flow_point,
    full_space,
    phase_measure,
    qn_distribution,
    rect,
    sample_phase_space,
)
from specflow.flowlab import _member_float, _rects_float, rect_contains, rects_from_config


@pytest.fixture(scope="module")
def unit_rect(f1):
    # the left roof cell up to height 1: a comfortable under-roof rectangle
    return rect(f1.basis, 0, Fraction(1, 3), 0, 1)


class TestFlowPoint:
    def test_normalizes_and_validates(self, f1):
        pt = flow_point(f1, "10/7", "1/2")
        assert pt.x == f1.basis.rational(Fraction(3, 7))
        assert pt.s == f1.basis.rational(Fraction(1, 2))

    def test_rejects_heights_outside_fiber(self, f1):
        with pytest.raises(PreconditionError):
            flow_point(f1, "1/7", "-1/10")
        with pytest.raises(PreconditionError):
            flow_point(f1, "1/2", 1)  # f = 1 on [1/3, 1): s = f(x) is out

    def test_default_height_is_zero(self, f1):
        assert flow_point(f1, "1/7").s.is_zero()


class TestFlowMapExact:
    def test_time_zero_is_identity(self, f1):
        z = flow_point(f1, "1/7", "1/2")
        assert flow_map(f1, z, 0) == z

    def test_climbing_within_one_fiber(self, f1):
        z = flow_point(f1, "1/7")
        w = flow_map(f1, z, "1/2")
        assert w.x == z.x
        assert w.s == f1.basis.rational(Fraction(1, 2))

    def test_crossing_exactly_one_roof(self, f1):
        bs = f1.basis
        z = flow_point(f1, "1/7")
        w = flow_map(f1, z, f1.value_at(z.x))  # t = f(x): land on the next base point
        assert w.x == (z.x + bs.alpha).mod1()
        assert w.s.is_zero()

    def test_negative_time_crossing(self, f1):
        bs = f1.basis
        z = flow_point(f1, "1/7")
        prev = (z.x - bs.alpha).mod1()
        w = flow_map(f1, z, -f1.value_at(prev))
        assert w.x == prev
        assert w.s.is_zero()

    def test_group_law_exact(self, f1):
        bs = f1.basis
        z = flow_point(f1, "1/7", "1/2")
        for t_text, u_text in (("1/3", "7/5"), ("-8/3", "5/2"), ("13/2", "-9/4")):
            t, u = bs.parse(t_text), bs.parse(u_text)
            assert flow_map(f1, z, t + u) == flow_map(f1, flow_map(f1, z, u), t)

    def test_symbolic_inverse_is_exact(self, f1):
        bs = f1.basis
        z = flow_point(f1, "2/5", "3/4")
        for t_text in ("1/3", "17/4", "-21/5"):
            t = bs.parse(t_text)
            back = flow_map(f1, flow_map(f1, z, t), -t)
            assert back == z
        # symbolic times work too
        t = bs.alpha + bs.unit("b")
        assert flow_map(f1, flow_map(f1, z, t), -t) == z

    def test_float_time_rejected(self, f1):
        z = flow_point(f1, "1/7")
        with pytest.raises(PreconditionError):
            flow_map(f1, z, 0.5)


class TestFlowMapBatch:
    def test_agrees_with_exact_route(self, f1):
        bs = f1.basis
        xs = np.array([0.137, 0.41, 0.77])
        ss = np.array([0.2, 0.9, 0.1])
        fx, fs = flow_map_batch(f1, xs, ss, 0.8)
        for k in range(3):
            z = flow_point(
                f1,
                bs.rational(Fraction(xs[k]).limit_denominator(10**6)),
                bs.rational(Fraction(ss[k]).limit_denominator(10**6)),
            )
            w = flow_map(f1, z, bs.rational(Fraction(4, 5)))
            assert fx[k] == pytest.approx(float(w.x), abs=1e-9)
            assert fs[k] == pytest.approx(float(w.s), abs=1e-9)

    def test_long_flows_stay_in_phase_space(self, f1):
        rng = np.random.default_rng(5)
        xs = rng.random(500)
        ss = rng.random(500) * 0.99  # min roof value is 1
        for t in (25.7, -18.3):
            fx, fs = flow_map_batch(f1, xs, ss, t)
            roof_vals = np.where(fx < 1 / 3, float(f1.max_value), 1.0)
            assert np.all(fx >= 0) and np.all(fx < 1)
            assert np.all(fs >= 0) and np.all(fs < roof_vals)

    def test_inverse_round_trip_floats(self, f1):
        rng = np.random.default_rng(11)
        xs = rng.random(300)
        ss = rng.random(300) * 0.9 + 0.01
        fx, fs = flow_map_batch(f1, xs, ss, 7.29)
        bx, bss = flow_map_batch(f1, fx, fs, -7.29)
        assert np.allclose(bx, xs, atol=1e-9)
        assert np.allclose(bss, ss, atol=1e-9)


class TestRectanglesAndMeasure:
    def test_rect_validation(self, basis):
        with pytest.raises(ConfigError):
            rect(basis, Fraction(-1, 10), Fraction(1, 2), 0, 1)
        with pytest.raises(ConfigError):
            rect(basis, 0, Fraction(11, 10), 0, 1)
        with pytest.raises(ConfigError):
            rect(basis, Fraction(1, 2), Fraction(1, 2), 0, 1)
        with pytest.raises(ConfigError):
            rect(basis, 0, 1, Fraction(1, 2), Fraction(1, 3))

    def test_rects_from_config_shapes(self, basis):
        got = rects_from_config(
            basis, [{"x": [0, "1/2"], "s": [0, 1]}, ["1/2", 1, 0, "1/2"]]
        )
        assert len(got) == 2
        assert got[0].x1 == basis.rational(Fraction(1, 2))
        assert got[1].s1 == basis.rational(Fraction(1, 2))

    def test_full_space_has_measure_one_exactly(self, f1):
        assert phase_measure(f1, full_space(f1)).is_one()

    def test_exact_measure_of_a_cell_slab(self, f1, unit_rect):
        m = phase_measure(f1, [unit_rect])
        assert m.area == f1.basis.rational(Fraction(1, 3))
        assert m.total == f1.integral
        assert float(m) == pytest.approx((1 / 3) / float(f1.integral))

    def test_protruding_rectangle_rejected(self, f1):
        tall = rect(f1.basis, Fraction(1, 5), Fraction(2, 5), 0, 2)
        with pytest.raises(PreconditionError):
            phase_measure(f1, [tall])

    def test_overlapping_union_rejected(self, f1):
        a = rect(f1.basis, 0, Fraction(1, 2), 0, 1)
        b = rect(f1.basis, Fraction(1, 4), Fraction(3, 4), 0, 1)
        with pytest.raises(PreconditionError):
            phase_measure(f1, [a, b])

    def test_rect_contains_half_open(self, f1, unit_rect):
        assert rect_contains(unit_rect, flow_point(f1, 0, 0))
        assert not rect_contains(unit_rect, flow_point(f1, "1/3", 0))
        assert not rect_contains(unit_rect, flow_point(f1, "1/7", 1))


class TestSampling:
    def test_seeded_determinism(self, f1):
        xs1, ss1 = sample_phase_space(f1, 5000, seed=42)
        xs2, ss2 = sample_phase_space(f1, 5000, seed=42)
        xs3, _ = sample_phase_space(f1, 5000, seed=43)
        assert np.array_equal(xs1, xs2) and np.array_equal(ss1, ss2)
        assert not np.array_equal(xs1, xs3)

    def test_samples_live_under_the_roof(self, f1):
        xs, ss = sample_phase_space(f1, 20_000, seed=7)
        assert xs.shape == (20_000,)
        roof_vals = np.where(xs < 1 / 3, float(f1.max_value), 1.0)
        assert np.all(ss >= 0) and np.all(ss < roof_vals)

    def test_uniformity_sanity(self, f1, unit_rect):
        xs, ss = sample_phase_space(f1, 100_000, seed=3)
        frac = float(_member_float(xs, ss, _rects_float([unit_rect])).mean())
        mu = float(phase_measure(f1, [unit_rect]))
        assert abs(frac - mu) < 3 * 1.96 * math.sqrt(mu * (1 - mu) / 100_000)


class TestMeasurePreservation:
    def test_pushforward_keeps_rect_mass(self, f1, unit_rect):
        mu = float(phase_measure(f1, [unit_rect]))
        arr = _rects_float([unit_rect])
        xs, ss = sample_phase_space(f1, 100_000, seed=17)
        cf = float(f1.integral)
        for t in (0.3, cf, f1.basis.ctx.q(5) * cf):
            fx, fs = flow_map_batch(f1, xs, ss, t)
            frac = float(_member_float(fx, fs, arr).mean())
            radius = 1.96 * math.sqrt(mu * (1 - mu) / 100_000)
            assert abs(frac - mu) <= 3 * radius


class TestCorrelation:
    def test_deterministic_given_seed(self, f1, unit_rect):
        a = correlation(f1, [unit_rect], [unit_rect], 0.3, 2000, seed=9)
        b = correlation(f1, [unit_rect], [unit_rect], 0.3, 2000, seed=9)
        assert a == b

    def test_time_zero_recovers_measure(self, f1, unit_rect):
        est = correlation(f1, [unit_rect], [unit_rect], 0.0, 50_000, seed=21)
        mu = float(phase_measure(f1, [unit_rect]))
        assert abs(est.estimate - mu) <= 3 * est.radius

    def test_intersection_bounded_by_measure(self, f1, unit_rect):
        mu = float(phase_measure(f1, [unit_rect]))
        for t in (0.3, float(f1.integral), 2.7):
            est = correlation(f1, [unit_rect], [unit_rect], t, 20_000, seed=31)
            assert est.estimate <= mu + est.radius
            assert 0 <= est.hits <= est.n_samples

    def test_small_sample_rejected(self, f1, unit_rect):
        with pytest.raises(PreconditionError):
            correlation(f1, [unit_rect], [unit_rect], 0.3, 999, seed=1)


class TestQnDistribution:
    def test_exact_atoms_against_birkhoff_oracle(self, f1, golden):
        grid = 2000
        rep = qn_distribution(f1, 6, grid_size=grid)
        assert rep.qn == golden.q(6) == 13
        assert rep.mass_total == 1
        assert rep.u == max(a.mass for a in rep.atoms)
        bs = f1.basis
        shift = f1.integral.scale(-rep.qn)
        atom_coords = {a.value.coords for a in rep.atoms}
        for k in range(0, grid, 157):
            dev = f1.birkhoff(bs.rational(Fraction(k, grid)), rep.qn) + shift
            assert dev.coords in atom_coords

    def test_heaviest_atom_is_t0(self, f1):
        rep = qn_distribution(f1, 5, grid_size=1000)
        best = max(rep.atoms, key=lambda a: a.mass)
        assert rep.t0 == best.value_float
        assert rep.u == best.mass

    def test_atoms_stay_in_jump_combination_set(self, f1):
        # the containment is verified internally; a clean run for n up to 12
        # is the invariant
        for n in (10, 12):
            rep = qn_distribution(f1, n, grid_size=1000)
            assert len(rep.atoms) <= rep.d_set_size
            assert rep.mass_total == 1

    def test_small_grid_rejected(self, f1):
        with pytest.raises(PreconditionError):
            qn_distribution(f1, 5, grid_size=500)


class TestDKAudit:
    def test_rows_certified_and_float_consistent(self, f1):
        rows = dk_audit(f1, 8, grid_size=1500)
        assert [r.n for r in rows] == list(range(1, 9))
        var = float(f1.variation)
        for r in rows:
            assert r.max_deviation_float <= var + 1e-12
            assert r.variation_float == pytest.approx(var)
            assert r.float_consistent
            assert r.max_deviation_float == pytest.approx(r.float_path_max, abs=1e-9)
            assert r.unique_vectors >= 1

    def test_exact_max_matches_direct_scan(self, f1):
        grid = 1000
        rows = dk_audit(f1, 4, grid_size=grid)
        bs = f1.basis
        qn = rows[3].qn
        shift = f1.integral.scale(-qn)
        worst = 0.0
        for k in range(grid):
            dev = f1.birkhoff(bs.rational(Fraction(k, grid)), qn) + shift
            worst = max(worst, abs(float(dev)))
        assert rows[3].max_deviation_float == pytest.approx(worst, abs=1e-9)
