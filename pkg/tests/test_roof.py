"""Piecewise-constant roofs: structure checks, Birkhoff sums, spectral criteria."""

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from specflow import (
    ConfigError,
    PreconditionError,
    RoofPC,
    check_p1,
    check_p2,
    coboundary_reduce,
    eigenvalue_criterion,
    equivalence_structure,
    remnien_identity,
    roof_from_config,
    weak_mixing_verdict,
)
from specflow.fixtures import roof_preset, sqrt3_basis


def abs_sym(x):
    return x if x.sign() >= 0 else -x


def brute_force_p1(f: RoofPC, box: int) -> bool:
    """P1 by raw enumeration: no admissible jump subset admits a nonzero
    integer relation with coefficients bounded by ``box``."""
    struct = equivalence_structure(f)
    choices = []
    for qc in struct.classes_q:
        choices.append([cl for cl in struct.classes_sim if cl[0] in qc])
    for pick in itertools.product(*choices):
        s_set = sorted(i for cl in pick for i in cl)
        for vec in itertools.product(range(-box, box + 1), repeat=len(s_set)):
            if all(v == 0 for v in vec):
                continue
            total = f.basis.zero
            for v, i in zip(vec, s_set):
                total = total + f.d[i].scale(v)
            if total.is_zero():
                return False
    return True


@pytest.fixture(scope="module")
def three_piece(basis):
    b = basis.unit("b")
    return RoofPC(
        xi=(basis.rational(0), basis.rational(Fraction(1, 4)), basis.rational(Fraction(1, 2))),
        d=(b, -b.scale(2), b),
        v1=basis.one,
    )


class TestConstruction:
    def test_example_roof_exact_quantities(self, f1):
        bs = f1.basis
        b = bs.unit("b")
        assert f1.p == 2
        assert f1.values == (bs.one + b, bs.one)
        assert f1.min_value == bs.one
        assert f1.max_value == bs.one + b
        assert f1.variation == b.scale(2)
        assert f1.jump_sum.is_zero()
        assert f1.integral == bs.one + b.scale(Fraction(1, 3))

    def test_rejects_short_or_mismatched(self, basis):
        b = basis.unit("b")
        with pytest.raises(ConfigError):
            RoofPC(xi=(basis.zero,), d=(b,), v1=basis.one)
        with pytest.raises(ConfigError):
            RoofPC(xi=(basis.zero, basis.alpha), d=(b,), v1=basis.one)

    def test_rejects_bad_points(self, basis):
        b = basis.unit("b")
        with pytest.raises(ConfigError):
            RoofPC(
                xi=(basis.zero, basis.rational(Fraction(3, 2))),
                d=(-b, b),
                v1=basis.one + b,
            )
        with pytest.raises(ConfigError):
            RoofPC(
                xi=(basis.rational(Fraction(1, 2)), basis.rational(Fraction(1, 3))),
                d=(-b, b),
                v1=basis.one + b,
            )

    def test_rejects_bad_jumps(self, basis):
        b = basis.unit("b")
        with pytest.raises(ConfigError):
            RoofPC(xi=(basis.zero, basis.alpha), d=(b, b), v1=basis.one)
        with pytest.raises(ConfigError):
            RoofPC(xi=(basis.zero, basis.alpha), d=(basis.zero, basis.zero), v1=basis.one)

    def test_rejects_nonpositive_values(self, basis):
        b = basis.unit("b")
        with pytest.raises(ConfigError):
            RoofPC(xi=(basis.zero, basis.alpha), d=(-b, b), v1=b)  # second value is 0

    def test_three_piece_values(self, three_piece, basis):
        b = basis.unit("b")
        assert three_piece.values == (basis.one, basis.one + b.scale(2), basis.one + b)
        assert three_piece.variation == b.scale(4)


class TestEvaluation:
    def test_right_continuity_at_jumps(self, f1):
        bs = f1.basis
        assert f1.value_at(bs.zero) == f1.values[0]
        assert f1.value_at(bs.rational(Fraction(1, 3))) == f1.values[1]
        assert f1.value_at(bs.rational(Fraction(1, 3) - Fraction(1, 10**9))) == f1.values[0]
        assert f1.value_at(bs.rational(Fraction(9, 10))) == f1.values[1]

    def test_periodicity(self, f1):
        bs = f1.basis
        x = bs.parse("1/7")
        assert f1.value_at(x) == f1.value_at(x + bs.rational(3))


class TestBirkhoff:
    def test_small_n_matches_pointwise_sum(self, f1):
        bs = f1.basis
        for text in ("0", "1/7", "alpha - 1/5"):
            x = bs.parse(text)
            acc = bs.zero
            for n in range(30):
                assert f1.birkhoff(x, n) == acc
                acc = acc + f1.value_at(x + bs.linear(0, n))

    def test_zero_and_negative_convention(self, f1):
        bs = f1.basis
        x = bs.parse("2/7")
        assert f1.birkhoff(x, 0).is_zero()
        for m in (1, 7, 40):
            lhs = f1.birkhoff(x, -m)
            rhs = -f1.birkhoff(x - bs.linear(0, m), m)
            assert (lhs - rhs).is_zero()

    def test_cocycle_identity_large(self, f1):
        bs = f1.basis
        x = bs.parse("1/11 + alpha")
        for m, n in ((137, 63), (-80, 200), (200, -159)):
            lhs = f1.birkhoff(x, m + n)
            rhs = f1.birkhoff(x, m) + f1.birkhoff(x + bs.linear(0, m), n)
            assert (lhs - rhs).is_zero()

    @given(num=st.integers(0, 50), m=st.integers(-25, 25), n=st.integers(-25, 25))
    @settings(max_examples=25)
    def test_cocycle_identity_random(self, f1, num, m, n):
        bs = f1.basis
        x = bs.rational(Fraction(num, 51))
        lhs = f1.birkhoff(x, m + n)
        rhs = f1.birkhoff(x, m) + f1.birkhoff(x + bs.linear(0, m), n)
        assert (lhs - rhs).is_zero()

    def test_denjoy_koksma_bound_is_exact(self, f1, golden):
        bs = f1.basis
        var = f1.variation
        for text in ("0", "1/7", "9/10"):
            x = bs.parse(text)
            for n in range(1, 9):
                qn = golden.q(n)
                dev = abs_sym(f1.birkhoff(x, qn) - f1.integral.scale(qn))
                assert (var - dev).sign() >= 0

    def test_birkhoff_diff_equals_direct_difference(self, f1):
        bs = f1.basis
        x = bs.parse("1/7")
        y = bs.parse("alpha - 1/3")
        for n in (0, 1, 13, 60):
            via_arcs = f1.birkhoff_diff(x, y, n)
            direct = f1.birkhoff(x, n) - f1.birkhoff(y, n)
            assert (via_arcs - direct).is_zero()

    @given(a=st.integers(0, 40), c=st.integers(0, 40), n=st.integers(0, 50))
    @settings(max_examples=25)
    def test_birkhoff_diff_random(self, f1, a, c, n):
        bs = f1.basis
        x = bs.rational(Fraction(a, 41))
        y = bs.rational(Fraction(c, 41)) + bs.alpha.scale(Fraction(1, 2))
        via_arcs = f1.birkhoff_diff(x, y, n)
        direct = f1.birkhoff(x, n) - f1.birkhoff(y, n)
        assert (via_arcs - direct).is_zero()

    def test_birkhoff_diff_preconditions(self, f1):
        bs = f1.basis
        x = bs.parse("1/7")
        with pytest.raises(PreconditionError):
            f1.birkhoff_diff(x, x + bs.one, 5)
        with pytest.raises(PreconditionError):
            f1.birkhoff_diff(x, bs.zero, -1)


class TestDiscontinuities:
    def test_all_genuine_when_p1_holds(self, f1):
        for n in (1, 5, 23, 50):
            audit = f1.discontinuities(n)
            assert audit.multiset_size == 2 * n
            assert audit.n_distinct == 2 * n
            assert audit.n_genuine == 2 * n
            floats = [float(e.point) for e in audit.entries]
            assert floats == sorted(floats)

    def test_orbit_collision_cancels_jumps(self, golden):
        f = roof_preset("p1_fail_orbit", golden)
        for n in (2, 4, 9):
            audit = f.discontinuities(n)
            # the two jump orbits overlap in all but the end points
            assert audit.n_distinct == n + 1
            assert audit.n_genuine == 2

    def test_rejects_nonpositive_n(self, f1):
        with pytest.raises(PreconditionError):
            f1.discontinuities(0)


class TestEquivalenceStructure:
    def test_example_roof_classes(self, f1):
        st_ = equivalence_structure(f1)
        assert st_.classes_sim == ((0,), (1,))  # 1/3 is not in Z + Z*alpha
        assert st_.classes_q == ((0, 1),)  # but it is rational
        assert [s.sign() for s in st_.class_sums] == [-1, 1]

    def test_orbit_mutant_collapses_to_one_class(self, golden):
        f = roof_preset("p1_fail_orbit", golden)
        st_ = equivalence_structure(f)
        assert st_.classes_sim == ((0, 1),)
        assert st_.class_sums[0].is_zero()

    def test_fresh_symbol_splits_q_classes(self, golden):
        f = roof_preset("p1_fail_symbol", golden)
        st_ = equivalence_structure(f)
        assert st_.classes_sim == ((0,), (1,))
        assert st_.classes_q == ((0,), (1,))


class TestP1:
    def test_example_roof_holds(self, f1):
        verdict = check_p1(f1)
        assert verdict.holds and bool(verdict)
        assert verdict.witness is None
        # the full jump tuple (-b, b) is integrally dependent, but the
        # admissible subsets are the singletons, which are free
        assert len(verdict.lattice) == 1
        assert sorted(map(abs, verdict.lattice[0])) == [1, 1]

    def test_orbit_mutant_fails_with_valid_witness(self, golden):
        f = roof_preset("p1_fail_orbit", golden)
        verdict = check_p1(f)
        assert not verdict.holds
        w = verdict.witness
        assert any(w)
        total = f.basis.zero
        for wi, di in zip(w, f.d):
            total = total + di.scale(wi)
        assert total.is_zero()

    def test_symbol_mutant_fails(self, golden):
        f = roof_preset("p1_fail_symbol", golden)
        verdict = check_p1(f)
        assert not verdict.holds
        total = f.basis.zero
        for wi, di in zip(verdict.witness, f.d):
            total = total + di.scale(wi)
        assert total.is_zero()

    def test_three_piece_holds_despite_global_relation(self, three_piece):
        # d_1 - 2*d_2... the full lattice is nontrivial, but no admissible
        # subset (one sim class per q class) carries a relation
        assert check_p1(three_piece).holds
        assert len(check_p1(three_piece).lattice) > 0

    @pytest.mark.parametrize(
        "name,expected",
        [
            ("example1", True),
            ("p1_fail_orbit", False),
            ("p1_fail_symbol", False),
            ("p2_fail_values", True),
            ("solvable_eigen", False),
        ],
    )
    def test_brute_force_concordance(self, golden, name, expected):
        f = roof_preset(name, golden)
        assert check_p1(f).holds is expected
        assert brute_force_p1(f, box=3) is expected


class TestP2:
    def test_example_roof_holds(self, f1):
        verdict = check_p2(f1)
        assert verdict.holds
        assert verdict.min_value == f1.basis.one
        assert not verdict.q_alpha_span.inside
        assert not verdict.q_span.inside

    def test_value_mutant_fails_with_certificate(self, golden):
        f = roof_preset("p2_fail_values", golden)
        verdict = check_p2(f)
        assert not verdict.holds
        m = verdict.q_alpha_span
        assert m.inside
        # reconstruct min f from the certificate: sum (r_i + s_i*alpha) d_i
        bs = f.basis
        rebuilt = bs.zero
        for k, dk in enumerate(f.d):
            r, s = m.coefficients[2 * k], m.coefficients[2 * k + 1]
            rebuilt = rebuilt + bs.linear(r, s) * dk
        assert rebuilt == f.min_value


class TestRemnienIdentity:
    def test_zero_residual_when_last_value_is_min(self, f1):
        residual, coeffs = remnien_identity(f1)
        assert residual.is_zero()
        assert coeffs == (0, 0)

    def test_nonzero_residual_telescopes(self, three_piece, basis):
        residual, coeffs = remnien_identity(three_piece)
        assert residual == basis.unit("b")
        assert coeffs == (0, -1, -1)


class TestEigenvalueCriterion:
    def test_solvable_preset_at_integer_r(self, golden):
        f = roof_preset("solvable_eigen", golden)
        rep = eigenvalue_criterion(f, 1)
        assert rep.solvable
        assert rep.integral_clause
        assert all(c.scaled_is_integer for c in rep.clauses)
        assert rep.integral_image == f.basis.linear(1, 1)

    def test_rational_r_breaks_integral_clause(self, golden):
        f = roof_preset("solvable_eigen", golden)
        rep = eigenvalue_criterion(f, Fraction(1, 2))
        assert not rep.solvable
        assert all(c.scaled_is_integer for c in rep.clauses)  # class sum is 0
        assert not rep.integral_clause

    def test_solvable_values_form_a_group(self, golden):
        f = roof_preset("solvable_eigen", golden)
        solvable = {r for r in (1, 2, 3, 5) if eigenvalue_criterion(f, r).solvable}
        assert solvable == {1, 2, 3, 5}
        blocked = [Fraction(1, 2), Fraction(1, 3), Fraction(3, 2), Fraction(5, 4)]
        assert not any(eigenvalue_criterion(f, r).solvable for r in blocked)

    def test_symbolic_r_alpha(self, golden):
        # r = alpha: r * integral = alpha + alpha^2 = 1, an integer
        f = roof_preset("solvable_eigen", golden)
        rep = eigenvalue_criterion(f, f.basis.alpha)
        assert rep.solvable
        assert rep.integral_image == f.basis.one

    def test_example_roof_never_solvable_on_small_rationals(self, f1):
        for p in range(-5, 6):
            for q in range(1, 6):
                if p == 0:
                    continue
                rep = eigenvalue_criterion(f1, Fraction(p, q))
                assert not rep.solvable
                assert not any(c.scaled_is_integer for c in rep.clauses)

    def test_degenerate_r_rejected(self, f1):
        with pytest.raises(PreconditionError):
            eigenvalue_criterion(f1, 0)
        with pytest.raises(PreconditionError):
            eigenvalue_criterion(f1, f1.basis.zero)


class TestWeakMixingVerdict:
    def test_example_roof(self, f1):
        v = weak_mixing_verdict(f1)
        assert v.verdict == "weakly_mixing"
        assert v.p1.holds and v.p2.holds

    def test_p1_failure_short_circuits(self, golden):
        v = weak_mixing_verdict(roof_preset("p1_fail_orbit", golden))
        assert v.verdict == "unknown"
        assert v.reason == "P1 fails"
        assert v.p2 is None

    def test_p2_failure_reported(self, golden):
        v = weak_mixing_verdict(roof_preset("p2_fail_values", golden))
        assert v.verdict == "unknown"
        assert v.reason == "P2 fails"
        assert v.p1.holds and not v.p2.holds


class TestCoboundaryReduce:
    def test_single_mode_solves_to_machine_precision(self, golden):
        rep = coboundary_reduce([{"n": 1, "cos": 1.0}], golden, n_modes=3)
        assert rep.residual_sup < 1e-10
        assert rep.truncated_modes == ()
        assert set(rep.u_modes) == {-1, 1}

    def test_dict_modes_accepted(self, golden):
        rep = coboundary_reduce({1: 0.5j, -1: -0.5j}, golden, n_modes=2)
        assert rep.residual_sup < 1e-10

    def test_identity_holds_off_grid(self, golden):
        import cmath

        zeta = [{"n": 1, "cos": 0.3, "sin": -0.2}, {"n": 4, "sin": 0.11}]
        rep = coboundary_reduce(zeta, golden, n_modes=5, grid_size=500)
        alpha = golden.alpha_float

        def u(x):
            return sum(z * cmath.exp(2j * cmath.pi * n * x) for n, z in rep.u_modes.items())

        def z_fn(x):
            return 0.3 * cmath.cos(2 * cmath.pi * x).real - 0.2 * cmath.sin(
                2 * cmath.pi * x
            ).real + 0.11 * cmath.sin(2 * cmath.pi * 4 * x).real

        for x in (0.137, 0.5721, 0.9999):
            lhs = u(x + alpha) - u(x)
            assert abs(lhs - z_fn(x)) < 1e-9

    def test_truncation_reported_honestly(self, golden):
        zeta = [{"n": 1, "cos": 0.5}, {"n": 7, "cos": 0.4}]
        rep = coboundary_reduce(zeta, golden, n_modes=3)
        assert rep.truncated_modes == (-7, 7)
        assert 0.3 < rep.residual_sup <= 0.401

    def test_nonzero_mean_rejected(self, golden):
        with pytest.raises(PreconditionError):
            coboundary_reduce([{"n": 0, "cos": 0.3}], golden, n_modes=2)


class TestRoofFromConfig:
    def test_round_trip_matches_fixture(self, golden, basis, f1):
        cfg = {"xi": ["0", "1/3"], "d": ["-b", "b"], "v1": "1 + b"}
        f = roof_from_config(basis, cfg)
        g = roof_preset("example1", golden)
        assert f.xi == tuple(basis.parse(t) for t in ("0", "1/3"))
        assert [float(v) for v in f.values] == pytest.approx([float(v) for v in g.values])

    def test_points_normalized_mod_one(self, basis):
        cfg = {"xi": ["0", "4/3"], "d": ["-b", "b"], "v1": "1 + b"}
        f = roof_from_config(basis, cfg)
        assert f.xi[1] == basis.rational(Fraction(1, 3))

    def test_missing_field_and_length_mismatch(self, basis):
        with pytest.raises(ConfigError):
            roof_from_config(basis, {"xi": ["0", "1/3"], "d": ["-b", "b"]})
        with pytest.raises(ConfigError):
            roof_from_config(basis, {"xi": ["0"], "d": ["-b", "b"], "v1": "1"})

    def test_unknown_preset_name(self, golden):
        with pytest.raises(ConfigError):
            roof_preset("no_such_roof", golden)
