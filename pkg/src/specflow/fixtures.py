"""Canonical bases, roofs, and Hamiltonian systems used by tests and the CLI.

The reference roof ("example1") is f = 1 + sqrt(3) * chi_[0, 1/3): two jumps
d = (-sqrt3, +sqrt3) at xi = (0, 1/3), minimum 1, integral 1 + sqrt(3)/3.  The
mutated variants each break exactly one property:

* p1_fail_orbit : second discontinuity moved onto the alpha-orbit of the
  first (xi_2 = alpha), collapsing the two jumps into one class.
* p1_fail_symbol: discontinuity gap replaced by a fresh independent symbol
  gamma, so no pair of jumps is (Q+Qalpha)-related without being
  (Z+Zalpha)-related.
* p2_fail_values: values {2b, b} make min f = b a jump combination.
* solvable_eigen: f = 1 + chi_[0, alpha): rational jumps summing to zero on
  one orbit class and integral 1 + alpha, so r = 1 passes the eigenvalue
  criterion.
"""

from __future__ import annotations

from fractions import Fraction

from .cf_arith import CFContext
from .errors import ConfigError
from .roof import RoofPC
from .symreal import Basis


def context(preset: str = "golden") -> CFContext:
    return CFContext.from_config(preset)


def sqrt3_basis(ctx: CFContext) -> Basis:
    """Basis (1, alpha, b, alpha_b) with b = sqrt(3).

    sqrt(3) is independent of both preset rotation fields (Q(sqrt5) for the
    golden mean, Q(sqrt2) for sqrt2m1), which is what the declared-independence
    axiom needs.
    """
    return Basis.with_sqrt(ctx, 3, name="b")


def fresh_symbol_basis(ctx: CFContext) -> Basis:
    """sqrt3_basis extended by one more symbol gamma in (0, 1), independent of
    alpha's field and of sqrt(3): sqrt(2)/4 over the golden mean, sqrt(5)/4
    over sqrt2m1."""
    rel = ctx.quadratic_relation()
    radicand = 2 if rel == (Fraction(1), Fraction(-1)) else 5
    from .cf_arith import isqrt_enclosure
    from .symreal import _product_evaluator

    def gamma_ev(bits):
        lo, hi = isqrt_enclosure(radicand, bits + 2)
        return lo / 4, hi / 4

    extra = [
        ("b", lambda bits: isqrt_enclosure(3, bits)),
        ("alpha_b", _product_evaluator(ctx.enclosure, lambda bits: isqrt_enclosure(3, bits))),
        ("gamma", gamma_ev),
    ]
    return Basis(ctx, extra, alpha_partners={"b": "alpha_b"})


def example1(basis: Basis) -> RoofPC:
    b = basis.unit("b")
    one = basis.one
    return RoofPC(
        xi=(basis.rational(0), basis.rational(Fraction(1, 3))),
        d=(-b, b),
        v1=one + b,
    )


def p1_fail_orbit(basis: Basis) -> RoofPC:
    b = basis.unit("b")
    return RoofPC(
        xi=(basis.rational(0), basis.alpha),
        d=(-b, b),
        v1=basis.one + b,
    )


def p1_fail_symbol(basis: Basis) -> RoofPC:
    if "gamma" not in basis.symbols:
        raise ConfigError("p1_fail_symbol needs the fresh-symbol basis")
    b = basis.unit("b")
    return RoofPC(
        xi=(basis.rational(0), basis.unit("gamma")),
        d=(b, -b),
        v1=basis.one,
    )


def p2_fail_values(basis: Basis) -> RoofPC:
    b = basis.unit("b")
    return RoofPC(
        xi=(basis.rational(0), basis.rational(Fraction(1, 2))),
        d=(-b, b),
        v1=b.scale(2),
    )


def solvable_eigen(basis: Basis) -> RoofPC:
    return RoofPC(
        xi=(basis.rational(0), basis.alpha),
        d=(basis.rational(-1), basis.one),
        v1=basis.rational(2),
    )


ROOF_PRESETS = {
    "example1": (sqrt3_basis, example1),
    "p1_fail_orbit": (sqrt3_basis, p1_fail_orbit),
    "p1_fail_symbol": (fresh_symbol_basis, p1_fail_symbol),
    "p2_fail_values": (sqrt3_basis, p2_fail_values),
    "solvable_eigen": (sqrt3_basis, solvable_eigen),
}


def roof_preset(name: str, ctx: CFContext) -> RoofPC:
    try:
        basis_builder, roof_builder = ROOF_PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown roof preset {name!r}; available: {sorted(ROOF_PRESETS)}"
        ) from None
    return roof_builder(basis_builder(ctx))


# -- Hamiltonian systems -----------------------------------------------------------

# All presets use alpha1 = sqrt(2) - 1, alpha2 = 1 (irrational ratio) and the
# vertical section {x = 1/4}, where dH/dy = alpha2 exactly for every preset
# (their mixed modes carry a cos(2 pi x) factor that vanishes there).

HAM_ALPHA1 = 2.0**0.5 - 1.0
HAM_ALPHA2 = 1.0
HAM_SECTION_X0 = 0.25

# periodic part A*sin(2 pi x) + B*sin(2 pi y)*cos(2 pi x) of the trap preset,
# written in sum modes: sin y cos x = (sin(x+y) - sin(x-y))/2
_TRAP_A = 0.08
_TRAP_B = 0.25


def linear_flow() -> "HamiltonianSystem":
    """P = 0, g = 1: the straight-line flow (alpha2, -alpha1)."""
    from .hamlab import HamiltonianSystem
    from .trig import TrigPoly

    return HamiltonianSystem(
        HAM_ALPHA1, HAM_ALPHA2, TrigPoly.zero(), TrigPoly.constant(1.0)
    )


def weighted_linear() -> "HamiltonianSystem":
    """P = 0 with the weight g = 1 + (1/2) cos(2 pi y): same orbits, new clock."""
    from .hamlab import HamiltonianSystem
    from .trig import TrigPoly

    return HamiltonianSystem(
        HAM_ALPHA1,
        HAM_ALPHA2,
        TrigPoly.zero(),
        TrigPoly({(0, 0): (1.0, 0.0), (0, 1): (0.5, 0.0)}),
    )


def no_crit() -> "HamiltonianSystem":
    """Nonzero P and nonconstant g, amplitudes too small for critical points."""
    from .hamlab import HamiltonianSystem
    from .trig import TrigPoly

    P = TrigPoly({(1, 1): (0.0, 0.03)})
    g = TrigPoly({(0, 0): (1.0, 0.0), (1, 0): (0.2, 0.0), (0, 1): (0.0, 0.1)})
    return HamiltonianSystem(HAM_ALPHA1, HAM_ALPHA2, P, g)


def _trap_P() -> "TrigPoly":
    from .trig import TrigPoly

    return TrigPoly(
        {
            (1, 0): (0.0, _TRAP_A),
            (1, 1): (0.0, _TRAP_B / 2.0),
            (1, -1): (0.0, -_TRAP_B / 2.0),
        }
    )


def _vertex_weight(saddles) -> "TrigPoly":
    """Product over saddles of sin^2(pi(x - xs)) + sin^2(pi(y - ys)).

    Vanishes quadratically exactly at the saddles and nowhere else, which
    keeps return times of the weighted flow bounded through the corners.
    """
    import math

    from .trig import TrigPoly

    g = TrigPoly.constant(1.0)
    for s in saddles:
        cx, sx = math.cos(2 * math.pi * s.x), math.sin(2 * math.pi * s.x)
        cy, sy = math.cos(2 * math.pi * s.y), math.sin(2 * math.pi * s.y)
        factor = TrigPoly(
            {
                (0, 0): (1.0, 0.0),
                (1, 0): (-cx / 2.0, -sx / 2.0),
                (0, 1): (-cy / 2.0, -sy / 2.0),
            }
        )
        g = g * factor
    return g


def two_traps() -> "HamiltonianSystem":
    """Two saddle-center pairs; g vanishes at the saddles (declared vertices).

    The traps sit inside x in (0.35, 0.65), so the default section at
    x = 1/4 avoids them.
    """
    from .hamlab import HamiltonianSystem, critical_points
    from .trig import TrigPoly

    P = _trap_P()
    probe = HamiltonianSystem(HAM_ALPHA1, HAM_ALPHA2, P, TrigPoly.constant(1.0))
    crits = critical_points(probe)
    saddles = tuple(c for c in crits if c.kind == "saddle")
    if len(saddles) != 2 or sum(c.kind == "center" for c in crits) != 2:
        raise ConfigError("trap preset did not produce two saddle-center pairs")
    g = _vertex_weight(saddles)
    return HamiltonianSystem(
        HAM_ALPHA1,
        HAM_ALPHA2,
        P,
        g,
        vertices=tuple((s.x, s.y) for s in saddles),
        critical_points=crits,
    )


HAM_PRESETS = {
    "linear_flow": linear_flow,
    "weighted_linear": weighted_linear,
    "no_crit": no_crit,
    "two_traps": two_traps,
}


def ham_preset(name: str) -> "HamiltonianSystem":
    try:
        builder = HAM_PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown hamiltonian preset {name!r}; available: {sorted(HAM_PRESETS)}"
        ) from None
    return builder()
