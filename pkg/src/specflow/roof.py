"""Piecewise-constant roof functions over an irrational rotation.

A roof is determined by its sorted discontinuity points xi_1 < ... < xi_p in
[0, 1), the jumps d_i (left limit minus right limit, so crossing xi_i
rightward subtracts d_i from the value), and the value v1 on [xi_1, xi_2).
The jump sum must vanish exactly, the roof must be strictly positive, and
every d_i must be a genuine jump.

This module carries the exact decision procedures for the two arithmetic
properties of the jumps:

* P1: for every index set S that picks at most one (Z+Z*alpha)-class of
  discontinuities out of each (Q+Q*alpha)-class, the jumps {d_i : i in S} are
  Q-linearly independent.  Decided through exact integer relation lattices.
* P2: the integral of f avoids the Minkowski sum of the lines
  (xi_i + Q + Q*alpha)*d_i.  Decided via the reduction to
  "min f not in sum_i (Q+Q*alpha) d_i", which follows from the exact integral
  identity integral(f) = sum_i d_i*xi_i + v_p (see remnien_identity).

Both feed the weak-mixing verdict, and the eigenvalue criterion decides
solvability of psi(Tx) = e^{2*pi*i*r*f(x)} psi(x) from class sums of jumps.
A numeric small-divisor coboundary reducer for trigonometric-polynomial
perturbations rounds out the module.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .counting import arc_membership, cell_histogram, exact_point, locate_cell
from .errors import ConfigError, PreconditionError, VerificationError
from .symreal import (
    Basis,
    Membership,
    SymReal,
    in_z_plus_z_alpha,
    q_alpha_span_membership,
    q_span_membership,
    relation_lattice,
)


@dataclass(frozen=True)
class RoofPC:
    """Piecewise-constant roof; see module docstring for conventions."""

    xi: tuple[SymReal, ...]
    d: tuple[SymReal, ...]
    v1: SymReal
    values: tuple[SymReal, ...] = field(init=False)

    def __post_init__(self):
        p = len(self.xi)
        if p < 2:
            raise ConfigError("a roof needs at least two discontinuity points")
        if len(self.d) != p:
            raise ConfigError("xi and d must have equal length")
        for x in self.xi:
            if x.floor() != 0:
                raise ConfigError("discontinuity points must lie in [0, 1)")
        for a, b in zip(self.xi, self.xi[1:]):
            if a.compare(b) >= 0:
                raise ConfigError("discontinuity points must be strictly increasing")
        if not sum(self.d, self.basis.zero).is_zero():
            raise ConfigError("jump sum S(f) must vanish exactly")
        for dd in self.d:
            if dd.is_zero():
                raise ConfigError("every declared jump must be nonzero")
        vals = [self.v1]
        for i in range(1, p):
            vals.append(vals[-1] - self.d[i])
        # cyclic consistency v1 = v_p - d_1 is forced by the zero jump sum
        if not (vals[0] - (vals[-1] - self.d[0])).is_zero():
            raise VerificationError("cyclic value consistency failed")
        for v in vals:
            if v.sign() <= 0:
                raise ConfigError("roof values must be strictly positive")
        object.__setattr__(self, "values", tuple(vals))

    @property
    def basis(self) -> Basis:
        return self.v1.basis

    @property
    def p(self) -> int:
        return len(self.xi)

    # -- derived exact quantities -------------------------------------------------

    @property
    def min_value(self) -> SymReal:
        """a = min_i v_i."""
        m = self.values[0]
        for v in self.values[1:]:
            if v.compare(m) < 0:
                m = v
        return m

    @property
    def max_value(self) -> SymReal:
        m = self.values[0]
        for v in self.values[1:]:
            if v.compare(m) > 0:
                m = v
        return m

    @property
    def variation(self) -> SymReal:
        """Var f = sum |d_i|, exact."""
        tot = self.basis.zero
        for dd in self.d:
            tot = tot + (dd if dd.sign() > 0 else -dd)
        return tot

    @property
    def jump_sum(self) -> SymReal:
        return sum(self.d, self.basis.zero)

    @property
    def integral(self) -> SymReal:
        """c_f = integral of f, exact.

        Lazy: needs products v_i * (cell length), defined when either factor
        lies in Q + Q*alpha.
        """
        cached = self.__dict__.get("_integral")
        if cached is None:
            one = self.basis.one
            total = self.basis.zero
            for i, v in enumerate(self.values):
                if i + 1 < self.p:
                    length = self.xi[i + 1] - self.xi[i]
                else:
                    length = one - self.xi[-1] + self.xi[0]
                total = total + v * length
            object.__setattr__(self, "_integral", total)
            cached = total
        return cached

    # -- evaluation and Birkhoff sums ----------------------------------------------

    def value_at(self, x: SymReal) -> SymReal:
        """f(x); right-continuous, so x = xi_i gives the value right of xi_i."""
        return self.values[locate_cell(x.mod1(), self.xi)]

    def birkhoff(self, x: SymReal, n: int) -> SymReal:
        """f^{(n)}(x), exact, any integer n.

        n > 0: sum of f over x, Tx, ..., T^{n-1}x; n = 0: 0;
        n < 0: -f^{(-n)}(T^n x), the cocycle convention.
        """
        if n == 0:
            return self.basis.zero
        if n < 0:
            shifted = x + self.basis.linear(0, n)
            return -self.birkhoff(shifted, -n)
        hist = cell_histogram(x.mod1(), n, self.xi)
        total = self.basis.zero
        for count, v in zip(hist.counts, self.values):
            if count:
                total = total + v.scale(int(count))
        return total

    def birkhoff_diff(self, x: SymReal, y: SymReal, n: int) -> SymReal:
        """f^{(n)}(x) - f^{(n)}(y) by counting discontinuity-orbit points in
        the arc (x, y], without evaluating either Birkhoff sum.

        Because the jump sum vanishes, the identity
        f^{(n)}(x) - f^{(n)}(y) = sum_i d_i * #{0 <= j < n : xi_i - j*alpha in (x, y]}
        holds regardless of the arc's orientation or length.
        """
        if n < 0:
            raise PreconditionError("birkhoff_diff needs n >= 0")
        xm, ym = x.mod1(), y.mod1()
        if (xm - ym).is_zero():
            raise PreconditionError("x and y must differ as circle points")
        total = self.basis.zero
        for xi_i, d_i in zip(self.xi, self.d):
            mask, _ = arc_membership(xi_i, n, xm, ym, direction=-1)
            c = int(mask.sum())
            if c:
                total = total + d_i.scale(c)
        return total

    def discontinuities(self, n: int) -> "DiscontinuityAudit":
        """The multiset {xi_i - j*alpha : i, 0 <= j < n} with exact jump sums
        at coincident points; a point is a genuine discontinuity of f^{(n)}
        iff its total jump is nonzero."""
        if n < 1:
            raise PreconditionError("n must be >= 1")
        groups: dict[tuple, tuple[SymReal, list[tuple[int, int]]]] = {}
        for i, xi_i in enumerate(self.xi):
            for j in range(n):
                pt = exact_point(xi_i, j, -1)
                key = pt.coords
                if key not in groups:
                    groups[key] = (pt, [])
                groups[key][1].append((i, j))
        entries = []
        for pt, contributors in groups.values():
            jump = self.basis.zero
            for i, _ in contributors:
                jump = jump + self.d[i]
            entries.append(
                DiscontinuityEntry(
                    point=pt,
                    contributors=tuple(contributors),
                    jump=jump,
                    genuine=not jump.is_zero(),
                )
            )
        entries.sort(key=lambda e: float(e.point))
        return DiscontinuityAudit(
            n=n,
            multiset_size=self.p * n,
            entries=tuple(entries),
        )


@dataclass(frozen=True)
class DiscontinuityEntry:
    point: SymReal
    contributors: tuple[tuple[int, int], ...]
    jump: SymReal
    genuine: bool


@dataclass(frozen=True)
class DiscontinuityAudit:
    n: int
    multiset_size: int
    entries: tuple[DiscontinuityEntry, ...]

    @property
    def n_distinct(self) -> int:
        return len(self.entries)

    @property
    def n_genuine(self) -> int:
        return sum(1 for e in self.entries if e.genuine)


# -- discontinuity equivalence structure -----------------------------------------


@dataclass(frozen=True)
class EquivalenceStructure:
    """Partitions of the discontinuity indices.

    classes_sim groups i ~ j when xi_i - xi_j is in Z + Z*alpha; classes_q
    groups them when the difference is in Q + Q*alpha.  The sim partition
    always refines the q partition.  class_sums are the jump sums over each
    sim class, in class order.
    """

    classes_sim: tuple[tuple[int, ...], ...]
    classes_q: tuple[tuple[int, ...], ...]
    class_sums: tuple[SymReal, ...]


def equivalence_structure(f: RoofPC) -> EquivalenceStructure:
    p = f.p

    def partition(same) -> list[list[int]]:
        classes: list[list[int]] = []
        for i in range(p):
            for cl in classes:
                if same(f.xi[cl[0]], f.xi[i]):
                    cl.append(i)
                    break
            else:
                classes.append([i])
        return classes

    sim = partition(lambda a, b: in_z_plus_z_alpha(a - b)[0])
    qcl = partition(lambda a, b: (a - b).is_linear())
    for cl in sim:
        holders = [qc for qc in qcl if cl[0] in qc]
        if not all(i in holders[0] for i in cl):
            raise VerificationError("sim classes failed to refine q classes")
    sums = []
    for cl in sim:
        s = f.basis.zero
        for i in cl:
            s = s + f.d[i]
        sums.append(s)
    total = sum(sums, f.basis.zero)
    if not total.is_zero():
        raise VerificationError("class sums must add to the (zero) jump sum")
    return EquivalenceStructure(
        classes_sim=tuple(tuple(c) for c in sim),
        classes_q=tuple(tuple(c) for c in qcl),
        class_sums=tuple(sums),
    )


# -- property (P1) -----------------------------------------------------------------


@dataclass(frozen=True)
class P1Verdict:
    holds: bool
    witness: tuple[int, ...] | None
    structure: EquivalenceStructure
    lattice: tuple[tuple[int, ...], ...]

    def __bool__(self) -> bool:
        return self.holds


def check_p1(f: RoofPC) -> P1Verdict:
    """Decide P1 by exact relation lattices.

    For each admissible index set S (one sim class chosen from every q class;
    smaller sets are covered by monotonicity), the jumps indexed by S must
    have trivial integer relation lattice.  The first nonzero lattice vector
    found is returned as the violating witness, embedded in Z^p.
    """
    struct = equivalence_structure(f)
    lattice = relation_lattice(f.d)
    choices_per_q: list[list[tuple[int, ...]]] = []
    for qc in struct.classes_q:
        members = [cl for cl in struct.classes_sim if cl[0] in qc]
        choices_per_q.append(members)

    def enumerate_s(k: int, acc: list[int]):
        if k == len(choices_per_q):
            yield sorted(acc)
            return
        for cl in choices_per_q[k]:
            yield from enumerate_s(k + 1, acc + list(cl))

    for s_set in enumerate_s(0, []):
        sub = relation_lattice([f.d[i] for i in s_set])
        if sub:
            witness = [0] * f.p
            for pos, i in enumerate(s_set):
                witness[i] = sub[0][pos]
            return P1Verdict(
                holds=False,
                witness=tuple(witness),
                structure=struct,
                lattice=tuple(tuple(v) for v in lattice),
            )
    return P1Verdict(
        holds=True,
        witness=None,
        structure=struct,
        lattice=tuple(tuple(v) for v in lattice),
    )


# -- property (P2) -----------------------------------------------------------------


@dataclass(frozen=True)
class P2Verdict:
    holds: bool
    min_value: SymReal
    q_alpha_span: Membership
    q_span: Membership

    def __bool__(self) -> bool:
        return self.holds


def check_p2(f: RoofPC) -> P2Verdict:
    """Decide P2: integral(f) avoids sum_i (xi_i + Q + Q*alpha) d_i.

    By the exact integral identity (remnien_identity) this is equivalent to
    min f not lying in sum_i (Q+Q*alpha) d_i, a rational solve over
    {d_i} u {alpha*d_i}.  The plain Q-span membership of min f is reported
    too: if min f is already a rational combination of the jumps, P2 fails at
    that weaker level.
    """
    a = f.min_value
    qa = q_alpha_span_membership(a, list(f.d))
    qs = q_span_membership(a, list(f.d))
    if qs.inside and not qa.inside:
        raise VerificationError("Q-span membership must imply (Q+Qalpha)-span membership")
    return P2Verdict(holds=not qa.inside, min_value=a, q_alpha_span=qa, q_span=qs)


def remnien_identity(f: RoofPC) -> tuple[SymReal, tuple[int, ...]]:
    """Exact residual integral(f) - min(f) - sum_i d_i*xi_i and its integer
    coefficients over the jumps.

    The identity integral(f) = sum_i d_i*xi_i + v_p makes the residual equal
    v_p - v_k (k = argmin), a telescoping sum of jumps with coefficients in
    {0, -1}; both routes are computed and compared exactly.
    """
    direct = f.integral - f.min_value
    for dd, x in zip(f.d, f.xi):
        direct = direct - dd * x
    k = 0
    for i in range(1, f.p):
        if f.values[i].compare(f.values[k]) < 0:
            k = i
    coeffs = [0] * f.p
    telescoped = f.basis.zero
    for i in range(k + 1, f.p):
        coeffs[i] = -1
        telescoped = telescoped - f.d[i]
    if not (direct - telescoped).is_zero():
        raise VerificationError("integral identity residual mismatch")
    return direct, tuple(coeffs)


# -- eigenvalue criterion and weak mixing -------------------------------------------


@dataclass(frozen=True)
class EigenClause:
    class_indices: tuple[int, ...]
    class_sum: SymReal
    scaled_is_integer: bool


@dataclass(frozen=True)
class EigenReport:
    solvable: bool
    r: object
    clauses: tuple[EigenClause, ...]
    integral_clause: bool
    integral_image: SymReal


def eigenvalue_criterion(f: RoofPC, r) -> EigenReport:
    """Solvability of psi(Tx) = e^{2 pi i r f(x)} psi(x).

    Solvable iff r times every sim-class jump sum is an integer and
    r*integral(f) lies in Z + Z*alpha.  r may be a rational or a SymReal in
    Q + Q*alpha; r = 0 is rejected as degenerate.
    """
    if isinstance(r, SymReal):
        if r.is_zero():
            raise PreconditionError("r = 0 is degenerate (psi == 1 solves trivially)")
        scale = r
    else:
        r = Fraction(r)
        if r == 0:
            raise PreconditionError("r = 0 is degenerate (psi == 1 solves trivially)")
        scale = f.basis.rational(r)
    struct = equivalence_structure(f)
    clauses = []
    all_integer = True
    for cl, s in zip(struct.classes_sim, struct.class_sums):
        image = s * scale
        ok = image.is_rational() and image.as_fraction().denominator == 1
        all_integer = all_integer and ok
        clauses.append(EigenClause(class_indices=cl, class_sum=s, scaled_is_integer=ok))
    integral_image = f.integral * scale
    int_ok, _ = in_z_plus_z_alpha(integral_image)
    return EigenReport(
        solvable=all_integer and int_ok,
        r=r,
        clauses=tuple(clauses),
        integral_clause=int_ok,
        integral_image=integral_image,
    )


@dataclass(frozen=True)
class WeakMixingVerdict:
    verdict: str  # "weakly_mixing" | "unknown"
    reason: str
    p1: P1Verdict
    p2: P2Verdict | None


def weak_mixing_verdict(f: RoofPC) -> WeakMixingVerdict:
    """weakly_mixing when P1 and P2 both hold; otherwise unknown, naming the
    failing property.  No attempt is made to quantify over all real r."""
    p1 = check_p1(f)
    if not p1.holds:
        return WeakMixingVerdict("unknown", "P1 fails", p1, None)
    p2 = check_p2(f)
    if not p2.holds:
        return WeakMixingVerdict("unknown", "P2 fails", p1, p2)
    return WeakMixingVerdict("weakly_mixing", "P1 and P2 hold", p1, p2)


# -- coboundary reducer --------------------------------------------------------------


@dataclass(frozen=True)
class CoboundaryReport:
    u_modes: dict
    residual_sup: float
    grid_size: int
    n_modes: int
    truncated_modes: tuple[int, ...]


def _as_modes(zeta) -> dict[int, complex]:
    """Accept {n: complex} or [{"n": k, "cos": c, "sin": s}, ...] and return
    the complex Fourier dictionary of the real function."""
    if isinstance(zeta, Mapping):
        return {int(n): complex(v) for n, v in zeta.items()}
    modes: dict[int, complex] = {}
    for term in zeta:
        n = int(term["n"])
        c = float(term.get("cos", 0.0))
        s = float(term.get("sin", 0.0))
        if n == 0:
            modes[0] = modes.get(0, 0.0) + c
            continue
        modes[n] = modes.get(n, 0.0) + (c - 1j * s) / 2
        modes[-n] = modes.get(-n, 0.0) + (c + 1j * s) / 2
    return modes


def coboundary_reduce(zeta, ctx, n_modes: int, grid_size: int = 1000) -> CoboundaryReport:
    """Solve u(x + alpha) - u(x) = zeta(x) mode by mode.

    u_hat(n) = zeta_hat(n) / (e^{2 pi i n alpha} - 1) for 0 < |n| <= n_modes.
    zeta must have zero mean.  The report carries the sup-norm residual of
    u(.+alpha) - u(.) - zeta on a uniform grid; modes of zeta beyond the
    truncation are listed and make the residual honest rather than zero.
    """
    modes = _as_modes(zeta)
    mean = modes.get(0, 0.0)
    if abs(mean) > 1e-15:
        raise PreconditionError("zeta must have zero mean")
    alpha = ctx.alpha_float
    u_modes: dict[int, complex] = {}
    truncated = []
    for n, z in sorted(modes.items()):
        if n == 0 or z == 0:
            continue
        if abs(n) > n_modes:
            truncated.append(n)
            continue
        u_modes[n] = z / (cmath.exp(2j * cmath.pi * n * alpha) - 1)
    xs = np.arange(grid_size, dtype=np.float64) / grid_size

    def eval_modes(md, pts):
        out = np.zeros_like(pts, dtype=np.complex128)
        for n, z in md.items():
            out += z * np.exp(2j * np.pi * n * pts)
        return out

    resid = (
        eval_modes(u_modes, np.mod(xs + alpha, 1.0))
        - eval_modes(u_modes, xs)
        - eval_modes(modes, xs)
    )
    return CoboundaryReport(
        u_modes=u_modes,
        residual_sup=float(np.max(np.abs(resid))),
        grid_size=grid_size,
        n_modes=n_modes,
        truncated_modes=tuple(truncated),
    )


# -- config loading -------------------------------------------------------------------


def roof_from_config(basis: Basis, cfg: dict) -> RoofPC:
    """Build a roof from {"xi": [...], "d": [...], "v1": ...} with values
    parsed over the basis.  Points are normalized mod 1 and must already be
    sorted, since v1 names the value on the first interval."""
    try:
        xi = [basis.parse(t).mod1() for t in cfg["xi"]]
        d = [basis.parse(t) for t in cfg["d"]]
        v1 = basis.parse(cfg["v1"])
    except KeyError as e:
        raise ConfigError(f"roof config missing field {e.args[0]!r}") from None
    if len(xi) != len(d):
        raise ConfigError("xi and d must have equal length")
    return RoofPC(xi=tuple(xi), d=tuple(d), v1=v1)
