"""The special flow engine and its measure-theoretic diagnostics.

The phase space of a roof f over the rotation by alpha is
X^f = {(x, s) : 0 <= s < f(x)}; the flow moves points up at unit speed and
identifies (x, f(x)) with (x + alpha, 0).  Flowing for time t therefore lands
on (x + n*alpha, s + t - f^{(n)}(x)) where n is the unique integer with
f^{(n)}(x) <= s + t < f^{(n+1)}(x).

Two evaluation modes, explicit per call:

* exact symbolic (:func:`flow_map`): heights are SymReal, the crossing index
  n is certified by exact comparisons; used for the group-law / inverse /
  measure-preservation invariants.
* float batch (:func:`flow_map_batch`): vectorized over numpy arrays for
  Monte Carlo volume, boundary fuzz confined to measure-zero bands.

Measurable sets are finite unions of rectangles (circle interval times height
interval) lying under the roof; :func:`phase_measure` integrates them exactly
and :func:`correlation` estimates overlap volumes by seeded rejection
sampling.  :func:`qn_distribution` and :func:`dk_audit` evaluate Birkhoff
sums at denominator times q_n exactly on a uniform grid: the first clusters
f^{(q_n)} - q_n*c_f into its finitely many exact values (the partial-rigidity
atom distribution), the second tabulates max deviations against the
variation bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .counting import MARGIN, grid_cell_counts
from .errors import ConfigError, PreconditionError, VerificationError
from .roof import RoofPC
from .symreal import Basis, SymReal


@dataclass(frozen=True)
class SpecialFlowPoint:
    """A point (x, s) of X^f with 0 <= s < f(x); both coordinates exact."""

    x: SymReal
    s: SymReal


def flow_point(f: RoofPC, x, s=0) -> SpecialFlowPoint:
    """Validated construction: normalizes x mod 1 and checks 0 <= s < f(x)."""
    basis = f.basis
    xv = basis.parse(x).mod1()
    sv = basis.parse(s)
    if sv.sign() < 0 or (f.value_at(xv) - sv).sign() <= 0:
        raise PreconditionError("height must satisfy 0 <= s < f(x)")
    return SpecialFlowPoint(xv, sv)


def _exact_time(basis: Basis, t) -> SymReal:
    if isinstance(t, SymReal):
        return t
    if isinstance(t, float):
        raise PreconditionError(
            "symbolic flow needs an exact time; use flow_map_batch for floats"
        )
    return basis.parse(t)


def flow_map(f: RoofPC, pt: SpecialFlowPoint, t) -> SpecialFlowPoint:
    """Exact time-t image of pt under the special flow; t may be negative.

    The crossing count n satisfies f^{(n)}(x) <= s + t < f^{(n+1)}(x); it is
    located from a float estimate and then certified by exact comparisons.
    Since f >= min f > 0, |n| <= (|t| + s)/min f + 1, which bounds the
    correction loops.
    """
    basis = f.basis
    target = pt.s + _exact_time(basis, t)
    a = float(f.min_value)
    budget = int((abs(float(target))) / a) + 4
    n = int(np.floor(float(target) / float(f.integral)))

    def b_sum(k: int) -> SymReal:
        return f.birkhoff(pt.x, k)

    steps = 0
    while b_sum(n).compare(target) > 0:
        n -= 1
        steps += 1
        if steps > budget:
            raise VerificationError("crossing-count search failed to bracket")
    while b_sum(n + 1).compare(target) <= 0:
        n += 1
        steps += 1
        if steps > budget:
            raise VerificationError("crossing-count search failed to bracket")
    new_x = (pt.x + basis.linear(0, n)).mod1()
    new_s = target - b_sum(n)
    if new_s.sign() < 0 or (f.value_at(new_x) - new_s).sign() <= 0:
        raise VerificationError("flow image left the phase space")
    return SpecialFlowPoint(new_x, new_s)


class _RoofFloat:
    """Float shadow of a roof for vectorized evaluation."""

    def __init__(self, f: RoofPC):
        self.bounds = np.array([float(x) for x in f.xi])
        self.values = np.array([float(v) for v in f.values])
        self.p = f.p

    def __call__(self, xs: np.ndarray) -> np.ndarray:
        idx = (np.searchsorted(self.bounds, xs, side="right") - 1) % self.p
        return self.values[idx]


def flow_map_batch(
    f: RoofPC, xs: np.ndarray, ss: np.ndarray, t: float
) -> tuple[np.ndarray, np.ndarray]:
    """Float time-t image of sample arrays (xs, ss); returns new arrays.

    Active-mask simulation: subtract whole roof values while the remaining
    height budget allows, stepping the base point by alpha each time; the
    backward loop handles negative budgets symmetrically.
    """
    roof = _RoofFloat(f)
    alpha = f.basis.ctx.alpha_float
    x = np.mod(np.asarray(xs, dtype=np.float64), 1.0)
    rem = np.asarray(ss, dtype=np.float64) + float(t)
    max_iter = int((np.max(np.abs(rem)) + float(f.max_value)) / float(f.min_value)) + 4

    fx = roof(x)
    active = rem >= fx
    it = 0
    while active.any():
        rem[active] -= fx[active]
        x[active] = np.mod(x[active] + alpha, 1.0)
        fx[active] = roof(x[active])
        active = rem >= fx
        it += 1
        if it > max_iter:
            raise VerificationError("batch flow failed to terminate")
    active = rem < 0
    while active.any():
        x[active] = np.mod(x[active] - alpha, 1.0)
        step = roof(x[active])
        rem[active] += step
        active = rem < 0
        it += 1
        if it > max_iter:
            raise VerificationError("batch flow failed to terminate")
    return x, rem


# -- rectangles and exact measure ------------------------------------------------------


@dataclass(frozen=True)
class Rect:
    """Product [x0, x1) x [s0, s1) with exact endpoints, 0 <= x0 < x1 <= 1."""

    x0: SymReal
    x1: SymReal
    s0: SymReal
    s1: SymReal


def rect(basis: Basis, x0, x1, s0, s1) -> Rect:
    r = Rect(basis.parse(x0), basis.parse(x1), basis.parse(s0), basis.parse(s1))
    one = basis.one
    if r.x0.sign() < 0 or (one - r.x1).sign() < 0 or r.x0.compare(r.x1) >= 0:
        raise ConfigError("rectangle needs 0 <= x0 < x1 <= 1")
    if r.s0.sign() < 0 or r.s0.compare(r.s1) >= 0:
        raise ConfigError("rectangle needs 0 <= s0 < s1")
    return r


def rects_from_config(basis: Basis, cfg) -> list[Rect]:
    """Parse [{"x": [x0, x1], "s": [s0, s1]}, ...] or [[x0,x1,s0,s1], ...]."""
    out = []
    for item in cfg:
        if isinstance(item, dict):
            out.append(rect(basis, item["x"][0], item["x"][1], item["s"][0], item["s"][1]))
        else:
            out.append(rect(basis, *item))
    return out


def full_space(f: RoofPC) -> list[Rect]:
    """X^f itself as one under-roof rectangle per cell (the wrapping cell
    contributes two)."""
    basis = f.basis
    zero, one = basis.rational(0), basis.one
    out = []
    for i, v in enumerate(f.values):
        if i + 1 < f.p:
            out.append(Rect(f.xi[i], f.xi[i + 1], zero, v))
        else:
            out.append(Rect(f.xi[i], one, zero, v))
    if f.xi[0].sign() > 0:
        out.append(Rect(zero, f.xi[0], zero, f.values[-1]))
    return out


def _cells_meeting(f: RoofPC, x0: SymReal, x1: SymReal):
    """Indices of roof cells whose interior meets the open interval (x0, x1),
    x0 < x1 within [0, 1]."""
    hit = []
    one = f.basis.one
    for i in range(f.p):
        lo = f.xi[i]
        hi = f.xi[i + 1] if i + 1 < f.p else one
        if lo.compare(x1) < 0 and hi.compare(x0) > 0:
            hit.append(i)
    # wrapped tail [0, xi_1) belongs to the last cell
    if f.xi[0].sign() > 0 and x0.compare(f.xi[0]) < 0 and f.p - 1 not in hit:
        hit.append(f.p - 1)
    return hit


def _check_under_roof(f: RoofPC, r: Rect) -> None:
    for i in _cells_meeting(f, r.x0, r.x1):
        if f.values[i].compare(r.s1) < 0:
            raise PreconditionError("rectangle protrudes above the roof")


def _check_disjoint(rects: Sequence[Rect]) -> None:
    for a, b in itertools.combinations(rects, 2):
        x_overlap = a.x0.compare(b.x1) < 0 and b.x0.compare(a.x1) < 0
        s_overlap = a.s0.compare(b.s1) < 0 and b.s0.compare(a.s1) < 0
        if x_overlap and s_overlap:
            raise PreconditionError("rectangles in a union must be disjoint")


@dataclass(frozen=True)
class MeasureRatio:
    """Exact normalized measure: area / integral(f)."""

    area: SymReal
    total: SymReal

    def __float__(self) -> float:
        return float(self.area) / float(self.total)

    @property
    def value(self) -> float:
        return float(self)

    def is_one(self) -> bool:
        return (self.area - self.total).is_zero()

    def is_zero(self) -> bool:
        return self.area.is_zero()


def phase_measure(f: RoofPC, rects: Sequence[Rect]) -> MeasureRatio:
    """Exact normalized measure of a disjoint union of under-roof rectangles.

    The area product needs one side of each rectangle in Q + Q*alpha, which
    every fixture satisfies; otherwise the partial multiplication raises.
    """
    basis = f.basis
    _check_disjoint(rects)
    area = basis.zero
    for r in rects:
        _check_under_roof(f, r)
        area = area + (r.x1 - r.x0) * (r.s1 - r.s0)
    return MeasureRatio(area=area, total=f.integral)


def rect_contains(r: Rect, pt: SpecialFlowPoint) -> bool:
    """Exact membership of a symbolic flow point."""
    return (
        r.x0.compare(pt.x) <= 0
        and pt.x.compare(r.x1) < 0
        and r.s0.compare(pt.s) <= 0
        and pt.s.compare(r.s1) < 0
    )


def _rects_float(rects: Sequence[Rect]) -> np.ndarray:
    return np.array(
        [[float(r.x0), float(r.x1), float(r.s0), float(r.s1)] for r in rects]
    ).reshape(-1, 4)


def _member_float(xs: np.ndarray, ss: np.ndarray, arr: np.ndarray) -> np.ndarray:
    hit = np.zeros(xs.shape, dtype=bool)
    for x0, x1, s0, s1 in arr:
        hit |= (xs >= x0) & (xs < x1) & (ss >= s0) & (ss < s1)
    return hit


# -- Monte Carlo correlation ----------------------------------------------------------

_SHARD = 1 << 13


def sample_phase_space(
    f: RoofPC, n_samples: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic uniform sample of X^f by rejection from
    [0,1) x [0, max f); sharded child streams merged in spawn order."""
    roof = _RoofFloat(f)
    top = float(f.max_value)
    ss = np.random.SeedSequence(seed)
    xs_parts, ss_parts = [], []
    got = 0
    while got < n_samples:
        child = ss.spawn(1)[0]
        rng = np.random.default_rng(child)
        xs = rng.random(_SHARD)
        hs = rng.random(_SHARD) * top
        keep = hs < roof(xs)
        xs_parts.append(xs[keep])
        ss_parts.append(hs[keep])
        got += int(keep.sum())
    xs = np.concatenate(xs_parts)[:n_samples]
    hs = np.concatenate(ss_parts)[:n_samples]
    return xs, hs


@dataclass(frozen=True)
class CorrelationEstimate:
    t: float
    estimate: float
    radius: float
    n_samples: int
    seed: int
    hits: int


def correlation(
    f: RoofPC,
    rects_a: Sequence[Rect],
    rects_b: Sequence[Rect],
    t: float,
    n_samples: int,
    seed: int,
) -> CorrelationEstimate:
    """Monte Carlo estimate of the normalized measure of T^f_{-t}A intersect B.

    Samples z uniform in X^f, counts z in B with T^f_t(z) in A; the radius is
    the 95% binomial half-width 1.96*sqrt(p(1-p)/n).
    """
    if n_samples < 1000:
        raise PreconditionError("correlation needs n_samples >= 1000")
    xs, hs = sample_phase_space(f, n_samples, seed)
    in_b = _member_float(xs, hs, _rects_float(rects_b))
    fx, fs = flow_map_batch(f, xs, hs, float(t))
    in_a = _member_float(fx, fs, _rects_float(rects_a))
    hits = int((in_a & in_b).sum())
    p_hat = hits / n_samples
    radius = 1.96 * float(np.sqrt(max(p_hat * (1 - p_hat), 1.0 / n_samples) / n_samples))
    return CorrelationEstimate(
        t=float(t),
        estimate=p_hat,
        radius=radius,
        n_samples=n_samples,
        seed=seed,
        hits=hits,
    )


# -- Birkhoff sums at denominator times: rigidity atoms and the deviation table -------


@dataclass(frozen=True)
class Atom:
    value: SymReal
    value_float: float
    mass: Fraction


@dataclass(frozen=True)
class RigidityReport:
    n: int
    qn: int
    t_n: float
    atoms: tuple[Atom, ...]
    gamma: SymReal
    u: Fraction
    t0: float
    d_set_size: int
    grid_size: int
    fixups: int

    @property
    def mass_total(self) -> Fraction:
        return sum((a.mass for a in self.atoms), Fraction(0))


def _jump_combination_set(f: RoofPC) -> dict[tuple, SymReal]:
    """D = {sum_i k_i d_i : k_i in {-2..2}} keyed by exact coordinates."""
    out: dict[tuple, SymReal] = {}
    for ks in itertools.product(range(-2, 3), repeat=f.p):
        val = f.basis.zero
        for k, dd in zip(ks, f.d):
            if k:
                val = val + dd.scale(k)
        out.setdefault(val.coords, val)
    return out


def _deviations(f: RoofPC, qn: int, grid_size: int):
    """Unique exact values of f^{(qn)} - qn*c_f over the grid, with counts."""
    counts, fixups = grid_cell_counts(f.basis, grid_size, qn, f.xi, margin=MARGIN)
    uniq, inverse, mult = np.unique(
        counts, axis=0, return_inverse=True, return_counts=True
    )
    shift = f.integral.scale(-qn)
    vals = []
    for row in uniq:
        v = shift
        for c, value in zip(row, f.values):
            if c:
                v = v + value.scale(int(c))
        vals.append(v)
    return vals, inverse, mult, fixups, counts


def qn_distribution(f: RoofPC, n: int, grid_size: int = 10_000) -> RigidityReport:
    """Exact atom distribution of f^{(q_n)} - q_n*c_f on a uniform grid.

    Every deviation value must land in gamma + D where gamma is the value at
    x = 0 and D is the {-2..2} jump-combination set; that containment is a
    theorem (per-cell occupancies differ from q_n*Leb by at most 2), so its
    failure raises VerificationError.  u is the largest atom mass and t0 the
    value of that heaviest atom.
    """
    if grid_size < 1000:
        raise PreconditionError("qn_distribution needs grid_size >= 1000")
    qn = f.basis.ctx.q(n)
    vals, inverse, mult, fixups, _ = _deviations(f, qn, grid_size)
    d_set = _jump_combination_set(f)
    anchor = vals[int(inverse[0])]
    for v in vals:
        if (v - anchor).coords not in d_set:
            raise VerificationError(
                "deviation value escaped the jump-combination set"
            )
    atoms = [
        Atom(value=v, value_float=float(v), mass=Fraction(int(m), grid_size))
        for v, m in zip(vals, mult)
    ]
    atoms.sort(key=lambda a: a.value_float)
    best = max(atoms, key=lambda a: (a.mass, -a.value_float))
    total = sum((a.mass for a in atoms), Fraction(0))
    if total != 1:
        raise VerificationError("atom masses must sum to one on a full grid")
    return RigidityReport(
        n=n,
        qn=qn,
        t_n=qn * float(f.integral),
        atoms=tuple(atoms),
        gamma=anchor,
        u=best.mass,
        t0=best.value_float,
        d_set_size=len(d_set),
        grid_size=grid_size,
        fixups=fixups,
    )


@dataclass(frozen=True)
class DKRow:
    n: int
    qn: int
    max_deviation: SymReal
    max_deviation_float: float
    float_path_max: float
    variation_float: float
    unique_vectors: int
    fixups: int

    @property
    def float_consistent(self) -> bool:
        return abs(self.max_deviation_float - self.float_path_max) <= 1e-9


def dk_audit(f: RoofPC, n_max: int, grid_size: int = 10_000) -> list[DKRow]:
    """Max grid deviation |f^{(q_n)} - q_n*c_f| for n = 1..n_max.

    Each row's exact maximum is certified <= Var f (a theorem for denominator
    times; violation raises), and recomputed through a pure float route for
    the dual-path consistency check.
    """
    ctx = f.basis.ctx
    var = f.variation
    var_f = float(var)
    v_float = np.array([float(v) for v in f.values])
    cf_float = float(f.integral)
    rows = []
    for n in range(1, n_max + 1):
        qn = ctx.q(n)
        vals, _, _, fixups, counts = _deviations(f, qn, grid_size)
        best = None
        for v in vals:
            mag = v if v.sign() >= 0 else -v
            if best is None or mag.compare(best) > 0:
                best = mag
            if mag.compare(var) > 0:
                raise VerificationError("deviation exceeded the variation bound")
        float_dev = np.max(np.abs(counts @ v_float - qn * cf_float))
        rows.append(
            DKRow(
                n=n,
                qn=qn,
                max_deviation=best,
                max_deviation_float=float(best),
                float_path_max=float(float_dev),
                variation_float=var_f,
                unique_vectors=len(vals),
                fixups=fixups,
            )
        )
    return rows
