"""Constructive shadowing engine for special flows over badly-approximable
rotations with piecewise-constant roofs.

For a close pair of base points x, y the Birkhoff difference
Delta(n) = f^{(n)}(x) - f^{(n)}(y) is a step function of n whose increments
are jump combinations; on the scale window [q_s, q_{s+4}) fixed by
2/q_{s+1} <= ||x - y|| < 2/q_s it takes values in the finite set
V = {sum_i r_i d_i : r_i integer, |r_i| <= R} and is constant and nonzero on
a long run [M, M + L].  :func:`find_witness` locates that run exactly and
certifies every quantitative guarantee; :func:`verify_witness` recomputes the
run through an independent forward-orbit route; :func:`verify_R_property`
converts base-iterate runs into flow-time shadowing statistics for the metric
d = circle distance + height distance.

All constants are exact rationals derived from the certified
badly-approximable constant c of the rotation:

    R = 2/c^5 + 1,   kappa = c^10 / (4 p H^2 (1 + c^5)),
    delta(N) = c^7 / (2 p H^2 (1 + c^5) N),

where p is the jump count and H bounds the rational structure of
discontinuity differences: every xi_i - xi_j in (Q+Q*alpha) \\ (Z+Z*alpha)
equals (m1 + m2*alpha)/h with h <= H and |m2| <= H.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .cf_arith import CFContext
from .counting import (
    MAX_CERTIFIED_STEPS,
    _orbit_base,
    arc_membership,
    cell_indices,
)
from .errors import PreconditionError, VerificationError
from .roof import RoofPC, check_p1
from .symreal import SymReal


# -- constants ---------------------------------------------------------------------


@dataclass(frozen=True)
class RatnerConstants:
    """Exact constants of the shadowing lemma for a given roof and rotation.

    V is not materialized: membership is certified by integer coefficient
    vectors with |r_i| <= floor(R) (the scan produces them for free), and
    f_numeric() enumerates the numeric images of F = V \\ {0} on demand.
    """

    c: Fraction
    C: int
    p: int
    H: int
    R: Fraction
    kappa: Fraction
    _delta_scale: Fraction  # delta(N) = _delta_scale / N

    def delta(self, n_floor: int) -> Fraction:
        if n_floor < 1:
            raise PreconditionError("delta(N) needs N >= 1")
        return self._delta_scale / n_floor

    @property
    def r_int(self) -> int:
        return int(self.R)


def _h_bound(f: RoofPC) -> int:
    """Smallest H covering all (Q+Q*alpha) \\ (Z+Z*alpha) differences."""
    h_max = 1
    for i in range(f.p):
        for j in range(i + 1, f.p):
            diff = f.xi[i] - f.xi[j]
            if not diff.is_linear():
                continue
            r, s = diff.coords[0], diff.coords[1]
            if r.denominator == 1 and s.denominator == 1:
                continue  # in Z + Z*alpha: handled by the orbit case, no H needed
            h = math.lcm(r.denominator, s.denominator)
            m2 = abs(int(s * h))
            h_max = max(h_max, h, m2)
    return h_max


def constants(f: RoofPC, ctx: CFContext) -> RatnerConstants:
    """Compute the exact constant pack; requires (P1).

    Without (P1) a jump combination with small coefficients can vanish, so 0
    could enter the run-value set and the nonzero-run guarantee dies; the
    computation refuses rather than producing vacuous constants.
    """
    p1 = check_p1(f)
    if not p1.holds:
        raise PreconditionError(
            f"(P1) fails (witness {p1.witness}); shadowing constants undefined"
        )
    c, _cert = ctx.bpq_constant()
    c = Fraction(c)
    p = f.p
    h = _h_bound(f)
    r_const = 2 / c**5 + 1
    kappa = c**10 / (4 * p * h * h * (1 + c**5))
    delta_scale = c**7 / (2 * p * h * h * (1 + c**5))
    if not 0 < kappa < 1:
        raise VerificationError("kappa must lie in (0, 1)")
    return RatnerConstants(
        c=c,
        C=ctx.digit_sup_plus_one,
        p=p,
        H=h,
        R=r_const,
        kappa=kappa,
        _delta_scale=delta_scale,
    )


def f_numeric(f: RoofPC, consts: RatnerConstants, tol: float = 1e-9) -> np.ndarray:
    """Sorted distinct numeric images of F = V \\ {0}.

    Enumerates (2*floor(R)+1)^p integer coefficient grids vectorized; refuses
    when that grid is too large to enumerate (pass an explicit P instead).
    """
    r = consts.r_int
    side = 2 * r + 1
    if side**f.p > 4_000_000:
        raise PreconditionError(
            "F is too large to enumerate numerically; supply P explicitly"
        )
    coeffs = np.arange(-r, r + 1, dtype=np.float64)
    total = np.zeros(1)
    for dd in f.d:
        total = (total[:, None] + coeffs[None, :] * float(dd)).ravel()
    total = np.unique(np.round(total / tol)) * tol
    return total[np.abs(total) > tol]


# -- witness scan ---------------------------------------------------------------------


@dataclass(frozen=True)
class RunSegment:
    """Maximal constancy interval of Delta: value on n in [start, end]."""

    start: int
    end: int
    value: SymReal

    @property
    def length(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class WitnessReport:
    s: int
    window: tuple[int, int]  # [q_s, q_{s+4})
    M: int
    L: int
    rho: SymReal
    segments: tuple[RunSegment, ...]
    counts_end: tuple[int, ...]  # C_i(q_{s+4}) per discontinuity
    j_interval: tuple[int, int]  # longest zero-free interval containing the run
    distance: float
    kappa: Fraction
    N: int
    fixups: int

    @property
    def run_ratio(self) -> Fraction:
        return Fraction(self.L, self.M)


def _circle_distance(u: SymReal) -> SymReal:
    """||u|| = distance of u to the nearest integer, exact."""
    frac = u.mod1()
    other = u.basis.one - frac
    return frac if frac.compare(other) <= 0 else other


def _scale_index(ctx: CFContext, dist: SymReal) -> int:
    """The s with 2/q_{s+1} <= dist < 2/q_s (dist < 1/2 guarantees s >= 1)."""
    two = dist.basis.rational(2)
    s = 1
    while (dist.scale(ctx.q(s + 1)) - two).sign() < 0:
        s += 1
        if s > 200:
            raise PreconditionError("pair distance is zero or vanishingly small")
    if ctx.q(s + 4) > MAX_CERTIFIED_STEPS:
        # the scan window [q_s, q_{s+4}) must stay inside the certified range
        raise PreconditionError("pair too close: scan window beyond certified range")
    return s


def find_witness(
    f: RoofPC,
    ctx: CFContext,
    x,
    y,
    n_floor: int,
    consts: RatnerConstants | None = None,
) -> WitnessReport:
    """Locate the longest constant nonzero run of Delta(n) on [q_s, q_{s+4}).

    Exact throughout: orbit membership in the arc (x, y] uses certified float
    prefiltering with exact boundary fixups, run values are SymReal, and all
    lemma guarantees (rho in F via bounded counts, M, L >= N, L/M >= kappa,
    run maximality, the zero-free-interval pigeonhole) are asserted; a
    failure raises VerificationError since it would falsify the
    implementation, not the theorem.
    """
    basis = f.basis
    if consts is None:
        consts = constants(f, ctx)
    xv = basis.parse(x).mod1()
    yv = basis.parse(y).mod1()
    if (xv - yv).is_zero():
        raise PreconditionError("x and y must differ as circle points")
    dist = _circle_distance(xv - yv)
    delta = consts.delta(n_floor)
    if (dist - basis.rational(delta)).sign() >= 0:
        raise PreconditionError(f"||x - y|| >= delta(N) = {delta}")

    s = _scale_index(ctx, dist)
    lo, hi = ctx.q(s), ctx.q(s + 4)

    # count over the SHORT arc between x and y: the R bound holds there, and
    # since the jumps sum to zero the complementary arc only flips the sign
    forward = (yv - xv).mod1()
    if (forward.scale(2) - basis.one).sign() < 0:
        arc_lo, arc_hi, sign = xv, yv, 1
    else:
        arc_lo, arc_hi, sign = yv, xv, -1

    member = np.zeros((f.p, hi), dtype=bool)
    fixups = 0
    for i, xi_i in enumerate(f.xi):
        mask, fix = arc_membership(xi_i, hi, arc_lo, arc_hi, direction=-1)
        member[i] = mask
        fixups += fix
    cum = np.zeros((f.p, hi + 1), dtype=np.int32)
    np.cumsum(member, axis=1, dtype=np.int32, out=cum[:, 1:])

    counts_end = tuple(int(cum[i, hi]) for i in range(f.p))
    for i, ce in enumerate(counts_end):
        if ce > consts.r_int:
            raise VerificationError(
                f"orbit of xi_{i+1} hit the arc {ce} times, above R = {consts.R}"
            )

    # exact zero-pattern table: which subsets of jumps sum to zero
    zero_pattern = np.zeros(1 << f.p, dtype=bool)
    for pat in range(1 << f.p):
        tot = basis.zero
        for i in range(f.p):
            if pat >> i & 1:
                tot = tot + f.d[i]
        zero_pattern[pat] = tot.is_zero()

    weights = (1 << np.arange(f.p)).astype(np.uint8)
    patterns = (member[:, lo : hi - 1].astype(np.uint8).T @ weights).astype(np.uint8)
    # Delta(n+1) != Delta(n) exactly when the step-n jump pattern is nonzero
    change = ~zero_pattern[patterns]
    starts = [int(lo)] + [int(v) + lo + 1 for v in np.nonzero(change)[0]]

    def delta_at(n: int) -> SymReal:
        tot = basis.zero
        for i in range(f.p):
            ci = sign * int(cum[i, n])
            if ci:
                tot = tot + f.d[i].scale(ci)
        return tot

    segments = []
    for k, st in enumerate(starts):
        en = (starts[k + 1] - 1) if k + 1 < len(starts) else hi - 1
        segments.append(RunSegment(start=st, end=en, value=delta_at(st)))

    best = None
    for seg in segments:
        if seg.value.is_zero():
            continue
        if best is None or seg.length > best.length:
            best = seg
    if best is None:
        raise VerificationError("Delta vanished on the whole scan window")

    m_run, l_run, rho = best.start, best.length - 1, best.value

    # maximality: the run is bounded by a genuine change or the window edge
    if m_run > lo and not (delta_at(m_run - 1) - rho).is_zero():
        pass
    elif m_run == lo:
        pass
    else:
        raise VerificationError("run start is not maximal")
    if not (delta_at(m_run + l_run) - rho).is_zero():
        raise VerificationError("run value drifted before the recorded end")

    # longest zero-free interval and the pigeonhole length bound
    j_best = (m_run, m_run + l_run)
    cur = None
    for seg in segments:
        if seg.value.is_zero():
            cur = None
            continue
        cur = (cur[0], seg.end) if cur else (seg.start, seg.end)
        if cur[1] - cur[0] > j_best[1] - j_best[0]:
            j_best = cur
    j_len = j_best[1] - j_best[0] + 1
    if (l_run + 1) * (consts.r_int * f.p + 1) < j_len:
        raise VerificationError("run shorter than the pigeonhole bound allows")

    if m_run < n_floor or l_run < n_floor:
        raise VerificationError(f"M = {m_run}, L = {l_run} must both be >= N = {n_floor}")
    if Fraction(l_run, m_run) < consts.kappa:
        raise VerificationError("L/M fell below kappa")

    return WitnessReport(
        s=s,
        window=(lo, hi),
        M=m_run,
        L=l_run,
        rho=rho,
        segments=tuple(segments),
        counts_end=counts_end,
        j_interval=j_best,
        distance=float(dist),
        kappa=consts.kappa,
        N=n_floor,
        fixups=fixups,
    )


# -- independent verification ----------------------------------------------------------


@dataclass(frozen=True)
class WitnessVerification:
    ok: bool
    unique_rows: int
    anchors_checked: int


def verify_witness(f: RoofPC, ctx: CFContext, x, y, report: WitnessReport) -> WitnessVerification:
    """Re-verify Delta(n) = rho on [M, M+L] through the forward-orbit route.

    Independent of the scan: classifies the forward orbits of x and y into
    roof cells (certified), forms the per-cell occupancy difference at every
    n in the run where it can change, and checks that each distinct
    difference row contracts against the cell values to exactly rho.  The
    two run endpoints are additionally anchored by whole-prefix cell counts
    assembled through an unrelated reduction.
    """
    basis = f.basis
    xv = basis.parse(x).mod1()
    yv = basis.parse(y).mod1()
    m_run, l_run = report.M, report.L
    n_hi = m_run + l_run + 1

    idx_x, _ = cell_indices(xv, n_hi, f.xi, direction=1)
    idx_y, _ = cell_indices(yv, n_hi, f.xi, direction=1)

    # the occupancy-difference row moves only at n = j+1 with
    # idx_x[j] != idx_y[j], so it is enough to evaluate it there
    change_j = np.nonzero(idx_x != idx_y)[0]
    ns = {m_run, m_run + l_run}
    ns.update(
        int(j) + 1 for j in change_j if m_run <= int(j) + 1 <= m_run + l_run
    )
    ns_arr = np.array(sorted(ns), dtype=np.int64)
    edges = np.concatenate(([0], ns_arr))

    def prefix_counts(idx: np.ndarray) -> np.ndarray:
        # counts[k, c] = #{j < ns_arr[k] : idx[j] = c}
        out = np.empty((ns_arr.size, f.p), dtype=np.int64)
        for c in range(f.p):
            seg = np.add.reduceat(idx == c, edges, dtype=np.int64)
            out[:, c] = np.cumsum(seg[: ns_arr.size])
        return out

    rows = prefix_counts(idx_x) - prefix_counts(idx_y)

    seen: set[tuple[int, ...]] = set()
    for row in rows:
        key = tuple(int(c) for c in row)
        if key in seen:
            continue
        seen.add(key)
        tot = basis.zero
        for cell_count, v in zip(key, f.values):
            if cell_count:
                tot = tot + v.scale(cell_count)
        if not (tot - report.rho).is_zero():
            raise VerificationError("forward-orbit route contradicts the witness run")

    anchors = 0
    for n in (m_run, m_run + l_run):
        direct = np.bincount(idx_x[:n], minlength=f.p) - np.bincount(
            idx_y[:n], minlength=f.p
        )
        k = int(np.searchsorted(ns_arr, n))
        if not np.array_equal(direct, rows[k]):
            raise VerificationError("endpoint occupancy anchor mismatch")
        anchors += 1

    return WitnessVerification(ok=True, unique_rows=len(seen), anchors_checked=anchors)


# -- flow-time shadowing statistics ----------------------------------------------------


@dataclass(frozen=True)
class PairShadowing:
    s: int
    M_base: int
    L_base: int
    rho: float
    flow_window: tuple[int, int]
    fraction: float
    passed: bool


@dataclass(frozen=True)
class RPropertyStats:
    t0: float
    eps: float
    N: int
    trials: int
    pass_count: int
    pass_fraction: float
    passed: bool
    pairs: tuple[PairShadowing, ...]
    seed: int


def _orbit_prefix_sums(f: RoofPC, x0: float, n: int) -> np.ndarray:
    """B[k] = f^{(k)}(x0) for k = 0..n, float."""
    roof_bounds = np.array([float(b) for b in f.xi])
    roof_values = np.array([float(v) for v in f.values])
    alpha = f.basis.ctx.alpha_float
    pts = np.mod(x0, 1.0) + _orbit_base(alpha, 1, n)
    pts -= pts >= 1.0
    idx = (np.searchsorted(roof_bounds, pts, side="right") - 1) % f.p
    out = np.zeros(n + 1)
    np.cumsum(roof_values[idx], out=out[1:])
    return out


def sample_pair(f: RoofPC, ctx: CFContext, consts: RatnerConstants, n_floor: int, rng):
    """A random exact pair with ||x - y|| in [delta/2, delta)."""
    basis = f.basis
    delta = consts.delta(n_floor)
    scale = 10**12
    lo_m = int(delta / 2 * scale) + 1
    hi_m = int(delta * scale) - 1
    x = basis.rational(Fraction(int(rng.integers(0, scale)), scale))
    gap = Fraction(int(rng.integers(lo_m, hi_m + 1)), scale)
    if rng.integers(0, 2):
        gap = -gap
    return x, (x + basis.rational(gap)).mod1()


def verify_R_property(
    f: RoofPC,
    ctx: CFContext,
    t0: float,
    P: Sequence[float] | None,
    eps: float,
    n_floor: int,
    trials: int,
    seed: int,
    rho_override: float | None = None,
) -> RPropertyStats:
    """Empirical shadowing statistics in flow time.

    For each sampled close pair the base-iterate witness (M, L, rho) is
    rescaled to flow times n*t0: whenever both trajectories have completed the
    same number m in [M, M+L] of roof crossings, the phase distance
    d(S_{n t0}(x,0), S_{n t0 - rho}(y,0)) collapses to ||x-y|| exactly, so the
    hit fraction over the flow window must exceed 1 - eps.  The per-pair flow
    shift is -rho (the y-trajectory lags by the Birkhoff difference); it is
    checked against P.  rho_override replaces the correct shift for negative
    controls and disables the final assertion.
    """
    if t0 == 0:
        raise PreconditionError("t0 must be nonzero")
    if P is not None and len(P) == 0:
        raise PreconditionError("P must be nonempty")
    consts = constants(f, ctx)
    if P is None:
        p_arr = np.sort(f_numeric(f, consts))
    else:
        p_arr = np.sort(np.asarray([float(v) for v in P], dtype=np.float64))
    rng = np.random.default_rng(seed)
    pairs = []
    pass_count = 0
    for _ in range(trials):
        x, y = sample_pair(f, ctx, consts, n_floor, rng)
        rep = find_witness(f, ctx, x, y, n_floor, consts=consts)
        rho_f = float(rep.rho)
        shift = -rho_f if rho_override is None else rho_override
        pos = np.searchsorted(p_arr, shift)
        in_p = False
        for cand in (pos - 1, pos):
            if 0 <= cand < len(p_arr) and abs(p_arr[cand] - shift) < 1e-9:
                in_p = True
        n_steps = rep.M + rep.L + 1
        bx = _orbit_prefix_sums(f, float(x), n_steps)
        by = _orbit_prefix_sums(f, float(y), n_steps)
        t_lo, t_hi = bx[rep.M], bx[rep.M + rep.L + 1]
        n_first = int(np.ceil(t_lo / abs(t0))) + 1
        n_last = int(np.floor(t_hi / abs(t0))) - 1
        if n_last < n_first:
            pairs.append(
                PairShadowing(rep.s, rep.M, rep.L, rho_f, (0, -1), 0.0, False)
            )
            continue
        ns = np.arange(n_first, n_last + 1)
        times = ns * abs(t0)
        m_x = np.searchsorted(bx, times, side="right") - 1
        m_y = np.searchsorted(by, times + shift, side="right") - 1
        keep = (m_x >= rep.M) & (m_x <= rep.M + rep.L)
        same = keep & (m_x == m_y)
        h_x = times - bx[m_x]
        h_y = times + shift - by[m_y]
        xs_f = np.mod(float(x) + ctx.alpha_float * m_x, 1.0)
        ys_f = np.mod(float(y) + ctx.alpha_float * m_y, 1.0)
        circ = np.abs(xs_f - ys_f)
        circ = np.minimum(circ, 1.0 - circ)
        dist = circ + np.abs(h_x - h_y)
        good = same & (dist < eps)
        denom = int(keep.sum())
        frac = float(good.sum()) / denom if denom else 0.0
        ok = frac > 1 - eps and in_p
        pass_count += ok
        pairs.append(
            PairShadowing(
                s=rep.s,
                M_base=rep.M,
                L_base=rep.L,
                rho=rho_f,
                flow_window=(n_first, n_last),
                fraction=frac,
                passed=ok,
            )
        )
    frac_pass = pass_count / trials
    passed = frac_pass >= 1 - eps
    if rho_override is None and not passed:
        raise VerificationError(
            f"shadowing pass rate {frac_pass:.3f} fell below 1 - eps"
        )
    return RPropertyStats(
        t0=float(t0),
        eps=float(eps),
        N=n_floor,
        trials=trials,
        pass_count=pass_count,
        pass_fraction=frac_pass,
        passed=passed,
        pairs=tuple(pairs),
        seed=seed,
    )
