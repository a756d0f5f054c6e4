"""Certified orbit counting over circle rotations.

The hot loops run in float64 over numpy arrays; every decision whose float
margin is smaller than ``MARGIN`` is re-decided exactly through the symbolic
layer.  This keeps results exact (integer counts, correct cell indices) at
vectorized speed.

Error budget: with alpha and the base point held as float64, the j-th orbit
point frac(x + j*alpha) carries error below j * ulp(alpha) + a few ulp, which
is under 3e-10 for j up to 4e6.  Boundary floats add one ulp each.  MARGIN is
1e-8, so any comparison that is not within MARGIN of a boundary is already
certain; the rare near-boundary points (vanishing expected fraction) fall back
to exact sign evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .symreal import SymReal

MARGIN = 1e-8
MAX_CERTIFIED_STEPS = 4_000_000


def _check_steps(n: int) -> None:
    if n > MAX_CERTIFIED_STEPS:
        raise ValueError(
            f"certified float counting is validated for at most "
            f"{MAX_CERTIFIED_STEPS} steps, got {n}"
        )


_ORBIT_BASE: dict[tuple[float, int], np.ndarray] = {}


def _orbit_base(alpha_f: float, direction: int, n: int) -> np.ndarray:
    """frac(direction*j*alpha) for j = 0..n-1, cached across calls.

    The base array depends only on alpha and the direction, so repeated scans
    over long windows (different start points, same rotation) reuse it.
    """
    key = (alpha_f, direction)
    base = _ORBIT_BASE.get(key)
    if base is None or base.size < n:
        grown = 2 * base.size if base is not None else 0
        size = max(n, min(grown, MAX_CERTIFIED_STEPS + 1))
        base = np.mod(direction * alpha_f * np.arange(size, dtype=np.float64), 1.0)
        _ORBIT_BASE[key] = base
    return base[:n]


def orbit_floats(x: SymReal, n: int, direction: int = 1) -> np.ndarray:
    """frac(x + direction*j*alpha) for j = 0..n-1, as float64."""
    _check_steps(n)
    alpha_f = x.basis.ctx.alpha_float
    x_f = float(x.mod1())
    pts = x_f + _orbit_base(alpha_f, direction, n)
    pts -= pts >= 1.0  # both terms sit in [0, 1), so one wrap suffices
    return pts


def exact_point(x: SymReal, j: int, direction: int = 1) -> SymReal:
    """(x + direction*j*alpha) mod 1, exact."""
    return (x + x.basis.linear(0, direction * j)).mod1()


def _circle_close(pts: np.ndarray, b: float, margin: float) -> np.ndarray:
    d = np.abs(pts - b)
    return np.minimum(d, 1.0 - d) < margin


def locate_cell(point: SymReal, boundaries: Sequence[SymReal]) -> int:
    """Exact index i of the cyclic cell [b_i, b_{i+1}) containing the point.

    ``boundaries`` must be strictly increasing within [0, 1); the last cell
    wraps around through 1.  ``point`` must already lie in [0, 1).
    """
    p = len(boundaries)
    idx = p - 1
    for i in range(p):
        c = point.compare(boundaries[i])
        if c < 0:
            return (i - 1) % p
        if c == 0:
            return i
        idx = i
    return idx


@dataclass(frozen=True)
class CellCounts:
    counts: np.ndarray
    fixups: int


def cell_indices(
    x: SymReal,
    n: int,
    boundaries: Sequence[SymReal],
    direction: int = 1,
    margin: float = MARGIN,
) -> tuple[np.ndarray, int]:
    """Exact cell index of frac(x + direction*j*alpha) for j = 0..n-1.

    Returns (indices int64 array, number of exact fixups applied).
    """
    pts = orbit_floats(x, n, direction)
    bounds_f = np.array([float(b) for b in boundaries])
    p = len(boundaries)
    idx = (np.searchsorted(bounds_f, pts, side="right") - 1) % p
    unc = np.zeros(n, dtype=bool)
    for b in bounds_f:
        unc |= _circle_close(pts, b, margin)
    fix = np.nonzero(unc)[0]
    for j in fix:
        idx[j] = locate_cell(exact_point(x, int(j), direction), boundaries)
    return idx.astype(np.int64), int(fix.size)


def cell_histogram(
    x: SymReal,
    n: int,
    boundaries: Sequence[SymReal],
    direction: int = 1,
    margin: float = MARGIN,
) -> CellCounts:
    """Exact counts of orbit points per cyclic cell; sums to n."""
    idx, fixups = cell_indices(x, n, boundaries, direction, margin)
    counts = np.bincount(idx, minlength=len(boundaries))
    return CellCounts(counts=counts, fixups=fixups)


def _exact_in_arc(point: SymReal, lo: SymReal, hi: SymReal) -> bool:
    """point in the half-open circle arc (lo, hi]; all three in [0, 1)."""
    if lo.compare(hi) < 0:
        return lo.compare(point) < 0 and hi.compare(point) >= 0
    return lo.compare(point) < 0 or point.compare(hi) <= 0


def arc_membership(
    xi: SymReal,
    n: int,
    lo: SymReal,
    hi: SymReal,
    direction: int = -1,
    margin: float = MARGIN,
) -> tuple[np.ndarray, int]:
    """Indicator of frac(xi + direction*j*alpha) in (lo, hi] for j = 0..n-1.

    Endpoints are taken mod 1; the arc may wrap.  Returns (bool array, number
    of exact fixups).
    """
    pts = orbit_floats(xi, n, direction)
    lo = lo.mod1()
    hi = hi.mod1()
    lo_f, hi_f = float(lo), float(hi)
    length = hi_f - lo_f
    if length < 0.0:
        length += 1.0
    # v is the circle distance walked from lo to the point; the arc is
    # exactly v in (0, length], wrapped or not
    v = pts - lo_f
    v += v < 0.0
    mask = (v > 0.0) & (v <= length)
    unc = (v < margin) | (v > 1.0 - margin) | (np.abs(v - length) < margin)
    fix = np.nonzero(unc)[0]
    for j in fix:
        mask[j] = _exact_in_arc(exact_point(xi, int(j), direction), lo, hi)
    return mask, int(fix.size)


def grid_cell_counts(
    basis,
    grid_size: int,
    n: int,
    boundaries: Sequence[SymReal],
    margin: float = MARGIN,
) -> tuple[np.ndarray, int]:
    """Exact per-cell occupancy of the n-step orbit of every grid point k/G.

    Returns (counts[G, p] int64 with rows summing to n, fixups).  The j-loop
    classifies the whole grid per iterate; near-boundary decisions are redone
    exactly against the rational grid point.
    """
    _check_steps(n)
    alpha_f = basis.ctx.alpha_float
    g = grid_size
    p = len(boundaries)
    bounds_f = np.array([float(b) for b in boundaries])
    grid = np.arange(g, dtype=np.float64) / g
    counts = np.zeros((g, p), dtype=np.int64)
    rows = np.arange(g)
    pending: list[tuple[int, int]] = []
    for j in range(n):
        pts = np.mod(grid + j * alpha_f, 1.0)
        idx = (np.searchsorted(bounds_f, pts, side="right") - 1) % p
        counts[rows, idx] += 1
        unc = np.zeros(g, dtype=bool)
        for b in bounds_f:
            unc |= _circle_close(pts, b, margin)
        for k in np.nonzero(unc)[0]:
            pending.append((int(k), j))
    for k, j in pending:
        pt = (k / g + j * alpha_f) % 1.0
        float_idx = int((np.searchsorted(bounds_f, pt, side="right") - 1) % p)
        true_idx = locate_cell(
            exact_point(basis.rational(Fraction(k, g)), j, 1), boundaries
        )
        if true_idx != float_idx:
            counts[k, float_idx] -= 1
            counts[k, true_idx] += 1
    return counts, len(pending)


def sort_unique(values: Sequence[SymReal], margin: float = 1e-9) -> list[SymReal]:
    """Sort SymReals ascending and drop exact duplicates.

    Floats order everything farther apart than ``margin``; closer pairs are
    ordered by exact comparison, so the result is exactly sorted.
    """
    keyed = sorted(values, key=float)
    out: list[SymReal] = []
    for v in keyed:
        placed = False
        k = len(out)
        while k > 0 and float(v) - float(out[k - 1]) < margin:
            c = v.compare(out[k - 1])
            if c == 0:
                placed = True
                break
            if c > 0:
                break
            k -= 1
        if placed:
            continue
        out.insert(k, v)
    return out
