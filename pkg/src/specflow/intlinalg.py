"""Exact linear algebra over Q and Z used by the symbolic layer.

Two workhorses:

* :func:`rational_solve`: solve A x = b over Q by fraction-free Gaussian
  elimination, returning either a solution or a separating functional y with
  y A = 0, y.b != 0 (the certificate that b is outside the column span).
* :func:`integer_kernel`: a Z-basis of {n in Z^w : A n = 0} for a rational
  matrix A, computed by unimodular column reduction.  Because the kernel of a
  matrix is saturated (A(mn)=0 iff An=0), the returned basis generates *all*
  integer relations, not a finite-index sublattice.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence


def rational_solve(
    rows: Sequence[Sequence[Fraction]], target: Sequence[Fraction]
) -> tuple[list[Fraction] | None, list[Fraction] | None]:
    """Solve sum_j x_j * column_j = target over Q.

    ``rows`` is the matrix by rows (length = number of equations), ``target``
    the right-hand side.  Returns ``(x, None)`` on success (one solution, free
    variables set to 0) or ``(None, y)`` where y is a rational row vector with
    y*A = 0 and y*target != 0.
    """
    m = len(rows)
    n = len(rows[0]) if m else 0
    A = [[Fraction(v) for v in row] for row in rows]
    b = [Fraction(v) for v in target]
    # track elimination as E so that the current system is (E A) x = E b
    E = [[Fraction(1) if i == j else Fraction(0) for j in range(m)] for i in range(m)]
    pivots: list[tuple[int, int]] = []
    prow = 0
    for col in range(n):
        piv = next((r for r in range(prow, m) if A[r][col] != 0), None)
        if piv is None:
            continue
        A[prow], A[piv] = A[piv], A[prow]
        b[prow], b[piv] = b[piv], b[prow]
        E[prow], E[piv] = E[piv], E[prow]
        inv = 1 / A[prow][col]
        A[prow] = [v * inv for v in A[prow]]
        b[prow] *= inv
        E[prow] = [v * inv for v in E[prow]]
        for r in range(m):
            if r != prow and A[r][col] != 0:
                f = A[r][col]
                A[r] = [v - f * w for v, w in zip(A[r], A[prow])]
                b[r] -= f * b[prow]
                E[r] = [v - f * w for v, w in zip(E[r], E[prow])]
        pivots.append((prow, col))
        prow += 1
        if prow == m:
            break
    for r in range(prow, m):
        if b[r] != 0:
            return None, E[r]
    x = [Fraction(0)] * n
    for r, c in pivots:
        x[c] = b[r]
    return x, None


def integer_kernel(rows: Sequence[Sequence[Fraction]], width: int) -> list[list[int]]:
    """Z-basis of the integer kernel {n in Z^width : A n = 0}.

    Column operations by unimodular matrices reduce A row by row; the columns
    of the accumulated transform that end up annihilated by every row form the
    basis.  Vectors are primitivized and sign/order normalized so the output
    is deterministic.
    """
    introws: list[list[int]] = []
    for row in rows:
        fr = [Fraction(v) for v in row]
        den = 1
        for v in fr:
            den = den * v.denominator // gcd(den, v.denominator)
        introws.append([int(v * den) for v in fr])
    A = [list(r) for r in introws]
    U = [[1 if i == j else 0 for j in range(width)] for i in range(width)]
    active = list(range(width))
    for ri in range(len(A)):
        while True:
            nz = [c for c in active if A[ri][c] != 0]
            if len(nz) <= 1:
                break
            piv = min(nz, key=lambda c: abs(A[ri][c]))
            for c in nz:
                if c == piv:
                    continue
                f = A[ri][c] // A[ri][piv]
                if f:
                    for rr in range(len(A)):
                        A[rr][c] -= f * A[rr][piv]
                    for rr in range(width):
                        U[rr][c] -= f * U[rr][piv]
        nz = [c for c in active if A[ri][c] != 0]
        if nz:
            active.remove(nz[0])
    basis = [[U[r][c] for r in range(width)] for c in active]
    return sorted(_primitive(v) for v in basis)


def _primitive(vec: list[int]) -> list[int]:
    g = 0
    for v in vec:
        g = gcd(g, abs(v))
    if g > 1:
        vec = [v // g for v in vec]
    lead = next((v for v in vec if v != 0), 0)
    if lead < 0:
        vec = [-v for v in vec]
    return vec


def in_lattice(vec: Sequence[int], basis: Sequence[Sequence[int]]) -> bool:
    """Is the integer vector in the Z-span of the basis?

    The basis spans a saturated lattice here, so rational solvability with an
    integral solution is what is checked (exactly).
    """
    if not basis:
        return all(v == 0 for v in vec)
    rows = [[Fraction(b[i]) for b in basis] for i in range(len(vec))]
    x, _ = rational_solve(rows, [Fraction(v) for v in vec])
    if x is None:
        return False
    return all(c.denominator == 1 for c in x)
