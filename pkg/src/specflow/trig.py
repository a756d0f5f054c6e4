"""Real trigonometric polynomials on the two-torus.

A polynomial is a finite sum over integer modes (kx, ky) of

    c * cos(2 pi (kx*x + ky*y)) + s * sin(2 pi (kx*x + ky*y)).

Storage keeps one representative per +-(kx, ky) pair (cosine is even, sine
is odd), with the zero mode carrying only a constant part.  Integer modes
make 1-periodicity in each coordinate structural, so shifting by integers
is the identity in closed form rather than up to rounding.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence

import numpy as np

from .errors import ConfigError

_TWO_PI = 2.0 * math.pi


def _canonical(kx: int, ky: int) -> tuple[tuple[int, int], int]:
    """Representative mode and the sign flip applied to the sine part."""
    if kx < 0 or (kx == 0 and ky < 0):
        return (-kx, -ky), -1
    return (kx, ky), 1


class TrigPoly:
    """Immutable trig polynomial with closed-form calculus helpers."""

    __slots__ = ("_terms", "_kx", "_ky", "_c", "_s")

    def __init__(self, terms: Mapping[tuple[int, int], tuple[float, float]] = ()):
        folded: dict[tuple[int, int], list[float]] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for (kx, ky), (c, s) in items:
            key, flip = _canonical(int(kx), int(ky))
            slot = folded.setdefault(key, [0.0, 0.0])
            slot[0] += float(c)
            slot[1] += flip * float(s)
        if (0, 0) in folded:
            folded[(0, 0)][1] = 0.0  # sin(0) contributes nothing
        self._terms = {
            k: (v[0], v[1]) for k, v in sorted(folded.items()) if v[0] or v[1]
        }
        modes = list(self._terms)
        self._kx = np.array([m[0] for m in modes], dtype=np.float64)
        self._ky = np.array([m[1] for m in modes], dtype=np.float64)
        self._c = np.array([self._terms[m][0] for m in modes])
        self._s = np.array([self._terms[m][1] for m in modes])

    # -- constructors --------------------------------------------------------------

    @classmethod
    def zero(cls) -> "TrigPoly":
        return cls({})

    @classmethod
    def constant(cls, value: float) -> "TrigPoly":
        return cls({(0, 0): (float(value), 0.0)})

    @classmethod
    def term(cls, kx: int, ky: int, cos: float = 0.0, sin: float = 0.0) -> "TrigPoly":
        return cls({(kx, ky): (cos, sin)})

    @classmethod
    def from_config(cls, entries: Sequence[Mapping]) -> "TrigPoly":
        """Parse [{"kx": int, "ky": int, "cos": float, "sin": float}, ...]."""
        terms = []
        for k, e in enumerate(entries):
            try:
                kx, ky = int(e["kx"]), int(e["ky"])
                c = float(e.get("cos", 0.0))
                s = float(e.get("sin", 0.0))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad trig term #{k}: {e!r}") from exc
            terms.append(((kx, ky), (c, s)))
        return cls(terms)

    def to_config(self) -> list[dict]:
        return [
            {"kx": kx, "ky": ky, "cos": c, "sin": s}
            for (kx, ky), (c, s) in self._terms.items()
        ]

    # -- structure -----------------------------------------------------------------

    @property
    def terms(self) -> dict[tuple[int, int], tuple[float, float]]:
        return dict(self._terms)

    @property
    def mean(self) -> float:
        """Integral over the torus: the constant term."""
        return self._terms.get((0, 0), (0.0, 0.0))[0]

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol and abs(s) <= tol for c, s in self._terms.values())

    def is_constant(self, tol: float = 0.0) -> bool:
        return all(
            (abs(c) <= tol and abs(s) <= tol)
            for k, (c, s) in self._terms.items()
            if k != (0, 0)
        )

    def degree(self) -> int:
        return max((abs(kx) + abs(ky) for kx, ky in self._terms), default=0)

    def __eq__(self, other) -> bool:
        return isinstance(other, TrigPoly) and self._terms == other._terms

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    def __repr__(self) -> str:
        if not self._terms:
            return "TrigPoly(0)"
        bits = []
        for (kx, ky), (c, s) in self._terms.items():
            if c:
                bits.append(f"{c:+g}*cos2pi({kx}x+{ky}y)")
            if s:
                bits.append(f"{s:+g}*sin2pi({kx}x+{ky}y)")
        return "TrigPoly(" + " ".join(bits) + ")"

    # -- algebra -------------------------------------------------------------------

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            return NotImplemented
        merged = list(self._terms.items()) + list(other._terms.items())
        return TrigPoly(merged)

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            return NotImplemented
        return self + (-other)

    def __neg__(self) -> "TrigPoly":
        return TrigPoly({k: (-c, -s) for k, (c, s) in self._terms.items()})

    def scale(self, a: float) -> "TrigPoly":
        a = float(a)
        return TrigPoly({k: (a * c, a * s) for k, (c, s) in self._terms.items()})

    def __rmul__(self, a) -> "TrigPoly":
        if isinstance(a, (int, float)):
            return self.scale(a)
        return NotImplemented

    def _to_complex(self) -> dict[tuple[int, int], complex]:
        """Complex Fourier coefficients z_k with f = sum z_k e^{2 pi i k.(x,y)}."""
        out: dict[tuple[int, int], complex] = {}
        for (kx, ky), (c, s) in self._terms.items():
            if (kx, ky) == (0, 0):
                out[(0, 0)] = out.get((0, 0), 0.0) + complex(c)
                continue
            z = complex(c, -s) / 2.0
            out[(kx, ky)] = out.get((kx, ky), 0.0) + z
            out[(-kx, -ky)] = out.get((-kx, -ky), 0.0) + z.conjugate()
        return out

    def __mul__(self, other) -> "TrigPoly":
        if isinstance(other, (int, float)):
            return self.scale(other)
        if not isinstance(other, TrigPoly):
            return NotImplemented
        conv: dict[tuple[int, int], complex] = {}
        for (ax, ay), za in self._to_complex().items():
            for (bx, by), zb in other._to_complex().items():
                key = (ax + bx, ay + by)
                conv[key] = conv.get(key, 0.0) + za * zb
        terms = []
        for (kx, ky), z in conv.items():
            if kx < 0 or (kx == 0 and ky < 0):
                continue  # handled via the conjugate partner
            if (kx, ky) == (0, 0):
                terms.append(((0, 0), (z.real, 0.0)))
            else:
                terms.append(((kx, ky), (2.0 * z.real, -2.0 * z.imag)))
        return TrigPoly(terms)

    # -- calculus ------------------------------------------------------------------

    def derivative(self, axis: int) -> "TrigPoly":
        """Partial derivative along x (axis 0) or y (axis 1)."""
        if axis not in (0, 1):
            raise ConfigError("axis must be 0 (x) or 1 (y)")
        out = {}
        for (kx, ky), (c, s) in self._terms.items():
            k = kx if axis == 0 else ky
            w = _TWO_PI * k
            if w:
                out[(kx, ky)] = (w * s, -w * c)
        return TrigPoly(out)

    def shift(self, dx: float, dy: float) -> "TrigPoly":
        """The translate (x, y) -> self(x + dx, y + dy).

        Integer translates return self unchanged (exact 1-periodicity).
        """
        if dx == int(dx) and dy == int(dy):
            return self
        out = {}
        for (kx, ky), (c, s) in self._terms.items():
            phi = _TWO_PI * (kx * dx + ky * dy)
            cp, sp = math.cos(phi), math.sin(phi)
            out[(kx, ky)] = (c * cp + s * sp, s * cp - c * sp)
        return TrigPoly(out)

    # -- evaluation ----------------------------------------------------------------

    def __call__(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        shape = np.broadcast(x, y).shape
        out = np.zeros(shape)
        for (kx, ky), (c, s) in self._terms.items():
            theta = _TWO_PI * (kx * x + ky * y)
            if c:
                out = out + c * np.cos(theta)
            if s:
                out = out + s * np.sin(theta)
        return out if shape else float(out)

    def eval_compiled(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Vector evaluation through precompiled mode arrays (hot loops)."""
        theta = _TWO_PI * (np.multiply.outer(x, self._kx) + np.multiply.outer(y, self._ky))
        return np.cos(theta) @ self._c + np.sin(theta) @ self._s

    def sup_bound(self) -> float:
        """sum_k |amplitude_k| >= sup |self|."""
        return sum(math.hypot(c, s) for c, s in self._terms.values())

    def lower_bound(self) -> float:
        """mean - sum of oscillating amplitudes <= inf self."""
        amp = sum(
            math.hypot(c, s) for k, (c, s) in self._terms.items() if k != (0, 0)
        )
        return self.mean - amp
