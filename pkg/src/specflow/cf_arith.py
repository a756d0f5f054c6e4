"""Exact continued-fraction arithmetic for a fixed irrational rotation number.

A :class:`CFContext` owns the digit stream of an irrational alpha in (0,1),
its convergents p_n/q_n, and certified rational enclosures of alpha at any
requested precision.  Everything downstream (sign decisions, distances to the
integer lattice, orbit gap statistics) reduces to finite computations with
`fractions.Fraction`; floats only ever appear as advisory proxies.

Conventions.  Digits are 1-indexed: alpha = [0; a_1, a_2, ...].  Convergents
start at (p_0, q_0) = (0, 1) and satisfy

    q_{n+1} = a_{n+1} q_n + q_{n-1},     p_{n+1} = a_{n+1} p_n + p_{n-1},

so consecutive convergents bracket alpha and |alpha - p_n/q_n| lies strictly
between 1/(2 q_n q_{n+1}) and 1/(q_n q_{n+1}).
"""

from __future__ import annotations

import os
from bisect import insort
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Callable, Iterable, Sequence

from .errors import ConfigError, DigitSupplyError, PrecisionError

DEFAULT_PRECISION_CAP = 1 << 16
PRECISION_ENV = "SPECFLOW_PRECISION_CAP"

Half = Fraction(1, 2)


def precision_cap() -> int:
    """Bit cap for interval refinement, overridable via the environment."""
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return DEFAULT_PRECISION_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise PrecisionError(f"invalid {PRECISION_ENV}={raw!r}") from exc
    if cap < 8:
        raise PrecisionError(f"{PRECISION_ENV} must be at least 8 bits, got {cap}")
    return cap


@dataclass(frozen=True)
class LinForm:
    """Exact number r + s*alpha with rational r, s."""

    r: Fraction
    s: Fraction

    def __add__(self, other: "LinForm") -> "LinForm":
        return LinForm(self.r + other.r, self.s + other.s)

    def __sub__(self, other: "LinForm") -> "LinForm":
        return LinForm(self.r - other.r, self.s - other.s)

    def is_zero(self) -> bool:
        return self.r == 0 and self.s == 0


class CFContext:
    """Digit stream, convergents, and certified enclosures for one alpha.

    Parameters
    ----------
    prefix:
        Leading digits a_1, a_2, ... (possibly empty).
    period:
        Repeating digit block following the prefix.  Exactly one of
        ``period`` and ``generator`` must be supplied.
    generator:
        Callable ``n -> a_n`` (1-indexed) or an iterable of digits for streams
        with no declared periodic structure.  ``digit_bound`` is then required
        so that C = sup a_n + 1 is still well defined over the declared range.
    digit_bound:
        Declared upper bound for the digits a generator may emit.
    """

    def __init__(
        self,
        prefix: Sequence[int] = (),
        period: Sequence[int] | None = None,
        generator: Callable[[int], int] | Iterable[int] | None = None,
        digit_bound: int | None = None,
    ):
        if (period is None) == (generator is None):
            raise ValueError("supply exactly one of period= or generator=")
        self._prefix = [self._check_digit(a) for a in prefix]
        self._period = [self._check_digit(a) for a in period] if period else None
        if self._period is not None and not self._period:
            raise ValueError("period must be nonempty")
        if generator is not None and digit_bound is None:
            raise ValueError("generator-backed contexts need digit_bound")
        if digit_bound is not None and digit_bound < 1:
            raise ValueError("digit_bound must be >= 1")
        self._digit_bound = digit_bound
        if generator is None:
            self._next = None
        elif callable(generator):
            self._next = generator
        else:
            it = iter(generator)
            self._next = lambda n, _it=it: next(_it)
        self._digits: list[int] = []  # cache of pulled generator digits
        # p, q indexed from -1 so that the recurrence needs no special cases
        self._p = [1, 0]
        self._q = [0, 1]
        self.precision_cap = precision_cap()

    @staticmethod
    def _check_digit(a: int) -> int:
        if not isinstance(a, int) or a < 1:
            raise ValueError(f"continued-fraction digits must be integers >= 1, got {a!r}")
        return a

    # -- presets ------------------------------------------------------------

    @classmethod
    def golden(cls) -> "CFContext":
        """alpha = (sqrt(5)-1)/2 = [0; 1, 1, 1, ...]."""
        return cls(period=[1])

    @classmethod
    def sqrt2m1(cls) -> "CFContext":
        """alpha = sqrt(2)-1 = [0; 2, 2, 2, ...]."""
        return cls(period=[2])

    @classmethod
    def from_config(cls, cfg) -> "CFContext":
        """Build from a config value: preset name or {cf_prefix, cf_period}."""
        if isinstance(cfg, str):
            presets = {"golden": cls.golden, "sqrt2m1": cls.sqrt2m1}
            if cfg not in presets:
                raise ConfigError(f"unknown alpha preset {cfg!r}; have {sorted(presets)}")
            return presets[cfg]()
        if isinstance(cfg, dict):
            if "preset" in cfg:
                return cls.from_config(cfg["preset"])
            try:
                return cls(prefix=cfg.get("cf_prefix", ()), period=cfg.get("cf_period"))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        raise ConfigError(f"cannot build a rotation number from {cfg!r}")

    # -- digits and convergents ----------------------------------------------

    def digit(self, n: int) -> int:
        """a_n, 1-indexed."""
        if n < 1:
            raise IndexError("digits are 1-indexed")
        if n <= len(self._prefix):
            return self._prefix[n - 1]
        if self._period is not None:
            return self._period[(n - len(self._prefix) - 1) % len(self._period)]
        while len(self._digits) < n - len(self._prefix):
            k = len(self._prefix) + len(self._digits) + 1
            try:
                a = self._next(k)
            except StopIteration:
                raise DigitSupplyError(
                    f"digit stream exhausted at a_{k}; deeper digits are required"
                ) from None
            a = self._check_digit(a)
            if a > self._digit_bound:
                raise ValueError(
                    f"generator emitted a_{k}={a} above declared digit_bound={self._digit_bound}"
                )
            self._digits.append(a)
        return self._digits[n - len(self._prefix) - 1]

    def _ensure(self, n: int) -> None:
        while len(self._q) - 2 < n:
            k = len(self._q) - 1  # next index to fill
            a = self.digit(k)
            self._q.append(a * self._q[-1] + self._q[-2])
            self._p.append(a * self._p[-1] + self._p[-2])

    def q(self, n: int) -> int:
        self._ensure(n)
        return self._q[n + 1]

    def p(self, n: int) -> int:
        self._ensure(n)
        return self._p[n + 1]

    def convergents(self, n: int) -> list[tuple[int, int]]:
        """[(p_0, q_0), ..., (p_n, q_n)]."""
        self._ensure(n)
        return [(self._p[k + 1], self._q[k + 1]) for k in range(n + 1)]

    def convergent_value(self, n: int) -> Fraction:
        return Fraction(self.p(n), self.q(n))

    @property
    def digit_sup_plus_one(self) -> int:
        """C = sup of the declared digit range plus one.

        Exact for eventually periodic streams; for generator-backed streams
        this is the declared bound plus one.
        """
        if self._period is not None:
            return max(self._prefix + self._period, default=0) + 1 if (
                self._prefix or self._period
            ) else 1
        return self._digit_bound + 1

    # -- enclosures ------------------------------------------------------------

    def enclosure(self, bits: int) -> tuple[Fraction, Fraction]:
        """Rational interval (lo, hi) containing alpha with hi-lo <= 2**-bits."""
        if bits > self.precision_cap:
            raise PrecisionError(
                f"requested {bits} bits exceeds the precision cap {self.precision_cap}",
                bits_required=bits,
            )
        target = 1 << bits
        n = 1
        while self.q(n) * self.q(n + 1) < target:
            n += 1
        a = self.convergent_value(n)
        b = self.convergent_value(n + 1)
        return (a, b) if a < b else (b, a)

    @property
    def alpha_float(self) -> float:
        try:
            return self._alpha_float
        except AttributeError:
            lo, hi = self.enclosure(64)
            self._alpha_float = float((lo + hi) / 2)
            return self._alpha_float

    # -- exact decisions -------------------------------------------------------

    def sign_linear(self, r: Fraction, s: Fraction) -> int:
        """Exact sign of r + s*alpha (in {-1, 0, +1}).

        Zero occurs only for r = s = 0 since alpha is irrational; otherwise the
        enclosure refinement below terminates (or hits the precision cap, which
        is reported rather than guessed around).
        """
        r, s = Fraction(r), Fraction(s)
        if s == 0:
            return (r > 0) - (r < 0)
        if r == 0:
            return 1 if s > 0 else -1
        # alpha vs the rational -r/s
        t = -r / s
        bits = 32
        while True:
            lo, hi = self.enclosure(bits)
            if t < lo:
                return 1 if s > 0 else -1
            if t > hi:
                return -1 if s > 0 else 1
            if bits >= self.precision_cap:
                raise PrecisionError(
                    f"sign of {r} + {s}*alpha undecided at {bits} bits",
                    bits_required=2 * bits,
                )
            bits = min(2 * bits, self.precision_cap)

    def floor_linear(self, r: Fraction, s: Fraction) -> int:
        """Exact floor of r + s*alpha."""
        r, s = Fraction(r), Fraction(s)
        if s == 0:
            return r.numerator // r.denominator
        bits = 32
        while True:
            lo, hi = self.enclosure(bits)
            if s > 0:
                vlo, vhi = r + s * lo, r + s * hi
            else:
                vlo, vhi = r + s * hi, r + s * lo
            flo = vlo.numerator // vlo.denominator
            fhi = vhi.numerator // vhi.denominator
            if flo == fhi:
                return flo
            # an integer sits inside the interval; since r + s*alpha is
            # irrational it cannot equal it, so refinement decides the side
            if bits >= self.precision_cap:
                raise PrecisionError(
                    f"floor of {r} + {s}*alpha undecided at {bits} bits",
                    bits_required=2 * bits,
                )
            bits = min(2 * bits, self.precision_cap)

    def dist_to_int(
        self, r: Fraction, s: Fraction, width: Fraction = Fraction(1, 1 << 40)
    ) -> tuple[Fraction, Fraction]:
        """Certified enclosure of ||r + s*alpha|| (distance to nearest integer).

        Exact (lo == hi) when s == 0; otherwise an interval of width at most
        ``width``.
        """
        r, s = Fraction(r), Fraction(s)
        if s == 0:
            frac = r - (r.numerator // r.denominator)
            d = min(frac, 1 - frac)
            return (d, d)
        bits = 32
        while True:
            lo, hi = self.enclosure(bits)
            if s > 0:
                vlo, vhi = r + s * lo, r + s * hi
            else:
                vlo, vhi = r + s * hi, r + s * lo
            if vhi - vlo <= width and vhi - vlo < Half:
                dlo, dhi = _dist_interval(vlo, vhi)
                if dhi - dlo <= width:
                    return (dlo, dhi)
            if bits >= self.precision_cap:
                raise PrecisionError(
                    f"||{r} + {s}*alpha|| not localized to width {width} at {bits} bits",
                    bits_required=2 * bits,
                )
            bits = min(2 * bits, self.precision_cap)

    # -- badly approximable constant -------------------------------------------

    def bpq_constant(
        self, j_max: int = 100, n_max: int = 20, grid_bits: int = 20
    ) -> tuple[Fraction, dict]:
        """Largest grid rational c in (0,1) certified to satisfy, over the
        scanned ranges, ||j*alpha|| >= c/j for 1 <= j <= j_max and
        q_{n+1}/q_n <= 1/c for 0 <= n <= n_max.

        Returns (c, certificate); the certificate records per-j nearest
        integers and the convergent ratios so the verification is replayable.
        """
        if j_max < 1:
            raise ValueError("j_max must be >= 1")
        nearest: list[tuple[int, int]] = []
        lower = None
        for j in range(1, j_max + 1):
            dlo, dhi = self.dist_to_int(Fraction(0), Fraction(j))
            m = self.floor_linear(Fraction(1, 2), Fraction(j))  # nearest int to j*alpha
            nearest.append((j, m))
            bound = j * dlo
            lower = bound if lower is None else min(lower, bound)
        ratios = [Fraction(self.q(n), self.q(n + 1)) for n in range(n_max + 1)]
        lower = min(lower, min(ratios))
        grid = 1 << grid_bits
        c = Fraction((lower * grid).numerator // (lower * grid).denominator, grid)
        while c >= 1:
            c -= Fraction(1, grid)
        # verify exactly, stepping the grid down if the float-width slack lied
        while c > 0 and not self._verify_bpq(c, nearest, ratios):
            c -= Fraction(1, grid)
        if c <= 0:
            raise PrecisionError("no positive grid rational satisfies the scan constraints")
        cert = {"nearest": nearest, "ratios": ratios, "j_max": j_max, "n_max": n_max}
        return c, cert

    def _verify_bpq(
        self, c: Fraction, nearest: list[tuple[int, int]], ratios: list[Fraction]
    ) -> bool:
        if any(c > rho for rho in ratios):
            return False
        for j, m in nearest:
            # j*||j alpha|| - c = |j^2 alpha - j m| - c, with the side of m known
            side = self.sign_linear(Fraction(-m), Fraction(j))
            if side >= 0:
                ok = self.sign_linear(Fraction(-j * m) - c, Fraction(j * j)) >= 0
            else:
                ok = self.sign_linear(Fraction(j * m) - c, Fraction(-j * j)) >= 0
            if not ok:
                return False
        return True

    # -- invariant audits --------------------------------------------------------

    def check_convergent_sandwich(self, n: int) -> bool:
        """1/(2 q_n q_{n+1}) < |alpha - p_n/q_n| < 1/(q_n q_{n+1}), exactly."""
        pn, qn, qn1 = self.p(n), self.q(n), self.q(n + 1)
        lo_b = Fraction(1, 2 * qn * qn1)
        hi_b = Fraction(1, qn * qn1)
        side = self.sign_linear(Fraction(-pn, qn), Fraction(1))
        if side > 0:  # alpha > p_n/q_n
            return (
                self.sign_linear(Fraction(-pn, qn) - lo_b, Fraction(1)) > 0
                and self.sign_linear(Fraction(-pn, qn) - hi_b, Fraction(1)) < 0
            )
        return (
            self.sign_linear(Fraction(pn, qn) - lo_b, Fraction(-1)) > 0
            and self.sign_linear(Fraction(pn, qn) - hi_b, Fraction(-1)) < 0
        )

    def check_denominator_distance(self, n: int) -> bool:
        """1/(2 C q_n) < ||q_n alpha|| < 1/q_{n+1} with C = sup digits + 1."""
        pn, qn, qn1 = self.p(n), self.q(n), self.q(n + 1)
        C = self.digit_sup_plus_one
        lo_b = Fraction(1, 2 * C * qn)
        hi_b = Fraction(1, qn1)
        side = self.sign_linear(Fraction(-pn), Fraction(qn))  # sign of q_n alpha - p_n
        if side > 0:
            return (
                self.sign_linear(Fraction(-pn) - lo_b, Fraction(qn)) > 0
                and self.sign_linear(Fraction(-pn) - hi_b, Fraction(qn)) < 0
            )
        return (
            self.sign_linear(Fraction(pn) - lo_b, Fraction(-qn)) > 0
            and self.sign_linear(Fraction(pn) - hi_b, Fraction(-qn)) < 0
        )

    # -- quadratic structure ------------------------------------------------------

    def quadratic_relation(self) -> tuple[Fraction, Fraction] | None:
        """(u, v) with alpha^2 = u + v*alpha, available iff the stream is
        eventually periodic.  Lets the symbolic layer multiply by alpha without
        leaving the Q-span of {1, alpha}."""
        if self._period is None:
            return None
        try:
            return self._quadratic
        except AttributeError:
            pass
        # tail T = [b_1; b_2, ..., b_k, T]  (purely periodic, T > 1)
        A, B, C, D = 1, 0, 0, 1
        for b in self._period:
            A, B, C, D = A * b + B, A, C * b + D, C
        # C T^2 + (D - A) T - B = 0
        disc = (D - A) * (D - A) + 4 * B * C
        # T = ((A - D) + sqrt(disc)) / (2C) as an element of Q(sqrt(disc))
        t_r = Fraction(A - D, 2 * C)
        t_s = Fraction(1, 2 * C)  # coefficient of sqrt(disc)
        # alpha = (P T + Q) / (R T + S) through the zeroth digit and the prefix
        P, Q, R, S = 0, 1, 1, 0
        for a in reversed(self._prefix):
            # prepend x -> a + 1/x
            P, Q, R, S = a * P + R, a * Q + S, P, Q
        num_r, num_s = P * t_r + Q, P * t_s
        den_r, den_s = R * t_r + S, R * t_s
        # 1/(den_r + den_s sqrt(disc)) = (den_r - den_s sqrt(disc)) / norm
        norm = den_r * den_r - den_s * den_s * disc
        e = (num_r * den_r - num_s * den_s * disc) / norm
        f = (num_s * den_r - num_r * den_s) / norm
        # alpha = e + f sqrt(disc)  =>  alpha^2 = (f^2 disc - e^2) + 2 e alpha
        u = f * f * disc - e * e
        v = 2 * e
        self._quadratic = (u, v)
        return self._quadratic

    # -- rotation orbit partitions -------------------------------------------------

    def orbit_partition_gaps(self, m: int, beta: LinForm | None = None) -> "GapReport":
        """Exact gap statistics of the circle partition by {-j*alpha : j < m},
        optionally joined with the shifted copy {beta - j*alpha : j < m}.

        Coincident points merge.  Gap lengths are exact r + s*alpha forms; by
        the three-distance phenomenon the unshifted partition has at most three
        distinct gap values.
        """
        if m < 1:
            raise ValueError("m must be >= 1")
        pts = [self._reduced_point(Fraction(0), Fraction(-j)) for j in range(m)]
        if beta is not None:
            pts += [self._reduced_point(beta.r, beta.s - j) for j in range(m)]
        uniq = {(f.r, f.s) for f in pts}
        forms = [LinForm(r, s) for (r, s) in uniq]
        order = self._exact_sort(forms)
        gaps: list[LinForm] = []
        k = len(order)
        for i in range(k):
            a, b = order[i], order[(i + 1) % k]
            g = b - a
            if i == k - 1:
                g = LinForm(g.r + 1, g.s)
            gaps.append(g)
        gmin = gaps[0]
        gmax = gaps[0]
        for g in gaps[1:]:
            if self.sign_linear(g.r - gmin.r, g.s - gmin.s) < 0:
                gmin = g
            if self.sign_linear(g.r - gmax.r, g.s - gmax.s) > 0:
                gmax = g
        distinct = {(g.r, g.s) for g in gaps}
        return GapReport(
            m=m,
            n_points=k,
            min_gap=gmin,
            max_gap=gmax,
            n_distinct_gaps=len(distinct),
            min_gap_float=self.linform_float(gmin),
            max_gap_float=self.linform_float(gmax),
        )

    def _reduced_point(self, r: Fraction, s: Fraction) -> LinForm:
        k = self.floor_linear(r, s)
        return LinForm(r - k, s)

    def _exact_sort(self, forms: list[LinForm], margin: float = 1e-9) -> list[LinForm]:
        """Sort by value: float keys decide except within the margin, where the
        exact sign procedure takes over."""
        from functools import cmp_to_key

        af = self.alpha_float

        def cmp(a: LinForm, b: LinForm) -> int:
            fa = float(a.r) + float(a.s) * af
            fb = float(b.r) + float(b.s) * af
            if abs(fa - fb) > margin:
                return -1 if fa < fb else 1
            return self.sign_linear(a.r - b.r, a.s - b.s)

        return sorted(forms, key=cmp_to_key(cmp))

    def linform_float(self, f: LinForm) -> float:
        return float(f.r) + float(f.s) * self.alpha_float

    def gap_band(self, m_max: int, sample_every: int = 1) -> "GapBand":
        """Float scan of (min_gap*m, max_gap*m) as the partition grows.

        Incremental insertion keeps the whole scan O(m_max log m_max); the
        extremes at any particular m can be replayed exactly through
        :meth:`orbit_partition_gaps`.
        """
        af = self.alpha_float
        pts = [0.0]
        lows: list[float] = []
        highs: list[float] = []
        ms: list[int] = []
        for m in range(2, m_max + 1):
            x = (-(m - 1) * af) % 1.0
            insort(pts, x)
            if (m % sample_every) == 0 or m == m_max:
                gaps = [b - a for a, b in zip(pts, pts[1:])]
                gaps.append(1.0 - pts[-1] + pts[0])
                ms.append(m)
                lows.append(min(gaps) * m)
                highs.append(max(gaps) * m)
        return GapBand(ms=ms, min_times_m=lows, max_times_m=highs)


def _dist_interval(vlo: Fraction, vhi: Fraction) -> tuple[Fraction, Fraction]:
    """Image of [vlo, vhi] (width < 1/2) under distance-to-nearest-integer."""
    lo = min(_dist_point(vlo), _dist_point(vhi))
    hi = max(_dist_point(vlo), _dist_point(vhi))
    if _contains_integer(vlo, vhi):
        lo = Fraction(0)
    if _contains_half_integer(vlo, vhi):
        hi = Half
    return lo, hi


def _dist_point(v: Fraction) -> Fraction:
    frac = v - (v.numerator // v.denominator)
    return min(frac, 1 - frac)


def _contains_integer(a: Fraction, b: Fraction) -> bool:
    ceil_a = -((-a).numerator // (-a).denominator)
    floor_b = b.numerator // b.denominator
    return ceil_a <= floor_b


def _contains_half_integer(a: Fraction, b: Fraction) -> bool:
    a2, b2 = 2 * a, 2 * b
    fa = a2.numerator // a2.denominator
    fb = b2.numerator // b2.denominator
    for k in range(fa, fb + 1):
        if k % 2 != 0 and a2 <= k <= b2:
            return True
    return False


@dataclass(frozen=True)
class GapReport:
    m: int
    n_points: int
    min_gap: LinForm
    max_gap: LinForm
    n_distinct_gaps: int
    min_gap_float: float
    max_gap_float: float


@dataclass(frozen=True)
class GapBand:
    ms: list[int]
    min_times_m: list[float]
    max_times_m: list[float]


def isqrt_enclosure(n: int, bits: int) -> tuple[Fraction, Fraction]:
    """Certified enclosure of sqrt(n) with width <= 2**-bits, n a nonneg int."""
    if n < 0:
        raise ValueError("sqrt of negative integer")
    scale = 1 << bits
    root = isqrt(n * scale * scale)
    return Fraction(root, scale), Fraction(root + 1, scale)
