"""Exact real values as rational coordinates over a symbol basis.

A :class:`Basis` fixes a finite tuple of real symbols, always starting with
``1`` and ``alpha`` (the rotation number of an attached continued-fraction
context).  A :class:`SymReal` is a rational coordinate vector over that basis,
so addition, subtraction and scaling by rationals are exact.  Multiplication
is partial: it is defined whenever one factor lies in Q + Q*alpha, using the
basis's declared action of alpha on each symbol (for eventually periodic alpha
the action on alpha itself comes from the quadratic relation
alpha**2 = u + v*alpha).

Signs, floors and comparisons are decided by certified interval refinement,
with an exact fast path for values in Q + Q*alpha.  Basis symbols are assumed
linearly independent over Q, which holds for all bases constructed here
(rationals, alpha, sqrt(N) for N outside the field of alpha, and products);
under that assumption a nonzero coordinate vector is a nonzero real and the
refinement terminates.

Membership tests (Q-span, (Q+Q*alpha)-span, Z + Z*alpha) return certificates:
explicit coefficients on success, a separating rational functional on failure.
The integer relation lattice of a tuple of values is computed exactly via
:func:`specflow.intlinalg.integer_kernel`.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .cf_arith import CFContext, LinForm, isqrt_enclosure
from .errors import ConfigError, InsufficientStructureError, PrecisionError
from .intlinalg import integer_kernel, rational_solve

Interval = tuple[Fraction, Fraction]
Evaluator = Callable[[int], Interval]

_ZERO = Fraction(0)
_ONE = Fraction(1)


class Basis:
    """Symbol basis ("1", "alpha", ...) with certified evaluators.

    ``alpha_partners`` declares symbols that are alpha times another symbol,
    e.g. ``{"b": "ab"}`` reads "ab is alpha*b".  Together with the quadratic
    relation for alpha this determines the alpha-action on all four of
    1, alpha, b, ab, which is what partial multiplication needs.
    """

    def __init__(
        self,
        ctx: CFContext,
        extra: Sequence[tuple[str, Evaluator]] = (),
        alpha_partners: dict[str, str] | None = None,
    ):
        self.ctx = ctx
        self.symbols: tuple[str, ...] = ("1", "alpha") + tuple(n for n, _ in extra)
        if len(set(self.symbols)) != len(self.symbols):
            raise ConfigError("duplicate basis symbol names")
        self.dim = len(self.symbols)
        self._index = {name: i for i, name in enumerate(self.symbols)}
        self._evaluators: dict[str, Evaluator] = {
            "1": lambda bits: (_ONE, _ONE),
            "alpha": ctx.enclosure,
        }
        for name, ev in extra:
            self._evaluators[name] = ev
        self._alpha_action: dict[str, tuple[Fraction, ...]] = {}
        self._wire_alpha_action(alpha_partners or {})
        self.zero = SymReal(self, (_ZERO,) * self.dim)
        self.one = self.unit("1")
        self.alpha = self.unit("alpha")

    def _wire_alpha_action(self, partners: dict[str, str]) -> None:
        self._alpha_action["1"] = self._unit_coords("alpha")
        rel = self.ctx.quadratic_relation()
        if rel is not None:
            u, v = rel
            self._alpha_action["alpha"] = self._combo_coords({"1": u, "alpha": v})
            for base, prod in partners.items():
                if base not in self._index or prod not in self._index:
                    raise ConfigError(f"alpha partner {base!r}->{prod!r} not in basis")
                # alpha*base = prod, hence alpha*prod = u*base + v*prod
                self._alpha_action[base] = self._unit_coords(prod)
                self._alpha_action[prod] = self._combo_coords({base: u, prod: v})
        elif partners:
            raise ConfigError("alpha partners need an eventually periodic alpha")

    def _unit_coords(self, name: str) -> tuple[Fraction, ...]:
        c = [_ZERO] * self.dim
        c[self._index[name]] = _ONE
        return tuple(c)

    def _combo_coords(self, combo: dict[str, Fraction]) -> tuple[Fraction, ...]:
        c = [_ZERO] * self.dim
        for name, w in combo.items():
            c[self._index[name]] = Fraction(w)
        return tuple(c)

    # -- constructors ------------------------------------------------------------

    def unit(self, name: str) -> "SymReal":
        return SymReal(self, self._unit_coords(name))

    def rational(self, q) -> "SymReal":
        return SymReal(self, self._combo_coords({"1": Fraction(q)}))

    def linear(self, r, s) -> "SymReal":
        """r + s*alpha."""
        return SymReal(self, self._combo_coords({"1": Fraction(r), "alpha": Fraction(s)}))

    def from_linform(self, f: LinForm) -> "SymReal":
        return self.linear(f.r, f.s)

    def from_coords(self, coords: Sequence[Fraction]) -> "SymReal":
        if len(coords) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates, got {len(coords)}")
        return SymReal(self, tuple(Fraction(c) for c in coords))

    def combo(self, **weights) -> "SymReal":
        return SymReal(self, self._combo_coords({k: Fraction(v) for k, v in weights.items()}))

    def parse(self, text) -> "SymReal":
        """Parse a value: number, string expression, or [num, den] pair."""
        if isinstance(text, SymReal):
            return text
        if isinstance(text, (int, Fraction)):
            return self.rational(text)
        if isinstance(text, float):
            # config floats are decimal literals; str() recovers the intent
            return self.rational(Fraction(str(text)))
        if isinstance(text, (list, tuple)) and len(text) == 2:
            return self.rational(Fraction(int(text[0]), int(text[1])))
        if isinstance(text, str):
            return _parse_value(self, text)
        raise ConfigError(f"cannot parse value {text!r}")

    @classmethod
    def for_context(cls, ctx: CFContext) -> "Basis":
        return cls(ctx)

    @classmethod
    def with_sqrt(cls, ctx: CFContext, n: int, name: str | None = None) -> "Basis":
        """Basis (1, alpha, r, alpha*r) with r = sqrt(n).

        n must not be a perfect square and sqrt(n) must be independent of
        alpha's field, which holds when n differs from the discriminant's
        squarefree part; callers pick n accordingly.
        """
        name = name or f"sqrt{n}"
        prod = "alpha_" + name
        extra = [
            (name, lambda bits: isqrt_enclosure(n, bits)),
            (prod, _product_evaluator(ctx.enclosure, lambda bits: isqrt_enclosure(n, bits))),
        ]
        return cls(ctx, extra, alpha_partners={name: prod})

    @classmethod
    def from_config(cls, ctx: CFContext, cfg: dict | None) -> "Basis":
        """Build a basis from config.

        Schema: {"basis": [{"name": "b", "eval": "sqrt(3)"}, ...],
                 "alpha_action": {"b": "alpha_b"}} where alpha_action maps a
        symbol to the symbol holding alpha times it.
        """
        if not cfg:
            return cls(ctx)
        extra: list[tuple[str, Evaluator]] = []
        for spec in cfg.get("basis", ()):
            extra.append((spec["name"], _parse_evaluator(ctx, spec["eval"])))
        partners = dict(cfg.get("alpha_action", {}))
        return cls(ctx, extra, partners)

    def index(self, name: str) -> int:
        return self._index[name]

    def alpha_action_coords(self, name: str) -> tuple[Fraction, ...] | None:
        return self._alpha_action.get(name)

    def symbol_enclosure(self, name: str, bits: int) -> Interval:
        return self._evaluators[name](bits)


def _product_evaluator(a: Evaluator, b: Evaluator) -> Evaluator:
    def ev(bits: int) -> Interval:
        return _iv_mul(a(bits + 2), b(bits + 2))

    return ev


@dataclass(frozen=True, eq=False)
class SymReal:
    """Exact rational coordinate vector over a Basis; see module docstring."""

    basis: Basis
    coords: tuple[Fraction, ...]

    # -- ring-ish operations -----------------------------------------------------

    def _check_same(self, other: "SymReal") -> None:
        if self.basis is not other.basis:
            raise ValueError("mixing values from different bases")

    def __add__(self, other: "SymReal") -> "SymReal":
        self._check_same(other)
        return SymReal(self.basis, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "SymReal") -> "SymReal":
        self._check_same(other)
        return SymReal(self.basis, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "SymReal":
        return SymReal(self.basis, tuple(-a for a in self.coords))

    def scale(self, q) -> "SymReal":
        q = Fraction(q)
        return SymReal(self.basis, tuple(q * a for a in self.coords))

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, SymReal):
            return NotImplemented
        self._check_same(other)
        if other.is_linear():
            return self._mul_linear(other.coords[0], other.coords[1])
        if self.is_linear():
            return other._mul_linear(self.coords[0], self.coords[1])
        raise InsufficientStructureError(
            "product defined only when one factor lies in Q + Q*alpha"
        )

    __rmul__ = __mul__

    def _mul_linear(self, r: Fraction, s: Fraction) -> "SymReal":
        """self * (r + s*alpha)."""
        out = [r * a for a in self.coords]
        if s != 0:
            for name, a in zip(self.basis.symbols, self.coords):
                if a == 0:
                    continue
                act = self.basis.alpha_action_coords(name)
                if act is None:
                    raise InsufficientStructureError(
                        f"alpha action on symbol {name!r} is not declared"
                    )
                for i, w in enumerate(act):
                    out[i] += s * a * w
        return SymReal(self.basis, tuple(out))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SymReal)
            and self.basis is other.basis
            and self.coords == other.coords
        )

    def __hash__(self) -> int:
        return hash((id(self.basis), self.coords))

    # -- structure predicates ------------------------------------------------------

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coords)

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coords[1:])

    def is_linear(self) -> bool:
        """In Q + Q*alpha (coordinate support inside the first two symbols)."""
        return all(c == 0 for c in self.coords[2:])

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("value is not rational")
        return self.coords[0]

    def as_linform(self) -> LinForm:
        if not self.is_linear():
            raise ValueError("value is not in Q + Q*alpha")
        return LinForm(self.coords[0], self.coords[1])

    # -- certified numerics --------------------------------------------------------

    def enclosure(self, bits: int) -> Interval:
        scale = sum(abs(c) for c in self.coords)
        if scale == 0:
            return (_ZERO, _ZERO)
        # total width <= sum |c_i| * 2**-(bits+pad) <= 2**-bits
        pad = max(0, scale.numerator.bit_length() - scale.denominator.bit_length() + 1) + 1
        lo = hi = _ZERO
        for name, c in zip(self.basis.symbols, self.coords):
            if c == 0:
                continue
            slo, shi = self.basis.symbol_enclosure(name, bits + pad)
            if c >= 0:
                lo += c * slo
                hi += c * shi
            else:
                lo += c * shi
                hi += c * slo
        return lo, hi

    def sign(self) -> int:
        if self.is_zero():
            return 0
        if self.is_rational():
            return 1 if self.coords[0] > 0 else -1
        if self.is_linear():
            return self.basis.ctx.sign_linear(self.coords[0], self.coords[1])
        bits = 32
        cap = self.basis.ctx.precision_cap
        while True:
            lo, hi = self.enclosure(bits)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            if bits >= cap:
                raise PrecisionError(
                    f"sign undecided at {bits} bits (coords {self.coords})",
                    bits_required=2 * bits,
                )
            bits = min(2 * bits, cap)

    def compare(self, other: "SymReal") -> int:
        return (self - other).sign()

    def __lt__(self, other: "SymReal") -> bool:
        return self.compare(other) < 0

    def __le__(self, other: "SymReal") -> bool:
        return self.compare(other) <= 0

    def floor(self) -> int:
        if self.is_rational():
            r = self.coords[0]
            return r.numerator // r.denominator
        if self.is_linear():
            return self.basis.ctx.floor_linear(self.coords[0], self.coords[1])
        bits = 32
        cap = self.basis.ctx.precision_cap
        while True:
            lo, hi = self.enclosure(bits)
            flo = lo.numerator // lo.denominator
            fhi = hi.numerator // hi.denominator
            if flo == fhi:
                return flo
            if bits >= cap:
                raise PrecisionError(
                    f"floor undecided at {bits} bits (coords {self.coords})",
                    bits_required=2 * bits,
                )
            bits = min(2 * bits, cap)

    def mod1(self) -> "SymReal":
        return self - self.basis.rational(self.floor())

    def eval(self, bits: int) -> Interval:
        """Certified interval of width <= 2**-bits (alias of :meth:`enclosure`)."""
        return self.enclosure(bits)

    def __float__(self) -> float:
        key = "_float"
        cached = self.__dict__.get(key)
        if cached is None:
            lo, hi = self.enclosure(64)
            cached = float((lo + hi) / 2)
            object.__setattr__(self, key, cached)
        return cached

    def __repr__(self) -> str:
        parts = [
            f"{c}*{n}" if n != "1" else f"{c}"
            for n, c in zip(self.basis.symbols, self.coords)
            if c != 0
        ]
        return "SymReal(" + (" + ".join(parts) if parts else "0") + ")"


# -- membership with certificates ---------------------------------------------------


@dataclass(frozen=True)
class Membership:
    """Outcome of a span-membership test.

    ``inside`` with ``coefficients`` (the expansion of the target over the
    generators), or not inside with ``functional``: a rational vector y over
    basis coordinates with y.gen = 0 for every generator but y.target != 0.
    """

    inside: bool
    coefficients: list[Fraction] | None = None
    functional: list[Fraction] | None = None


def q_span_membership(target: SymReal, gens: Sequence[SymReal]) -> Membership:
    """Is target in the Q-linear span of gens?  Exact, with certificate."""
    for g in gens:
        target._check_same(g)
    dim = target.basis.dim
    rows = [[g.coords[i] for g in gens] for i in range(dim)]
    if not gens:
        rows = [[] for _ in range(dim)]
    x, y = rational_solve(rows, list(target.coords))
    if x is not None:
        return Membership(True, coefficients=x)
    return Membership(False, functional=y)


def q_alpha_span_membership(target: SymReal, gens: Sequence[SymReal]) -> Membership:
    """Is target in sum_i (Q + Q*alpha) * gen_i?

    Coefficients come back flattened as [r_1, s_1, r_2, s_2, ...] meaning
    target = sum_i (r_i + s_i*alpha) * gen_i.
    """
    doubled: list[SymReal] = []
    for g in gens:
        doubled.append(g)
        doubled.append(g * target.basis.alpha)
    return q_span_membership(target, doubled)


def in_z_plus_z_alpha(x: SymReal) -> tuple[bool, tuple[int, int] | None]:
    """Is x = m + n*alpha with integer m, n?  Returns (answer, (m, n))."""
    if not x.is_linear():
        return False, None
    r, s = x.coords[0], x.coords[1]
    if r.denominator == 1 and s.denominator == 1:
        return True, (int(r), int(s))
    return False, None


def membership(
    x: SymReal, target: str, gens: Sequence[SymReal] = ()
) -> Membership:
    """Uniform membership front end.

    target is one of "Z_plus_Z_alpha_mod1", "Q_plus_Q_alpha", "Q_span",
    "QAlpha_span"; the span targets take the generator list ``gens``.
    Certificates: expansion coefficients when inside, a separating functional
    (or None for the structural targets) when not.
    """
    if target == "Z_plus_Z_alpha_mod1":
        ok, pair = in_z_plus_z_alpha(x)
        return Membership(ok, coefficients=list(map(Fraction, pair)) if ok else None)
    if target == "Q_plus_Q_alpha":
        if x.is_linear():
            return Membership(True, coefficients=[x.coords[0], x.coords[1]])
        return Membership(False)
    if target == "Q_span":
        return q_span_membership(x, gens)
    if target == "QAlpha_span":
        return q_alpha_span_membership(x, gens)
    raise ValueError(f"unknown membership target {target!r}")


def relation_lattice(values: Sequence[SymReal]) -> list[list[int]]:
    """Z-basis of {n in Z^k : sum_j n_j * values_j = 0}, exact and saturated."""
    if not values:
        return []
    basis = values[0].basis
    for v in values:
        v._check_same(basis.zero)
    rows = [[v.coords[i] for v in values] for i in range(basis.dim)]
    return integer_kernel(rows, len(values))


# -- interval arithmetic and the expression parser -----------------------------------


def _iv_add(a: Interval, b: Interval) -> Interval:
    return a[0] + b[0], a[1] + b[1]


def _iv_sub(a: Interval, b: Interval) -> Interval:
    return a[0] - b[1], a[1] - b[0]


def _iv_mul(a: Interval, b: Interval) -> Interval:
    prods = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    return min(prods), max(prods)


def _iv_neg(a: Interval) -> Interval:
    return -a[1], -a[0]


def _iv_div(a: Interval, b: Interval) -> Interval:
    if b[0] <= 0 <= b[1]:
        raise ConfigError("division by an interval containing zero")
    inv = (1 / b[1], 1 / b[0])
    return _iv_mul(a, inv)


def _parse_evaluator(ctx: CFContext, expr: str) -> Evaluator:
    """Compile a constant expression ("sqrt(3)", "alpha*sqrt(2)", "(1+sqrt(5))/2")
    into a certified interval evaluator.  Only +, -, *, /, integer literals,
    ``alpha`` and ``sqrt(<nonneg int>)`` are allowed.
    """
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as e:
        raise ConfigError(f"bad expression {expr!r}: {e}") from None

    def ev_node(node: ast.AST, bits: int) -> Interval:
        if isinstance(node, ast.Expression):
            return ev_node(node.body, bits)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            f = Fraction(node.value)
            return f, f
        if isinstance(node, ast.Name) and node.id == "alpha":
            return ctx.enclosure(bits)
        if isinstance(node, ast.Call):
            if (
                isinstance(node.func, ast.Name)
                and node.func.id == "sqrt"
                and len(node.args) == 1
                and isinstance(node.args[0], ast.Constant)
                and isinstance(node.args[0].value, int)
            ):
                return isqrt_enclosure(node.args[0].value, bits)
            raise ConfigError(f"unsupported call in expression {expr!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return _iv_neg(ev_node(node.operand, bits))
        if isinstance(node, ast.BinOp):
            a = ev_node(node.left, bits)
            b = ev_node(node.right, bits)
            if isinstance(node.op, ast.Add):
                return _iv_add(a, b)
            if isinstance(node.op, ast.Sub):
                return _iv_sub(a, b)
            if isinstance(node.op, ast.Mult):
                return _iv_mul(a, b)
            if isinstance(node.op, ast.Div):
                return _iv_div(a, b)
        raise ConfigError(f"unsupported syntax in expression {expr!r}")

    def ev(bits: int) -> Interval:
        # evaluate with headroom so composite rounding stays under 2**-bits
        return ev_node(tree, bits + 8)

    return ev


def _parse_value(basis: Basis, text: str) -> SymReal:
    """Parse a coordinate expression over the basis symbols.

    Grammar: rational literals, basis symbol names, +, -, and * by rationals,
    e.g. "1/3", "2*alpha - 1", "1 + sqrt3" when "sqrt3" is a symbol.
    """
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as e:
        raise ConfigError(f"bad value expression {text!r}: {e}") from None

    def ev(node: ast.AST) -> SymReal:
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return basis.rational(node.value)
        if isinstance(node, ast.Name):
            if node.id in basis.symbols:
                return basis.unit(node.id)
            raise ConfigError(f"unknown symbol {node.id!r} in {text!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Add):
                return ev(node.left) + ev(node.right)
            if isinstance(node.op, ast.Sub):
                return ev(node.left) - ev(node.right)
            if isinstance(node.op, ast.Mult):
                return ev(node.left) * ev(node.right)
            if isinstance(node.op, ast.Div):
                num, den = ev(node.left), ev(node.right)
                if not den.is_rational():
                    raise ConfigError(f"division only by rationals in {text!r}")
                return num.scale(Fraction(1) / den.as_fraction())
        raise ConfigError(f"unsupported syntax in value expression {text!r}")

    return ev(tree)
