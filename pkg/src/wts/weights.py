"""Strong bimonoids, multioperator monoids and operation handles.

Values are plain Python numbers.  N-infinity uses ``math.inf`` as its
infinity element with saturating arithmetic.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Any, Callable, Iterable, Sequence

INF = math.inf


class WeightError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StrongBimonoid:
    name: str
    add: Callable[[Any, Any], Any]
    mul: Callable[[Any, Any], Any]
    zero: Any
    one: Any
    commutative: bool = True
    zero_sum_free: bool = True
    semiring: bool = False
    idempotent: bool = False
    zero_divisor_free: bool = False
    elements: tuple | None = None  # the whole carrier, when finite
    samples: tuple = ()
    star: Callable[[Any], Any] | None = None
    parse_value: Callable[[str], Any] = int

    def __eq__(self, other):
        return isinstance(other, StrongBimonoid) and other.name == self.name

    def __hash__(self):
        return hash(("bimonoid", self.name))

    def __repr__(self):
        return f"StrongBimonoid({self.name})"

    def sum(self, values: Iterable) -> Any:
        return reduce(self.add, values, self.zero)

    def product(self, values: Iterable) -> Any:
        return reduce(self.mul, values, self.one)

    def power(self, a, n: int):
        out = self.one
        for _ in range(n):
            out = self.mul(out, a)
        return out

    def check_element(self, a) -> bool:
        if self.elements is not None:
            return a in self.elements
        return True

    def test_elements(self) -> tuple:
        return self.elements if self.elements is not None else self.samples


def format_value(a) -> str:
    if a == INF:
        return "inf"
    if isinstance(a, bool):
        return str(int(a))
    return str(a)


def _nat_inf_mul(a, b):
    if a == 0 or b == 0:
        return 0
    return a * b


def _parse_nat_inf(text: str):
    text = text.strip()
    if text in ("inf", "∞"):
        return INF
    value = int(text)
    if value < 0:
        raise WeightError(f"negative value {text} in N-infinity")
    return value


def _parse_in(carrier):
    def parse(text: str):
        value = int(text.strip())
        if value not in carrier:
            raise WeightError(f"{text} is not an element of the carrier")
        return value
    return parse


BOOL = StrongBimonoid(
    name="bool", add=lambda a, b: a | b, mul=lambda a, b: a & b, zero=0, one=1,
    semiring=True, idempotent=True, zero_divisor_free=True, elements=(0, 1),
    star=lambda a: 1, parse_value=_parse_in((0, 1)),
)

NAT_INF = StrongBimonoid(
    name="nat_inf", add=lambda a, b: a + b, mul=_nat_inf_mul, zero=0, one=1,
    semiring=True, zero_divisor_free=True, samples=(0, 1, 2, 3, 5, 7, INF),
    star=lambda a: 1 if a == 0 else INF, parse_value=_parse_nat_inf,
)


@lru_cache(maxsize=None)
def mod_bimonoid(n: int) -> StrongBimonoid:
    """({0..n-1}, max, multiplication mod n, 0, 1)."""
    if n < 2:
        raise WeightError("modulus must be at least 2")
    carrier = tuple(range(n))
    # max is not distributive over modular products, so this is no semiring
    return StrongBimonoid(
        name=f"mod {n}", add=max, mul=lambda a, b: (a * b) % n, zero=0, one=1,
        semiring=False, idempotent=True, zero_divisor_free=_is_prime(n),
        elements=carrier, parse_value=_parse_in(carrier),
    )


def _is_prime(n: int) -> bool:
    return n > 1 and all(n % d for d in range(2, math.isqrt(n) + 1))


@dataclass(frozen=True)
class Op:
    """Operation handle: ``mul`` (param = bimonoid element), ``zero`` or ``named``."""
    kind: str
    arity: int
    param: Any = None


@dataclass(frozen=True)
class NamedOp:
    arity: int
    fn: Callable[..., Any]


@dataclass(eq=False)
class MMonoid:
    name: str
    add: Callable[[Any, Any], Any]
    zero: Any
    backing: StrongBimonoid | None = None
    named: dict[str, NamedOp] = field(default_factory=dict)
    samples: tuple = ()
    parse_value: Callable[[str], Any] = int

    def _key(self):
        # M-monoids of the same bimonoid coincide whatever they are called
        if self.backing is not None and not self.named:
            return ("bimonoid", self.backing.name)
        return ("mmonoid", self.name)

    def __eq__(self, other):
        return isinstance(other, MMonoid) and other._key() == self._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"MMonoid({self.name})"

    # construction of handles
    def zero_op(self, k: int) -> Op:
        if self.backing is not None:
            return Op("mul", k, self.backing.zero)
        return Op("zero", k)

    def mul(self, k: int, a) -> Op:
        if self.backing is None:
            raise WeightError(f"{self.name} has no bimonoid backing; mul is unavailable")
        if not self.backing.check_element(a):
            raise WeightError(f"{format_value(a)} is not in the carrier of {self.backing.name}")
        return Op("mul", k, a)

    def identity(self) -> Op:
        return self.mul(1, self.backing.one) if self.backing is not None else None

    @property
    def is_boolean(self) -> bool:
        return self.backing is not None and self.backing.name == "bool"

    def sum(self, values: Iterable) -> Any:
        return reduce(self.add, values, self.zero)

    def is_zero_op(self, op: Op) -> bool:
        if op.kind == "zero":
            return True
        return op.kind == "mul" and self.backing is not None and op.param == self.backing.zero

    def check_op(self, op: Op) -> str | None:
        """None when the handle belongs to this M-monoid, else a reason."""
        if op.arity < 0:
            return "negative arity"
        if op.kind == "zero":
            return None
        if op.kind == "mul":
            if self.backing is None:
                return f"mul is not an operation of {self.name}"
            if not self.backing.check_element(op.param):
                return f"{format_value(op.param)} is not in the carrier of {self.backing.name}"
            return None
        if op.kind == "named":
            spec = self.named.get(op.param)
            if spec is None:
                return f"unknown operation {op.param!r} for {self.name}"
            if spec.arity != op.arity:
                return f"operation {op.param} has arity {spec.arity}"
            return None
        return f"unknown operation kind {op.kind!r}"

    def apply(self, op: Op, args: Sequence) -> Any:
        if len(args) != op.arity:
            raise WeightError(f"operation {self.format_op(op)} expects {op.arity} arguments, got {len(args)}")
        if op.kind == "zero":
            return self.zero
        if op.kind == "mul":
            b = self.backing
            return b.mul(b.product(args), op.param)
        if op.kind == "named":
            return self.named[op.param].fn(*args)
        raise WeightError(f"unknown operation kind {op.kind!r}")

    # text form
    def format_op(self, op: Op) -> str:
        if op.kind == "named":
            return f"op({op.param})"
        if op.kind == "zero":
            return f"zero({op.arity})"
        if self.name == "boolean":
            return f"all({op.arity})" if op.param == 1 else f"zero({op.arity})"
        return f"mul({op.arity},{format_value(op.param)})"

    def parse_op(self, text: str) -> Op:
        text = text.strip()
        m = re.fullmatch(r"mul\(\s*(\d+)\s*,\s*([^)]+?)\s*\)", text)
        if m:
            if self.backing is None:
                raise WeightError(f"mul is not an operation of {self.name}")
            return self.mul(int(m.group(1)), self.backing.parse_value(m.group(2)))
        m = re.fullmatch(r"zero\(\s*(\d+)\s*\)", text)
        if m:
            return self.zero_op(int(m.group(1)))
        m = re.fullmatch(r"all\(\s*(\d+)\s*\)", text)
        if m:
            if self.backing is None:
                raise WeightError(f"all is not an operation of {self.name}")
            return self.mul(int(m.group(1)), self.backing.one)
        m = re.fullmatch(r"op\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*\)", text)
        if m:
            spec = self.named.get(m.group(1))
            if spec is None:
                raise WeightError(f"unknown operation {m.group(1)!r} for {self.name}")
            return Op("named", spec.arity, m.group(1))
        raise WeightError(f"malformed weight {text!r}")

    def format_value(self, a) -> str:
        return format_value(a)


def apply_op(m: MMonoid, op: Op, args: Sequence) -> Any:
    return m.apply(op, args)


def bimonoid_mmonoid(b: StrongBimonoid, name: str | None = None) -> MMonoid:
    return MMonoid(name=name or f"bimonoid({b.name})", add=b.add, zero=b.zero, backing=b,
                   samples=b.test_elements(), parse_value=b.parse_value)


BOOLEAN = bimonoid_mmonoid(BOOL, name="boolean")


def _kmax_op(fn, arity):
    def apply(*args):
        if any(a == 0 for a in args):
            return 0
        if any(a == INF for a in args):
            return 0  # never reached by the grammars we build; 0 keeps it visible
        return fn(*args)
    return NamedOp(arity, apply)


def kmax_fixture() -> MMonoid:
    """(N u {inf}, max, 0) with 1_0, pr1, pr2, diff and ht."""
    named = {
        "one": NamedOp(0, lambda: 1),
        "pr1": _kmax_op(lambda a, b: a, 2),
        "pr2": _kmax_op(lambda a, b: b, 2),
        "diff": _kmax_op(lambda a, b: abs(a - b), 2),
        "ht": _kmax_op(lambda a, b: 1 + max(a, b), 2),
    }
    return MMonoid(name="kmax", add=max, zero=0, named=named,
                   samples=(0, 1, 2, 3, 5, INF), parse_value=_parse_nat_inf)


KMAX = kmax_fixture()


@lru_cache(maxsize=None)
def mmonoid_from_name(text: str) -> MMonoid:
    key = " ".join(text.split())
    if key == "boolean":
        return BOOLEAN
    if key == "kmax":
        return KMAX
    m = re.fullmatch(r"bimonoid\(\s*(.*?)\s*\)", key)
    if m:
        inner = m.group(1)
        if inner == "nat_inf":
            return bimonoid_mmonoid(NAT_INF)
        if inner == "bool":
            return bimonoid_mmonoid(BOOL)
        mm = re.fullmatch(r"mod\s*(\d+)", inner)
        if mm:
            return bimonoid_mmonoid(mod_bimonoid(int(mm.group(1))))
    raise WeightError(f"unknown M-monoid {text!r}")


# ---- unary operations (chain elimination) ----------------------------------

def _require_backing(m: MMonoid) -> StrongBimonoid:
    if m.backing is None:
        raise WeightError(f"{m.name} has no bimonoid backing; unary operations cannot be normalized")
    return m.backing


def compose(m: MMonoid, outer: Op, inner: Op) -> Op:
    """outer o inner for a unary ``outer`` and a k-ary ``inner``."""
    if outer.arity != 1:
        raise WeightError("only unary operations can be composed on the outside")
    if m.is_zero_op(outer) or m.is_zero_op(inner):
        return m.zero_op(inner.arity)
    if outer.kind == "mul" and inner.kind == "mul":
        b = _require_backing(m)
        # (x1...xk * b) * a
        return Op("mul", inner.arity, b.mul(inner.param, outer.param))
    raise WeightError(f"cannot compose {m.format_op(outer)} with {m.format_op(inner)}")


def unary_compose(m: MMonoid, u: Op, v: Op) -> Op:
    return compose(m, u, v)


def op_sum(m: MMonoid, ops: Sequence[Op], arity: int) -> Op:
    """Pointwise sum of same-arity operations, normalized to mul form."""
    live = [op for op in ops if not m.is_zero_op(op)]
    if not live:
        return m.zero_op(arity)
    if len(live) == 1:
        return live[0]
    b = _require_backing(m)
    if not b.semiring:
        raise WeightError(f"{b.name} is not distributive; sums of operations have no mul form")
    if any(op.kind != "mul" or op.arity != arity for op in live):
        raise WeightError("only mul operations of equal arity can be summed")
    return Op("mul", arity, b.sum(op.param for op in live))


def unary_sum(m: MMonoid, us: Sequence[Op]) -> Op:
    return op_sum(m, us, 1)


def scalar_star(b: StrongBimonoid, a) -> Any:
    if not b.semiring or b.star is None:
        raise WeightError(f"no star is available for {b.name}")
    return b.star(a)
