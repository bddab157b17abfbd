"""Storage types (C, P, F, c0): TRIV, COUNT, pushdowns, finite tables, PCP.

Predicates and instructions are looked up by name.  Instructions return
``None`` when they are undefined on a configuration.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable, Hashable, Sequence

UNDEFINED = None

Predicate = Callable[[Any], bool]
Instruction = Callable[[Any], Any]


class StorageError(ValueError):
    pass


def _always_true(c) -> bool:
    return True


def _identity(c):
    return c


@dataclass(eq=False)
class StorageType:
    spec: str
    initial: Hashable
    resolve_predicate: Callable[[str], Predicate | None]
    resolve_instruction: Callable[[str], Instruction | None]
    configs: tuple | None = None  # finiteness witness
    format_config: Callable[[Any], str] = str
    _preds: dict = field(default_factory=dict, repr=False)
    _instrs: dict = field(default_factory=dict, repr=False)

    def __eq__(self, other):
        return isinstance(other, StorageType) and other.spec == self.spec

    def __hash__(self):
        return hash(("storage", self.spec))

    def __repr__(self):
        return f"StorageType({self.spec})"

    def predicate(self, name: str) -> Predicate:
        fn = self._preds.get(name)
        if fn is None:
            fn = self.resolve_predicate(name)
            if fn is None:
                raise StorageError(f"storage {self.spec} has no predicate {name!r}")
            self._preds[name] = fn
        return fn

    def instruction(self, name: str) -> Instruction:
        fn = self._instrs.get(name)
        if fn is None:
            fn = self.resolve_instruction(name)
            if fn is None:
                raise StorageError(f"storage {self.spec} has no instruction {name!r}")
            self._instrs[name] = fn
        return fn

    def has_predicate(self, name: str) -> bool:
        try:
            self.predicate(name)
        except StorageError:
            return False
        return True

    def has_instruction(self, name: str) -> bool:
        try:
            self.instruction(name)
        except StorageError:
            return False
        return True

    @property
    def has_true(self) -> bool:
        return self.has_predicate("true")

    @property
    def has_id(self) -> bool:
        return self.has_instruction("id")

    @property
    def is_finite(self) -> bool:
        return self.configs is not None

    def is_always_true(self, name: str) -> bool:
        """Syntactic check: the predicate is true_C (or an alias of it)."""
        return self.has_predicate(name) and self.predicate(name) is _always_true

    def is_identity(self, name: str) -> bool:
        return self.has_instruction(name) and self.instruction(name) is _identity

    def apply(self, name: str, c):
        return self.instruction(name)(c)

    def test(self, name: str, c) -> bool:
        return bool(self.predicate(name)(c))


def _table_resolver(table: dict):
    return table.get


def triv() -> StorageType:
    return StorageType("triv", "c", _table_resolver({"true": _always_true}),
                       _table_resolver({"id": _identity}), configs=("c",))


def _dec(c):
    return c - 1 if c >= 1 else UNDEFINED


def count() -> StorageType:
    preds = {"true": _always_true, "zero": lambda c: c == 0}
    instrs = {"id": _identity, "inc": lambda c: c + 1, "dec": _dec}
    return StorageType("count", 0, _table_resolver(preds), _table_resolver(instrs))


# ---- pushdowns -------------------------------------------------------------

_SYMBOL = r"[A-Za-z_][A-Za-z0-9_]*"


def split_top_level(text: str, sep: str = ",") -> list[str]:
    """Split on ``sep`` outside of (), [], <> and {}."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch in "([<{":
            depth += 1
        elif ch in ")]>}":
            depth -= 1
        elif ch == sep and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def _pushdown_spec(inner: str, gamma0: str) -> str:
    if gamma0 == "gamma0":
        if inner == "triv":
            return "pd1"
        if inner == "pd1":
            return "pd(2)"
        m = re.fullmatch(r"pd\((\d+)\)", inner)
        if m:
            return f"pd({int(m.group(1)) + 1})"
    return f"pushdown({inner},{gamma0})"


def pushdown_of(inner: StorageType, gamma0: str = "gamma0", spec: str | None = None) -> StorageType:
    """PD(S): configurations are tuples of (symbol, inner config) cells, top first."""
    if spec is None:
        spec = _pushdown_spec(inner.spec, gamma0)

    def resolve_pred(name: str):
        if name == "bottom":
            return lambda c: len(c) == 1
        m = re.fullmatch(rf"top\s*=\s*({_SYMBOL})", name)
        if m:
            sym = m.group(1)
            return lambda c: c[0][0] == sym
        m = re.fullmatch(r"test\((.*)\)", name)
        if m:
            p = inner.resolve_predicate(m.group(1).strip())
            if p is None:
                return None
            if p is _always_true:
                return _always_true
            return lambda c: p(c[0][1])
        if name == "true" and inner.has_true:
            return _always_true
        return None

    def resolve_instr(name: str):
        if name == "id":
            return _identity
        if name == "pop":
            return lambda c: c[1:] if len(c) > 1 else UNDEFINED
        m = re.fullmatch(rf"stay\(\s*({_SYMBOL})\s*\)", name)
        if m:
            sym = m.group(1)
            return lambda c: ((sym, c[0][1]),) + c[1:]
        m = re.fullmatch(r"push\((.*)\)", name)
        if m:
            args = [a.strip() for a in split_top_level(m.group(1))]
            if not re.fullmatch(_SYMBOL, args[0]):
                return None
            sym = args[0]
            if len(args) == 1:
                if not inner.has_id:
                    return None
                f = _identity
            elif len(args) == 2:
                f = inner.resolve_instruction(args[1])
                if f is None:
                    return None
            else:
                return None

            def push(c, sym=sym, f=f):
                top = f(c[0][1])
                if top is UNDEFINED:
                    return UNDEFINED
                return ((sym, top),) + c
            return push
        return None

    def fmt(c) -> str:
        if inner.spec == "triv":
            return "[" + " ".join(sym for sym, _ in c) + "]"
        return "[" + " ".join(f"{sym}:{inner.format_config(x)}" for sym, x in c) + "]"

    return StorageType(spec, ((gamma0, inner.initial),), resolve_pred, resolve_instr, format_config=fmt)


@lru_cache(maxsize=None)
def iterated_pushdown(n: int) -> StorageType:
    if n < 0:
        raise StorageError("pushdown level must be non-negative")
    s = triv()
    for _ in range(n):
        s = pushdown_of(s)
    return s


def pd_config(*symbols: str) -> tuple:
    """PD1 configuration from top-first pushdown symbols."""
    return tuple((sym, "c") for sym in symbols)


# ---- PCP and finite tables -------------------------------------------------

def pcp_storage(pairs: Sequence[tuple[str, str]]) -> StorageType:
    if not pairs or any(not u or not v for u, v in pairs):
        raise StorageError("PCP storage needs non-empty pairs of non-empty strings")
    preds = {"true": _always_true, "equal": lambda c: c[0] == c[1]}
    instrs = {}
    for i, (u, v) in enumerate(pairs, 1):
        instrs[str(i)] = lambda c, u=u, v=v: (c[0] + u, c[1] + v)
    spec = "pcp{" + ";".join(f"({u},{v})" for u, v in pairs) + "}"
    return StorageType(spec, ("", ""), _table_resolver(preds), _table_resolver(instrs),
                       format_config=lambda c: f"({c[0] or 'eps'},{c[1] or 'eps'})")


@dataclass(frozen=True)
class FiniteTable:
    configs: tuple
    initial: str
    predicates: dict  # name -> frozenset of configs where it holds
    instructions: dict  # name -> {config: config}

    def spec(self) -> str:
        parts = [f"configs: {' '.join(self.configs)}", f"initial: {self.initial}"]
        for name, holds in self.predicates.items():
            parts.append(f"pred {name}: {' '.join(c for c in self.configs if c in holds)}")
        for name, table in self.instructions.items():
            parts.append(f"instr {name}: {' '.join(f'{a}->{b}' for a, b in table.items())}")
        return "finite{" + "; ".join(parts) + "}"


def finite_storage(table: FiniteTable) -> StorageType:
    if table.initial not in table.configs:
        raise StorageError(f"initial configuration {table.initial} is not declared")
    for name, holds in table.predicates.items():
        if not set(holds) <= set(table.configs):
            raise StorageError(f"predicate {name} mentions undeclared configurations")
    for name, moves in table.instructions.items():
        if not set(moves) | set(moves.values()) <= set(table.configs):
            raise StorageError(f"instruction {name} mentions undeclared configurations")
    preds = {}
    for name, holds in table.predicates.items():
        if name == "true" and set(holds) == set(table.configs):
            preds[name] = _always_true
        else:
            preds[name] = lambda c, holds=frozenset(holds): c in holds
    instrs = {}
    for name, moves in table.instructions.items():
        if name == "id" and all(moves.get(c) == c for c in table.configs):
            instrs[name] = _identity
        else:
            instrs[name] = lambda c, moves=dict(moves): moves.get(c, UNDEFINED)
    return StorageType(table.spec(), table.initial, _table_resolver(preds), _table_resolver(instrs),
                       configs=tuple(table.configs))


def parse_finite_table(body: str) -> FiniteTable:
    """Body of ``finite{...}``: ``;``-separated clauses.

    configs: c1 c2 ...      initial: c1
    pred NAME: configs where NAME holds
    instr NAME: a->b c->d   (unlisted configurations are undefined)
    """
    configs, initial, preds, instrs = None, None, {}, {}
    for clause in body.split(";"):
        clause = clause.strip()
        if not clause:
            continue
        head, sep, rest = clause.partition(":")
        if not sep:
            raise StorageError(f"malformed finite storage clause {clause!r}")
        head, words = head.strip(), rest.split()
        if head == "configs":
            configs = tuple(words)
        elif head == "initial":
            if len(words) != 1:
                raise StorageError("finite storage needs exactly one initial configuration")
            initial = words[0]
        elif head.startswith("pred "):
            preds[head[5:].strip()] = frozenset(words)
        elif head.startswith("instr "):
            moves = {}
            for w in words:
                a, arrow, b = w.partition("->")
                if not arrow:
                    raise StorageError(f"malformed transition {w!r}")
                moves[a] = b
            instrs[head[6:].strip()] = moves
        else:
            raise StorageError(f"unknown finite storage clause {head!r}")
    if configs is None or initial is None:
        raise StorageError("finite storage needs configs and initial clauses")
    return FiniteTable(configs, initial, preds, instrs)


def with_true_id(s: StorageType) -> StorageType:
    if s.has_true and s.has_id:
        return s
    if s.is_finite and s.spec.startswith("finite{"):
        table = parse_finite_table(s.spec[len("finite{"):-1])
        preds = dict(table.predicates)
        instrs = dict(table.instructions)
        preds.setdefault("true", frozenset(table.configs))
        instrs.setdefault("id", {c: c for c in table.configs})
        return finite_storage(FiniteTable(table.configs, table.initial, preds, instrs))

    def resolve_pred(name):
        if name == "true" and not s.has_true:
            return _always_true
        return s.resolve_predicate(name)

    def resolve_instr(name):
        if name == "id" and not s.has_id:
            return _identity
        return s.resolve_instruction(name)

    return StorageType(f"with_true_id({s.spec})", s.initial, resolve_pred, resolve_instr,
                       configs=s.configs, format_config=s.format_config)


def storage_from_name(text: str) -> StorageType:
    key = text.strip()
    if key == "triv":
        return triv()
    if key == "count":
        return count()
    if key == "pd1":
        return iterated_pushdown(1)
    m = re.fullmatch(r"pd\(\s*(\d+)\s*\)", key)
    if m:
        return iterated_pushdown(int(m.group(1)))
    m = re.fullmatch(r"pcp\{(.*)\}", key, re.S)
    if m:
        pairs = []
        for item in m.group(1).split(";"):
            pm = re.fullmatch(r"\s*\(\s*(\w+)\s*,\s*(\w+)\s*\)\s*", item)
            if not pm:
                raise StorageError(f"malformed PCP pair {item!r}")
            pairs.append((pm.group(1), pm.group(2)))
        return pcp_storage(pairs)
    m = re.fullmatch(r"finite\{(.*)\}", key, re.S)
    if m:
        return finite_storage(parse_finite_table(m.group(1)))
    raise StorageError(f"unknown storage type {text!r}")


def reachable(s: StorageType, instructions: Sequence[str], depth: int) -> set:
    """Configurations reachable from c0 by at most ``depth`` applications."""
    seen = {s.initial}
    frontier = [s.initial]
    for _ in range(depth):
        nxt = []
        for c in frontier:
            for name in instructions:
                d = s.apply(name, c)
                if d is not UNDEFINED and d not in seen:
                    seen.add(d)
                    nxt.append(d)
        frontier = nxt
    return seen
