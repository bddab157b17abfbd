"""Behaviour alphabets, behaviours and their bounded enumeration on trees."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping

from .storage import UNDEFINED, StorageError, StorageType, split_top_level
from .terms import RankedAlphabet, Tree, parse_term

EMPTY_WORD = "eps"


class BehaviourError(ValueError):
    pass


@dataclass(frozen=True)
class BehaviourSymbol:
    """(p, f1 ... fk); its rank is k."""
    predicate: str
    instructions: tuple = ()

    @property
    def rank(self) -> int:
        return len(self.instructions)

    def _instr_text(self) -> str:
        return " ".join(self.instructions) if self.instructions else EMPTY_WORD

    def __str__(self):
        return f"({self.predicate}, {self._instr_text()})"


@dataclass(frozen=True)
class ExtendedSymbol:
    """<(p,f1...fk),sigma>, or a star symbol <(p,f),*> when terminal is None."""
    behaviour: BehaviourSymbol
    terminal: Hashable | None = None

    @property
    def is_star(self) -> bool:
        return self.terminal is None

    @property
    def rank(self) -> int:
        return self.behaviour.rank

    def __str__(self):
        b = self.behaviour
        term = "*" if self.terminal is None else str(self.terminal)
        return f"<({b.predicate},{b._instr_text()}),{term}>"


def _split_instructions(text: str) -> tuple:
    text = text.strip()
    if text in ("", EMPTY_WORD, "ε"):
        return ()
    # instructions are separated by blanks outside brackets
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "([<{":
            depth += 1
        elif ch in ")]>}":
            depth -= 1
        if ch.isspace() and depth == 0:
            if cur:
                out.append("".join(cur))
                cur = []
        else:
            cur.append(ch)
    if cur:
        out.append("".join(cur))
    return tuple(out)


def parse_behaviour_symbol(text: str) -> BehaviourSymbol:
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise BehaviourError(f"malformed behaviour symbol {text!r}")
    parts = split_top_level(text[1:-1])
    if len(parts) != 2:
        raise BehaviourError(f"malformed behaviour symbol {text!r}")
    return BehaviourSymbol(parts[0].strip(), _split_instructions(parts[1]))


def parse_extended_symbol(text: str) -> ExtendedSymbol:
    text = text.strip()
    m = re.fullmatch(r"<\s*(\(.*\))\s*,\s*([^,()<>]+?)\s*>", text, re.S)
    if not m:
        raise BehaviourError(f"malformed extended symbol {text!r}")
    beh = parse_behaviour_symbol(m.group(1))
    term = m.group(2)
    return ExtendedSymbol(beh, None if term == "*" else term)


def parse_symbol(text: str):
    """Plain names stay strings; ``<...>`` becomes an ExtendedSymbol."""
    text = text.strip()
    return parse_extended_symbol(text) if text.startswith("<") else text


def parse_behaviour_tree(text: str, alphabet: Mapping | None = None) -> Tree:
    """Parse a tree whose labels may be extended symbols such as ``<(true,id),sigma>``."""
    return parse_term(text, alphabet, label=parse_symbol)


@dataclass(frozen=True)
class BehaviourAlphabet:
    storage: StorageType
    predicates: tuple
    instructions: tuple
    max_rank: int

    def symbols(self, k: int) -> list[BehaviourSymbol]:
        if k < 0 or k > self.max_rank:
            return []
        return [BehaviourSymbol(p, fs) for p in self.predicates
                for fs in itertools.product(self.instructions, repeat=k)]

    def all_symbols(self) -> list[BehaviourSymbol]:
        return [b for k in range(self.max_rank + 1) for b in self.symbols(k)]

    def ranked(self) -> RankedAlphabet:
        return RankedAlphabet({b: b.rank for b in self.all_symbols()})

    def __contains__(self, b) -> bool:
        return (isinstance(b, BehaviourSymbol) and b.predicate in self.predicates
                and b.rank <= self.max_rank and all(f in self.instructions for f in b.instructions))

    def describe(self) -> str:
        return (f"storage {self.storage.spec}; preds {' '.join(self.predicates)}; "
                f"instrs {' '.join(self.instructions)}; max rank {self.max_rank}")


def corresponding_alphabet(storage: StorageType, predicates: Iterable[str], instructions: Iterable[str],
                           sigma: Mapping) -> BehaviourAlphabet:
    preds = tuple(dict.fromkeys(predicates))
    instrs = tuple(dict.fromkeys(instructions))
    if not preds:
        raise BehaviourError("the predicate set must be non-empty")
    for p in preds:
        if not storage.has_predicate(p):
            raise BehaviourError(f"unknown predicate {p!r} for storage {storage.spec}")
    for f in instrs:
        if not storage.has_instruction(f):
            raise BehaviourError(f"unknown instruction {f!r} for storage {storage.spec}")
    return BehaviourAlphabet(storage, preds, instrs, max(sigma.values(), default=0))


def extended_alphabet(delta: BehaviourAlphabet, sigma: Mapping) -> RankedAlphabet:
    """<Delta, Sigma>: star symbols of rank 1 plus every (b, sigma) of equal rank."""
    ranks = {}
    for b in delta.symbols(1):
        ranks[ExtendedSymbol(b, None)] = 1
    for sym, k in sigma.items():
        for b in delta.symbols(k):
            ranks[ExtendedSymbol(b, sym)] = k
    return RankedAlphabet(ranks)


def theta_alphabet(delta: BehaviourAlphabet, sigma: Mapping) -> RankedAlphabet:
    ext = extended_alphabet(delta, sigma)
    return RankedAlphabet({s: k for s, k in ext.items() if not s.is_star})


@dataclass(frozen=True)
class BehaviourCheck:
    ok: bool
    family: dict  # position -> configuration (partial on failure)
    position: tuple | None = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def check_behaviour(b: Tree, c, storage: StorageType) -> BehaviourCheck:
    """Compute the configuration family of ``b`` from ``c``, or locate the failure."""
    family = {}
    stack = [((), b, c)]
    while stack:
        w, node, cw = stack.pop()
        family[w] = cw
        sym = node.label
        if isinstance(sym, ExtendedSymbol):
            sym = sym.behaviour
        if len(sym.instructions) != len(node.children):
            return BehaviourCheck(False, family, w, "rank mismatch")
        try:
            holds = storage.test(sym.predicate, cw)
        except StorageError as exc:
            return BehaviourCheck(False, family, w, str(exc))
        if not holds:
            return BehaviourCheck(False, family, w, f"predicate {sym.predicate} fails")
        for i, (f, child) in enumerate(zip(sym.instructions, node.children), 1):
            nxt = storage.apply(f, cw)
            if nxt is UNDEFINED:
                return BehaviourCheck(False, family, w, f"instruction {f} undefined")
            stack.append((w + (i,), child, nxt))
    return BehaviourCheck(True, family)


def pr1(zeta: Tree) -> Tree:
    return zeta.relabel(lambda s: s.behaviour)


def erase(zeta: Tree) -> Tree:
    """Drop star symbols and keep the terminal component of the rest."""
    node = zeta
    while node.label.is_star:
        node = node.children[0]
    return Tree(node.label.terminal, tuple(erase(c) for c in node.children))


def is_behaviour_on(xi: Tree, zeta: Tree, delta: BehaviourAlphabet) -> bool:
    try:
        if erase(zeta) != xi:
            return False
    except (AttributeError, IndexError):
        return False
    if not all(t.label.behaviour in delta for _, t in zeta.items()):
        return False
    return check_behaviour(pr1(zeta), delta.storage.initial, delta.storage).ok


class _Enumerator:
    def __init__(self, xi: Tree, delta: BehaviourAlphabet, cap: int, symbols=None):
        self.xi = xi
        self.delta = delta
        self.cap = cap
        self.storage = delta.storage
        allowed = None if symbols is None else set(symbols)
        self.stars = [b for b in delta.symbols(1)
                      if allowed is None or ExtendedSymbol(b, None) in allowed]
        self.options = {}
        for _, node in xi.items():
            key = (node.label, len(node.children))
            if key not in self.options:
                self.options[key] = [b for b in delta.symbols(len(node.children))
                                     if allowed is None or ExtendedSymbol(b, node.label) in allowed]
        self.memo = {}

    def _step(self, b: BehaviourSymbol, c):
        if not self.storage.test(b.predicate, c):
            return None
        out = []
        for f in b.instructions:
            d = self.storage.apply(f, c)
            if d is UNDEFINED:
                return None
            out.append(d)
        return out

    def trees(self, w, node, c, budget) -> list[Tree]:
        key = ("t", w, c, budget)
        if key in self.memo:
            return self.memo[key]
        res = []
        for b in self.options[(node.label, len(node.children))]:
            confs = self._step(b, c)
            if confs is None:
                continue
            kids = [self.trees(w + (i,), ch, ci, self.cap)
                    for i, (ch, ci) in enumerate(zip(node.children, confs), 1)]
            sym = ExtendedSymbol(b, node.label)
            for combo in itertools.product(*kids):
                res.append(Tree(sym, combo))
        if budget > 0:
            for b in self.stars:
                confs = self._step(b, c)
                if confs is None:
                    continue
                sym = ExtendedSymbol(b, None)
                for sub in self.trees(w, node, confs[0], budget - 1):
                    res.append(Tree(sym, (sub,)))
        self.memo[key] = res
        return res

    def count(self, w, node, c, budget) -> int:
        key = ("n", w, c, budget)
        if key in self.memo:
            return self.memo[key]
        total = 0
        for b in self.options[(node.label, len(node.children))]:
            confs = self._step(b, c)
            if confs is None:
                continue
            prod = 1
            for i, (ch, ci) in enumerate(zip(node.children, confs), 1):
                prod *= self.count(w + (i,), ch, ci, self.cap)
                if not prod:
                    break
            total += prod
        if budget > 0:
            for b in self.stars:
                confs = self._step(b, c)
                if confs is not None:
                    total += self.count(w, node, confs[0], budget - 1)
        self.memo[key] = total
        return total


def behaviours_on(xi: Tree, delta: BehaviourAlphabet, segment_cap: int, symbols=None) -> list[Tree]:
    """All behaviours on xi with at most ``segment_cap`` stars above each position.

    ``symbols`` optionally restricts the extended symbols that may occur.
    """
    if segment_cap < 0:
        raise BehaviourError("segment cap must be non-negative")
    en = _Enumerator(xi, delta, segment_cap, symbols)
    out = en.trees((), xi, delta.storage.initial, segment_cap)
    return sorted(out, key=str)


def count_behaviours(xi: Tree, delta: BehaviourAlphabet, segment_cap: int, symbols=None) -> int:
    en = _Enumerator(xi, delta, segment_cap, symbols)
    return en.count((), xi, delta.storage.initial, segment_cap)


def cap_stable(xi: Tree, delta: BehaviourAlphabet, segment_cap: int, symbols=None) -> bool:
    """True when one more star per segment yields no new behaviour.

    With no usable star symbol the enumeration is complete for every cap.
    """
    en = _Enumerator(xi, delta, segment_cap, symbols)
    if not en.stars:
        return True
    return count_behaviours(xi, delta, segment_cap, symbols) == \
        count_behaviours(xi, delta, segment_cap + 1, symbols)


def theta(xi: Tree, zeta: Tree, delta: BehaviourAlphabet | None = None) -> dict:
    """Order-preserving bijection from pos(xi) onto the non-star positions of zeta."""
    if delta is not None and not is_behaviour_on(xi, zeta, delta):
        raise BehaviourError("zeta is not a behaviour on xi")
    try:
        if erase(zeta) != xi:
            raise BehaviourError("zeta is not a behaviour on xi")
    except (AttributeError, IndexError):
        raise BehaviourError("zeta is not a behaviour on xi") from None
    targets = [w for w, t in zeta.items() if not t.label.is_star]
    return dict(zip(xi.positions(), targets))
