"""Ranked alphabets, finite ordered trees and positions."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Iterator, Mapping

Position = tuple  # tuple of positive ints; () is the root

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*|#")


class TermSyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class RankedAlphabet(Mapping):
    """Immutable symbol -> rank map. Symbols are any hashable values."""

    def __init__(self, ranks: Mapping[Hashable, int] | Iterable[tuple[Hashable, int]] = ()):
        items = dict(ranks)
        for sym, rank in items.items():
            if not isinstance(rank, int) or rank < 0:
                raise ValueError(f"bad rank {rank!r} for symbol {sym}")
        self._ranks = items

    def __getitem__(self, sym):
        return self._ranks[sym]

    def __iter__(self):
        return iter(self._ranks)

    def __len__(self):
        return len(self._ranks)

    def __hash__(self):
        return hash(frozenset(self._ranks.items()))

    def __eq__(self, other):
        if isinstance(other, RankedAlphabet):
            return self._ranks == other._ranks
        return NotImplemented

    def __repr__(self):
        return f"RankedAlphabet({{{', '.join(f'{s}/{k}' for s, k in self._ranks.items())}}})"

    def of_rank(self, k: int) -> list:
        return [s for s, r in self._ranks.items() if r == k]

    @property
    def max_rank(self) -> int:
        return max(self._ranks.values(), default=0)

    def has_leaf(self) -> bool:
        return any(r == 0 for r in self._ranks.values())

    def union(self, other: Mapping) -> RankedAlphabet:
        merged = dict(self._ranks)
        for s, k in other.items():
            if merged.get(s, k) != k:
                raise ValueError(f"symbol {s} declared with ranks {merged[s]} and {k}")
            merged[s] = k
        return RankedAlphabet(merged)


@dataclass(frozen=True)
class Tree:
    label: Hashable
    children: tuple = ()

    def __str__(self):
        if not self.children:
            return str(self.label)
        return f"{self.label}({','.join(str(c) for c in self.children)})"

    def __repr__(self):
        return f"Tree<{self}>"

    def __hash__(self):
        # trees are used as memo keys a lot, so cache the structural hash
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.label, self.children))
            self.__dict__["_hash"] = h
        return h

    @cached_property
    def size(self) -> int:
        return 1 + sum(c.size for c in self.children)

    @cached_property
    def height(self) -> int:
        return 1 + max((c.height for c in self.children), default=0)

    def positions(self) -> list:
        """All positions in lexicographic (pre-)order."""
        out = [()]
        for i, c in enumerate(self.children, 1):
            out.extend((i,) + w for w in c.positions())
        return out

    def subtree(self, w: Position) -> Tree:
        t = self
        for i in w:
            t = t.children[i - 1]
        return t

    def label_at(self, w: Position):
        return self.subtree(w).label

    def items(self) -> Iterator[tuple[Position, Tree]]:
        """(position, subtree) pairs in lexicographic order."""
        stack = [((), self)]
        while stack:
            w, t = stack.pop()
            yield w, t
            for i in range(len(t.children), 0, -1):
                stack.append((w + (i,), t.children[i - 1]))

    def relabel(self, fn) -> Tree:
        return Tree(fn(self.label), tuple(c.relabel(fn) for c in self.children))

    def well_formed(self, alphabet: Mapping) -> bool:
        return all(t.label in alphabet and alphabet[t.label] == len(t.children) for _, t in self.items())


def leaf(label) -> Tree:
    return Tree(label)


def _angle_end(text: str, pos: int) -> int:
    depth = 0
    for i in range(pos, len(text)):
        if text[i] == "<":
            depth += 1
        elif text[i] == ">":
            depth -= 1
            if depth == 0:
                return i + 1
    return -1


def parse_term(text: str, alphabet: Mapping | None = None, label=None) -> Tree:
    """Parse ``name`` or ``name(t1,...,tk)``; check arities when an alphabet is given.

    With ``label``, bracketed names ``<...>`` are read whole and passed through it.
    """
    pos = 0
    n = len(text)

    def skip():
        nonlocal pos
        while pos < n and text[pos].isspace():
            pos += 1

    def tree() -> Tree:
        nonlocal pos
        skip()
        start = pos
        if label is not None and text.startswith("<", pos):
            end = _angle_end(text, pos)
            if end < 0:
                raise TermSyntaxError("unbalanced '<'", pos)
            try:
                name = label(text[pos:end])
            except ValueError as exc:
                raise TermSyntaxError(str(exc), pos) from None
            pos = end
        else:
            m = NAME_RE.match(text, pos)
            if not m:
                raise TermSyntaxError("expected a symbol name", pos)
            name = m.group()
            pos = m.end()
        skip()
        kids = []
        if pos < n and text[pos] == "(":
            pos += 1
            kids.append(tree())
            skip()
            while pos < n and text[pos] == ",":
                pos += 1
                kids.append(tree())
                skip()
            if pos >= n or text[pos] != ")":
                raise TermSyntaxError("expected ',' or ')'", pos)
            pos += 1
        if alphabet is not None:
            if name not in alphabet:
                raise TermSyntaxError(f"unknown symbol {name!r}", start)
            if alphabet[name] != len(kids):
                raise TermSyntaxError(
                    f"symbol {name!r} has rank {alphabet[name]} but got {len(kids)} arguments", start)
        return Tree(name, tuple(kids))

    t = tree()
    skip()
    if pos != n:
        raise TermSyntaxError("trailing input", pos)
    return t


def render(t: Tree) -> str:
    return str(t)


def tree_stats(t: Tree):
    """Return (positions, size, height, paths); paths are label tuples root to leaf."""
    positions = set(t.positions())

    def paths(s: Tree):
        if not s.children:
            return {(s.label,)}
        return {(s.label,) + p for c in s.children for p in paths(c)}

    return positions, t.size, t.height, paths(t)


def unbalancedness(t: Tree, binary_symbols) -> int:
    best = 0
    for _, s in t.items():
        if s.label in binary_symbols:
            left, right = s.children
            best = max(best, abs(left.height - right.height))
    return best


def trees_by_size(alphabet: Mapping, max_size: int) -> list[list[Tree]]:
    """table[n] = all trees over the alphabet with exactly n nodes (n <= max_size)."""
    table: list[list[Tree]] = [[] for _ in range(max_size + 1)]
    by_rank: dict[int, list] = {}
    for sym, k in alphabet.items():
        by_rank.setdefault(k, []).append(sym)
    for size in range(1, max_size + 1):
        out = table[size]
        for k, syms in sorted(by_rank.items()):
            for split in _compositions(size - 1, k):
                if any(part >= size for part in split):
                    continue
                for kids in itertools.product(*(table[p] for p in split)):
                    for sym in syms:
                        out.append(Tree(sym, kids))
    return table


def _compositions(total: int, parts: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def trees_up_to(alphabet: Mapping, max_size: int) -> list[Tree]:
    return [t for level in trees_by_size(alphabet, max_size) for t in level]


def trees_up_to_height(alphabet: Mapping, max_height: int) -> list[Tree]:
    levels: list[Tree] = []
    for _ in range(max_height):
        nxt = []
        for sym, k in alphabet.items():
            for kids in itertools.product(levels, repeat=k):
                nxt.append(Tree(sym, kids))
        levels = nxt
    return levels
