"""Weighted regular tree grammars with storage: derivations and semantics."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Hashable, Iterable, Sequence

from .behaviour import BehaviourAlphabet, BehaviourSymbol, corresponding_alphabet
from .storage import UNDEFINED, StorageError, StorageType
from .terms import RankedAlphabet, Tree, trees_up_to
from .weights import MMonoid, Op

DEFAULT_CHAIN_CAP = 8


class GrammarError(ValueError):
    pass


@dataclass(frozen=True)
class Rule:
    """A(p) -> sigma(A1(f1),...,Ak(fk)) or, when terminal is None, A(p) -> B(f)."""
    id: str
    lhs: str
    predicate: str
    terminal: Hashable | None
    rhs: tuple  # ((nonterminal, instruction), ...)
    weight: Op

    @property
    def is_chain(self) -> bool:
        return self.terminal is None

    @property
    def rank(self) -> int:
        return len(self.rhs)

    @property
    def nonterminals(self) -> tuple:
        return tuple(a for a, _ in self.rhs)

    @property
    def instructions(self) -> tuple:
        return tuple(f for _, f in self.rhs)

    @property
    def behaviour(self) -> BehaviourSymbol:
        return BehaviourSymbol(self.predicate, self.instructions)


def terminal_rule(id, lhs, predicate, terminal, rhs, weight) -> Rule:
    return Rule(id, lhs, predicate, terminal, tuple(tuple(x) for x in rhs), weight)


def chain_rule(id, lhs, predicate, target, instruction, weight) -> Rule:
    return Rule(id, lhs, predicate, None, ((target, instruction),), weight)


@dataclass(frozen=True)
class Wrtg:
    mmonoid: MMonoid
    storage: StorageType
    alphabet: RankedAlphabet
    nonterminals: tuple
    initial: tuple
    rules: tuple

    @cached_property
    def by_lhs(self) -> dict:
        out = {a: [] for a in self.nonterminals}
        for r in self.rules:
            out.setdefault(r.lhs, []).append(r)
        return out

    @cached_property
    def by_id(self) -> dict:
        return {r.id: r for r in self.rules}

    def rule(self, rid: str) -> Rule:
        return self.by_id[rid]

    def replace(self, **changes) -> Wrtg:
        fields = dict(mmonoid=self.mmonoid, storage=self.storage, alphabet=self.alphabet,
                      nonterminals=self.nonterminals, initial=self.initial, rules=self.rules)
        fields.update(changes)
        for key in ("nonterminals", "initial", "rules"):
            fields[key] = tuple(fields[key])
        return Wrtg(**fields)

    @property
    def rule_alphabet(self) -> RankedAlphabet:
        return RankedAlphabet({r.id: r.rank for r in self.rules})


# ---- validation ------------------------------------------------------------

def validate(g: Wrtg) -> list[str]:
    diags = []
    if not g.rules:
        diags.append("empty rule set")
    if not g.alphabet.has_leaf():
        diags.append("alphabet has no nullary symbol")
    nts = set(g.nonterminals)
    if len(nts) != len(g.nonterminals):
        diags.append("duplicate nonterminal")
    clash = nts & set(g.alphabet)
    if clash:
        diags.append(f"nonterminals also used as terminals: {', '.join(sorted(map(str, clash)))}")
    for z in g.initial:
        if z not in nts:
            diags.append(f"initial nonterminal {z} is not declared")
    seen = set()
    for r in g.rules:
        where = f"rule {r.id}"
        if r.id in seen:
            diags.append(f"{where}: duplicate rule id")
        seen.add(r.id)
        if r.lhs not in nts:
            diags.append(f"{where}: undeclared nonterminal {r.lhs}")
        for a, _ in r.rhs:
            if a not in nts:
                diags.append(f"{where}: undeclared nonterminal {a}")
        if r.is_chain:
            if len(r.rhs) != 1:
                diags.append(f"{where}: chain rule must have exactly one nonterminal")
            expected = 1
        else:
            if r.terminal not in g.alphabet:
                diags.append(f"{where}: unknown terminal {r.terminal}")
                expected = r.rank
            else:
                expected = g.alphabet[r.terminal]
                if expected != r.rank:
                    diags.append(f"{where}: terminal {r.terminal} has rank {expected} "
                                 f"but the rule has {r.rank} nonterminals")
        if r.weight.arity != expected:
            diags.append(f"{where}: weight {g.mmonoid.format_op(r.weight)} has arity "
                         f"{r.weight.arity}, expected {expected}")
        problem = g.mmonoid.check_op(r.weight)
        if problem:
            diags.append(f"{where}: {problem}")
        if not g.storage.has_predicate(r.predicate):
            diags.append(f"{where}: unknown predicate {r.predicate}")
        for f in r.instructions:
            if not g.storage.has_instruction(f):
                diags.append(f"{where}: unknown instruction {f}")
    return diags


def check(g: Wrtg) -> Wrtg:
    diags = validate(g)
    if diags:
        raise GrammarError("; ".join(diags))
    return g


# ---- behaviours and derivation trees ---------------------------------------

def predicates_of(g: Wrtg) -> tuple:
    return tuple(dict.fromkeys(r.predicate for r in g.rules))


def instructions_of(g: Wrtg) -> tuple:
    return tuple(dict.fromkeys(f for r in g.rules for f in r.instructions))


def delta_of(g: Wrtg) -> BehaviourAlphabet:
    return corresponding_alphabet(g.storage, predicates_of(g), instructions_of(g), g.alphabet)


def pi(g: Wrtg, d: Tree) -> Tree:
    r = g.rule(d.label)
    if r.is_chain:
        return pi(g, d.children[0])
    return Tree(r.terminal, tuple(pi(g, c) for c in d.children))


def beta(g: Wrtg, d: Tree) -> Tree:
    return d.relabel(lambda rid: g.rule(rid).behaviour)


def weight_of(g: Wrtg, d: Tree):
    r = g.rule(d.label)
    return g.mmonoid.apply(r.weight, [weight_of(g, c) for c in d.children])


def chain_graph(g: Wrtg, skip_zero: bool = False) -> dict:
    edges = {a: set() for a in g.nonterminals}
    for r in g.rules:
        if r.is_chain and not (skip_zero and g.mmonoid.is_zero_op(r.weight)):
            edges.setdefault(r.lhs, set()).add(r.rhs[0][0])
    return edges


def longest_chain(g: Wrtg, skip_zero: bool = False) -> int | None:
    """Length of the longest path in the chain graph, None if it has a cycle."""
    edges = chain_graph(g, skip_zero)
    depth, state = {}, {}

    def visit(a):
        if state.get(a) == 1:
            return None
        if a in depth:
            return depth[a]
        state[a] = 1
        best = 0
        for b in edges.get(a, ()):
            sub = visit(b)
            if sub is None:
                return None
            best = max(best, sub + 1)
        state[a] = 2
        depth[a] = best
        return best

    best = 0
    for a in list(edges):
        sub = visit(a)
        if sub is None:
            return None
        best = max(best, sub)
    return best


def chain_exact(g: Wrtg, chain_cap: int, skip_zero: bool = False) -> bool:
    longest = longest_chain(g, skip_zero)
    return longest is not None and longest <= chain_cap


class _Search:
    """Top-down derivation search with memo on (nonterminal, position, config, budget)."""

    def __init__(self, g: Wrtg, xi: Tree, chain_cap: int, build: Callable, skip_zero: bool):
        self.g = g
        self.xi = xi
        self.cap = chain_cap
        self.build = build
        self.storage = g.storage
        self.memo = {}
        zero = g.mmonoid.is_zero_op
        self.rules = {a: [r for r in rs if not (skip_zero and zero(r.weight))]
                      for a, rs in g.by_lhs.items()}

    def run(self, a, w, node, c, budget) -> list:
        key = (a, w, c, budget)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.memo[key] = []  # a state cannot contribute to itself through a finite budget
        out = []
        s = self.storage
        for r in self.rules.get(a, ()):
            if r.is_chain:
                if budget == 0:
                    continue
            elif r.terminal != node.label or r.rank != len(node.children):
                continue
            if not s.test(r.predicate, c):
                continue
            confs = []
            for _, f in r.rhs:
                d = s.apply(f, c)
                if d is UNDEFINED:
                    break
                confs.append(d)
            else:
                if r.is_chain:
                    subs = [self.run(r.rhs[0][0], w, node, confs[0], budget - 1)]
                else:
                    subs = [self.run(b, w + (i,), child, ci, self.cap)
                            for i, ((b, _), child, ci) in enumerate(zip(r.rhs, node.children, confs), 1)]
                for combo in itertools.product(*subs):
                    out.append(self.build(r, combo))
        self.memo[key] = out
        return out


def _start(g, start, c):
    return (tuple(g.initial) if start is None else tuple(start),
            g.storage.initial if c is None else c)


def derivations(g: Wrtg, xi: Tree, start: Iterable | None = None, c=None,
                chain_cap: int = DEFAULT_CHAIN_CAP) -> tuple[list[Tree], bool]:
    """D_G(start, xi, c) up to ``chain_cap`` consecutive chain rules per position."""
    if chain_cap < 0:
        raise GrammarError("chain cap must be non-negative")
    starts, c0 = _start(g, start, c)
    search = _Search(g, xi, chain_cap, lambda r, kids: Tree(r.id, kids), skip_zero=False)
    out = []
    for a in starts:
        out.extend(search.run(a, (), xi, c0, chain_cap))
    return out, chain_exact(g, chain_cap)


def derivation_weights(g: Wrtg, xi: Tree, chain_cap: int = DEFAULT_CHAIN_CAP,
                       start=None, c=None) -> list:
    """Weights of all derivations, skipping rules weighted by a zero operation.

    Such derivations weigh 0 by absorptivity, so dropping them does not change
    any sum and makes zero-weight chain cycles harmless.
    """
    starts, c0 = _start(g, start, c)
    m = g.mmonoid
    search = _Search(g, xi, chain_cap, lambda r, vals: m.apply(r.weight, vals), skip_zero=True)
    out = []
    for a in starts:
        out.extend(search.run(a, (), xi, c0, chain_cap))
    return out


def evaluate(g: Wrtg, xi: Tree, chain_cap: int = DEFAULT_CHAIN_CAP) -> tuple:
    """([[G]](xi), exact) where exact means no derivation was cut off by the cap."""
    if chain_cap < 0:
        raise GrammarError("chain cap must be non-negative")
    values = derivation_weights(g, xi, chain_cap)
    return g.mmonoid.sum(values), chain_exact(g, chain_cap, skip_zero=True)


def count_derivations(g: Wrtg, xi: Tree, chain_cap: int = DEFAULT_CHAIN_CAP) -> int:
    starts, c0 = _start(g, None, None)
    search = _Search(g, xi, chain_cap, lambda r, kids: None, skip_zero=False)
    return sum(len(search.run(a, (), xi, c0, chain_cap)) for a in starts)


def boolean_language(g: Wrtg, xi: Tree) -> bool:
    """Exact membership in L(G) for TRIV or finite storage, chain cycles included."""
    if not g.storage.is_finite:
        raise GrammarError(f"storage {g.storage.spec} is neither TRIV nor finite; use evaluate with a cap")
    s = g.storage
    m = g.mmonoid
    live = [r for r in g.rules if not m.is_zero_op(r.weight)]
    usable = {}  # rule id -> list of (config, child configs)
    for r in live:
        steps = []
        for c in s.configs:
            if not s.test(r.predicate, c):
                continue
            confs = [s.apply(f, c) for f in r.instructions]
            if all(d is not UNDEFINED for d in confs):
                steps.append((c, tuple(confs)))
        usable[r.id] = steps

    def solve(node: Tree) -> set:
        kids = [solve(ch) for ch in node.children]
        ok = set()
        for r in live:
            if r.is_chain or r.terminal != node.label or r.rank != len(kids):
                continue
            for c, confs in usable[r.id]:
                if all((b, d) in kid for (b, _), d, kid in zip(r.rhs, confs, kids)):
                    ok.add((r.lhs, c))
        chains = [r for r in live if r.is_chain]
        changed = True
        while changed:
            changed = False
            for r in chains:
                b = r.rhs[0][0]
                for c, (d,) in usable[r.id]:
                    if (r.lhs, c) not in ok and (b, d) in ok:
                        ok.add((r.lhs, c))
                        changed = True
        return ok

    top = solve(xi)
    return any((z, s.initial) in top for z in g.initial)


# ---- classification --------------------------------------------------------

@dataclass(frozen=True)
class Flags:
    chain_free: bool
    simple: bool
    boolean: bool
    trivial_storage: bool


def non_simple_chain_rules(g: Wrtg) -> list[tuple[Rule, str]]:
    out = []
    for r in g.rules:
        if not r.is_chain:
            continue
        if not g.storage.is_always_true(r.predicate):
            out.append((r, "non-true predicate"))
        elif not g.storage.is_identity(r.instructions[0]):
            out.append((r, "non-id instruction"))
    return out


def classify(g: Wrtg) -> Flags:
    return Flags(
        chain_free=not any(r.is_chain for r in g.rules),
        simple=not non_simple_chain_rules(g),
        boolean=g.mmonoid.is_boolean,
        trivial_storage=g.storage.spec == "triv",
    )


def is_unambiguous_upto(g: Wrtg, size_bound: int, chain_cap: int = DEFAULT_CHAIN_CAP) -> bool:
    return all(count_derivations(g, t, chain_cap) <= 1 for t in trees_up_to(g.alphabet, size_bound))


# ---- trimming and naming helpers -------------------------------------------

def productive_nonterminals(g: Wrtg) -> set:
    ok = set()
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            if r.lhs not in ok and all(a in ok for a in r.nonterminals):
                ok.add(r.lhs)
                changed = True
    return ok


def trim(g: Wrtg) -> Wrtg:
    """Drop nonterminals that are unproductive or unreachable from an initial one."""
    prod = productive_nonterminals(g)
    rules = [r for r in g.rules if r.lhs in prod and all(a in prod for a in r.nonterminals)]
    reach = {z for z in g.initial if z in prod}
    frontier = list(reach)
    by_lhs = {}
    for r in rules:
        by_lhs.setdefault(r.lhs, []).append(r)
    while frontier:
        a = frontier.pop()
        for r in by_lhs.get(a, ()):
            for b in r.nonterminals:
                if b not in reach:
                    reach.add(b)
                    frontier.append(b)
    rules = [r for r in rules if r.lhs in reach]
    return g.replace(nonterminals=[a for a in g.nonterminals if a in reach],
                     initial=[z for z in g.initial if z in reach], rules=rules)


_ID_BAD = re.compile(r"[^A-Za-z0-9_.]")


class IdMaker:
    """Deterministic, file-safe, unique rule ids."""

    def __init__(self):
        self.used = set()

    def __call__(self, base: str) -> str:
        cand = _ID_BAD.sub("_", base) or "r"
        if not re.match(r"[A-Za-z_]", cand):
            cand = "r" + cand
        out, n = cand, 1
        while out in self.used:
            n += 1
            out = f"{cand}_{n}"
        self.used.add(out)
        return out


def fresh_name(base: str, taken: Iterable) -> str:
    taken = set(taken)
    name, n = base, 0
    while name in taken:
        n += 1
        name = f"{base}_{n}"
    return name
