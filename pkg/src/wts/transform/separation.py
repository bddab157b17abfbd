"""Storage separation, weight separation, and their combination."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Mapping

from ..behaviour import (BehaviourAlphabet, ExtendedSymbol, behaviours_on,
                         cap_stable, extended_alphabet)
from ..grammar import (DEFAULT_CHAIN_CAP, GrammarError, IdMaker, Rule, Wrtg, boolean_language,
                       delta_of, derivations, evaluate, is_unambiguous_upto)
from ..storage import triv
from ..terms import RankedAlphabet, Tree
from ..weights import BOOLEAN, MMonoid


# ---- storage separation ----------------------------------------------------

def separate_storage(g: Wrtg) -> tuple[BehaviourAlphabet, Wrtg]:
    """(Delta_G, G') with G' chain-free over TRIV and terminals <Delta_G, Sigma>."""
    delta = delta_of(g)
    rules = []
    for r in g.rules:
        sym = ExtendedSymbol(r.behaviour, r.terminal)
        rules.append(Rule(r.id, r.lhs, "true", sym, tuple((a, "id") for a in r.nonterminals), r.weight))
    g2 = Wrtg(g.mmonoid, triv(), extended_alphabet(delta, g.alphabet), g.nonterminals, g.initial,
              tuple(rules))
    return delta, g2


def fuse_storage(delta: BehaviourAlphabet, g2: Wrtg, sigma: Mapping | None = None) -> Wrtg:
    """Inverse of separate_storage: move predicates and instructions back into the rules."""
    if sigma is None:
        sigma = RankedAlphabet({s.terminal: k for s, k in g2.alphabet.items()
                                if isinstance(s, ExtendedSymbol) and not s.is_star})
    rules = []
    for r in g2.rules:
        if r.is_chain:
            raise GrammarError(f"rule {r.id} is a chain rule; fuse_storage needs a chain-free grammar")
        sym = r.terminal
        if not isinstance(sym, ExtendedSymbol):
            raise GrammarError(f"rule {r.id}: terminal {sym} is not an extended symbol")
        b = sym.behaviour
        rhs = tuple(zip(r.nonterminals, b.instructions))
        if sym.is_star:
            rules.append(Rule(r.id, r.lhs, b.predicate, None, rhs, r.weight))
        else:
            rules.append(Rule(r.id, r.lhs, b.predicate, sym.terminal, rhs, r.weight))
    return Wrtg(g2.mmonoid, delta.storage, RankedAlphabet(sigma), g2.nonterminals, g2.initial, tuple(rules))


def _signature(r: Rule, separated: bool):
    if separated:
        sym = r.terminal
        return (r.lhs, sym.behaviour, sym.terminal, r.nonterminals, r.weight)
    return (r.lhs, r.behaviour, r.terminal, r.nonterminals, r.weight)


def related(g: Wrtg, g2: Wrtg) -> bool:
    """Syntactic check of the rule bijection between G and its TRIV counterpart G'."""
    if set(g.nonterminals) != set(g2.nonterminals) or set(g.initial) != set(g2.initial):
        return False
    if g.mmonoid != g2.mmonoid or g2.storage.spec != "triv":
        return False
    if any(r.is_chain or not isinstance(r.terminal, ExtendedSymbol) for r in g2.rules):
        return False
    if any(r.predicate != "true" or any(f != "id" for f in r.instructions) for r in g2.rules):
        return False
    delta = delta_of(g)
    if g2.alphabet != extended_alphabet(delta, g.alphabet):
        return False
    return Counter(_signature(r, False) for r in g.rules) == Counter(_signature(r, True) for r in g2.rules)


def used_terminals(g: Wrtg) -> set:
    return {r.terminal for r in g.rules if not r.is_chain}


def behaviour_sum(g2: Wrtg, delta: BehaviourAlphabet, xi: Tree, segment_cap: int = 8,
                  chain_cap: int = DEFAULT_CHAIN_CAP) -> tuple:
    """Sum of [[G']] over the behaviours on xi (enumerated up to the segment cap).

    Only behaviours built from terminals of G' can have non-zero weight, so the
    enumeration is restricted to those symbols.
    """
    symbols = used_terminals(g2)
    total = g2.mmonoid.zero
    exact = cap_stable(xi, delta, segment_cap, symbols)
    for zeta in behaviours_on(xi, delta, segment_cap, symbols):
        value, ok = evaluate(g2, zeta, chain_cap)
        exact = exact and ok
        total = g2.mmonoid.add(total, value)
    return total, exact


# ---- weight separation -----------------------------------------------------

@dataclass(frozen=True)
class AlphabeticMapping:
    """theta -> (op, sigma); sigma is None for unary symbols mapped to a bare unary op."""
    mmonoid: MMonoid
    theta: RankedAlphabet
    target: RankedAlphabet
    maps: Mapping[Hashable, tuple]

    def __post_init__(self):
        for sym, k in self.theta.items():
            if sym not in self.maps:
                raise GrammarError(f"alphabetic mapping is not defined on {sym}")
            op, target = self.maps[sym]
            if op.arity != k:
                raise GrammarError(f"mapping of {sym}: operation arity {op.arity} != rank {k}")
            if target is None:
                if k != 1:
                    raise GrammarError(f"mapping of {sym}: only unary symbols may drop the terminal")
            elif self.target.get(target) != k:
                raise GrammarError(f"mapping of {sym}: terminal {target} does not have rank {k}")

    def chain_symbols(self) -> list:
        return [s for s, (_, t) in self.maps.items() if t is None]


def separate_weights(g: Wrtg) -> tuple[RankedAlphabet, Wrtg, AlphabeticMapping]:
    """(Theta, H, h) with Theta = R, H Boolean chain-free, [[G]] = h(L(H))."""
    theta = RankedAlphabet({r.id: r.rank for r in g.rules})
    rules = tuple(Rule(r.id, r.lhs, r.predicate, r.id, r.rhs, BOOLEAN.mul(r.rank, 1)) for r in g.rules)
    H = Wrtg(BOOLEAN, g.storage, theta, g.nonterminals, g.initial, rules)
    maps = {r.id: (r.weight, r.terminal) for r in g.rules}
    return theta, H, AlphabeticMapping(g.mmonoid, theta, g.alphabet, maps)


def fuse_weights(theta: RankedAlphabet, H: Wrtg, h: AlphabeticMapping, check: bool = True,
                 size_bound: int = 6) -> Wrtg:
    """Code the h-preimage symbol into the nonterminals: (A, theta).

    Only pairs (A, theta) where H has a rule A -> theta(...) are generated; the
    other pairs would have no rules at all.
    """
    if any(r.is_chain for r in H.rules):
        raise GrammarError("fuse_weights needs a chain-free grammar")
    if check and not is_unambiguous_upto(H, size_bound):
        raise GrammarError(f"H is ambiguous on some tree of size <= {size_bound}")
    live = [r for r in H.rules if not H.mmonoid.is_zero_op(r.weight)]
    heads = {}
    for r in live:
        heads.setdefault(r.lhs, [])
        if r.terminal not in heads[r.lhs]:
            heads[r.lhs].append(r.terminal)

    def name(a, t):
        return f"{a}.{t}"

    ids = IdMaker()
    rules = []
    for r in live:
        op, sym = h.maps[r.terminal]
        choices = [heads.get(a, []) for a in r.nonterminals]
        for combo in itertools.product(*choices):
            rid = ids(".".join([r.id, *map(str, combo)]))
            rhs = tuple((name(a, t), f) for (a, f), t in zip(r.rhs, combo))
            rules.append(Rule(rid, name(r.lhs, r.terminal), r.predicate, sym, rhs, op))
    nts = [name(a, t) for a in H.nonterminals for t in heads.get(a, [])]
    initial = [name(z, t) for z in H.initial for t in heads.get(z, [])]
    return Wrtg(h.mmonoid, H.storage, h.target, tuple(nts), tuple(initial), tuple(rules))


def apply_alphabetic(h: AlphabeticMapping, zeta: Tree) -> tuple:
    """Fold zeta to a monome (value, tree)."""
    op, sym = h.maps[zeta.label]
    kids = [apply_alphabetic(h, c) for c in zeta.children]
    value = h.mmonoid.apply(op, [v for v, _ in kids])
    if sym is None:
        return value, kids[0][1]
    return value, Tree(sym, tuple(t for _, t in kids))


def alphabetic_preimages(h: AlphabeticMapping, xi: Tree, chain_cap: int = DEFAULT_CHAIN_CAP) -> list[Tree]:
    """All zeta with tree part of h(zeta) = xi, at most chain_cap chain symbols in a row."""
    by_target = {}
    for s, (_, t) in h.maps.items():
        if t is not None:
            by_target.setdefault(t, []).append(s)
    chains = h.chain_symbols()
    memo = {}

    def run(w, node, budget):
        key = (w, budget)
        if key in memo:
            return memo[key]
        out = []
        for s in by_target.get(node.label, ()):
            if h.theta[s] != len(node.children):
                continue
            kids = [run(w + (i,), ch, chain_cap) for i, ch in enumerate(node.children, 1)]
            out.extend(Tree(s, combo) for combo in itertools.product(*kids))
        if budget > 0:
            for s in chains:
                out.extend(Tree(s, (sub,)) for sub in run(w, node, budget - 1))
        memo[key] = out
        return out

    return run((), xi, chain_cap)


def in_language(H: Wrtg, zeta: Tree) -> bool:
    if H.storage.is_finite:
        return boolean_language(H, zeta)
    # Boolean weights: some derivation built from non-zero rules exists
    return bool(evaluate(H, zeta)[0])


def _image_grammar(H: Wrtg, h: AlphabeticMapping) -> Wrtg:
    """H with each terminal replaced by its h-image; symbols mapped to a bare op become chain rules."""
    rules = []
    for r in H.rules:
        _, sym = h.maps[r.terminal]
        rules.append(Rule(r.id, r.lhs, r.predicate, sym, r.rhs, r.weight))
    return H.replace(alphabet=h.target, rules=rules)


def preimages_in_language(H: Wrtg, h: AlphabeticMapping, xi: Tree,
                          chain_cap: int = DEFAULT_CHAIN_CAP) -> tuple[set, bool]:
    """({zeta in L(H) whose h-image has tree part xi}, exact).

    Derivations of H are searched directly against xi, so chain symbols are
    only stacked where H can actually use them.
    """
    image = _image_grammar(H, h)
    ds, exact = derivations(image, xi, chain_cap=chain_cap)
    by_id = H.by_id
    zero = H.mmonoid.is_zero_op
    found = set()
    for d in ds:
        if any(zero(by_id[node.label].weight) for _, node in d.items()):
            continue
        found.add(d.relabel(lambda rid: by_id[rid].terminal))
    return found, exact


def eval_alphabetic(H: Wrtg, h: AlphabeticMapping, xi: Tree, chain_cap: int = DEFAULT_CHAIN_CAP) -> tuple:
    """h(L(H))(xi), summing each preimage in L(H) once."""
    zetas, exact = preimages_in_language(H, h, xi, chain_cap)
    total = h.mmonoid.zero
    for zeta in sorted(zetas, key=str):
        value, _ = apply_alphabetic(h, zeta)
        total = h.mmonoid.add(total, value)
    return total, exact


# ---- combined decomposition ------------------------------------------------

@dataclass(frozen=True)
class Decomposition:
    delta: BehaviourAlphabet
    sigma: RankedAlphabet
    theta: RankedAlphabet
    H: Wrtg
    h: AlphabeticMapping


def decompose(g: Wrtg) -> Decomposition:
    delta, g2 = separate_storage(g)
    theta, H, h = separate_weights(g2)
    return Decomposition(delta, g.alphabet, theta, H, h)


def recompose(dec: Decomposition, check: bool = True) -> Wrtg:
    return fuse_storage(dec.delta, fuse_weights(dec.theta, dec.H, dec.h, check=check), dec.sigma)


def decomposition_value(dec: Decomposition, xi: Tree, segment_cap: int = 8) -> tuple:
    """Sum over behaviours zeta on xi of h(L(H))(zeta)."""
    symbols = {t for _, t in dec.h.maps.values() if t is not None}
    total = dec.h.mmonoid.zero
    exact = cap_stable(xi, dec.delta, segment_cap, symbols)
    for zeta in behaviours_on(xi, dec.delta, segment_cap, symbols):
        value, ok = eval_alphabetic(dec.H, dec.h, zeta)
        exact = exact and ok
        total = dec.h.mmonoid.add(total, value)
    return total, exact
