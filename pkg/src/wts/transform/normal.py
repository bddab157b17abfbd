"""One initial nonterminal, finite-storage elimination and storage embedding."""

from __future__ import annotations

from ..grammar import GrammarError, IdMaker, Rule, Wrtg, fresh_name
from ..storage import UNDEFINED, StorageType, triv
from .separation import fuse_weights, separate_weights


def pair_name(a, b) -> str:
    return f"{a}.{b}"


def one_initial(g: Wrtg) -> Wrtg:
    """Equivalent grammar with the single initial nonterminal Z0.

    (A, A0) stands for A inside a derivation that started in A0.
    """
    if not g.initial:
        return g
    z0 = fresh_name("Z0", [*g.nonterminals, *map(str, g.alphabet)])
    ids = IdMaker()
    rules = []
    for r in g.rules:
        if r.lhs in g.initial:
            rhs = tuple((pair_name(a, r.lhs), f) for a, f in r.rhs)
            rules.append(Rule(ids(f"{r.id}.{z0}"), z0, r.predicate, r.terminal, rhs, r.weight))
    for a0 in g.initial:
        for r in g.rules:
            rhs = tuple((pair_name(a, a0), f) for a, f in r.rhs)
            rules.append(Rule(ids(f"{r.id}.{a0}"), pair_name(r.lhs, a0), r.predicate, r.terminal,
                              rhs, r.weight))
    nts = [z0] + [pair_name(a, a0) for a in g.nonterminals for a0 in g.initial]
    return g.replace(nonterminals=nts, initial=[z0], rules=rules)


def _config_name(s: StorageType, c) -> str:
    return s.format_config(c)


def eliminate_finite_storage_unweighted(g: Wrtg) -> Wrtg:
    """Encode the configurations of a finite storage into the nonterminals."""
    s = g.storage
    if not s.is_finite:
        raise GrammarError(f"storage {s.spec} has no finiteness witness")
    ids = IdMaker()
    rules = []
    for r in g.rules:
        pred = s.predicate(r.predicate)
        for c in s.configs:
            if not pred(c):
                continue
            confs = [s.apply(f, c) for f in r.instructions]
            if any(d is UNDEFINED for d in confs):
                continue
            rhs = tuple((pair_name(a, _config_name(s, d)), "id") for a, d in zip(r.nonterminals, confs))
            rules.append(Rule(ids(f"{r.id}.{_config_name(s, c)}"), pair_name(r.lhs, _config_name(s, c)),
                              "true", r.terminal, rhs, r.weight))
    nts = [pair_name(a, _config_name(s, c)) for a in g.nonterminals for c in s.configs]
    initial = [pair_name(z, _config_name(s, s.initial)) for z in g.initial]
    return g.replace(storage=triv(), nonterminals=nts, initial=initial, rules=rules)


def eliminate_finite_storage(g: Wrtg) -> Wrtg:
    """Weighted version: separate the weights, drop the storage, fuse the weights back."""
    theta, H, h = separate_weights(g)
    H2 = eliminate_finite_storage_unweighted(H)
    # H2 inherits unambiguity from H, so the bounded re-check is skipped
    return fuse_weights(H2.alphabet, H2, h, check=False)


def embed_storage(g: Wrtg, s: StorageType) -> Wrtg:
    """Run a TRIV grammar over storage s using only true and id."""
    if g.storage.spec != "triv":
        raise GrammarError(f"embed_storage needs a TRIV grammar, got storage {g.storage.spec}")
    if not (s.has_true and s.has_id):
        raise GrammarError(f"storage {s.spec} lacks the predicate true or the instruction id")
    rules = [Rule(r.id, r.lhs, "true", r.terminal, tuple((a, "id") for a in r.nonterminals), r.weight)
             for r in g.rules]
    return g.replace(storage=s, rules=rules)
