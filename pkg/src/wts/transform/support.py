"""Support grammars over commutative zero-sum free bimonoids, and emptiness."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..grammar import (DEFAULT_CHAIN_CAP, GrammarError, IdMaker, Rule, Wrtg, evaluate, trim)
from ..terms import Tree, trees_by_size
from ..weights import BOOLEAN, StrongBimonoid
from .normal import eliminate_finite_storage_unweighted, one_initial

POWER_CAP = 10_000
BOX_CAP = 1_000_000
ZGP_ERROR = "ZGP search bound exceeded"


def cyclic_structure(b: StrongBimonoid, a, cap: int = POWER_CAP) -> tuple[int, int]:
    """(index, period) of the cyclic submonoid generated by a.

    a^(index + period) = a^index, with both as small as possible.
    """
    seen = {}
    x = b.one
    for i in range(cap + 1):
        if x in seen:
            return seen[x], i - seen[x]
        seen[x] = i
        x = b.mul(x, a)
    raise GrammarError(f"{ZGP_ERROR}: powers of {a} do not repeat within {cap} steps")


def vector_value(b: StrongBimonoid, gens, z) -> object:
    """[[z]] = a1^z1 * ... * an^zn."""
    out = b.one
    for a, e in zip(gens, z):
        out = b.mul(out, b.power(a, e))
    return out


def cut(z, k: int) -> tuple:
    return tuple(min(x, k) for x in z)


def oplus(z, i: int, dg: int) -> tuple:
    """z + e_i, cut at dg."""
    return cut(tuple(x + (j == i) for j, x in enumerate(z)), dg)


def oplus_bar(z, y, dg: int) -> tuple:
    return cut(tuple(a + b for a, b in zip(z, y)), dg)


@dataclass(frozen=True)
class SupportTables:
    generators: tuple
    dg: int
    minimal: frozenset
    backing: StrongBimonoid

    @property
    def T(self) -> range:
        return range(self.dg + 1)

    def value(self, z):
        return vector_value(self.backing, self.generators, z)

    def is_zero(self, z) -> bool:
        return self.value(z) == self.backing.zero


def support_tables(weights, backing: StrongBimonoid, power_cap: int = POWER_CAP,
                   box_cap: int = BOX_CAP) -> SupportTables:
    gens = tuple(weights)
    if not backing.commutative:
        raise GrammarError(f"{backing.name} is not commutative")
    n = len(gens)
    if backing.zero_divisor_free:
        # only a generator that is itself 0 yields a zero product
        minimal = frozenset(tuple(int(j == i) for j in range(n))
                            for i, a in enumerate(gens) if a == backing.zero)
    else:
        bounds = []
        for a in gens:
            index, period = cyclic_structure(backing, a, power_cap)
            # a coordinate at or above index + period can drop by one period
            bounds.append(index + period)
        size = 1
        for m in bounds:
            size *= m
        if size > box_cap:
            raise GrammarError(f"{ZGP_ERROR}: search box has {size} vectors")
        zeros = {z for z in itertools.product(*(range(m) for m in bounds))
                 if vector_value(backing, gens, z) == backing.zero}
        minimal = frozenset(
            z for z in zeros
            if all(z[i] == 0 or z[:i] + (z[i] - 1,) + z[i + 1:] not in zeros for i in range(n)))
    dg = max((max(z) for z in minimal), default=0)
    return SupportTables(gens, dg, minimal, backing)


def vector_name(a, z) -> str:
    return f"{a}.z({','.join(map(str, z))})"


def _support_setup(g: Wrtg):
    b = g.mmonoid.backing
    if b is None or g.mmonoid.named:
        raise GrammarError("non-multiplicative weights: the M-monoid is not bimonoid-backed")
    if not b.commutative:
        raise GrammarError(f"{b.name} is not commutative")
    if not b.zero_sum_free:
        raise GrammarError(f"{b.name} is not zero-sum free")
    for r in g.rules:
        if r.weight.kind != "mul":
            raise GrammarError(f"non-multiplicative weights: rule {r.id}")
    gens = tuple(dict.fromkeys(r.weight.param for r in g.rules))
    return b, gens


def support_grammar(g: Wrtg, do_trim: bool = True, tables: SupportTables | None = None) -> Wrtg:
    """Boolean grammar G' with L(G') = supp([[G]]).

    Nonterminals (A, z) count, up to dg, how often each rule weight occurs in
    a derivation below A.  With do_trim only productive pairs are built and
    useless ones are removed afterwards.
    """
    b, gens = _support_setup(g)
    if len(g.initial) > 1:
        g = one_initial(g)
    if tables is None:
        tables = support_tables(gens, b)
    dg = tables.dg
    slot = {a: i for i, a in enumerate(tables.generators)}
    vectors = sorted(itertools.product(tables.T, repeat=len(tables.generators)))
    zero_vec = tuple(0 for _ in tables.generators)

    def head(r, kids):
        acc = zero_vec
        for z in kids:
            acc = oplus_bar(acc, z, dg)
        return oplus(acc, slot[r.weight.param], dg)

    if do_trim:
        avail = {a: set() for a in g.nonterminals}
        changed = True
        while changed:
            changed = False
            for r in g.rules:
                for kids in itertools.product(*(sorted(avail.get(a, ())) for a in r.nonterminals)):
                    z = head(r, kids)
                    if z not in avail.setdefault(r.lhs, set()):
                        avail[r.lhs].add(z)
                        changed = True
        choices = {a: sorted(zs) for a, zs in avail.items()}
    else:
        choices = {a: vectors for a in g.nonterminals}

    ids = IdMaker()
    rules = []
    for r in g.rules:
        for kids in itertools.product(*(choices.get(a, []) for a in r.nonterminals)):
            z = head(r, kids)
            tag = "_".join("".join(map(str, v)) for v in (z, *kids))
            rhs = tuple((vector_name(a, zk), f) for (a, f), zk in zip(r.rhs, kids))
            rules.append(Rule(ids(f"{r.id}.{tag}"), vector_name(r.lhs, z), r.predicate, r.terminal,
                              rhs, BOOLEAN.mul(r.rank, 1)))
    nts = [vector_name(a, z) for a in g.nonterminals for z in choices.get(a, [])]
    initial = [vector_name(a, z) for a in g.initial for z in choices.get(a, [])
               if not tables.is_zero(z)]
    out = Wrtg(BOOLEAN, g.storage, g.alphabet, tuple(nts), tuple(initial), tuple(rules))
    return trim(out) if do_trim else out


@dataclass(frozen=True)
class EmptinessResult:
    status: str  # "empty", "nonempty" or "unknown"
    witness: Tree | None = None
    bound: int | None = None

    def __str__(self):
        if self.status == "nonempty":
            return f"nonempty {self.witness}"
        if self.status == "unknown":
            return f"unknown(bound={self.bound})"
        return "empty"


def _regular_witness(g: Wrtg):
    """Least fixpoint of productive nonterminals of a TRIV grammar, with a smallest-first witness."""
    best = {}
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            if g.mmonoid.is_zero_op(r.weight):
                continue
            if all(a in best for a in r.nonterminals):
                kids = [best[a] for a in r.nonterminals]
                t = kids[0] if r.is_chain else Tree(r.terminal, tuple(kids))
                if r.lhs not in best or t.size < best[r.lhs].size:
                    best[r.lhs] = t
                    changed = True
    found = [best[z] for z in g.initial if z in best]
    return min(found, key=lambda t: (t.size, str(t))) if found else None


def support_empty(g: Wrtg, size_bound: int = 10, chain_cap: int = DEFAULT_CHAIN_CAP) -> EmptinessResult:
    sg = support_grammar(g)
    if sg.storage.is_finite:
        flat = eliminate_finite_storage_unweighted(sg)
        w = _regular_witness(flat)
        return EmptinessResult("nonempty", w) if w is not None else EmptinessResult("empty")
    if not sg.initial:
        return EmptinessResult("empty")
    for layer in trees_by_size(g.alphabet, size_bound):
        for t in sorted(layer, key=str):
            if evaluate(sg, t, chain_cap)[0]:
                return EmptinessResult("nonempty", t)
    return EmptinessResult("unknown", bound=size_bound)

