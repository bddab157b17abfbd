"""Chain-rule elimination for simple grammars over compressible M-monoids."""

from __future__ import annotations

from ..grammar import GrammarError, IdMaker, Rule, Wrtg, non_simple_chain_rules
from ..weights import WeightError, compose, op_sum


def _scalar(m, op):
    if m.is_zero_op(op):
        return m.backing.zero
    if op.kind != "mul":
        raise GrammarError(f"not compressible: {m.format_op(op)} is not a mul operation")
    return op.param


def _kleene(b, x: list[list]) -> list[list]:
    """x* = sum of all powers, by Floyd-Warshall style elimination with the scalar star."""
    n = len(x)
    cur = [row[:] for row in x]
    for k in range(n):
        s = b.star(cur[k][k])
        col = [cur[i][k] for i in range(n)]
        row = cur[k][:]
        for i in range(n):
            if col[i] == b.zero:
                continue
            lead = b.mul(col[i], s)
            for j in range(n):
                if row[j] != b.zero:
                    cur[i][j] = b.add(cur[i][j], b.mul(lead, row[j]))
    for i in range(n):
        cur[i][i] = b.add(cur[i][i], b.one)
    return cur


def _fixpoint_star(b, x: list[list]) -> list[list]:
    """S = E + X S iterated to stability; used when the backing has no scalar star."""
    n = len(x)
    s = [[b.one if i == j else b.zero for j in range(n)] for i in range(n)]
    for _ in range(2 * n * n + 1):
        nxt = [[b.add(b.one if i == j else b.zero,
                      b.sum(b.mul(x[i][c], s[c][j]) for c in range(n)))
                for j in range(n)] for i in range(n)]
        if nxt == s:
            return s
        s = nxt
    raise GrammarError(f"not compressible: the chain matrix star does not converge over {b.name}")


def chain_star(g: Wrtg) -> dict:
    """(W*)[A][A'] as bimonoid elements; W*[A][A'] stands for mul(1, value)."""
    m = g.mmonoid
    b = m.backing
    if b is None or not b.semiring:
        raise GrammarError(f"not compressible: {m.name} is not the M-monoid of a semiring")
    nts = list(g.nonterminals)
    index = {a: i for i, a in enumerate(nts)}
    w = [[b.zero] * len(nts) for _ in nts]
    for r in g.rules:
        if r.is_chain:
            i, j = index[r.lhs], index[r.rhs[0][0]]
            w[i][j] = b.add(w[i][j], _scalar(m, r.weight))
    # W_{A,C} o W_{C,B} multiplies the C,B entry first, so work on the transpose
    wt = [list(col) for col in zip(*w)]
    star_t = _kleene(b, wt) if b.star is not None else _fixpoint_star(b, wt)
    return {a: {a2: star_t[index[a2]][index[a]] for a2 in nts} for a in nts}


def eliminate_chain_rules(g: Wrtg) -> Wrtg:
    bad = non_simple_chain_rules(g)
    if bad:
        r, reason = bad[0]
        raise GrammarError(f"not simple: rule {r.id} chain with {reason}")
    if not (g.storage.has_true and g.storage.has_id):
        raise GrammarError(f"storage {g.storage.spec} lacks the predicate true or the instruction id")
    m = g.mmonoid
    star = chain_star(g)
    groups = {}  # (pred, terminal, rhs) -> {A': [rules]}
    for r in g.rules:
        if not r.is_chain:
            groups.setdefault((r.predicate, r.terminal, r.rhs), {}).setdefault(r.lhs, []).append(r)
    ids = IdMaker()
    rules = []
    for a in g.nonterminals:
        for (pred, term, rhs), by_lhs in groups.items():
            parts, sources = [], []
            for a2, rs in by_lhs.items():
                factor = star[a][a2]
                if factor == m.backing.zero:
                    continue
                for r in rs:
                    try:
                        parts.append(compose(m, m.mul(1, factor), r.weight))
                    except WeightError as exc:
                        raise GrammarError(f"not compressible: {exc}") from None
                    sources.append(r)
            if not parts:
                continue
            try:
                weight = op_sum(m, parts, len(rhs))
            except WeightError as exc:
                raise GrammarError(f"not compressible: {exc}") from None
            if m.is_zero_op(weight):
                continue
            own = [r for r in sources if r.lhs == a]
            rid = own[0].id if own else f"{sources[0].id}.{a}"
            rules.append(Rule(ids(rid), a, pred, term, rhs, weight))
    return g.replace(rules=rules)
