"""MSO formulas, M-expressions and expressions quantifying over behaviours."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Hashable, Mapping

from .behaviour import (BehaviourAlphabet, BehaviourSymbol, ExtendedSymbol, behaviours_on,
                        cap_stable, corresponding_alphabet, parse_symbol)
from .grammar import fresh_name
from .storage import storage_from_name, triv
from .terms import RankedAlphabet, Tree
from .weights import MMonoid, Op, WeightError, mmonoid_from_name


class LogicError(ValueError):
    pass


# ---- formulas --------------------------------------------------------------

@dataclass(frozen=True)
class Label:
    symbol: Hashable
    var: str


@dataclass(frozen=True)
class Edge:
    """edge_i(x, y); index None means any child."""
    index: int | None
    x: str
    y: str


@dataclass(frozen=True)
class EdgePlus:
    """Proper ancestor relation, evaluated natively."""
    x: str
    y: str


@dataclass(frozen=True)
class In:
    var: str
    set_var: str


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Exists:
    var: str
    body: object


@dataclass(frozen=True)
class Forall:
    var: str
    body: object


@dataclass(frozen=True)
class ExistsSet:
    var: str
    body: object


@dataclass(frozen=True)
class ForallSet:
    var: str
    body: object


@dataclass(frozen=True)
class Const:
    value: bool


TRUE = Const(True)
FALSE = Const(False)


def implies(p, q):
    return Or(Not(p), q)


def edge_plus_formula(x: str, y: str):
    """The MSO closure definition of edge+: y lies in every child-closed set containing the children of x."""
    X, u, v = "_X", "_u", "_v"
    closed = Forall(u, Forall(v, implies(And(In(u, X), Edge(None, u, v)), In(v, X))))
    start = Forall(v, implies(Edge(None, x, v), In(v, X)))
    return ForallSet(X, implies(And(closed, start), In(y, X)))


def free_vars(phi) -> set:
    if isinstance(phi, Const):
        return set()
    if isinstance(phi, Label):
        return {phi.var}
    if isinstance(phi, (Edge, EdgePlus)):
        return {phi.x, phi.y}
    if isinstance(phi, In):
        return {phi.var, phi.set_var}
    if isinstance(phi, Not):
        return free_vars(phi.arg)
    if isinstance(phi, (Or, And)):
        return free_vars(phi.left) | free_vars(phi.right)
    if isinstance(phi, (Exists, Forall, ExistsSet, ForallSet)):
        return free_vars(phi.body) - {phi.var}
    raise LogicError(f"not a formula: {phi!r}")


def _lookup(assignment, var):
    try:
        return assignment[var]
    except KeyError:
        raise LogicError(f"unbound variable {var}") from None


def models(phi, tree: Tree, assignment: Mapping | None = None) -> bool:
    """(tree, assignment) |= phi; first-order variables map to positions, set variables to sets."""
    return _Models(tree).check(phi, dict(assignment or {}))


class _Models:
    def __init__(self, tree: Tree):
        self.positions = tree.positions()
        self.labels = dict((w, t.label) for w, t in tree.items())

    def check(self, phi, env) -> bool:
        if isinstance(phi, Const):
            return phi.value
        if isinstance(phi, Label):
            w = _lookup(env, phi.var)
            return self.labels.get(w, _MISSING) == phi.symbol
        if isinstance(phi, Edge):
            x, y = _lookup(env, phi.x), _lookup(env, phi.y)
            if len(y) != len(x) + 1 or y[:-1] != x or y not in self.labels:
                return False
            return phi.index is None or y[-1] == phi.index
        if isinstance(phi, EdgePlus):
            x, y = _lookup(env, phi.x), _lookup(env, phi.y)
            return len(y) > len(x) and y[:len(x)] == x and y in self.labels
        if isinstance(phi, In):
            return _lookup(env, phi.var) in _lookup(env, phi.set_var)
        if isinstance(phi, Not):
            return not self.check(phi.arg, env)
        if isinstance(phi, Or):
            return self.check(phi.left, env) or self.check(phi.right, env)
        if isinstance(phi, And):
            return self.check(phi.left, env) and self.check(phi.right, env)
        if isinstance(phi, (Exists, Forall)):
            want = isinstance(phi, Exists)
            for w in self.positions:
                if self.check(phi.body, {**env, phi.var: w}) == want:
                    return want
            return not want
        if isinstance(phi, (ExistsSet, ForallSet)):
            want = isinstance(phi, ExistsSet)
            for subset in _subsets(self.positions):
                if self.check(phi.body, {**env, phi.var: subset}) == want:
                    return want
            return not want
        raise LogicError(f"not a formula: {phi!r}")


_MISSING = object()


def _subsets(items):
    items = list(items)
    for mask in range(1 << len(items)):
        yield frozenset(x for i, x in enumerate(items) if mask >> i & 1)


# ---- M-expressions ---------------------------------------------------------

@dataclass(frozen=True)
class Hom:
    """H(omega) with omega given on symbols of Theta_U; missing entries are 0_k."""
    family: Mapping  # (symbol, frozenset of variables) -> Op
    variables: frozenset = frozenset()

    def op(self, m: MMonoid, symbol, bound: frozenset, arity: int) -> Op:
        op = self.family.get((symbol, bound))
        return m.zero_op(arity) if op is None else op


@dataclass(frozen=True)
class Plus:
    left: object
    right: object


@dataclass(frozen=True)
class Guard:
    formula: object
    expr: object


@dataclass(frozen=True)
class SumPos:
    var: str
    expr: object


@dataclass(frozen=True)
class SumSet:
    var: str
    expr: object


def hom(entries, variables=()) -> Hom:
    """Build H(omega) from (symbol, op) or (symbol, vars, op) entries."""
    family = {}
    used = set(variables)
    for entry in entries:
        if len(entry) == 2:
            sym, op = entry
            vs = frozenset()
        else:
            sym, vs, op = entry
            vs = frozenset(vs)
        used |= vs
        family[(sym, vs)] = op
    return Hom(family, frozenset(used))


def expr_free_vars(e) -> set:
    if isinstance(e, Hom):
        return set(e.variables)
    if isinstance(e, Plus):
        return expr_free_vars(e.left) | expr_free_vars(e.right)
    if isinstance(e, Guard):
        return free_vars(e.formula) | expr_free_vars(e.expr)
    if isinstance(e, (SumPos, SumSet)):
        return expr_free_vars(e.expr) - {e.var}
    raise LogicError(f"not an M-expression: {e!r}")


def _eval_hom(e: Hom, m: MMonoid, tree: Tree, env) -> object:
    fo = {}
    so = []
    for v in sorted(e.variables):
        val = _lookup(env, v)
        if isinstance(val, frozenset):
            so.append((v, val))
        else:
            fo.setdefault(val, set()).add(v)

    def fold(w, node):
        vals = [fold(w + (i,), ch) for i, ch in enumerate(node.children, 1)]
        bound = set(fo.get(w, ()))
        bound.update(v for v, s in so if w in s)
        op = e.op(m, node.label, frozenset(bound), len(node.children))
        if op.arity != len(vals):
            raise LogicError(f"operation for {node.label} has arity {op.arity}, symbol has rank {len(vals)}")
        return m.apply(op, vals)

    return fold((), tree)


def eval_mexpr(e, tree: Tree, m: MMonoid, assignment: Mapping | None = None):
    env = dict(assignment or {})
    if isinstance(e, Hom):
        return _eval_hom(e, m, tree, env)
    if isinstance(e, Plus):
        return m.add(eval_mexpr(e.left, tree, m, env), eval_mexpr(e.right, tree, m, env))
    if isinstance(e, Guard):
        return eval_mexpr(e.expr, tree, m, env) if models(e.formula, tree, env) else m.zero
    if isinstance(e, SumPos):
        return m.sum(eval_mexpr(e.expr, tree, m, {**env, e.var: w}) for w in tree.positions())
    if isinstance(e, SumSet):
        return m.sum(eval_mexpr(e.expr, tree, m, {**env, e.var: s}) for s in _subsets(tree.positions()))
    raise LogicError(f"not an M-expression: {e!r}")


def support_symbols(e, m: MMonoid) -> set:
    """Symbols that can occur in a tree with non-zero value."""
    if isinstance(e, Hom):
        return {sym for (sym, _), op in e.family.items() if not m.is_zero_op(op)}
    if isinstance(e, Plus):
        return support_symbols(e.left, m) | support_symbols(e.right, m)
    if isinstance(e, (Guard, SumPos, SumSet)):
        return support_symbols(e.expr, m)
    raise LogicError(f"not an M-expression: {e!r}")


# ---- expressions with behaviour --------------------------------------------

@dataclass(frozen=True)
class BehExpr:
    delta: BehaviourAlphabet
    sigma: RankedAlphabet
    expr: object
    mmonoid: MMonoid

    def __post_init__(self):
        free = expr_free_vars(self.expr)
        if free:
            raise LogicError(f"expression has free variables: {' '.join(sorted(free))}")


@dataclass(frozen=True)
class Sentence:
    """A plain M-expression sentence over sigma."""
    sigma: RankedAlphabet
    expr: object
    mmonoid: MMonoid


def eval_behexpr(b: BehExpr, xi: Tree, segment_cap: int = 8, prune: bool = True) -> tuple:
    """(sum over behaviours zeta on xi of [[e]](zeta), exact)."""
    symbols = support_symbols(b.expr, b.mmonoid) if prune else None
    m = b.mmonoid
    total = m.zero
    for zeta in behaviours_on(xi, b.delta, segment_cap, symbols):
        total = m.add(total, eval_mexpr(b.expr, zeta, m))
    return total, cap_stable(xi, b.delta, segment_cap, symbols)


def _all_vars(e, out: set) -> set:
    if isinstance(e, Hom):
        out |= set(e.variables)
    elif isinstance(e, (Plus, Or, And)):
        _all_vars(e.left, out)
        _all_vars(e.right, out)
    elif isinstance(e, Guard):
        _all_vars(e.formula, out)
        _all_vars(e.expr, out)
    elif isinstance(e, Not):
        _all_vars(e.arg, out)
    elif isinstance(e, (SumPos, SumSet, Exists, Forall, ExistsSet, ForallSet)):
        out.add(e.var)
        _all_vars(e.expr if isinstance(e, (SumPos, SumSet)) else e.body, out)
    elif isinstance(e, Label):
        out.add(e.var)
    elif isinstance(e, (Edge, EdgePlus)):
        out |= {e.x, e.y}
    elif isinstance(e, In):
        out |= {e.var, e.set_var}
    return out


def _relabel(e, fn):
    if isinstance(e, Label):
        return Label(fn(e.symbol), e.var)
    if isinstance(e, (Edge, EdgePlus, In, Const)):
        return e
    if isinstance(e, Not):
        return Not(_relabel(e.arg, fn))
    if isinstance(e, (Or, And, Plus)):
        return type(e)(_relabel(e.left, fn), _relabel(e.right, fn))
    if isinstance(e, (Exists, Forall, ExistsSet, ForallSet)):
        return type(e)(e.var, _relabel(e.body, fn))
    if isinstance(e, Hom):
        return Hom({(fn(s), vs): op for (s, vs), op in e.family.items()}, e.variables)
    if isinstance(e, Guard):
        return Guard(_relabel(e.formula, fn), _relabel(e.expr, fn))
    if isinstance(e, (SumPos, SumSet)):
        return type(e)(e.var, _relabel(e.expr, fn))
    raise LogicError(f"cannot relabel {e!r}")


def embed_sentence(e, sigma: Mapping, mmonoid: MMonoid) -> BehExpr:
    """Move a sentence over sigma to TRIV behaviours: sigma becomes <(true,id...id),sigma>."""
    if expr_free_vars(e):
        raise LogicError("only sentences can be embedded")
    sigma = RankedAlphabet(sigma)

    def lift(sym):
        return ExtendedSymbol(BehaviourSymbol("true", ("id",) * sigma[sym]), sym)

    x = fresh_name("x", _all_vars(e, set()))
    star = ExtendedSymbol(BehaviourSymbol("true", ("id",)), None)
    guarded = Guard(Not(Exists(x, Label(star, x))), _relabel(e, lift))
    delta = corresponding_alphabet(triv(), ["true"], ["id"], sigma)
    return BehExpr(delta, sigma, guarded, mmonoid)


# ---- s-expression files ----------------------------------------------------

_OPEN = "([{<"
_CLOSE = ")]}>"


def tokenize(text: str) -> list:
    """Atoms, '(' and ')'.  An atom keeps bracketed groups glued to it, so
    ``push(gamma)`` and ``<(true,id id),sigma>`` are single atoms.  Lines
    whose first non-blank character is ``#`` are comments."""
    lines = [ln for ln in text.splitlines() if not ln.lstrip().startswith("#")]
    text = "\n".join(lines)
    out, i, n = [], 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            out.append(ch)
            i += 1
        else:
            start, depth = i, 0
            while i < n:
                ch = text[i]
                if depth == 0 and (ch.isspace() or ch == ")"):
                    break
                if ch in _OPEN:
                    depth += 1
                elif ch in _CLOSE:
                    depth -= 1
                i += 1
            if depth != 0:
                raise LogicError(f"unbalanced brackets in atom at offset {start}")
            out.append(text[start:i])
    return out


def read_sexpr(text: str):
    toks = tokenize(text)
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(toks):
            raise LogicError("unexpected end of input")
        t = toks[pos]
        pos += 1
        if t == "(":
            items = []
            while True:
                if pos >= len(toks):
                    raise LogicError("missing ')'")
                if toks[pos] == ")":
                    pos += 1
                    return items
                items.append(read())
        if t == ")":
            raise LogicError("unexpected ')'")
        return t

    value = read()
    if pos != len(toks):
        raise LogicError("trailing input after expression")
    return value


def _atom(x, what: str) -> str:
    if not isinstance(x, str):
        raise LogicError(f"expected {what}, got a list")
    return x


def parse_formula(s):
    if isinstance(s, str):
        if s == "true":
            return TRUE
        if s == "false":
            return FALSE
        raise LogicError(f"unexpected atom {s!r} in formula")
    if not s:
        raise LogicError("empty formula")
    head, args = _atom(s[0], "formula keyword"), s[1:]
    if head == "label" and len(args) == 2:
        return Label(parse_symbol(_atom(args[0], "symbol")), _atom(args[1], "variable"))
    if head == "edge" and len(args) == 3:
        return Edge(int(_atom(args[0], "index")), _atom(args[1], "variable"), _atom(args[2], "variable"))
    if head == "edge" and len(args) == 2:
        return Edge(None, _atom(args[0], "variable"), _atom(args[1], "variable"))
    if head == "edge+" and len(args) == 2:
        return EdgePlus(_atom(args[0], "variable"), _atom(args[1], "variable"))
    if head == "in" and len(args) == 2:
        return In(_atom(args[0], "variable"), _atom(args[1], "set variable"))
    if head == "not" and len(args) == 1:
        return Not(parse_formula(args[0]))
    if head in ("or", "and") and args:
        parts = [parse_formula(a) for a in args]
        cls = Or if head == "or" else And
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = cls(p, out)
        return out
    if head == "implies" and len(args) == 2:
        return implies(parse_formula(args[0]), parse_formula(args[1]))
    quant = {"exists": Exists, "forall": Forall, "existsS": ExistsSet, "forallS": ForallSet}
    if head in quant and len(args) == 2:
        return quant[head](_atom(args[0], "variable"), parse_formula(args[1]))
    raise LogicError(f"malformed formula ({head} ...)")


def parse_mexpr(s, m: MMonoid, ranks: Mapping | None = None):
    if isinstance(s, str) or not s:
        raise LogicError("an M-expression must be a list")
    head, args = _atom(s[0], "expression keyword"), s[1:]
    if head == "hom":
        entries, declared = [], []
        for a in args:
            if isinstance(a, list) and a and a[0] == "vars":
                declared.extend(a[1:])
                continue
            if not (isinstance(a, list) and a and a[0] == "sym" and len(a) in (3, 4)):
                raise LogicError("hom entries look like (sym SYMBOL OP) or (sym SYMBOL (vars x) OP)")
            sym = parse_symbol(_atom(a[1], "symbol"))
            vs = ()
            if len(a) == 4:
                if not (isinstance(a[2], list) and a[2] and a[2][0] == "vars"):
                    raise LogicError("expected (vars ...)")
                vs = tuple(a[2][1:])
            try:
                op = m.parse_op(_atom(a[-1], "operation"))
            except WeightError as exc:
                raise LogicError(str(exc)) from None
            rank = sym.rank if isinstance(sym, ExtendedSymbol) else (ranks or {}).get(sym)
            if rank is not None and op.arity != rank:
                raise LogicError(f"operation for {sym} has arity {op.arity}, symbol has rank {rank}")
            entries.append((sym, vs, op))
        return hom(entries, declared)
    if head == "plus" and len(args) >= 2:
        parts = [parse_mexpr(a, m, ranks) for a in args]
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = Plus(p, out)
        return out
    if head == "guard" and len(args) == 2:
        return Guard(parse_formula(args[0]), parse_mexpr(args[1], m, ranks))
    if head == "sumx" and len(args) == 2:
        return SumPos(_atom(args[0], "variable"), parse_mexpr(args[1], m, ranks))
    if head == "sumX" and len(args) == 2:
        return SumSet(_atom(args[0], "variable"), parse_mexpr(args[1], m, ranks))
    raise LogicError(f"malformed M-expression ({head} ...)")


def _parse_ranks(items) -> RankedAlphabet:
    ranks = {}
    for it in items:
        name, sep, k = _atom(it, "symbol/rank").rpartition("/")
        if not sep or not k.isdigit():
            raise LogicError(f"malformed alphabet entry {it!r}")
        ranks[name] = int(k)
    return RankedAlphabet(ranks)


def parse_logic(text: str):
    """Parse a ``(behsum ...)`` or ``(expr ...)`` file into a BehExpr or Sentence."""
    s = read_sexpr(text)
    if not isinstance(s, list) or not s or s[0] not in ("behsum", "expr"):
        raise LogicError("expected (behsum ...) or (expr ...)")
    kind, rest = s[0], s[1:]
    opts, body, i = {}, None, 0
    while i < len(rest):
        item = rest[i]
        if isinstance(item, str) and item.startswith(":"):
            key = item[1:]
            if key == "delta":
                opts[key] = rest[i + 1:i + 3]
                i += 3
            else:
                if i + 1 >= len(rest):
                    raise LogicError(f"missing value for {item}")
                opts[key] = rest[i + 1]
                i += 2
        elif isinstance(item, list) and item and item[0] == "mexpr":
            body = item
            i += 1
        else:
            raise LogicError(f"unexpected item in ({kind} ...)")
    if body is None or len(body) != 2:
        raise LogicError("missing (mexpr E)")
    m = mmonoid_from_name(_atom(opts.get("mmonoid", "bimonoid(nat_inf)"), "M-monoid name"))
    if "alphabet" not in opts:
        raise LogicError("missing :alphabet")
    sigma = _parse_ranks(opts["alphabet"])
    if kind == "expr":
        return Sentence(sigma, parse_mexpr(body[1], m, sigma), m)
    storage = storage_from_name(_atom(opts.get("storage", "triv"), "storage name"))
    delta_parts = {}
    for part in opts.get("delta", []):
        if not isinstance(part, list) or not part or part[0] not in ("preds", "instrs"):
            raise LogicError(":delta expects (preds ...) (instrs ...)")
        delta_parts[part[0]] = [_atom(x, "name") for x in part[1:]]
    delta = corresponding_alphabet(storage, delta_parts.get("preds", []), delta_parts.get("instrs", []),
                                   sigma)
    return BehExpr(delta, sigma, parse_mexpr(body[1], m), m)


def _fmt_symbol(sym) -> str:
    return str(sym)


def format_formula(phi) -> str:
    if isinstance(phi, Const):
        return "true" if phi.value else "false"
    if isinstance(phi, Label):
        return f"(label {_fmt_symbol(phi.symbol)} {phi.var})"
    if isinstance(phi, Edge):
        return f"(edge {phi.x} {phi.y})" if phi.index is None else f"(edge {phi.index} {phi.x} {phi.y})"
    if isinstance(phi, EdgePlus):
        return f"(edge+ {phi.x} {phi.y})"
    if isinstance(phi, In):
        return f"(in {phi.var} {phi.set_var})"
    if isinstance(phi, Not):
        return f"(not {format_formula(phi.arg)})"
    if isinstance(phi, (Or, And)):
        word = "or" if isinstance(phi, Or) else "and"
        return f"({word} {format_formula(phi.left)} {format_formula(phi.right)})"
    word = {Exists: "exists", Forall: "forall", ExistsSet: "existsS", ForallSet: "forallS"}[type(phi)]
    return f"({word} {phi.var} {format_formula(phi.body)})"


def format_mexpr(e, m: MMonoid) -> str:
    if isinstance(e, Hom):
        parts = []
        for (sym, vs), op in e.family.items():
            mid = f" (vars {' '.join(sorted(vs))})" if vs else ""
            parts.append(f"(sym {_fmt_symbol(sym)}{mid} {m.format_op(op)})")
        return "(hom " + " ".join(parts) + ")"
    if isinstance(e, Plus):
        return f"(plus {format_mexpr(e.left, m)} {format_mexpr(e.right, m)})"
    if isinstance(e, Guard):
        return f"(guard {format_formula(e.formula)} {format_mexpr(e.expr, m)})"
    word = "sumx" if isinstance(e, SumPos) else "sumX"
    return f"({word} {e.var} {format_mexpr(e.expr, m)})"


def assignments(tree: Tree, fo_vars=(), so_vars=()):
    """Every assignment of the given variables on tree (positions resp. position sets)."""
    pos = tree.positions()
    for fo in itertools.product(pos, repeat=len(fo_vars)):
        for so in itertools.product(list(_subsets(pos)), repeat=len(so_vars)):
            yield {**dict(zip(fo_vars, fo)), **dict(zip(so_vars, so))}
