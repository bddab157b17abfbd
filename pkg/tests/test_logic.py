import itertools

import pytest
from hypothesis import given, settings, strategies as st

from conftest import fixture_path
from wts.logic import (FALSE, And, BehExpr, Edge, EdgePlus, Exists, ExistsSet, Forall, Guard, In, Label,
                       LogicError, Not, Or, Plus, Sentence, SumPos, SumSet, assignments, edge_plus_formula,
                       embed_sentence, eval_behexpr, eval_mexpr, format_formula, format_mexpr, free_vars,
                       hom, implies, models, parse_formula, parse_logic, parse_mexpr, read_sexpr)
from wts.terms import parse_term, trees_up_to
from wts.weights import mmonoid_from_name

M = mmonoid_from_name("bimonoid(nat_inf)")
SIGMA = {"sigma": 2, "gamma": 1, "alpha": 0}


def load(name):
    with open(fixture_path(name), encoding="utf-8") as fh:
        return parse_logic(fh.read())


def ones():
    return hom([("sigma", M.mul(2, 1)), ("gamma", M.mul(1, 1)), ("alpha", M.mul(0, 1))])


def small_trees(size):
    return trees_up_to(SIGMA, size)


# ---- formulas --------------------------------------------------------------

def test_models_examples():
    t = parse_term("sigma(alpha,gamma(alpha))")
    assert models(Label("sigma", "x"), t, {"x": ()})
    assert not models(Label("alpha", "x"), t, {"x": ()})
    assert models(Edge(2, "x", "y"), t, {"x": (), "y": (2,)})
    assert not models(Edge(1, "x", "y"), t, {"x": (), "y": (2,)})
    assert models(EdgePlus("x", "y"), t, {"x": (), "y": (2, 1)})
    assert not models(EdgePlus("x", "x"), t, {"x": ()})
    assert models(In("x", "X"), t, {"x": (1,), "X": frozenset({(1,), (2,)})})
    some_gamma_over_alpha = Exists("x", Exists("y", And(Label("gamma", "x"),
                                                        And(Label("alpha", "y"), Edge(None, "x", "y")))))
    assert models(some_gamma_over_alpha, t)
    assert not models(some_gamma_over_alpha, parse_term("sigma(alpha,alpha)"))
    all_leaves_alpha = Forall("x", implies(Not(Exists("y", Edge(None, "x", "y"))), Label("alpha", "x")))
    assert models(all_leaves_alpha, t)
    assert not models(FALSE, t)


def test_unbound_variable():
    with pytest.raises(LogicError, match="unbound variable"):
        models(Label("alpha", "x"), parse_term("alpha"))


def test_edge_plus_matches_closure_formula_and_prefix_order():
    closure = edge_plus_formula("x", "y")
    for t in small_trees(5):
        for env in assignments(t, ("x", "y")):
            x, y = env["x"], env["y"]
            prefix = len(x) < len(y) and y[:len(x)] == x
            assert models(EdgePlus("x", "y"), t, env) == prefix
            assert models(closure, t, env) == prefix


def test_edge_plus_closure_on_six_positions():
    closure = edge_plus_formula("x", "y")
    t = parse_term("sigma(gamma(alpha),sigma(alpha,alpha))")
    assert t.size == 6
    for env in assignments(t, ("x", "y")):
        assert models(closure, t, env) == models(EdgePlus("x", "y"), t, env)


def _rename(phi, old, new):
    if isinstance(phi, Label):
        return Label(phi.symbol, new if phi.var == old else phi.var)
    if isinstance(phi, (Edge, EdgePlus)):
        sub = {old: new}
        args = (sub.get(phi.x, phi.x), sub.get(phi.y, phi.y))
        return Edge(phi.index, *args) if isinstance(phi, Edge) else EdgePlus(*args)
    if isinstance(phi, In):
        return In(new if phi.var == old else phi.var, new if phi.set_var == old else phi.set_var)
    if isinstance(phi, Not):
        return Not(_rename(phi.arg, old, new))
    if isinstance(phi, (And, Or)):
        return type(phi)(_rename(phi.left, old, new), _rename(phi.right, old, new))
    return type(phi)(new if phi.var == old else phi.var, _rename(phi.body, old, new))


FORMULAS = [
    Exists("x", Exists("y", And(Label("sigma", "x"), And(Label("gamma", "y"), EdgePlus("x", "y"))))),
    Forall("x", Or(Label("alpha", "x"), Exists("y", Edge(1, "x", "y")))),
    ExistsSet("X", Forall("x", implies(Label("alpha", "x"), In("x", "X")))),
    Exists("x", Not(Exists("y", EdgePlus("y", "x")))),
]


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(FORMULAS), st.sampled_from(small_trees(4)))
def test_bound_variable_renaming_is_invisible(phi, t):
    renamed = _rename(_rename(phi, "x", "u1"), "y", "u2")
    assert free_vars(renamed) == free_vars(phi) == set()
    assert models(renamed, t) == models(phi, t)


def test_formula_text_round_trip():
    for phi in FORMULAS:
        assert parse_formula(read_sexpr(format_formula(phi))) == phi


# ---- M-expressions ---------------------------------------------------------

def test_sum_over_sets_counts_subsets():
    e = SumSet("X", ones())
    for t in small_trees(5):
        assert eval_mexpr(e, t, M) == 2 ** t.size


def test_sum_over_positions_and_plus():
    for t in small_trees(5):
        assert eval_mexpr(SumPos("x", ones()), t, M) == t.size
        assert eval_mexpr(Plus(ones(), ones()), t, M) == 2


def test_false_guard_is_zero():
    for t in small_trees(4):
        assert eval_mexpr(Guard(FALSE, ones()), t, M) == 0


def test_missing_hom_entries_are_zero():
    e = hom([("alpha", M.mul(0, 5))])
    assert eval_mexpr(e, parse_term("alpha"), M) == 5
    assert eval_mexpr(e, parse_term("gamma(alpha)"), M) == 0


def test_leafcount_sentence():
    s = load("sentence_leafcount.expr")
    assert isinstance(s, Sentence)
    for t in small_trees(6):
        alphas = sum(1 for w in t.positions() if t.label_at(w) == "alpha")
        assert eval_mexpr(s.expr, t, s.mmonoid) == alphas


def _gamma_below_sigma(t):
    pos = t.positions()
    sig = [w for w in pos if t.label_at(w) == "sigma"]
    if not sig:
        return 1
    below = any(len(x) < len(y) and y[:len(x)] == x and t.label_at(y) == "gamma"
                for x in sig for y in pos)
    return 2 ** len(sig) if below else 0


def test_gamma_below_sigma_sentence():
    s = load("sentence_gamma_below_sigma.expr")
    for t in small_trees(6):
        assert eval_mexpr(s.expr, t, s.mmonoid) == _gamma_below_sigma(t)


@pytest.mark.parametrize("name", ["sentence_leafcount.expr", "sentence_gamma_below_sigma.expr"])
def test_embedding_agrees(name):
    s = load(name)
    b = embed_sentence(s.expr, s.sigma, s.mmonoid)
    for t in small_trees(5):
        assert eval_behexpr(b, t) == (eval_mexpr(s.expr, t, s.mmonoid), True)


def test_embedding_without_pruning():
    s = load("sentence_leafcount.expr")
    b = embed_sentence(s.expr, s.sigma, s.mmonoid)
    for t in small_trees(3):
        assert eval_behexpr(b, t, segment_cap=2, prune=False)[0] == eval_mexpr(s.expr, t, s.mmonoid)


def test_embedding_needs_sentence():
    with pytest.raises(LogicError):
        embed_sentence(SumPos("x", hom([], ["y"])), SIGMA, M)


def test_mexpr_text_round_trip():
    for name in ["sentence_leafcount.expr", "sentence_gamma_below_sigma.expr", "run.beh"]:
        e = load(name)
        again = parse_mexpr(read_sexpr(format_mexpr(e.expr, e.mmonoid)), e.mmonoid)
        assert again == e.expr


# ---- behaviour sums --------------------------------------------------------

def run_tree(n, m):
    arm = lambda k: "delta(" * k + "alpha" + ")" * k  # noqa: E731
    return parse_term(f"sigma({arm(n)},{arm(m)})")


def test_run_behaviour_sum():
    b = load("run.beh")
    assert isinstance(b, BehExpr)
    for n in range(4):
        assert eval_behexpr(b, run_tree(n, n), segment_cap=n + 1) == (8 ** n, True)
    for n, m in itertools.product(range(3), repeat=2):
        if n != m:
            assert eval_behexpr(b, run_tree(n, m), segment_cap=3)[0] == 0


def test_behexpr_rejects_free_variables():
    b = load("run.beh")
    with pytest.raises(LogicError, match="free variables"):
        BehExpr(b.delta, b.sigma, hom([], ["x"]), b.mmonoid)


@pytest.mark.parametrize("text,msg", [
    ("(expr :alphabet (alpha/0))", "missing"),
    ("(expr :alphabet (alpha/0) (mexpr (hom (sym alpha mul(1,1)))))", "arity"),
    ("(expr :alphabet (alpha/0) (mexpr (guard (label alpha) (hom))))", "malformed formula"),
    ("(foo)", "expected"),
    ("(expr :alphabet (alpha/0) (mexpr (hom))", "missing"),
])
def test_parse_errors(text, msg):
    with pytest.raises(LogicError, match=msg):
        parse_logic(text)
