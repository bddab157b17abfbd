import pytest
from hypothesis import given
from hypothesis import strategies as st

from wts.storage import (UNDEFINED, FiniteTable, StorageError, count, finite_storage, iterated_pushdown,
                         parse_finite_table, pcp_storage, pd_config, reachable, storage_from_name, triv,
                         with_true_id)

PARITY = "finite{configs: even odd; initial: even; pred even: even; instr flip: even->odd odd->even}"


def test_count():
    s = count()
    assert s.test("zero", 0) and not s.test("zero", 3)
    assert s.apply("dec", 0) is UNDEFINED
    assert s.apply("inc", 4) == 5
    assert s.is_always_true("true") and s.is_identity("id")


def test_triv():
    s = triv()
    assert s.apply("id", "c") == "c"
    assert s.is_finite and s.configs == ("c",)


def test_pushdown_instructions():
    s = iterated_pushdown(1)
    c0 = s.initial
    assert c0 == pd_config("gamma0")
    assert s.apply("push(gamma)", c0) == pd_config("gamma", "gamma0")
    assert s.apply("pop", pd_config("gamma", "gamma0")) == c0
    assert s.apply("pop", c0) is UNDEFINED
    assert not s.test("top=gamma0", pd_config("gamma", "gamma0"))
    assert s.test("top=gamma", pd_config("gamma", "gamma0"))
    assert s.apply("stay(delta)", pd_config("gamma", "gamma0")) == pd_config("delta", "gamma0")


def test_pushdown_level_two():
    s = iterated_pushdown(2)
    c = s.apply("push(gamma,push(beta))", s.initial)
    assert len(c) == 2 and len(c[0][1]) == 2
    assert s.test("test(top=beta)", c)
    assert s.is_always_true("test(test(true))")


def test_pcp():
    s = pcp_storage([("ab", "a"), ("b", "bb")])
    assert s.test("equal", s.initial)
    c = s.apply("1", s.initial)
    assert c == ("ab", "a") and not s.test("equal", c)
    assert s.test("equal", s.apply("2", c))


def test_with_true_id():
    assert with_true_id(triv()) is triv() or with_true_id(triv()) == triv()
    pd = iterated_pushdown(2)
    assert with_true_id(pd) is pd
    bare = storage_from_name(PARITY)
    assert not bare.has_true
    full = with_true_id(bare)
    assert full.has_true and full.has_id and full.is_always_true("true")
    assert full.apply("flip", "even") == "odd"


def test_finite_table_validation():
    with pytest.raises(StorageError):
        finite_storage(FiniteTable(("a",), "b", {}, {}))
    with pytest.raises(StorageError):
        parse_finite_table("configs: a; initial a")


def test_unknown_names():
    s = count()
    assert not s.has_predicate("top=gamma")
    with pytest.raises(StorageError):
        s.apply("push(gamma)", 0)
    with pytest.raises(StorageError):
        storage_from_name("queue")


def test_finite_reachability_inside_witness():
    s = storage_from_name(PARITY)
    assert reachable(s, ["flip"], 20) <= set(s.configs)


STORAGES = {
    "count": (count(), ["inc", "dec", "id"], ["true", "zero"]),
    "pd1": (iterated_pushdown(1), ["push(gamma)", "pop", "stay(delta)", "id"],
            ["true", "top=gamma", "top=gamma0", "bottom"]),
    "pcp": (pcp_storage([("ab", "a"), ("b", "bb")]), ["1", "2"], ["true", "equal"]),
}


@given(st.sampled_from(sorted(STORAGES)), st.lists(st.integers(0, 3), max_size=20))
def test_predicates_total_and_deterministic(name, moves):
    s, instrs, preds = STORAGES[name]
    c = s.initial
    for i in moves:
        d = s.apply(instrs[i % len(instrs)], c)
        if d is UNDEFINED:
            continue
        assert d == s.apply(instrs[i % len(instrs)], c)
        c = d
        for p in preds:
            v = s.predicate(p)(c)
            assert v in (True, False, 0, 1)
            assert v == s.predicate(p)(c)


@given(st.lists(st.sampled_from(["push(gamma)", "pop", "stay(delta)"]), max_size=20))
def test_pushdown_lengths(moves):
    s = iterated_pushdown(1)
    c = s.initial
    for f in moves:
        d = s.apply(f, c)
        if d is UNDEFINED:
            assert f == "pop" and len(c) == 1
            continue
        assert len(d) - len(c) == {"push(gamma)": 1, "pop": -1, "stay(delta)": 0}[f]
        c = d
