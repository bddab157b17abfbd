import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wts.behaviour import (BehaviourSymbol, ExtendedSymbol, behaviours_on, cap_stable, check_behaviour,
                           corresponding_alphabet, count_behaviours, erase, extended_alphabet,
                           is_behaviour_on, parse_behaviour_tree, pr1, theta)
from wts.storage import count, iterated_pushdown, pd_config, triv
from wts.terms import RankedAlphabet, Tree, parse_term, trees_up_to

SIGMA = RankedAlphabet({"sigma": 2, "delta": 1, "alpha": 0})
PD1 = iterated_pushdown(1)
PD_DELTA = corresponding_alphabet(PD1, ["top=gamma0", "top=gamma"], ["push(gamma)", "pop"], SIGMA)
PD_XI = parse_term("sigma(delta(alpha),alpha)")
PD_ZETA = (
    "<(top=gamma0,push(gamma)),*>(<(top=gamma,push(gamma) push(gamma)),sigma>("
    "<(top=gamma,pop),*>(<(top=gamma,pop),delta>(<(top=gamma0,eps),alpha>)),"
    "<(top=gamma,push(gamma)),*>(<(top=gamma,pop),*>(<(top=gamma,pop),*>(<(top=gamma,eps),alpha>)))))"
)
UBAL_SIGMA = RankedAlphabet({"sigma": 2, "delta": 2, "#": 0})


def pd_zeta():
    return parse_behaviour_tree(PD_ZETA, extended_alphabet(PD_DELTA, SIGMA))


def test_alphabet_sizes():
    d = corresponding_alphabet(PD1, ["top=gamma0", "top=gamma"], ["push(gamma)", "pop"], SIGMA)
    assert [len(d.symbols(k)) for k in range(3)] == [2, 4, 8]
    leaves = corresponding_alphabet(PD1, ["true"], ["pop"], {"alpha": 0})
    assert leaves.all_symbols() == [BehaviourSymbol("true", ())]


def test_check_behaviour_family():
    b = Tree(BehaviourSymbol("true", ()))
    assert check_behaviour(b, 7, count()).family == {(): 7}
    res = check_behaviour(Tree(BehaviourSymbol("zero", ())), 1, count())
    assert not res and res.position == ()
    # b = (top=gamma0, push(gamma) pop): the second child fails at the root
    b = Tree(BehaviourSymbol("top=gamma0", ("push(gamma)", "pop")),
             (Tree(BehaviourSymbol("top=gamma", ())), Tree(BehaviourSymbol("true", ()))))
    res = check_behaviour(b, PD1.initial, PD1)
    assert not res and "pop" in res.reason


def test_family_of_two_pushes():
    b = Tree(BehaviourSymbol("top=gamma0", ("push(gamma)",)),
             (Tree(BehaviourSymbol("top=gamma", ("push(gamma)", "pop")),
                   (Tree(BehaviourSymbol("top=gamma", ())), Tree(BehaviourSymbol("top=gamma0", ())))),))
    fam = check_behaviour(b, PD1.initial, PD1).family
    assert fam == {(): pd_config("gamma0"), (1,): pd_config("gamma", "gamma0"),
                   (1, 1): pd_config("gamma", "gamma", "gamma0"), (1, 2): pd_config("gamma0")}


def test_triv_cap0_single_behaviour():
    d = corresponding_alphabet(triv(), ["true"], ["id"], SIGMA)
    xi = parse_term("sigma(delta(alpha),alpha)")
    zetas = behaviours_on(xi, d, 0)
    assert len(zetas) == 1
    (z,) = zetas
    assert z.positions() == xi.positions()
    for w in xi.positions():
        label = z.label_at(w)
        assert label.terminal == xi.label_at(w)
        assert label.behaviour == BehaviourSymbol("true", ("id",) * len(xi.subtree(w).children))
    assert theta(xi, z) == {w: w for w in xi.positions()}


def test_pd_zeta_is_a_behaviour():
    z = pd_zeta()
    assert is_behaviour_on(PD_XI, z, PD_DELTA)
    assert str(z) == PD_ZETA
    # three stars sit above the right alpha
    assert z in behaviours_on(PD_XI, PD_DELTA, 3)
    assert z not in behaviours_on(PD_XI, PD_DELTA, 2)


def test_pd_zeta_with_cap_4():
    z = pd_zeta()
    used = {t.label for _, t in z.items()}
    assert z in behaviours_on(PD_XI, PD_DELTA, 4, symbols=used)
    assert count_behaviours(PD_XI, PD_DELTA, 4) >= count_behaviours(PD_XI, PD_DELTA, 3)


def test_pd_theta():
    assert theta(PD_XI, pd_zeta(), PD_DELTA) == {
        (): (1,), (1,): (1, 1, 1), (1, 1): (1, 1, 1, 1), (2,): (1, 2, 1, 1, 1)}


def test_theta_star_above_root():
    d = corresponding_alphabet(triv(), ["true"], ["id"], SIGMA)
    xi = parse_term("sigma(alpha,alpha)")
    z = parse_behaviour_tree("<(true,id),*>(<(true,id id),sigma>(<(true,eps),alpha>,<(true,eps),alpha>))")
    assert theta(xi, z, d) == {(): (1,), (1,): (1, 1), (2,): (1, 2)}


def test_no_true_predicate_at_root():
    d = corresponding_alphabet(count(), ["zero"], ["dec"], SIGMA)
    assert behaviours_on(parse_term("delta(alpha)"), d, 3) == []


def test_cap_stable():
    d = corresponding_alphabet(count(), ["zero"], ["inc"], SIGMA)
    xi = parse_term("delta(alpha)")
    # a star would leave the counter non-zero, so nothing above cap 0 is added
    assert cap_stable(xi, d, 0)
    assert not cap_stable(PD_XI, PD_DELTA, 2)


def sample_cases():
    d_count = corresponding_alphabet(count(), ["true", "zero"], ["inc", "dec"], UBAL_SIGMA)
    out = [(xi, PD_DELTA) for xi in trees_up_to(SIGMA, 3)]
    out += [(xi, d_count) for xi in trees_up_to(UBAL_SIGMA, 3)]
    return out


@pytest.mark.parametrize("xi,delta", sample_cases(), ids=lambda v: str(v)[:40])
def test_enumeration_invariants(xi, delta):
    small = behaviours_on(xi, delta, 1)
    large = behaviours_on(xi, delta, 2)
    assert set(small) <= set(large)
    assert len(set(large)) == len(large) == count_behaviours(xi, delta, 2)
    for z in large:
        assert erase(z) == xi
        assert check_behaviour(pr1(z), delta.storage.initial, delta.storage)
        th = theta(xi, z)
        pos = xi.positions()
        for w1, w2 in itertools.combinations(pos, 2):
            assert (w1 <= w2) == (th[w1] <= th[w2])


PSI_SYMBOLS = {ExtendedSymbol(BehaviourSymbol("true", ("inc", "inc")), "sigma"),
               ExtendedSymbol(BehaviourSymbol("true", ("dec", "dec")), "delta"),
               ExtendedSymbol(BehaviourSymbol("true", ()), "#")}


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(trees_up_to(UBAL_SIGMA, 7)))
def test_psi_behaviours_keep_counter_non_negative(xi):
    d = corresponding_alphabet(count(), ["true"], ["inc", "dec"], UBAL_SIGMA)
    for z in behaviours_on(xi, d, 2, symbols=PSI_SYMBOLS):
        fam = check_behaviour(pr1(z), 0, count()).family
        assert all(c >= 0 for c in fam.values())
        # every path prefix has at least as many sigma as delta
        for w in xi.positions():
            labels = [xi.label_at(w[:i]) for i in range(len(w) + 1)]
            assert labels.count("sigma") >= labels.count("delta")
