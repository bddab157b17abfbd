import subprocess
import sys

import pytest

from conftest import fixture_path
from wts.cli import EXIT_ERROR, EXIT_INEXACT, EXIT_OK, RunConfig, main
from wts.formats import load_grammar, parse_grammar
from wts.grammar import evaluate
from wts.terms import parse_term, trees_up_to

PD_ARGS = ["--storage", "pd1", "--preds", "top=gamma0 top=gamma", "--instrs", "push(gamma) pop",
             "--alphabet", "sigma/2 delta/1 alpha/0"]
PD_ZETA = (
    "<(top=gamma0,push(gamma)),*>(<(top=gamma,push(gamma) push(gamma)),sigma>("
    "<(top=gamma,pop),*>(<(top=gamma,pop),delta>(<(top=gamma0,eps),alpha>)),"
    "<(top=gamma,push(gamma)),*>(<(top=gamma,pop),*>(<(top=gamma,pop),*>(<(top=gamma,eps),alpha>)))))"
)


def run_tree(n):
    arm = "delta(" * n + "alpha" + ")" * n
    return f"sigma({arm},{arm})"


def wts(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_eval_ex_run(capsys):
    code, out, _ = wts(capsys, "eval", "-g", fixture_path("ex_run.wrtg"), "-t", run_tree(2))
    assert (code, out) == (EXIT_OK, "64 approx(cap=8)\n")


def test_eval_exact_and_require_exact(capsys):
    code, out, _ = wts(capsys, "eval", "-g", fixture_path("ubal.wrtg"), "-t", "sigma(#,#)",
                       "--require-exact")
    assert (code, out) == (EXIT_OK, "0 exact\n")
    code, _, _ = wts(capsys, "eval", "-g", fixture_path("ex_run.wrtg"), "-t", run_tree(1),
                     "--require-exact")
    assert code == EXIT_INEXACT


def test_eval_batch_lines(capsys):
    code, out, _ = wts(capsys, "eval", "-g", fixture_path("ex_run.wrtg"), "-t", run_tree(0),
                       "-t", run_tree(1), "--jobs", 2)
    assert code == EXIT_OK
    assert out.splitlines() == [f"{run_tree(0)}\t1 approx(cap=8)", f"{run_tree(1)}\t8 approx(cap=8)"]


@pytest.mark.parametrize("argv,msg", [
    (["eval", "-g", "ubal.wrtg", "-t", "sigma(#"], "tree 'sigma(#'"),
    (["eval", "-g", "ubal.wrtg", "-t", "gamma(#)"], "tree"),
    (["eval", "-g", "missing.wrtg", "-t", "#"], "error"),
    (["eval", "-g", "ubal.wrtg", "-t", "#", "--chain-cap", "-1"], "chain-cap must be non-negative"),
    (["transform", "chainfree", "-g", "ex_run.wrtg"], "not simple: rule r1"),
    (["transform", "support", "-g", "ubal.wrtg"], "non-multiplicative"),
    (["transform", "embed-storage", "-g", "mod9.wrtg"], "needs --storage"),
])
def test_input_errors_exit_1(capsys, argv, msg):
    argv = [fixture_path(a) if a.endswith(".wrtg") and a != "missing.wrtg" else a for a in argv]
    code, out, err = wts(capsys, *argv)
    assert code == EXIT_ERROR and out == ""
    assert msg in err


def test_usage_error_exits_1():
    with pytest.raises(SystemExit) as info:
        main(["eval", "-g"])
    assert info.value.code == EXIT_ERROR


def test_run_config_rejects_negative_caps():
    with pytest.raises(ValueError):
        RunConfig(segment_cap=-2)


def _isomorphic_rules(a, b):
    import itertools
    if len(a.nonterminals) != len(b.nonterminals):
        return False
    target = {(r.lhs, r.terminal, tuple(n for n, _ in r.rhs)) for r in b.rules}
    for perm in itertools.permutations(b.nonterminals):
        m = dict(zip(a.nonterminals, perm))
        if {(m[r.lhs], r.terminal, tuple(m[n] for n, _ in r.rhs)) for r in a.rules} == target:
            return True
    return False


def test_transform_support_matches_golden(capsys):
    code, out, _ = wts(capsys, "transform", "support", "-g", fixture_path("mod9.wrtg"))
    assert code == EXIT_OK
    ids = [ln.split()[1] for ln in out.splitlines() if ln.startswith("rule ")]
    assert ids == sorted(ids) and len(ids) == 8
    golden = load_grammar(fixture_path("support_mod9.golden"))
    assert _isomorphic_rules(parse_grammar(out), golden)


def test_transform_writes_file(capsys, tmp_path):
    target = tmp_path / "chainfree.wrtg"
    code, out, _ = wts(capsys, "transform", "chainfree", "-g", fixture_path("chain_nat_acyclic.wrtg"),
                       "-o", target)
    assert code == EXIT_OK and out == ""
    g = load_grammar(fixture_path("chain_nat_acyclic.wrtg"))
    h = load_grammar(str(target))
    for t in trees_up_to(g.alphabet, 4):
        assert evaluate(h, t) == evaluate(g, t)


def test_decompose_recompose_golden(capsys, tmp_path):
    dec = tmp_path / "ex_run.dec"
    assert wts(capsys, "transform", "decompose", "-g", fixture_path("ex_run.wrtg"), "-o", dec)[0] == 0
    code, out, _ = wts(capsys, "recompose", "-g", dec)
    assert code == EXIT_OK
    with open(fixture_path("ex_run_recomposed.golden"), encoding="utf-8") as fh:
        golden = "".join(ln for ln in fh if not ln.startswith("#"))
    assert out == golden
    g, back = load_grammar(fixture_path("ex_run.wrtg")), parse_grammar(out)
    for n in range(4):
        t = parse_term(run_tree(n))
        assert evaluate(back, t)[0] == evaluate(g, t)[0] == 8 ** n


@pytest.mark.parametrize("kind", ["separate-storage", "separate-weights"])
def test_separate_then_recompose(capsys, tmp_path, kind):
    part = tmp_path / "part.txt"
    assert wts(capsys, "transform", kind, "-g", fixture_path("ubal.wrtg"), "-o", part)[0] == 0
    out_file = tmp_path / "back.wrtg"
    assert wts(capsys, "recompose", "-g", part, "-o", out_file)[0] == 0
    g, back = load_grammar(fixture_path("ubal.wrtg")), load_grammar(str(out_file))
    for t in trees_up_to(g.alphabet, 5):
        assert evaluate(back, t, 0)[0] == evaluate(g, t, 0)[0]


def test_derivations_listing(capsys):
    code, out, _ = wts(capsys, "derivations", "-g", fixture_path("ex_run.wrtg"), "-t", run_tree(2))
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "r1(r1(r2(r3(r3(r4)),r3(r3(r4)))))\t64"
    assert lines[1].startswith("# 1 derivation(s)")


def test_behaviours_cap_3_listing(capsys):
    code, out, _ = wts(capsys, "behaviours", *PD_ARGS, "-t", "sigma(delta(alpha),alpha)",
                       "--segment-cap", 3)
    lines = out.splitlines()
    assert code == EXIT_OK
    assert PD_ZETA in lines
    assert lines[:-1] == sorted(lines[:-1])
    assert lines[-1] == "# 78653 behaviour(s) on sigma(delta(alpha),alpha), approx(cap=3)"


def test_behaviours_cap_4_contains_pd_zeta(tmp_path):
    # 1282325 lines; runs as a subprocess so the output goes straight to a file
    target = tmp_path / "b4.txt"
    with open(target, "w", encoding="utf-8") as fh:
        code = subprocess.call([sys.executable, "-m", "wts.cli", "behaviours", *PD_ARGS,
                                "-t", "sigma(delta(alpha),alpha)", "--segment-cap", "4"], stdout=fh)
    assert code == EXIT_OK
    found, last = False, ""
    with open(target, encoding="utf-8") as fh:
        for line in fh:
            found = found or line.rstrip("\n") == PD_ZETA
            last = line
    assert found
    assert last.startswith("# 1282325 behaviour(s)")


def test_behaviours_from_grammar_and_expr(capsys):
    code, out, _ = wts(capsys, "behaviours", "-g", fixture_path("ubal.wrtg"), "-t", "#")
    assert code == EXIT_OK and out.splitlines()[-1].startswith("# ")
    code, out, _ = wts(capsys, "behaviours", "-e", fixture_path("run.beh"), "-t", "alpha",
                       "--segment-cap", 1)
    assert code == EXIT_OK
    code, _, err = wts(capsys, "behaviours", "-t", "alpha")
    assert code == EXIT_ERROR and "--storage" in err


def test_logic_eval(capsys):
    code, out, _ = wts(capsys, "logic-eval", "-e", fixture_path("run.beh"), "-t", "sigma(alpha,alpha)")
    assert (code, out) == (EXIT_OK, "1 exact\n")
    code, out, _ = wts(capsys, "logic-eval", "-e", fixture_path("run.beh"), "-t", run_tree(2),
                       "--segment-cap", 3)
    assert (code, out) == (EXIT_OK, "64 exact\n")
    code, out, _ = wts(capsys, "logic-eval", "-e", fixture_path("sentence_leafcount.expr"),
                       "-t", "sigma(alpha,gamma(alpha))", "--embed")
    assert (code, out) == (EXIT_OK, "2 exact\n")


def test_logic_eval_require_exact(capsys):
    code, out, _ = wts(capsys, "logic-eval", "-e", fixture_path("run.beh"), "-t", run_tree(2),
                       "--segment-cap", 1, "--require-exact")
    assert code == EXIT_INEXACT
    assert out.endswith("approx(cap=1)\n")


def test_support_empty_command(capsys):
    code, out, _ = wts(capsys, "support-empty", "-g", fixture_path("ex_run.wrtg"), "--size-bound", 10)
    assert (code, out) == (EXIT_OK, "nonempty sigma(alpha,alpha)\n")


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "wts.cli", "eval", "-g", fixture_path("ubal.wrtg"),
                          "-t", "sigma(delta(#,sigma(#,#)),#)"], capture_output=True, text=True)
    assert (res.returncode, res.stdout) == (0, "2 exact\n")
