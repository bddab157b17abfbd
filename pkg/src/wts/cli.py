"""wts: command-line front end."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import formats
from .behaviour import behaviours_on, cap_stable, corresponding_alphabet
from .grammar import GrammarError, delta_of, derivations, evaluate, trim, weight_of
from .logic import BehExpr, Sentence, embed_sentence, eval_behexpr, eval_mexpr, parse_logic
from .storage import storage_from_name
from .terms import TermSyntaxError, parse_term
from .transform import (decompose, eliminate_chain_rules, eliminate_finite_storage, embed_storage,
                        fuse_storage, fuse_weights, one_initial, recompose, separate_storage,
                        separate_weights, support_empty, support_grammar)

EXIT_OK, EXIT_ERROR, EXIT_INEXACT = 0, 1, 2

TRANSFORMS = ("one-initial", "support", "chainfree", "drop-finite-storage", "embed-storage",
              "separate-storage", "separate-weights", "decompose")


@dataclass
class RunConfig:
    chain_cap: int = 8
    segment_cap: int = 8
    size_bound: int = 6
    trim: bool | None = None
    out: str | None = None
    require_exact: bool = False
    jobs: int = 1

    def __post_init__(self):
        for name in ("chain_cap", "segment_cap", "size_bound"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name.replace('_', '-')} must be non-negative")


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; exit code 2 is reserved for inexact results
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _flag(exact: bool, cap: int) -> str:
    return "exact" if exact else f"approx(cap={cap})"


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _trees(texts, alphabet):
    out = []
    for text in texts:
        try:
            out.append(parse_term(text, alphabet))
        except TermSyntaxError as exc:
            raise CliError(f"tree {text!r}: {exc}") from None
    return out


def _emit(text: str, cfg: RunConfig):
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _grammar_text(g) -> str:
    # rules by id keeps golden files stable
    return formats.format_grammar(g.replace(rules=sorted(g.rules, key=lambda r: r.id)))


def _map(fn, items, jobs: int):
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def cmd_eval(args, cfg: RunConfig) -> int:
    g = formats.load_grammar(args.grammar)
    trees = _trees(args.tree, g.alphabet)
    results = _map(lambda t: evaluate(g, t, cfg.chain_cap), trees, cfg.jobs)
    inexact = False
    for text, (value, exact) in zip(args.tree, results):
        line = f"{g.mmonoid.format_value(value)} {_flag(exact, cfg.chain_cap)}"
        print(line if len(trees) == 1 else f"{text}\t{line}")
        inexact = inexact or not exact
    return EXIT_INEXACT if cfg.require_exact and inexact else EXIT_OK


def cmd_derivations(args, cfg: RunConfig) -> int:
    g = formats.load_grammar(args.grammar)
    inexact = False
    for t in _trees(args.tree, g.alphabet):
        ds, exact = derivations(g, t, chain_cap=cfg.chain_cap)
        for d in sorted(ds, key=str):
            print(f"{d}\t{g.mmonoid.format_value(weight_of(g, d))}")
        print(f"# {len(ds)} derivation(s) for {t}, {_flag(exact, cfg.chain_cap)}")
        inexact = inexact or not exact
    return EXIT_INEXACT if cfg.require_exact and inexact else EXIT_OK


def _delta_from_args(args):
    if args.grammar:
        g = formats.load_grammar(args.grammar)
        return delta_of(g), g.alphabet
    if args.expr:
        b = parse_logic(_read(args.expr))
        if not isinstance(b, BehExpr):
            raise CliError(f"{args.expr} has no behaviour alphabet")
        return b.delta, b.sigma
    if not (args.storage and args.preds and args.alphabet):
        raise CliError("give -g, -e, or --storage with --preds, --instrs and --alphabet")
    sigma = formats.parse_alphabet(args.alphabet)
    delta = corresponding_alphabet(storage_from_name(args.storage), formats.split_blank(args.preds),
                                   formats.split_blank(args.instrs or ""), sigma)
    return delta, sigma


def cmd_behaviours(args, cfg: RunConfig) -> int:
    delta, sigma = _delta_from_args(args)
    inexact = False
    for t in _trees(args.tree, sigma):
        zetas = behaviours_on(t, delta, cfg.segment_cap)
        for z in zetas:
            print(z)
        exact = cap_stable(t, delta, cfg.segment_cap)
        print(f"# {len(zetas)} behaviour(s) on {t}, {_flag(exact, cfg.segment_cap)}")
        inexact = inexact or not exact
    return EXIT_INEXACT if cfg.require_exact and inexact else EXIT_OK


def cmd_transform(args, cfg: RunConfig) -> int:
    g = formats.load_grammar(args.grammar)
    kind = args.kind
    do_trim = cfg.trim if cfg.trim is not None else kind == "support"
    if kind == "decompose":
        _emit(formats.format_decomposition(decompose(g)), cfg)
        return EXIT_OK
    if kind == "separate-weights":
        theta, H, h = separate_weights(g)
        _emit(formats.format_weight_separation(theta, H, h), cfg)
        return EXIT_OK
    if kind == "separate-storage":
        delta, g2 = separate_storage(g)
        _emit(formats.format_delta(delta, g.alphabet) + formats.SECTION_BREAK + "\n"
              + _grammar_text(g2), cfg)
        return EXIT_OK
    if kind == "one-initial":
        out = one_initial(g)
    elif kind == "support":
        out = support_grammar(g, do_trim=do_trim)
    elif kind == "chainfree":
        out = eliminate_chain_rules(g)
    elif kind == "drop-finite-storage":
        out = eliminate_finite_storage(g)
    elif kind == "embed-storage":
        if not args.storage:
            raise CliError("embed-storage needs --storage")
        out = embed_storage(g, storage_from_name(args.storage))
    else:
        raise CliError(f"unknown transformation {kind}")
    if do_trim and kind != "support":
        out = trim(out)
    _emit(_grammar_text(out), cfg)
    return EXIT_OK


def cmd_recompose(args, cfg: RunConfig) -> int:
    text = _read(args.grammar)
    sections = formats.split_sections(text)
    head = next((ln.strip() for ln in sections[0].splitlines()
                 if ln.strip() and not ln.lstrip().startswith("#")), "")
    if head == "decomposition" and len(sections) == 3:
        out = recompose(formats.parse_decomposition(text), check=not args.no_check)
    elif head == "decomposition" and len(sections) == 2:
        delta, sigma = formats.parse_delta(sections[0])
        out = fuse_storage(delta, formats.parse_grammar(sections[1]), sigma)
    elif head == "weightsep":
        theta, H, h = formats.parse_weight_separation(text)
        out = fuse_weights(theta, H, h, check=not args.no_check, size_bound=cfg.size_bound)
    else:
        raise CliError("expected a decompose, separate-weights or separate-storage file")
    if cfg.trim:
        out = trim(out)
    _emit(_grammar_text(out), cfg)
    return EXIT_OK


def cmd_logic_eval(args, cfg: RunConfig) -> int:
    e = parse_logic(_read(args.expr))
    if isinstance(e, Sentence) and args.embed:
        e = embed_sentence(e.expr, e.sigma, e.mmonoid)
    inexact = False
    for t in _trees(args.tree, e.sigma):
        if isinstance(e, Sentence):
            value, flag = eval_mexpr(e.expr, t, e.mmonoid), "exact"
        else:
            value, exact = eval_behexpr(e, t, cfg.segment_cap)
            flag = _flag(exact, cfg.segment_cap)
            inexact = inexact or not exact
        line = f"{e.mmonoid.format_value(value)} {flag}"
        print(line if len(args.tree) == 1 else f"{t}\t{line}")
    return EXIT_INEXACT if cfg.require_exact and inexact else EXIT_OK


def cmd_support_empty(args, cfg: RunConfig) -> int:
    g = formats.load_grammar(args.grammar)
    res = support_empty(g, size_bound=cfg.size_bound, chain_cap=cfg.chain_cap)
    print(res)
    return EXIT_INEXACT if cfg.require_exact and res.status == "unknown" else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--chain-cap", type=int, default=8)
    common.add_argument("--segment-cap", type=int, default=8)
    common.add_argument("--size-bound", type=int, default=6)
    common.add_argument("--require-exact", action="store_true",
                        help="exit 2 when a result is only a bounded approximation")
    common.add_argument("--trim", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("-o", "--out")
    common.add_argument("--jobs", type=int, default=1, help="threads for batch tree evaluation")

    p = _Parser(prog="wts", description="Weighted regular tree grammars with storage.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("eval", parents=[common], help="evaluate a grammar on trees")
    s.add_argument("-g", "--grammar", required=True)
    s.add_argument("-t", "--tree", action="append", required=True)
    s.set_defaults(fn=cmd_eval)

    s = sub.add_parser("derivations", parents=[common], help="list derivation trees")
    s.add_argument("-g", "--grammar", required=True)
    s.add_argument("-t", "--tree", action="append", required=True)
    s.set_defaults(fn=cmd_derivations)

    s = sub.add_parser("behaviours", parents=[common], help="list behaviours on trees")
    s.add_argument("-g", "--grammar")
    s.add_argument("-e", "--expr")
    s.add_argument("--storage")
    s.add_argument("--preds")
    s.add_argument("--instrs")
    s.add_argument("--alphabet")
    s.add_argument("-t", "--tree", action="append", required=True)
    s.set_defaults(fn=cmd_behaviours)

    s = sub.add_parser("transform", parents=[common], help="apply a grammar construction")
    s.add_argument("kind", choices=TRANSFORMS)
    s.add_argument("-g", "--grammar", required=True)
    s.add_argument("--storage", help="target storage for embed-storage")
    s.set_defaults(fn=cmd_transform)

    s = sub.add_parser("recompose", parents=[common], help="rebuild a grammar from separated parts")
    s.add_argument("-g", "--grammar", required=True, help="output of transform decompose/separate-*")
    s.add_argument("--no-check", action="store_true", help="skip the bounded unambiguity check")
    s.set_defaults(fn=cmd_recompose)

    s = sub.add_parser("logic-eval", parents=[common], help="evaluate an expression file on trees")
    s.add_argument("-e", "--expr", required=True)
    s.add_argument("-t", "--tree", action="append", required=True)
    s.add_argument("--embed", action="store_true", help="evaluate a plain sentence via TRIV behaviours")
    s.set_defaults(fn=cmd_logic_eval)

    s = sub.add_parser("support-empty", parents=[common], help="decide or bound support emptiness")
    s.add_argument("-g", "--grammar", required=True)
    s.set_defaults(fn=cmd_support_empty)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(args.chain_cap, args.segment_cap, args.size_bound, args.trim, args.out,
                        args.require_exact, args.jobs)
        return args.fn(args, cfg)
    except (CliError, ValueError, GrammarError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
