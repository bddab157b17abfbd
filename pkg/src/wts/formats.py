"""Text formats: grammar files and multi-section transformation outputs.

Grammar file::

    wrtg
    mmonoid: bimonoid(nat_inf)
    storage: pd1
    alphabet: sigma/2 delta/1 alpha/0
    nonterminals: Z A
    initial: Z
    rule r1: Z[true] -> Z[push(gamma)] @ mul(1,2)
    rule r2: Z[true] -> sigma(A[id],A[id]) @ mul(2,1)

A line whose first non-blank character is ``#`` is a comment.  Elsewhere a
``#`` starts a comment when it stands alone between blanks (after the
``@`` on rule lines), so ``#`` also works as a terminal symbol.  Map lines
end in a terminal and take no trailing comment.
"""

from __future__ import annotations

import re

from .behaviour import BehaviourAlphabet, corresponding_alphabet, parse_symbol
from .grammar import GrammarError, Rule, Wrtg, validate
from .storage import StorageError, storage_from_name, split_top_level
from .terms import RankedAlphabet
from .weights import WeightError, mmonoid_from_name

SECTION_BREAK = "---"


class FormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def _strip_comment(line: str) -> str:
    if line.lstrip().startswith("#"):
        return ""
    if line.lstrip().startswith("map "):
        return line.rstrip()
    start = 0
    if line.lstrip().startswith("rule"):
        at = line.find("@")
        if at < 0:
            return line.rstrip()
        start = at
    for i in range(start, len(line)):
        if line[i] == "#" and (i == 0 or line[i - 1].isspace()) \
                and (i + 1 == len(line) or line[i + 1].isspace()):
            return line[:i].rstrip()
    return line.rstrip()


def split_blank(text: str) -> list[str]:
    """Whitespace split that keeps bracketed groups such as <(p,f g),s> together."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "([<{":
            depth += 1
        elif ch in ")]>}":
            depth -= 1
        if ch.isspace() and depth == 0:
            if cur:
                out.append("".join(cur))
                cur = []
        else:
            cur.append(ch)
    if cur:
        out.append("".join(cur))
    return out


def _logical_lines(text: str):
    """(line number, content) with brace continuations joined."""
    pending, start, depth = [], 0, 0
    for no, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line.strip() and not pending:
            continue
        if not pending:
            start = no
        pending.append(line.strip())
        depth += line.count("{") - line.count("}")
        if depth <= 0:
            yield start, " ".join(p for p in pending if p)
            pending, depth = [], 0
    if pending:
        raise FormatError("unbalanced braces", start)


def parse_alphabet(text: str) -> RankedAlphabet:
    ranks = {}
    for tok in split_blank(text):
        sym, slash, rank = tok.rpartition("/")
        if not slash or not rank.isdigit() or not sym:
            raise FormatError(f"malformed alphabet entry {tok!r}")
        sym = parse_symbol(sym)
        if sym in ranks:
            raise FormatError(f"symbol {sym} declared twice")
        ranks[sym] = int(rank)
    return RankedAlphabet(ranks)


def format_alphabet(alphabet) -> str:
    return " ".join(f"{s}/{k}" for s, k in alphabet.items())


def _split_bracketed(text: str, line: int) -> tuple[str, str]:
    """'A[p]' -> ('A', 'p'); the bracket is the one closing at the end."""
    text = text.strip()
    if not text.endswith("]"):
        raise FormatError(f"expected NAME[...] but got {text!r}", line)
    depth = 0
    for i in range(len(text) - 1, -1, -1):
        if text[i] == "]":
            depth += 1
        elif text[i] == "[":
            depth -= 1
            if depth == 0:
                name = text[:i].strip()
                if not name:
                    raise FormatError(f"missing nonterminal in {text!r}", line)
                return name, text[i + 1:-1].strip()
    raise FormatError(f"unbalanced brackets in {text!r}", line)


def _match_angle(text: str) -> int:
    depth = 0
    for i, ch in enumerate(text):
        if ch in "<(":
            depth += 1
        elif ch in ">)":
            depth -= 1
            if depth == 0 and ch == ">":
                return i
    return -1


_RULE_RE = re.compile(r"rule\s+([^\s:]+)\s*:\s*(.*?)\s*->\s*(.*?)\s*@\s*(.+)$")


def parse_rule(text: str, mmonoid, line: int = 0) -> Rule:
    m = _RULE_RE.match(text)
    if not m:
        raise FormatError(f"malformed rule {text!r}", line)
    rid, lhs_text, rhs_text, weight_text = m.groups()
    lhs, pred = _split_bracketed(lhs_text, line)
    try:
        weight = mmonoid.parse_op(weight_text)
    except WeightError as exc:
        raise FormatError(f"rule {rid}: {exc}", line) from None
    rhs_text = rhs_text.strip()
    if rhs_text.endswith("]"):
        target, instr = _split_bracketed(rhs_text, line)
        return Rule(rid, lhs, pred, None, ((target, instr),), weight)
    if rhs_text.startswith("<"):
        end = _match_angle(rhs_text)
        if end < 0:
            raise FormatError(f"unbalanced symbol in {rhs_text!r}", line)
        sym_text, rest = rhs_text[:end + 1], rhs_text[end + 1:].strip()
    else:
        paren = rhs_text.find("(")
        sym_text, rest = (rhs_text, "") if paren < 0 else (rhs_text[:paren], rhs_text[paren:])
    sym_text = sym_text.strip()
    if not sym_text:
        raise FormatError(f"missing terminal in {rhs_text!r}", line)
    try:
        terminal = parse_symbol(sym_text)
    except ValueError as exc:
        raise FormatError(str(exc), line) from None
    args = []
    if rest:
        if not (rest.startswith("(") and rest.endswith(")")):
            raise FormatError(f"malformed right-hand side {rhs_text!r}", line)
        for arg in split_top_level(rest[1:-1]):
            args.append(_split_bracketed(arg, line))
    return Rule(rid, lhs, pred, terminal, tuple(args), weight)


def format_rule(g: Wrtg, r: Rule) -> str:
    lhs = f"{r.lhs}[{r.predicate}]"
    if r.is_chain:
        b, f = r.rhs[0]
        rhs = f"{b}[{f}]"
    elif r.rhs:
        rhs = f"{r.terminal}(" + ",".join(f"{b}[{f}]" for b, f in r.rhs) + ")"
    else:
        rhs = str(r.terminal)
    return f"rule {r.id}: {lhs} -> {rhs} @ {g.mmonoid.format_op(r.weight)}"


def _key_values(lines, header: str):
    it = iter(lines)
    try:
        no, first = next(it)
    except StopIteration:
        raise FormatError("empty input") from None
    if first.strip() != header:
        raise FormatError(f"expected header {header!r}", no)
    for no, line in it:
        yield no, line


def parse_grammar(text: str, check: bool = True) -> Wrtg:
    fields = {}
    rule_lines = []
    for no, line in _key_values(_logical_lines(text), "wrtg"):
        if line.startswith("rule"):
            rule_lines.append((no, line))
            continue
        key, sep, value = line.partition(":")
        key = key.strip()
        if not sep or key not in ("mmonoid", "storage", "alphabet", "nonterminals", "initial"):
            raise FormatError(f"unexpected line {line!r}", no)
        if key in fields:
            raise FormatError(f"duplicate {key} line", no)
        fields[key] = (no, value.strip())
    for key in ("mmonoid", "storage", "alphabet", "nonterminals", "initial"):
        if key not in fields:
            raise FormatError(f"missing {key} line")
    try:
        mmonoid = mmonoid_from_name(fields["mmonoid"][1])
    except WeightError as exc:
        raise FormatError(str(exc), fields["mmonoid"][0]) from None
    try:
        storage = storage_from_name(fields["storage"][1])
    except StorageError as exc:
        raise FormatError(str(exc), fields["storage"][0]) from None
    try:
        alphabet = parse_alphabet(fields["alphabet"][1])
    except ValueError as exc:
        raise FormatError(str(exc), fields["alphabet"][0]) from None
    rules = tuple(parse_rule(line, mmonoid, no) for no, line in rule_lines)
    g = Wrtg(mmonoid, storage, alphabet, tuple(fields["nonterminals"][1].split()),
             tuple(fields["initial"][1].split()), rules)
    if check:
        diags = validate(g)
        if diags:
            raise GrammarError("; ".join(diags))
    return g


def format_grammar(g: Wrtg) -> str:
    lines = [
        "wrtg",
        f"mmonoid: {g.mmonoid.name}",
        f"storage: {g.storage.spec}",
        f"alphabet: {format_alphabet(g.alphabet)}",
        f"nonterminals: {' '.join(g.nonterminals)}",
        f"initial: {' '.join(g.initial)}",
    ]
    lines.extend(format_rule(g, r) for r in g.rules)
    return "\n".join(lines) + "\n"


def load_grammar(path, check: bool = True) -> Wrtg:
    with open(path, encoding="utf-8") as fh:
        return parse_grammar(fh.read(), check=check)


# ---- multi-section files ---------------------------------------------------

def split_sections(text: str) -> list[str]:
    sections, cur = [], []
    for line in text.splitlines():
        if line.strip() == SECTION_BREAK:
            sections.append("\n".join(cur))
            cur = []
        else:
            cur.append(line)
    sections.append("\n".join(cur))
    return sections


def format_mapping(h) -> str:
    lines = ["weightsep", f"mmonoid: {h.mmonoid.name}", f"alphabet: {format_alphabet(h.target)}"]
    for theta, (op, sym) in h.maps.items():
        tail = "" if sym is None else f" {sym}"
        lines.append(f"map {theta}: {h.mmonoid.format_op(op)}{tail}")
    return "\n".join(lines) + "\n"


def parse_mapping(text: str, theta: RankedAlphabet):
    from .transform.separation import AlphabeticMapping
    fields, maps = {}, {}
    for no, line in _key_values(_logical_lines(text), "weightsep"):
        if line.startswith("map "):
            m = re.match(r"map\s+([^\s:]+)\s*:\s*(.+)$", line)
            if not m:
                raise FormatError(f"malformed map line {line!r}", no)
            maps[m.group(1)] = (no, m.group(2))
            continue
        key, sep, value = line.partition(":")
        if not sep or key.strip() not in ("mmonoid", "alphabet"):
            raise FormatError(f"unexpected line {line!r}", no)
        fields[key.strip()] = value.strip()
    mmonoid = mmonoid_from_name(fields["mmonoid"])
    target = parse_alphabet(fields["alphabet"])
    parsed = {}
    for name, (no, body) in maps.items():
        parts = split_blank(body)
        if len(parts) not in (1, 2):
            raise FormatError(f"malformed map for {name}", no)
        op = mmonoid.parse_op(parts[0])
        parsed[name] = (op, parse_symbol(parts[1]) if len(parts) == 2 else None)
    return AlphabeticMapping(mmonoid, theta, target, parsed)


def format_delta(delta: BehaviourAlphabet, sigma) -> str:
    return "\n".join([
        "decomposition",
        f"storage: {delta.storage.spec}",
        f"preds: {' '.join(delta.predicates)}",
        f"instrs: {' '.join(delta.instructions)}",
        f"sigma: {format_alphabet(sigma)}",
    ]) + "\n"


def parse_delta(text: str):
    fields = {}
    for no, line in _key_values(_logical_lines(text), "decomposition"):
        key, sep, value = line.partition(":")
        if not sep or key.strip() not in ("storage", "preds", "instrs", "sigma"):
            raise FormatError(f"unexpected line {line!r}", no)
        fields[key.strip()] = value.strip()
    storage = storage_from_name(fields["storage"])
    sigma = parse_alphabet(fields["sigma"])
    delta = corresponding_alphabet(storage, split_blank(fields["preds"]),
                                   split_blank(fields.get("instrs", "")), sigma)
    return delta, sigma


def format_weight_separation(theta, H: Wrtg, h) -> str:
    return format_mapping(h) + SECTION_BREAK + "\n" + format_grammar(H)


def parse_weight_separation(text: str):
    sections = split_sections(text)
    if len(sections) != 2:
        raise FormatError("expected a mapping section and a grammar section")
    H = parse_grammar(sections[1])
    h = parse_mapping(sections[0], H.alphabet)
    return H.alphabet, H, h


def format_decomposition(dec) -> str:
    return (format_delta(dec.delta, dec.sigma) + SECTION_BREAK + "\n"
            + format_weight_separation(dec.theta, dec.H, dec.h))


def parse_decomposition(text: str):
    from .transform.separation import Decomposition
    sections = split_sections(text)
    if len(sections) != 3:
        raise FormatError("expected delta, mapping and grammar sections")
    delta, sigma = parse_delta(sections[0])
    H = parse_grammar(sections[2])
    h = parse_mapping(sections[1], H.alphabet)
    return Decomposition(delta, sigma, H.alphabet, H, h)
