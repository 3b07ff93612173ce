"""PCFG induction from TOP trees and exact Viterbi CKY decoding.

Symbols are plain strings:

``TOP``
    start symbol, with a unary rule to every root intent seen in training.
``IN:X`` / ``SL:Y``
    the tree's own labels.
``IN:X/B`` / ``IN:X/I``
    preterminals for a word directly under ``IN:X``; ``B`` starts a word run,
    ``I`` continues one.
``IN:X/>w``
    the word ``w`` ending a run that is followed by a non-terminal sibling.
    Connectives such as "from" or "to" thereby reach the markov context of
    the slot that follows them.
``IN:X|s``
    left-factored intermediate covering a prefix of the children of ``IN:X``
    that ends in child symbol ``s`` (horizontal markovization of order 1).

A node ``L`` with child symbols ``s1 .. sn`` contributes ``L -> s1`` when
``n == 1`` and otherwise ``L -> L|s(n-1) sn``, ``L|si -> L|s(i-1) si`` and
``L|s1 -> s1``.  Debinarization splices intermediates back into their parent
so every derivable tree is a well-formed annotation.
"""
from __future__ import annotations

import json
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .corpus import Corpus
from .tree import Label, NonTerminal, Token, serialize, terminal_runs

TOP = "TOP"
FORMAT = "topaug-pcfg/1"
DEFAULT_SMOOTHING = 0.01
DEFAULT_UNK_MASS = 1e-4

ParserFn = Callable[[Sequence[str]], "NonTerminal | None"]


class EmptyCorpus(ValueError):
    pass


_LABEL_SYMBOL = re.compile(r"(IN|SL):[A-Z0-9_]+\Z")


def preterminal(label: Label, initial: bool) -> str:
    return f"{label}/{'B' if initial else 'I'}"


def boundary_preterminal(label: Label, word: str) -> str:
    return f"{label}/>{word}"


def intermediate(parent: str, child: str) -> str:
    return f"{parent}|{child}"


def is_label_symbol(sym: str) -> bool:
    return bool(_LABEL_SYMBOL.match(sym))


def _child_symbols(node: NonTerminal, lexicalize: bool) -> list[tuple[str, object, bool]]:
    """``(symbol, child, open_class)`` for each child of ``node``."""
    out: list[tuple[str, object, bool]] = []
    groups = terminal_runs(node)
    for gi, group in enumerate(groups):
        if isinstance(group[0], NonTerminal):
            out.append((str(group[0].label), group[0], False))
            continue
        # runs are maximal, so a following group is always a non-terminal
        before_nt = gi + 1 < len(groups)
        for i, tok in enumerate(group):
            if lexicalize and before_nt and i == len(group) - 1:
                out.append((boundary_preterminal(node.label, tok.text), tok, False))
            else:
                out.append((preterminal(node.label, i == 0), tok, True))
    return out


def binarize(
    tree: NonTerminal, lexicalize: bool = True
) -> tuple[list[tuple[str, tuple[str, ...]]], list[tuple[str, str, bool]]]:
    """Rules and ``(preterminal, word, open_class)`` emissions used by ``tree``.

    The root rule ``TOP -> label`` is included.
    """
    rules: list[tuple[str, tuple[str, ...]]] = [(TOP, (str(tree.label),))]
    lexical: list[tuple[str, str, bool]] = []

    def visit(node: NonTerminal) -> None:
        lhs = str(node.label)
        kids = _child_symbols(node, lexicalize)
        syms = [s for s, _, _ in kids]
        if len(syms) == 1:
            rules.append((lhs, (syms[0],)))
        else:
            rules.append((lhs, (intermediate(lhs, syms[-2]), syms[-1])))
            for i in range(len(syms) - 2, 0, -1):
                rules.append((intermediate(lhs, syms[i]), (intermediate(lhs, syms[i - 1]), syms[i])))
            rules.append((intermediate(lhs, syms[0]), (syms[0],)))
        for sym, child, open_class in kids:
            if isinstance(child, NonTerminal):
                visit(child)
            else:
                lexical.append((sym, child.text, open_class))

    visit(tree)
    return rules, lexical


@dataclass(frozen=True)
class Rule:
    lhs: str
    rhs: tuple[str, ...]
    prob: float


@dataclass
class ParseResult:
    tree: NonTerminal | None
    log_probability: float
    cells_filled: int
    pruned: int = 0


@dataclass
class Grammar:
    """Binarized PCFG; ``rules`` are in rule-index order (sorted by lhs, rhs)."""

    rules: list[Rule]
    lexicon: dict[str, dict[str, float]]
    open_classes: frozenset[str] = frozenset()
    unk_mass: float = DEFAULT_UNK_MASS
    smoothing: float = DEFAULT_SMOOTHING
    lexicalize: bool = True
    counts: dict = field(default_factory=dict, repr=False)

    # -- compiled tables --------------------------------------------------

    @cached_property
    def _tables(self):
        symbols: dict[str, int] = {}

        def sid(s: str) -> int:
            if s not in symbols:
                symbols[s] = len(symbols)
            return symbols[s]

        sid(TOP)
        unary: dict[int, list] = defaultdict(list)
        binary: dict[int, dict[int, list]] = defaultdict(lambda: defaultdict(list))
        for idx, rule in enumerate(self.rules):
            lp = math.log(rule.prob)
            a = sid(rule.lhs)
            if len(rule.rhs) == 1:
                unary[sid(rule.rhs[0])].append((a, lp, idx))
            else:
                binary[sid(rule.rhs[0])][sid(rule.rhs[1])].append((a, lp, idx))
        lex: dict[str, list] = defaultdict(list)
        for pt in sorted(self.lexicon):
            for word, prob in self.lexicon[pt].items():
                lex[word].append((sid(pt), math.log(prob)))
        unk = []
        if self.unk_mass > 0:
            unk = [(sid(pt), math.log(self.unk_mass)) for pt in sorted(self.open_classes)]
        names = [None] * len(symbols)
        for s, i in symbols.items():
            names[i] = s
        return symbols, names, dict(unary), {b: dict(v) for b, v in binary.items()}, dict(lex), unk

    @cached_property
    def _rule_logp(self) -> dict[tuple[str, tuple[str, ...]], float]:
        return {(r.lhs, r.rhs): math.log(r.prob) for r in self.rules}

    def lexical_logp(self, pt: str, word: str) -> float:
        emissions = self.lexicon.get(pt)
        if emissions is None:
            return -math.inf
        if word in emissions:
            return math.log(emissions[word])
        if self.unk_mass > 0 and pt in self.open_classes and not self.knows(word):
            return math.log(self.unk_mass)
        return -math.inf

    def knows(self, word: str) -> bool:
        return word in self._tables[4]

    @property
    def labels(self) -> set[Label]:
        return {Label.parse(r.lhs) for r in self.rules if is_label_symbol(r.lhs)}

    # -- scoring and parsing ------------------------------------------------

    def score_tree(self, tree: NonTerminal) -> float:
        """Log-probability of the derivation of ``tree``; ``-inf`` if underivable."""
        rules, lexical = binarize(tree, self.lexicalize)
        total = 0.0
        for rule in rules:
            lp = self._rule_logp.get(rule)
            if lp is None:
                return -math.inf
            total += lp
        for pt, word, _ in lexical:
            total += self.lexical_logp(pt, word)
        return total

    def parse(self, tokens: Sequence[str]) -> ParseResult:
        return cky_parse(self, tokens)

    def parse_tree(self, tokens: Sequence[str]) -> NonTerminal | None:
        return cky_parse(self, tokens).tree

    __call__ = parse_tree

    def check_normalization(self, tol: float = 1e-6) -> list[str]:
        """Left-hand sides whose rule (or emission) probabilities do not sum to 1."""
        sums: dict[str, float] = defaultdict(float)
        for r in self.rules:
            sums[r.lhs] += r.prob
        bad = [lhs for lhs, s in sums.items() if abs(s - 1.0) > tol]
        for pt, emissions in self.lexicon.items():
            unk = self.unk_mass if pt in self.open_classes else 0.0
            if abs(math.fsum(emissions.values()) + unk - 1.0) > tol:
                bad.append(pt)
        return bad

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "format": FORMAT,
            "config": {"smoothing": self.smoothing, "unk_mass": self.unk_mass, "lexicalize": self.lexicalize},
            "rules": [[r.lhs, list(r.rhs), r.prob, math.log(r.prob)] for r in self.rules],
            "open_classes": sorted(self.open_classes),
            "lexicon": {pt: dict(sorted(ws.items())) for pt, ws in sorted(self.lexicon.items())},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Grammar":
        if obj.get("format") != FORMAT:
            raise ValueError(f"not a {FORMAT} grammar")
        cfg = obj["config"]
        rules = [Rule(lhs, tuple(rhs), prob) for lhs, rhs, prob, _ in obj["rules"]]
        return cls(
            rules,
            obj["lexicon"],
            frozenset(obj["open_classes"]),
            unk_mass=cfg["unk_mass"],
            smoothing=cfg["smoothing"],
            lexicalize=cfg["lexicalize"],
        )

    def save(self, path: str | Path, inputs: dict | None = None) -> None:
        obj = self.to_json()
        if inputs is not None:
            obj["inputs"] = inputs
        Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Grammar":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def induce_grammar(
    corpus: Corpus | Iterable[NonTerminal],
    smoothing: float = DEFAULT_SMOOTHING,
    unk_mass: float = DEFAULT_UNK_MASS,
    lexicalize: bool = True,
) -> Grammar:
    """Read off a PCFG by relative frequency.

    Rule probabilities get additive smoothing over the rules observed for each
    left-hand side.  Each open (``/B``, ``/I``) preterminal reserves
    ``unk_mass`` for unseen words; lexicalized boundary preterminals emit only
    their own word.
    """
    trees = corpus.trees if isinstance(corpus, Corpus) else list(corpus)
    if not trees:
        raise EmptyCorpus("cannot induce a grammar from an empty corpus")
    if not 0.0 <= unk_mass < 1.0:
        raise ValueError("unk_mass must be in [0, 1)")
    rule_counts: Counter = Counter()
    lex_counts: dict[str, Counter] = defaultdict(Counter)
    open_classes: set[str] = set()
    for tree in trees:
        rules, lexical = binarize(tree, lexicalize)
        rule_counts.update(rules)
        for pt, word, open_class in lexical:
            lex_counts[pt][word] += 1
            if open_class:
                open_classes.add(pt)
    by_lhs: dict[str, list] = defaultdict(list)
    for (lhs, rhs), c in rule_counts.items():
        by_lhs[lhs].append((rhs, c))
    rules: list[Rule] = []
    for lhs in sorted(by_lhs):
        entries = sorted(by_lhs[lhs])
        denom = sum(c for _, c in entries) + smoothing * len(entries)
        rules.extend(Rule(lhs, rhs, (c + smoothing) / denom) for rhs, c in entries)
    lexicon = {}
    for pt, ws in sorted(lex_counts.items()):
        scale = (1.0 - unk_mass if pt in open_classes else 1.0) / sum(ws.values())
        lexicon[pt] = {w: c * scale for w, c in sorted(ws.items())}
    return Grammar(
        rules,
        lexicon,
        frozenset(open_classes),
        unk_mass=unk_mass,
        smoothing=smoothing,
        lexicalize=lexicalize,
        counts=dict(rule_counts),
    )


def cky_parse(grammar: Grammar, tokens: Sequence[str]) -> ParseResult:
    """Exact max-probability parse.

    Binary ties go to the lower rule index, then the shorter left span.  Unary
    closure only replaces an entry on a strictly better score, so equal-score
    unary cycles cannot loop.
    """
    n = len(tokens)
    if n == 0:
        raise ValueError("cannot parse an empty token sequence")
    symbols, names, unary, binary, lex, unk = grammar._tables
    score = [[None] * (n + 1) for _ in range(n + 1)]
    back = [[None] * (n + 1) for _ in range(n + 1)]
    filled = 0

    def close(cell: dict, bp: dict) -> None:
        agenda = list(cell)
        while agenda:
            x = agenda.pop(0)
            sx = cell[x]
            for a, lp, r in unary.get(x, ()):
                s = sx + lp
                cur = cell.get(a)
                if cur is None or s > cur:
                    cell[a] = s
                    bp[a] = ("u", r, x)
                    agenda.append(a)

    for i, word in enumerate(tokens):
        cell: dict[int, float] = {}
        bp: dict[int, tuple] = {}
        for pt, lp in lex.get(word, unk):
            cell[pt] = lp
            bp[pt] = ("w", word)
        close(cell, bp)
        score[i][i + 1], back[i][i + 1] = cell, bp
        filled += len(cell)

    for length in range(2, n + 1):
        for i in range(0, n - length + 1):
            j = i + length
            best: dict[int, tuple[float, int, int]] = {}
            bp = {}
            for k in range(i + 1, j):
                left, right = score[i][k], score[k][j]
                if not left or not right:
                    continue
                for b, sb in left.items():
                    by_right = binary.get(b)
                    if not by_right:
                        continue
                    for c, rules in by_right.items():
                        sc = right.get(c)
                        if sc is None:
                            continue
                        base = sb + sc
                        for a, lp, r in rules:
                            s = base + lp
                            cur = best.get(a)
                            if cur is None or s > cur[0] or (s == cur[0] and (r, k) < (cur[1], cur[2])):
                                best[a] = (s, r, k)
                                bp[a] = ("b", r, k, b, c)
            cell = {a: v[0] for a, v in best.items()}
            close(cell, bp)
            score[i][j], back[i][j] = cell, bp
            filled += len(cell)

    top = symbols[TOP]
    root_cell = score[0][n]
    if top not in root_cell:
        return ParseResult(None, -math.inf, filled)

    def build(sym: int, i: int, j: int) -> list:
        """Children contributed by ``sym`` over ``[i, j)``; a labelled node unless intermediate."""
        entry = back[i][j][sym]
        name = names[sym]
        if entry[0] == "w":
            return [Token(entry[1])]
        if entry[0] == "u":
            kids = build(entry[2], i, j)
        else:
            _, _, k, b, c = entry
            kids = build(b, i, k) + build(c, k, j)
        if is_label_symbol(name):
            return [NonTerminal(Label.parse(name), tuple(kids))]
        return kids  # TOP or an intermediate

    (tree,) = build(top, 0, n)
    return ParseResult(tree, root_cell[top], filled)


def exact_match(predicted: NonTerminal | None, gold: NonTerminal) -> bool:
    return predicted is not None and serialize(predicted) == serialize(gold)
