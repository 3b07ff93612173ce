"""TOP-style linearized trees: data model, parsing, serialization, templates.

A tree is written as ``[IN:GET_DISTANCE how far is [SL:DESTINATION boston ] ]``.
Intent and slot nodes alternate (intents hold slots and words, slots hold
intents and words).  A *template* is the same skeleton with every maximal run
of words collapsed into a single ``[mask]`` node.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

MASK = "[mask]"

_NAME_RE = re.compile(r"[A-Z0-9_]+\Z")
_GEN_CLOSER_RE = re.compile(r"(in|sl):([^\s\[\]]+)\]\Z", re.IGNORECASE)


class Kind(enum.Enum):
    INTENT = "IN"
    SLOT = "SL"


@dataclass(frozen=True)
class Label:
    kind: Kind
    name: str

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise ValueError(f"bad label name {self.name!r}")

    def __str__(self) -> str:
        return f"{self.kind.value}:{self.name}"

    @classmethod
    def parse(cls, text: str) -> "Label":
        """Parse ``IN:NAME`` / ``SL:NAME``; raises ValueError otherwise."""
        prefix, sep, name = text.partition(":")
        if not sep or prefix not in ("IN", "SL"):
            raise ValueError(f"bad label {text!r}")
        return cls(Kind(prefix), name)

    @property
    def is_intent(self) -> bool:
        return self.kind is Kind.INTENT


@dataclass(frozen=True)
class Token:
    text: str

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class Mask:
    def __str__(self) -> str:
        return MASK


@dataclass(frozen=True)
class NonTerminal:
    label: Label
    children: tuple["Node", ...]

    def __str__(self) -> str:
        return serialize(self)

    def __repr__(self) -> str:
        return f"NonTerminal({serialize(self)!r})"

    def walk(self) -> Iterator["NonTerminal"]:
        """Pre-order iteration over the non-terminals of this subtree."""
        yield self
        for child in self.children:
            if isinstance(child, NonTerminal):
                yield from child.walk()


Node = Union[NonTerminal, Token, Mask]
# Both annotations and templates are rooted NonTerminals; the names document intent.
ParseTree = NonTerminal
Template = NonTerminal


class Mode(enum.Enum):
    ANNOTATION = "annotation"
    TEMPLATE = "template"


class Form(enum.Enum):
    CANONICAL = "canonical"
    GENERATOR_SOURCE = "source"
    GENERATOR_TARGET = "target"


class TreeSyntaxError(ValueError):
    """Base class for malformed linearized trees; ``offset`` is a byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnbalancedBrackets(TreeSyntaxError):
    pass


class EmptyNonTerminal(TreeSyntaxError):
    pass


class RootNotIntent(TreeSyntaxError):
    pass


class IllegalChildKind(TreeSyntaxError):
    pass


class BadLabelSyntax(TreeSyntaxError):
    pass


class InvalidTemplate(TreeSyntaxError):
    """Words inside a template, adjacent masks, or masks inside an annotation."""


# -- lexing -----------------------------------------------------------------

def _byte_offsets(text: str) -> list[int]:
    offsets, pos = [], 0
    for ch in text:
        offsets.append(pos)
        pos += len(ch.encode("utf-8"))
    offsets.append(pos)
    return offsets


def _lex(text: str, mode: Mode) -> Iterator[tuple[str, str, int]]:
    """Yield ``(kind, value, char_index)`` with kind in open/close/mask/word."""
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch == "]":
            yield "close", "]", i
            i += 1
        elif ch == "[":
            if mode is Mode.TEMPLATE and text.startswith(MASK, i):
                end = i + len(MASK)
                if end == n or text[end].isspace() or text[end] in "[]":
                    yield "mask", MASK, i
                    i = end
                    continue
            j = i + 1
            while j < n and not text[j].isspace() and text[j] not in "[]":
                j += 1
            yield "open", text[i + 1:j], i
            i = j
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "[]":
                j += 1
            yield "word", text[i:j], i
            i = j


# -- parsing ----------------------------------------------------------------

def parse_linearized(text: str, mode: Mode = Mode.ANNOTATION) -> NonTerminal:
    """Parse and validate a canonical bracketed tree.

    In template mode the literal ``[mask]`` is an atomic terminal and plain
    words are rejected.  Errors carry the byte offset of the offending token.
    """
    offsets = _byte_offsets(text)
    # each frame: (label, children, char index of opener)
    stack: list[tuple[Label, list, int]] = []
    root: NonTerminal | None = None
    for kind, value, pos in _lex(text, mode):
        off = offsets[pos]
        if root is not None:
            raise UnbalancedBrackets("content after the root closed", off)
        if kind == "open":
            try:
                label = Label.parse(value)
            except ValueError:
                raise BadLabelSyntax(f"bad label {value!r}", off) from None
            if stack:
                parent = stack[-1][0]
                if parent.kind is label.kind:
                    raise IllegalChildKind(f"{label} directly under {parent}", off)
            elif not label.is_intent:
                raise RootNotIntent(f"root label {label} is not an intent", off)
            stack.append((label, [], pos))
        elif kind == "close":
            if not stack:
                raise UnbalancedBrackets("unmatched ']'", off)
            label, children, _ = stack.pop()
            if not children:
                raise EmptyNonTerminal(f"{label} has no children", off)
            node = NonTerminal(label, tuple(children))
            if stack:
                stack[-1][1].append(node)
            else:
                root = node
        else:
            if not stack:
                if kind == "mask" or mode is Mode.TEMPLATE:
                    raise RootNotIntent("terminal outside any non-terminal", off)
                raise RootNotIntent(f"word {value!r} outside any non-terminal", off)
            siblings = stack[-1][1]
            if kind == "mask":
                if siblings and isinstance(siblings[-1], Mask):
                    raise InvalidTemplate("adjacent [mask] siblings", off)
                siblings.append(Mask())
            elif mode is Mode.TEMPLATE:
                raise InvalidTemplate(f"word {value!r} inside a template", off)
            else:
                siblings.append(Token(value))
    if stack:
        raise UnbalancedBrackets(f"{stack[-1][0]} is never closed", offsets[stack[-1][2]])
    if root is None:
        raise UnbalancedBrackets("no tree found", len(text.encode("utf-8")))
    if mode is Mode.TEMPLATE and not any(isinstance(c, Mask) for c in _terminals(root)):
        raise InvalidTemplate("template has no [mask]", 0)
    return root


def parse_template(text: str) -> NonTerminal:
    return parse_linearized(text, Mode.TEMPLATE)


# -- serialization ----------------------------------------------------------

def serialize(tree: NonTerminal, form: Form = Form.CANONICAL) -> str:
    """Render a tree.

    Canonical form keeps uppercase labels and bare ``]`` closers.  The two
    generator forms (identical rendering rules, named for their role as
    seq2seq source/target) lowercase labels and spell every closer as
    ``label]``, e.g. ``sl:destination]``.
    """
    parts: list[str] = []
    generator = form is not Form.CANONICAL

    def emit(node: NonTerminal) -> None:
        label = str(node.label).lower() if generator else str(node.label)
        parts.append("[" + label)
        for child in node.children:
            if isinstance(child, NonTerminal):
                emit(child)
            else:
                parts.append(str(child))
        parts.append(label + "]" if generator else "]")

    emit(tree)
    return " ".join(parts)


def _terminals(node: NonTerminal) -> Iterator[Token | Mask]:
    for child in node.children:
        if isinstance(child, NonTerminal):
            yield from _terminals(child)
        else:
            yield child


def utterance_of(tree: NonTerminal) -> list[str]:
    """In-order words of an annotation."""
    return [t.text for t in _terminals(tree) if isinstance(t, Token)]


def terminal_runs(node: NonTerminal) -> list[list[Node]]:
    """Split ``node.children`` into maximal terminal runs and single non-terminals."""
    groups: list[list[Node]] = []
    for child in node.children:
        if isinstance(child, NonTerminal):
            groups.append([child])
        elif groups and not isinstance(groups[-1][0], NonTerminal):
            groups[-1].append(child)
        else:
            groups.append([child])
    return groups


def extract_template(tree: NonTerminal) -> NonTerminal:
    """Replace every maximal run of terminal siblings by one ``Mask``."""
    children: list[Node] = []
    for group in terminal_runs(tree):
        if isinstance(group[0], NonTerminal):
            children.append(extract_template(group[0]))
        else:
            children.append(Mask())
    return NonTerminal(tree.label, tuple(children))


def template_key(template: NonTerminal) -> str:
    return serialize(template)


def labels_of(tree: NonTerminal) -> set[Label]:
    return {node.label for node in tree.walk()}


def skeleton(tree: NonTerminal) -> tuple:
    """Nested (label, sub-skeletons) with terminals dropped."""
    return (tree.label, tuple(skeleton(c) for c in tree.children if isinstance(c, NonTerminal)))


def is_template(tree: NonTerminal) -> bool:
    return all(isinstance(t, Mask) for t in _terminals(tree))


def fill_template(template: NonTerminal, spans: Iterable[Iterable[str]]) -> NonTerminal:
    """Substitute word spans for the masks of ``template`` in pre-order."""
    it = iter(spans)

    def rebuild(node: NonTerminal) -> NonTerminal:
        children: list[Node] = []
        for child in node.children:
            if isinstance(child, NonTerminal):
                children.append(rebuild(child))
            elif isinstance(child, Mask):
                words = next(it, None)
                if words is None:
                    raise ValueError("fewer spans than masks")
                span = [Token(w) for w in words]
                if not span:
                    raise ValueError("empty filler span")
                children.extend(span)
            else:
                children.append(child)
        return NonTerminal(node.label, tuple(children))

    filled = rebuild(template)
    if next(it, None) is not None:
        raise ValueError("more spans than masks")
    return filled


# -- generator-output post-processing ---------------------------------------

class RejectReason(enum.Enum):
    UNKNOWN_LABEL = "UnknownLabel"
    MISMATCHED_CLOSING = "MismatchedClosing"
    STRUCTURAL = "Structural"


class GeneratorOutputRejected(Exception):
    def __init__(self, reason: RejectReason, detail: str):
        super().__init__(f"{reason.value}: {detail}")
        self.reason = reason
        self.detail = detail


def from_generator_output(text: str, known_labels: set[Label]) -> NonTerminal:
    """Convert a generator-form tree back to a validated annotation.

    Labels are uppercased and labelled closers stripped back to ``]``.
    Raises GeneratorOutputRejected for unknown labels, closers that do not
    match their opener, and anything that fails structural validation.
    """
    out: list[str] = []
    opened: list[str] = []
    for word in text.split():
        if word.startswith("[") and word != MASK:
            name = word[1:]
            try:
                label = Label.parse(name.upper())
            except ValueError:
                raise GeneratorOutputRejected(RejectReason.STRUCTURAL, f"bad label {name!r}") from None
            if label not in known_labels:
                raise GeneratorOutputRejected(RejectReason.UNKNOWN_LABEL, str(label))
            opened.append(str(label))
            out.append("[" + str(label))
            continue
        m = _GEN_CLOSER_RE.match(word)
        if m:
            closer = f"{m.group(1)}:{m.group(2)}".upper()
            if not opened:
                raise GeneratorOutputRejected(RejectReason.STRUCTURAL, f"unopened closer {word!r}")
            if opened[-1] != closer:
                raise GeneratorOutputRejected(
                    RejectReason.MISMATCHED_CLOSING, f"{opened[-1]} closed by {closer}"
                )
            opened.pop()
            out.append("]")
        elif word == "]":
            if opened:
                opened.pop()
            out.append("]")
        else:
            out.append(word)
    try:
        return parse_linearized(" ".join(out), Mode.ANNOTATION)
    except TreeSyntaxError as exc:
        raise GeneratorOutputRejected(RejectReason.STRUCTURAL, str(exc)) from None
