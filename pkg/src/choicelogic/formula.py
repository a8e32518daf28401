"""Object language of the runtime.

Formulas are classical propositional trees extended with two *choice*
connectives: choice conjunction ``&`` (the opponent of the occurrence picks a
component) and choice disjunction ``+`` (the holder of the occurrence picks).
A formula may additionally be annotated with the agent that plays the
opposing side of it: ``(cloudy + sunny) @ weather.com``.

Everything in this module is an immutable value.  Canonical form flattens
associative chains of one connective into a single n-ary node, so component
indices in moves and occurrence paths run 1..n the way people write them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Union

ATOM_NAME_RE = re.compile(r"[a-z][a-zA-Z0-9_.]*\Z")
AGENT_RE = re.compile(r"[A-Za-z0-9_]+(\.[A-Za-z0-9_]+)*\Z")
RESERVED_WORDS = frozenset({"top", "bot", "agent"})


class FormulaError(ValueError):
    """Malformed formula construction or use."""


class PathError(FormulaError):
    """An occurrence path does not address anything in the given formula."""


class ParseError(FormulaError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class AgentId:
    """Network identity of an agent, e.g. ``weather.com``.

    Comparison is exact, case-sensitive string equality.
    """

    address: str

    def __post_init__(self):
        if not self.address or not AGENT_RE.match(self.address):
            raise FormulaError(f"invalid agent id: {self.address!r}")

    def __str__(self) -> str:
        return self.address


class Polarity(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"

    def flipped(self) -> "Polarity":
        return Polarity.NEGATIVE if self is Polarity.POSITIVE else Polarity.POSITIVE


# --- formula nodes -----------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    name: str

    def __post_init__(self):
        if not ATOM_NAME_RE.match(self.name):
            raise FormulaError(f"invalid atom name: {self.name!r}")
        if self.name in RESERVED_WORDS:
            raise FormulaError(f"reserved word used as atom: {self.name!r}")


@dataclass(frozen=True)
class Top:
    """The always-true constant (written ``top``)."""


@dataclass(frozen=True)
class Bot:
    """The always-false constant (written ``bot``)."""


@dataclass(frozen=True)
class Neg:
    body: "AnnotatedFormula"


def _check_parts(cls_name: str, parts: tuple, same: type, allow_leaf: bool):
    if len(parts) < 2:
        raise FormulaError(f"{cls_name} needs at least 2 parts, got {len(parts)}")
    for p in parts:
        if isinstance(p, same):
            raise FormulaError(f"{cls_name} directly contains another {cls_name}; "
                               "chains must be flattened into one node")
        if not allow_leaf and contains_leaf(p):
            raise FormulaError(f"agent annotation inside a {cls_name} scope")


@dataclass(frozen=True)
class And:
    parts: tuple

    def __post_init__(self):
        _check_parts("And", self.parts, And, allow_leaf=True)


@dataclass(frozen=True)
class Or:
    parts: tuple

    def __post_init__(self):
        _check_parts("Or", self.parts, Or, allow_leaf=True)


@dataclass(frozen=True)
class Implies:
    left: "AnnotatedFormula"
    right: "AnnotatedFormula"


@dataclass(frozen=True)
class ChoiceAnd:
    """n-ary choice conjunction: the side *facing* the occurrence picks.

    A positive occurrence is resolved by the environment, a negative one by
    the machine holding the formula.
    """

    parts: tuple

    def __post_init__(self):
        _check_parts("ChoiceAnd", self.parts, ChoiceAnd, allow_leaf=False)


@dataclass(frozen=True)
class ChoiceOr:
    """n-ary choice disjunction: dual of ChoiceAnd.

    A positive occurrence is resolved by the machine, a negative one by the
    environment.
    """

    parts: tuple

    def __post_init__(self):
        _check_parts("ChoiceOr", self.parts, ChoiceOr, allow_leaf=False)


@dataclass(frozen=True)
class Leaf:
    """A formula annotated with the agent playing against it.

    Annotations never nest and choice connectives never scope over a Leaf,
    so every choice occurrence in a well-formed tree sits inside exactly one
    Leaf (its *matching environment*).
    """

    payload: "Formula"
    env: AgentId

    def __post_init__(self):
        if contains_leaf(self.payload):
            raise FormulaError("nested agent annotation")


TOP = Top()
BOT = Bot()

Formula = Union[Atom, Top, Bot, Neg, And, Or, Implies, ChoiceAnd, ChoiceOr]
AnnotatedFormula = Union[Formula, Leaf]

Spec = tuple  # occurrence path: tuple of 1-based child indices

_NARY = {And: "/\\", Or: "\\/", ChoiceAnd: "&", ChoiceOr: "+"}


# --- constructors that keep the canonical flattened form ----------------------

def _flatten(cls, parts: Iterable) -> "AnnotatedFormula":
    flat: list = []
    for p in parts:
        if isinstance(p, cls):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        raise FormulaError(f"empty {cls.__name__}")
    if len(flat) == 1:
        return flat[0]
    return cls(tuple(flat))


def make_and(parts: Iterable) -> "AnnotatedFormula":
    return _flatten(And, parts)


def make_or(parts: Iterable) -> "AnnotatedFormula":
    return _flatten(Or, parts)


def make_choice_and(parts: Iterable) -> "AnnotatedFormula":
    return _flatten(ChoiceAnd, parts)


def make_choice_or(parts: Iterable) -> "AnnotatedFormula":
    return _flatten(ChoiceOr, parts)


# --- structural queries --------------------------------------------------------

def contains_leaf(f) -> bool:
    if isinstance(f, Leaf):
        return True
    if isinstance(f, Neg):
        return contains_leaf(f.body)
    if isinstance(f, (And, Or, ChoiceAnd, ChoiceOr)):
        return any(contains_leaf(p) for p in f.parts)
    if isinstance(f, Implies):
        return contains_leaf(f.left) or contains_leaf(f.right)
    return False


def is_pure(f) -> bool:
    """True when the tree carries no agent annotations."""
    return not contains_leaf(f)


def is_elementary(f) -> bool:
    """True when the tree contains no choice connectives anywhere."""
    if isinstance(f, (ChoiceAnd, ChoiceOr)):
        return False
    if isinstance(f, Neg):
        return is_elementary(f.body)
    if isinstance(f, Leaf):
        return is_elementary(f.payload)
    if isinstance(f, (And, Or)):
        return all(is_elementary(p) for p in f.parts)
    if isinstance(f, Implies):
        return is_elementary(f.left) and is_elementary(f.right)
    return True


def choice_count(f) -> int:
    """Total number of choice-connective occurrences (the play/search measure)."""
    if isinstance(f, (ChoiceAnd, ChoiceOr)):
        return 1 + sum(choice_count(p) for p in f.parts)
    if isinstance(f, Neg):
        return choice_count(f.body)
    if isinstance(f, Leaf):
        return choice_count(f.payload)
    if isinstance(f, (And, Or)):
        return sum(choice_count(p) for p in f.parts)
    if isinstance(f, Implies):
        return choice_count(f.left) + choice_count(f.right)
    return 0


def atoms(f) -> frozenset:
    out: set = set()

    def walk(node):
        if isinstance(node, Atom):
            out.add(node.name)
        elif isinstance(node, Neg):
            walk(node.body)
        elif isinstance(node, Leaf):
            walk(node.payload)
        elif isinstance(node, (And, Or, ChoiceAnd, ChoiceOr)):
            for p in node.parts:
                walk(p)
        elif isinstance(node, Implies):
            walk(node.left)
            walk(node.right)

    walk(f)
    return frozenset(out)


# --- occurrence paths ----------------------------------------------------------

def parse_spec(text: str) -> tuple:
    if text == "":
        return ()
    try:
        spec = tuple(int(part) for part in text.split("."))
    except ValueError:
        raise PathError(f"malformed occurrence path: {text!r}") from None
    if any(i < 1 for i in spec):
        raise PathError(f"occurrence path indices start at 1: {text!r}")
    return spec

def format_spec(spec: tuple) -> str:
    return ".".join(str(i) for i in spec)


@dataclass(frozen=True)
class Occurrence:
    """What an occurrence path resolves to.

    ``node`` is the subformula after stepping through negations and
    annotations, which are transparent to paths; ``flips`` counts the
    polarity inversions crossed on the way (negations and left sides of
    implications); ``env`` is the innermost enclosing annotation, if any;
    ``surface`` is False when the path crossed into a choice connective's
    scope.
    """

    node: "AnnotatedFormula"
    spec: tuple
    flips: int
    env: Optional[AgentId]
    surface: bool

    @property
    def polarity(self) -> Polarity:
        return Polarity.POSITIVE if self.flips % 2 == 0 else Polarity.NEGATIVE


def _indexed_children(node) -> "tuple | None":
    if isinstance(node, (And, Or, ChoiceAnd, ChoiceOr)):
        return node.parts
    if isinstance(node, Implies):
        return (node.left, node.right)
    return None


def resolve(f, spec: tuple, default_env: Optional[AgentId] = None,
            peel: bool = True) -> Occurrence:
    """Resolve an occurrence path.

    Negations and annotations contribute no path index.  With ``peel`` the
    trailing ones are stepped through as well, so a path always lands on the
    same node a move on it would act on (a choice connective keeps its
    enclosing negations when replaced).
    """
    node, flips, env, surface = f, 0, default_env, True

    def step_transparent():
        nonlocal node, flips, env
        while True:
            if isinstance(node, Neg):
                node, flips = node.body, flips + 1
            elif isinstance(node, Leaf):
                env, node = node.env, node.payload
            else:
                return

    for depth, i in enumerate(spec):
        step_transparent()
        children = _indexed_children(node)
        if children is None:
            raise PathError(f"path {format_spec(spec)} descends into a leaf node "
                            f"at {format_spec(spec[:depth])}")
        if not 1 <= i <= len(children):
            raise PathError(f"index {i} out of range 1..{len(children)} "
                            f"at {format_spec(spec[:depth])}")
        if isinstance(node, (ChoiceAnd, ChoiceOr)):
            surface = False
        if isinstance(node, Implies) and i == 1:
            flips += 1
        node = children[i - 1]
    if peel:
        step_transparent()
    return Occurrence(node, tuple(spec), flips, env, surface)


def subformula_at(f, spec: tuple):
    """The exact node addressed by ``spec`` (no trailing peeling)."""
    return resolve(f, spec, peel=False).node


def polarity_at(f, spec: tuple) -> Polarity:
    """Polarity of the innermost occurrence at ``spec``.

    Positive iff the path (including peeled trailing negations) crosses an
    even number of polarity flips.
    """
    return resolve(f, spec, peel=True).polarity


@dataclass(frozen=True)
class SurfaceChoice:
    """A surface choice occurrence: where a move can act."""

    spec: tuple
    node: "ChoiceAnd | ChoiceOr"
    polarity: Polarity
    env: Optional[AgentId]

    @property
    def arity(self) -> int:
        return len(self.node.parts)

    @property
    def environment_chooses(self) -> bool:
        """True when the matching environment owns this choice.

        The environment resolves positive choice conjunctions and negative
        choice disjunctions; the machine resolves the other two cases.
        """
        if isinstance(self.node, ChoiceAnd):
            return self.polarity is Polarity.POSITIVE
        return self.polarity is Polarity.NEGATIVE

    @property
    def machine_chooses(self) -> bool:
        return not self.environment_chooses


def surface_choices(f, default_env: Optional[AgentId] = None) -> list:
    """All surface choice occurrences, leftmost first."""
    out: list = []

    def walk(node, spec, flips, env):
        if isinstance(node, (Atom, Top, Bot)):
            return
        if isinstance(node, Neg):
            walk(node.body, spec, flips + 1, env)
        elif isinstance(node, Leaf):
            walk(node.payload, spec, flips, node.env)
        elif isinstance(node, (ChoiceAnd, ChoiceOr)):
            pol = Polarity.POSITIVE if flips % 2 == 0 else Polarity.NEGATIVE
            out.append(SurfaceChoice(spec, node, pol, env))
        elif isinstance(node, (And, Or)):
            for i, p in enumerate(node.parts):
                walk(p, spec + (i + 1,), flips, env)
        elif isinstance(node, Implies):
            walk(node.left, spec + (1,), flips + 1, env)
            walk(node.right, spec + (2,), flips, env)

    walk(f, (), 0, default_env)
    return out


def replace_at(f, spec: tuple, g):
    """Replace the occurrence at ``spec`` by ``g`` and re-canonicalize.

    When the addressed occurrence is a choice connective reached through
    negations or an annotation, those wrappers are preserved: replacing the
    choice in ``~(p & q)`` yields ``~g``, and a replacement inside an
    annotated formula stays annotated.  Otherwise the node at the end of the
    path itself is replaced.
    """

    def replace_target(node):
        # Peel transparent wrappers if they lead to a choice node.
        if isinstance(node, Neg) and _peels_to_choice(node):
            return Neg(replace_target(node.body))
        if isinstance(node, Leaf) and _peels_to_choice(node):
            return Leaf(replace_target(node.payload), node.env)
        return g

    def rec(node, rest):
        if not rest:
            return replace_target(node)
        if isinstance(node, Neg):
            return Neg(rec(node.body, rest))
        if isinstance(node, Leaf):
            return Leaf(rec(node.payload, rest), node.env)
        children = _indexed_children(node)
        if children is None:
            raise PathError(f"path {format_spec(spec)} descends into a leaf node")
        i = rest[0]
        if not 1 <= i <= len(children):
            raise PathError(f"index {i} out of range 1..{len(children)}")
        new = list(children)
        new[i - 1] = rec(children[i - 1], rest[1:])
        if isinstance(node, Implies):
            return Implies(new[0], new[1])
        return _flatten(type(node), new)

    return rec(f, tuple(spec))


def _peels_to_choice(node) -> bool:
    while True:
        if isinstance(node, Neg):
            node = node.body
        elif isinstance(node, Leaf):
            node = node.payload
        else:
            return isinstance(node, (ChoiceAnd, ChoiceOr))


# --- elementarization, skeleton, annotation ------------------------------------

def elementarize(f) -> "Formula":
    """Replace every surface choice disjunction by ``bot`` and every surface
    choice conjunction by ``top``, regardless of polarity."""
    if isinstance(f, ChoiceOr):
        return BOT
    if isinstance(f, ChoiceAnd):
        return TOP
    if isinstance(f, Neg):
        return Neg(elementarize(f.body))
    if isinstance(f, Leaf):
        return Leaf(elementarize(f.payload), f.env)
    if isinstance(f, (And, Or)):
        return type(f)(tuple(elementarize(p) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(elementarize(f.left), elementarize(f.right))
    return f


def skeleton(f) -> "Formula":
    """Drop every agent annotation, re-flattening where boundaries dissolve."""
    if isinstance(f, Leaf):
        return f.payload
    if isinstance(f, Neg):
        return Neg(skeleton(f.body))
    if isinstance(f, (And, Or, ChoiceAnd, ChoiceOr)):
        return _flatten(type(f), [skeleton(p) for p in f.parts])
    if isinstance(f, Implies):
        return Implies(skeleton(f.left), skeleton(f.right))
    return f


def to_annotated(f, default_env: AgentId) -> "AnnotatedFormula":
    """Wrap unannotated regions of ``f`` into leaves owned by ``default_env``."""
    if isinstance(f, Leaf):
        return f
    if is_pure(f):
        return Leaf(f, default_env)
    if isinstance(f, Neg):
        return Neg(to_annotated(f.body, default_env))
    if isinstance(f, (And, Or)):
        return _flatten(type(f), [to_annotated(p, default_env) for p in f.parts])
    if isinstance(f, Implies):
        return Implies(to_annotated(f.left, default_env),
                       to_annotated(f.right, default_env))
    raise FormulaError("choice connective outside any annotation scope")


def leaf_locations(f) -> list:
    """All (path, leaf) pairs, leftmost first."""
    out: list = []

    def walk(node, spec):
        if isinstance(node, Leaf):
            out.append((spec, node))
        elif isinstance(node, Neg):
            walk(node.body, spec)
        elif isinstance(node, (And, Or)):
            for i, p in enumerate(node.parts):
                walk(p, spec + (i + 1,))
        elif isinstance(node, Implies):
            walk(node.left, spec + (1,))
            walk(node.right, spec + (2,))

    walk(f, ())
    return out


# --- printing -------------------------------------------------------------------

_PREC_LEAF = 1
_PREC_IMPL = 2
_PREC = {ChoiceOr: 3, ChoiceAnd: 4, Or: 5, And: 6}
_PREC_NEG = 7
_PREC_ATOM = 8


def _fmt(f) -> "tuple[str, int]":
    if isinstance(f, Atom):
        return f.name, _PREC_ATOM
    if isinstance(f, Top):
        return "top", _PREC_ATOM
    if isinstance(f, Bot):
        return "bot", _PREC_ATOM
    if isinstance(f, Neg):
        text, prec = _fmt(f.body)
        if prec < _PREC_NEG:
            text = f"({text})"
        return f"~{text}", _PREC_NEG
    if isinstance(f, (And, Or, ChoiceAnd, ChoiceOr)):
        own = _PREC[type(f)]
        sep = f" {_NARY[type(f)]} "
        rendered = []
        for p in f.parts:
            text, prec = _fmt(p)
            rendered.append(f"({text})" if prec < own else text)
        return sep.join(rendered), own
    if isinstance(f, Implies):
        lt, lp = _fmt(f.left)
        rt, rp = _fmt(f.right)
        if lp <= _PREC_IMPL:
            lt = f"({lt})"
        if rp < _PREC_IMPL:
            rt = f"({rt})"
        return f"{lt} -> {rt}", _PREC_IMPL
    if isinstance(f, Leaf):
        text, _ = _fmt(f.payload)
        return f"{text} @ {f.env}", _PREC_LEAF
    raise FormulaError(f"not a formula: {f!r}")


def print_formula(f) -> str:
    """Canonical text with minimal parentheses; parsing it back is identity."""
    return _fmt(f)[0]


# --- parsing --------------------------------------------------------------------

_SYMBOLS = ("->", "/\\", "\\/", "~", "&", "+", "@", "(", ")", ".")
_IDENT_START = re.compile(r"[A-Za-z_]")
_IDENT_CHAR = re.compile(r"[A-Za-z0-9_]")


@dataclass(frozen=True)
class Token:
    kind: str        # one of the symbols, "ident", or "end"
    text: str
    line: int
    column: int


def tokenize(text: str) -> list:
    tokens: list = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line, col = line + 1, 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        matched = False
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                # A dot inside a dotted name is consumed below, not here.
                tokens.append(Token(sym, sym, line, col))
                i += len(sym)
                col += len(sym)
                matched = True
                break
        if matched:
            continue
        if _IDENT_START.match(c):
            start = i
            while i < n and _IDENT_CHAR.match(text[i]):
                i += 1
            # Greedily absorb dotted segments: "weather.com" is one name,
            # but the trailing dot of "cloudy." stays a terminator token.
            while i + 1 < n and text[i] == "." and _IDENT_CHAR.match(text[i + 1]):
                i += 1
                while i < n and _IDENT_CHAR.match(text[i]):
                    i += 1
            word = text[start:i]
            tokens.append(Token("ident", word, line, col))
            col += len(word)
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("end", "", line, col))
    return tokens


class Parser:
    """Recursive-descent parser for the formula grammar.

    Precedence, tightest first: ``~``, ``/\\``, ``\\/``, ``&``, ``+``,
    ``->``, ``@``.  ``->`` associates to the right; the other binary
    connectives collect into one n-ary node per chain.
    """

    def __init__(self, tokens: list):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def take(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.column)
        return self.take()

    def at_end(self) -> bool:
        return self.peek().kind == "end"

    def annotated(self):
        body = self.impl()
        if self.peek().kind == "@":
            at = self.take()
            env = self.agent_id()
            try:
                return Leaf(body, env)
            except FormulaError as exc:
                raise ParseError(str(exc), at.line, at.column) from None
        return body

    def agent_id(self) -> AgentId:
        tok = self.expect("ident")
        try:
            return AgentId(tok.text)
        except FormulaError as exc:
            raise ParseError(str(exc), tok.line, tok.column) from None

    def impl(self):
        left = self.chain(("+",), self.choiceand, make_choice_or)
        if self.peek().kind == "->":
            self.take()
            right = self.impl()
            return Implies(left, right)
        return left

    def chain(self, ops: tuple, sub, build):
        first = sub()
        if self.peek().kind not in ops:
            return first
        parts = [first]
        while self.peek().kind in ops:
            op = self.take()
            parts.append(sub())
        try:
            return build(parts)
        except FormulaError as exc:
            raise ParseError(str(exc), op.line, op.column) from None

    def choiceand(self):
        return self.chain(("&",), self.disj, make_choice_and)

    def disj(self):
        return self.chain(("\\/",), self.conj, make_or)

    def conj(self):
        return self.chain(("/\\",), self.unary, make_and)

    def unary(self):
        tok = self.peek()
        if tok.kind == "~":
            self.take()
            return Neg(self.unary())
        if tok.kind == "(":
            self.take()
            inner = self.annotated()
            self.expect(")")
            return inner
        if tok.kind == "ident":
            self.take()
            if tok.text == "top":
                return TOP
            if tok.text == "bot":
                return BOT
            try:
                return Atom(tok.text)
            except FormulaError as exc:
                raise ParseError(str(exc), tok.line, tok.column) from None
        raise ParseError(f"expected a formula, found {tok.text or 'end of input'!r}",
                         tok.line, tok.column)


def _parse(text: str):
    parser = Parser(tokenize(text))
    tree = parser.annotated()
    tok = parser.peek()
    if tok.kind != "end":
        raise ParseError(f"trailing input: {tok.text!r}", tok.line, tok.column)
    return tree


def parse_formula(text: str) -> "Formula":
    """Parse an annotation-free formula into canonical form."""
    tree = _parse(text)
    if contains_leaf(tree):
        raise FormulaError("agent annotation not allowed here")
    return tree


def parse_annotated(text: str, default_env: AgentId) -> "AnnotatedFormula":
    """Parse a possibly-annotated formula; unannotated regions become leaves
    owned by ``default_env``."""
    return to_annotated(_parse(text), default_env)
