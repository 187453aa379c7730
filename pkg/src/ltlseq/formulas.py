"""LTLf formulas over named atoms: AST, parser, printer, NNF, progression.

Formulas are immutable trees.  The parser and printer round-trip exactly
(``parse(str(f)) == f``).  ``canonical`` flattens and sorts associative
connectives so that logically identical progression states collapse to a
single representative, which keeps the automaton construction finite.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .errors import (
    DomainError,
    LtlfSyntaxError,
    ResourceLimitError,
    UnknownTokenError,
)

_ATOM_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*\Z")


class Formula:
    """Base class; all nodes are frozen dataclasses with structural equality."""

    __slots__ = ()

    def __str__(self) -> str:
        return print_formula(self)

    def atoms(self) -> frozenset[str]:
        return _collect_atoms(self)


@dataclass(frozen=True, repr=False)
class TrueF(Formula):
    __slots__ = ()

    def __repr__(self):
        return "TrueF()"


@dataclass(frozen=True, repr=False)
class FalseF(Formula):
    __slots__ = ()

    def __repr__(self):
        return "FalseF()"


@dataclass(frozen=True)
class Atom(Formula):
    name: str

    def __post_init__(self):
        if not _ATOM_RE.match(self.name) or self.name in _KEYWORDS:
            raise ValueError(f"invalid atom name: {self.name!r}")


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    child: Formula


@dataclass(frozen=True)
class WeakNext(Formula):
    child: Formula


@dataclass(frozen=True)
class Finally(Formula):
    child: Formula


@dataclass(frozen=True)
class Globally(Formula):
    child: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Release(Formula):
    left: Formula
    right: Formula


TRUE = TrueF()
FALSE = FalseF()

# Obligations produced when a (weak) next operator is progressed.  "F true"
# holds exactly on non-empty remainders and "G false" exactly on the empty
# one, so conjoining/disjoining them preserves the strong/weak distinction
# at the end of the trace.  Both vanish after one further step.
NONEMPTY = Finally(TRUE)
ENDED = Globally(FALSE)


def _collect_atoms(f: Formula) -> frozenset[str]:
    out: set[str] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            out.add(g.name)
        elif isinstance(g, (Not, Next, WeakNext, Finally, Globally)):
            stack.append(g.child)
        elif isinstance(g, (And, Or, Implies, Iff, Until, Release)):
            stack.append(g.left)
            stack.append(g.right)
    return frozenset(out)


# --------------------------------------------------------------------------
# Printing.  Binding, tightest first: unary; U/R (right); & (left); | (left);
# -> (right); <-> (right).

_LEVEL_IFF = 1
_LEVEL_IMPLIES = 2
_LEVEL_OR = 3
_LEVEL_AND = 4
_LEVEL_UR = 5
_LEVEL_UNARY = 6
_LEVEL_ATOM = 7

_BINARY = {
    Iff: ("<->", _LEVEL_IFF, "right"),
    Implies: ("->", _LEVEL_IMPLIES, "right"),
    Or: ("|", _LEVEL_OR, "left"),
    And: ("&", _LEVEL_AND, "left"),
    Until: ("U", _LEVEL_UR, "right"),
    Release: ("R", _LEVEL_UR, "right"),
}
_UNARY = {Not: "!", Next: "X", WeakNext: "WX", Finally: "F", Globally: "G"}


def _level(f: Formula) -> int:
    t = type(f)
    if t in _BINARY:
        return _BINARY[t][1]
    if t in _UNARY:
        return _LEVEL_UNARY
    return _LEVEL_ATOM


def print_formula(f: Formula) -> str:
    """Render ``f`` in the concrete syntax accepted by :func:`parse`."""
    t = type(f)
    if t is TrueF:
        return "true"
    if t is FalseF:
        return "false"
    if t is Atom:
        return f.name
    if t in _UNARY:
        sym = _UNARY[t]
        inner = print_formula(f.child)
        if _level(f.child) < _LEVEL_UNARY:
            inner = "(" + inner + ")"
        return sym + inner if sym == "!" else sym + " " + inner
    sym, level, assoc = _BINARY[t]
    left, right = print_formula(f.left), print_formula(f.right)
    # Parenthesize the child on the non-associating side so the tree
    # structure survives a re-parse.
    if _level(f.left) < level or (_level(f.left) == level and assoc == "right"):
        left = "(" + left + ")"
    if _level(f.right) < level or (_level(f.right) == level and assoc == "left"):
        right = "(" + right + ")"
    return f"{left} {sym} {right}"


# --------------------------------------------------------------------------
# Parsing.

_KEYWORDS = {"true", "false", "X", "WX", "F", "G", "U", "R"}
_ALIASES = {"◯": "X", "○": "X", "◇": "F", "□": "G"}

_TOKEN_RE = re.compile(
    r"\s+|(?P<op><->|->|&|\||!|\(|\))|(?P<word>[a-zA-Z_][a-zA-Z0-9_]*)"
    r"|(?P<alias>[◯○◇□])"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise UnknownTokenError(
                f"unknown token {text[pos]!r}", line, pos - line_start + 1
            )
        chunk = m.group(0)
        col = pos - line_start + 1
        if m.lastgroup == "op":
            tokens.append(_Token(chunk, chunk, line, col))
        elif m.lastgroup == "word":
            if chunk in _KEYWORDS:
                tokens.append(_Token(chunk, chunk, line, col))
            else:
                tokens.append(_Token("atom", chunk, line, col))
        elif m.lastgroup == "alias":
            tokens.append(_Token(_ALIASES[chunk], chunk, line, col))
        else:  # whitespace; track newlines for error positions
            for i, ch in enumerate(chunk):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tok
        self.i += 1
        return t

    def fail(self, expected: Iterable[str]):
        t = self.tok
        what = "end of input" if t.kind == "eof" else repr(t.text)
        raise LtlfSyntaxError(f"unexpected {what}", t.line, t.column, expected)

    def parse_iff(self) -> Formula:
        left = self.parse_implies()
        if self.tok.kind == "<->":
            self.advance()
            return Iff(left, self.parse_iff())
        return left

    def parse_implies(self) -> Formula:
        left = self.parse_or()
        if self.tok.kind == "->":
            self.advance()
            return Implies(left, self.parse_implies())
        return left

    def parse_or(self) -> Formula:
        f = self.parse_and()
        while self.tok.kind == "|":
            self.advance()
            f = Or(f, self.parse_and())
        return f

    def parse_and(self) -> Formula:
        f = self.parse_until()
        while self.tok.kind == "&":
            self.advance()
            f = And(f, self.parse_until())
        return f

    def parse_until(self) -> Formula:
        left = self.parse_unary()
        if self.tok.kind in ("U", "R"):
            op = self.advance().kind
            right = self.parse_until()
            return Until(left, right) if op == "U" else Release(left, right)
        return left

    def parse_unary(self) -> Formula:
        kind = self.tok.kind
        if kind == "!":
            self.advance()
            return Not(self.parse_unary())
        if kind in ("X", "WX", "F", "G"):
            self.advance()
            ctor = {"X": Next, "WX": WeakNext, "F": Finally, "G": Globally}[kind]
            return ctor(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Formula:
        kind = self.tok.kind
        if kind == "atom":
            return Atom(self.advance().text)
        if kind == "true":
            self.advance()
            return TRUE
        if kind == "false":
            self.advance()
            return FALSE
        if kind == "(":
            self.advance()
            f = self.parse_iff()
            if self.tok.kind != ")":
                self.fail({")"})
            self.advance()
            return f
        self.fail({"atom", "true", "false", "!", "X", "WX", "F", "G", "("})


def parse(text: str) -> Formula:
    """Parse formula text; raises :class:`LtlfSyntaxError` with position."""
    parser = _Parser(_tokenize(text))
    f = parser.parse_iff()
    if parser.tok.kind != "eof":
        parser.fail({"end of input"})
    return f


# --------------------------------------------------------------------------
# Canonical form: n-ary flattening of &/| with sorted, deduplicated children
# plus unit, complement, and absorption rules.  Temporal operators are never
# rewritten (in particular "F true" is NOT folded to "true": the two differ
# on the empty remainder of a trace).


def _sort_key(f: Formula) -> str:
    return print_formula(f)


def _flatten(f: Formula, cls) -> Iterable[Formula]:
    if isinstance(f, cls):
        yield from _flatten(f.left, cls)
        yield from _flatten(f.right, cls)
    else:
        yield f


def _build_chain(children: list[Formula], ctor) -> Formula:
    out = children[-1]
    for c in reversed(children[:-1]):
        out = ctor(c, out)
    return out


def _canon_nary(items: Iterable[Formula], cls, unit, absorber, dual_cls) -> Formula:
    seen: list[Formula] = []
    present: set[Formula] = set()
    for f in items:
        for c in _flatten(f, cls):
            if c == absorber:
                return absorber
            if c == unit or c in present:
                continue
            present.add(c)
            seen.append(c)
    for c in seen:
        if (isinstance(c, Not) and c.child in present) or Not(c) in present:
            return absorber
    # absorption: inside an And, an Or-child with a sibling disjunct is
    # redundant (x & (x | y) == x); dually for Or.
    drop = set()
    for c in seen:
        if isinstance(c, dual_cls):
            if any(d in present for d in _flatten(c, dual_cls)):
                drop.add(c)
    seen = [c for c in seen if c not in drop]
    if not seen:
        return unit
    if len(seen) == 1:
        return seen[0]
    seen.sort(key=_sort_key)
    return _build_chain(seen, cls)


def conj(items: Iterable[Formula]) -> Formula:
    """Canonical conjunction of ``items``."""
    return _canon_nary(items, And, TRUE, FALSE, Or)


def disj(items: Iterable[Formula]) -> Formula:
    """Canonical disjunction of ``items``."""
    return _canon_nary(items, Or, FALSE, TRUE, And)


def canonical(f: Formula) -> Formula:
    """Rebuild ``f`` bottom-up through the canonical constructors."""
    t = type(f)
    if t in (TrueF, FalseF, Atom):
        return f
    if t is Not:
        c = canonical(f.child)
        if c == TRUE:
            return FALSE
        if c == FALSE:
            return TRUE
        if isinstance(c, Not):
            return c.child
        return Not(c)
    if t is And:
        return conj([canonical(f.left), canonical(f.right)])
    if t is Or:
        return disj([canonical(f.left), canonical(f.right)])
    if t in (Implies, Iff, Until, Release):
        return t(canonical(f.left), canonical(f.right))
    return t(canonical(f.child))


# --------------------------------------------------------------------------
# Canonical state form: unique irredundant DNF over maximal temporal
# subterms.  In NNF the Boolean skeleton is monotone in those subterms
# (negation sits only on propositional atoms, inside them), so the antichain
# of minimal models determines the skeleton exactly.  Progression rebuilt
# from it cannot grow unboundedly: every reachable state is one antichain
# over the closure of the original formula.

_MAX_STATE_MODELS = 4096


def _antichain(models: Iterable[frozenset[Formula]]) -> list[frozenset[Formula]]:
    models = set(models)
    if len(models) > _MAX_STATE_MODELS:
        raise ResourceLimitError(
            f"state form exceeded {_MAX_STATE_MODELS} minimal models"
        )
    return [m for m in models if not any(other < m for other in models)]


def _minimal_models(f: Formula) -> list[frozenset[Formula]]:
    t = type(f)
    if t is TrueF:
        return [frozenset()]
    if t is FalseF:
        return []
    if t is And:
        left = _minimal_models(f.left)
        right = _minimal_models(f.right)
        return _antichain(a | b for a in left for b in right)
    if t is Or:
        return _antichain(_minimal_models(f.left) + _minimal_models(f.right))
    return [frozenset([f])]


def state_form(f: Formula) -> Formula:
    """Canonical NNF equivalent of ``f``: disjunction of minimal models."""
    models = _minimal_models(f)
    return disj(conj(sorted(m, key=_sort_key)) for m in models)


# --------------------------------------------------------------------------
# Negation normal form.


def to_nnf(f: Formula) -> Formula:
    """Eliminate ->/<-> and push negation onto atoms, canonically."""
    return _nnf(f, False)


def _nnf(f: Formula, neg: bool) -> Formula:
    t = type(f)
    if t is TrueF:
        return FALSE if neg else TRUE
    if t is FalseF:
        return TRUE if neg else FALSE
    if t is Atom:
        return Not(f) if neg else f
    if t is Not:
        return _nnf(f.child, not neg)
    if t is And:
        parts = [_nnf(f.left, neg), _nnf(f.right, neg)]
        return disj(parts) if neg else conj(parts)
    if t is Or:
        parts = [_nnf(f.left, neg), _nnf(f.right, neg)]
        return conj(parts) if neg else disj(parts)
    if t is Implies:
        return _nnf(Or(Not(f.left), f.right), neg)
    if t is Iff:
        expanded = Or(And(f.left, f.right), And(Not(f.left), Not(f.right)))
        return _nnf(expanded, neg)
    if t is Next:
        return WeakNext(_nnf(f.child, True)) if neg else Next(_nnf(f.child, False))
    if t is WeakNext:
        return Next(_nnf(f.child, True)) if neg else WeakNext(_nnf(f.child, False))
    if t is Finally:
        return Globally(_nnf(f.child, True)) if neg else Finally(_nnf(f.child, False))
    if t is Globally:
        return Finally(_nnf(f.child, True)) if neg else Globally(_nnf(f.child, False))
    if t is Until:
        l, r = _nnf(f.left, neg), _nnf(f.right, neg)
        return Release(l, r) if neg else Until(l, r)
    if t is Release:
        l, r = _nnf(f.left, neg), _nnf(f.right, neg)
        return Until(l, r) if neg else Release(l, r)
    raise TypeError(f"not a formula: {f!r}")


# --------------------------------------------------------------------------
# Progression: the obligation a strictly shorter remainder must satisfy
# after one letter has been consumed, and truth on the empty remainder.


def progress(f: Formula, letter: Mapping[str, bool]) -> Formula:
    """Progress NNF formula ``f`` through one letter.

    ``letter`` must assign every atom of ``f``.  Strong next keeps its
    obligation conjoined with ``F true`` (the remainder must be non-empty);
    weak next disjoins ``G false`` (trivially satisfied if the trace ends).
    """
    t = type(f)
    if t is TrueF:
        return TRUE
    if t is FalseF:
        return FALSE
    if t is Atom:
        return TRUE if _letter_value(letter, f.name) else FALSE
    if t is Not:
        if not isinstance(f.child, Atom):
            raise ValueError(f"progress requires NNF, got {f}")
        return FALSE if _letter_value(letter, f.child.name) else TRUE
    if t is And:
        return conj([progress(f.left, letter), progress(f.right, letter)])
    if t is Or:
        return disj([progress(f.left, letter), progress(f.right, letter)])
    if t is Next:
        return conj([f.child, NONEMPTY])
    if t is WeakNext:
        return disj([f.child, ENDED])
    if t is Globally:
        return conj([progress(f.child, letter), f])
    if t is Finally:
        return disj([progress(f.child, letter), f])
    if t is Until:
        return disj([progress(f.right, letter), conj([progress(f.left, letter), f])])
    if t is Release:
        return conj([progress(f.right, letter), disj([progress(f.left, letter), f])])
    raise ValueError(f"progress requires NNF, got {f}")


def _letter_value(letter: Mapping[str, bool], name: str) -> bool:
    try:
        return bool(letter[name])
    except KeyError:
        raise DomainError(f"letter does not assign atom {name!r}") from None


def eval_empty(f: Formula) -> bool:
    """Truth of NNF formula ``f`` on the empty continuation of a trace."""
    t = type(f)
    if t is TrueF:
        return True
    if t in (FalseF, Atom, Next, Finally, Until):
        return False
    if t is Not:
        if not isinstance(f.child, Atom):
            raise ValueError(f"eval_empty requires NNF, got {f}")
        return False
    if t in (WeakNext, Globally, Release):
        return True
    if t is And:
        return eval_empty(f.left) and eval_empty(f.right)
    if t is Or:
        return eval_empty(f.left) or eval_empty(f.right)
    raise ValueError(f"eval_empty requires NNF, got {f}")
