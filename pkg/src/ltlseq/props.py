"""Propositional formulas over named variables.

These are the formulas attached to automaton transitions and fed to the
circuit compiler: n-ary And/Or, Not, constants, variables.  The canonical
constructors apply constant folding, idempotence, complementation, and
absorption; :func:`simplify` rebuilds a formula through them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping


class PropFormula:
    __slots__ = ()

    def __str__(self) -> str:
        return print_prop(self)

    def vars(self) -> frozenset[str]:
        return prop_vars(self)


@dataclass(frozen=True, repr=False)
class PTrue(PropFormula):
    __slots__ = ()

    def __repr__(self):
        return "PTrue()"


@dataclass(frozen=True, repr=False)
class PFalse(PropFormula):
    __slots__ = ()

    def __repr__(self):
        return "PFalse()"


@dataclass(frozen=True)
class PVar(PropFormula):
    name: str


@dataclass(frozen=True)
class PNot(PropFormula):
    child: PropFormula


@dataclass(frozen=True)
class PAnd(PropFormula):
    children: tuple[PropFormula, ...]


@dataclass(frozen=True)
class POr(PropFormula):
    children: tuple[PropFormula, ...]


PTRUE = PTrue()
PFALSE = PFalse()


def _key(f: PropFormula) -> str:
    t = type(f)
    if t is PVar:
        return "v:" + f.name
    if t is PTrue:
        return "1"
    if t is PFalse:
        return "0"
    if t is PNot:
        return "!" + _key(f.child)
    sym = "&" if t is PAnd else "|"
    return sym + "(" + ",".join(_key(c) for c in f.children) + ")"


def pnot(f: PropFormula) -> PropFormula:
    if f is PTRUE or isinstance(f, PTrue):
        return PFALSE
    if f is PFALSE or isinstance(f, PFalse):
        return PTRUE
    if isinstance(f, PNot):
        return f.child
    return PNot(f)


def _canon(items: Iterable[PropFormula], cls, unit, absorber, dual) -> PropFormula:
    seen: list[PropFormula] = []
    present: set[PropFormula] = set()
    for f in items:
        queue = list(f.children) if isinstance(f, cls) else [f]
        for c in queue:
            if isinstance(c, cls):
                queue.extend(c.children)
                continue
            if isinstance(c, type(absorber)):
                return absorber
            if isinstance(c, type(unit)) or c in present:
                continue
            present.add(c)
            seen.append(c)
    for c in seen:
        if pnot(c) in present:
            return absorber
    drop = set()
    for c in seen:
        if isinstance(c, dual) and any(d in present for d in c.children):
            drop.add(c)
    if drop:
        seen = [c for c in seen if c not in drop]
    if not seen:
        return unit
    if len(seen) == 1:
        return seen[0]
    seen.sort(key=_key)
    return cls(tuple(seen))


def pand(items: Iterable[PropFormula]) -> PropFormula:
    return _canon(items, PAnd, PTRUE, PFALSE, POr)


def por(items: Iterable[PropFormula]) -> PropFormula:
    return _canon(items, POr, PFALSE, PTRUE, PAnd)


def simplify(f: PropFormula) -> PropFormula:
    """Logically equivalent formula after constant folding, idempotence,
    absorption, and complementation, applied bottom-up."""
    t = type(f)
    if t in (PTrue, PFalse, PVar):
        return f
    if t is PNot:
        return pnot(simplify(f.child))
    parts = [simplify(c) for c in f.children]
    return pand(parts) if t is PAnd else por(parts)


def prop_vars(f: PropFormula) -> frozenset[str]:
    out: set[str] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, PVar):
            out.add(g.name)
        elif isinstance(g, PNot):
            stack.append(g.child)
        elif isinstance(g, (PAnd, POr)):
            stack.extend(g.children)
    return frozenset(out)


def eval_prop(f: PropFormula, assignment: Mapping[str, bool]) -> bool:
    t = type(f)
    if t is PTrue:
        return True
    if t is PFalse:
        return False
    if t is PVar:
        return bool(assignment[f.name])
    if t is PNot:
        return not eval_prop(f.child, assignment)
    if t is PAnd:
        return all(eval_prop(c, assignment) for c in f.children)
    return any(eval_prop(c, assignment) for c in f.children)


def cofactor(f: PropFormula, var: str, value: bool) -> PropFormula:
    """Substitute ``var`` by a constant and fold through the constructors."""
    t = type(f)
    if t is PVar:
        if f.name == var:
            return PTRUE if value else PFALSE
        return f
    if t in (PTrue, PFalse):
        return f
    if t is PNot:
        return pnot(cofactor(f.child, var, value))
    parts = [cofactor(c, var, value) for c in f.children]
    return pand(parts) if t is PAnd else por(parts)


def print_prop(f: PropFormula) -> str:
    t = type(f)
    if t is PTrue:
        return "true"
    if t is PFalse:
        return "false"
    if t is PVar:
        return f.name
    if t is PNot:
        inner = print_prop(f.child)
        if isinstance(f.child, (PAnd, POr)):
            inner = "(" + inner + ")"
        return "!" + inner
    sym = " & " if t is PAnd else " | "
    parts = []
    for c in f.children:
        s = print_prop(c)
        if isinstance(c, (PAnd, POr)):
            s = "(" + s + ")"
        parts.append(s)
    return sym.join(parts)


def all_assignments(names: Iterable[str]) -> Iterator[dict[str, bool]]:
    names = sorted(names)
    for bits in itertools.product((False, True), repeat=len(names)):
        yield dict(zip(names, bits))
