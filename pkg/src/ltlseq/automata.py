"""Deterministic finite automata over bitmask letters, built by progression.

A letter is an integer whose bit ``i`` gives the truth value of ``atoms[i]``.
Automata are always complete; state 0 is initial.  ``ltlf_to_dfa`` yields the
minimized automaton of a formula with a deterministic BFS numbering, so equal
inputs produce identical automata.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from . import formulas as fm
from .errors import DomainError, ResourceLimitError
from .props import PropFormula, PFALSE, PTRUE, PVar, pand, pnot, por

MAX_DFA_STATES = 10_000
_MAX_ATOMS = 16


@dataclass(frozen=True)
class Dfa:
    """Complete DFA; ``transitions[s][letter]`` is the successor state."""

    atoms: tuple[str, ...]
    n_states: int
    accepting: frozenset[int]
    transitions: tuple[tuple[int, ...], ...]

    initial: int = 0

    @property
    def n_letters(self) -> int:
        return 1 << len(self.atoms)

    def step(self, state: int, letter: int) -> int:
        if not 0 <= letter < self.n_letters:
            raise DomainError(f"letter {letter} out of range for {len(self.atoms)} atoms")
        return self.transitions[state][letter]

    def run(self, trace: Sequence[int]) -> list[int]:
        """States after each letter of ``trace`` (same length as the trace)."""
        if len(trace) == 0:
            raise DomainError("trace must be non-empty")
        out = []
        state = self.initial
        for letter in trace:
            state = self.step(state, letter)
            out.append(state)
        return out

    def accepts(self, trace: Sequence[int]) -> bool:
        return self.run(trace)[-1] in self.accepting

    def to_json_dict(self) -> dict:
        return {
            "atoms": list(self.atoms),
            "states": self.n_states,
            "initial": self.initial,
            "accepting": sorted(self.accepting),
            "transitions": [
                {"from": s, "letter": letter, "to": self.transitions[s][letter]}
                for s in range(self.n_states)
                for letter in range(self.n_letters)
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Dfa":
        atoms = tuple(data["atoms"])
        n = int(data["states"])
        rows = [[-1] * (1 << len(atoms)) for _ in range(n)]
        for t in data["transitions"]:
            rows[t["from"]][t["letter"]] = t["to"]
        if any(dst < 0 for row in rows for dst in row):
            raise DomainError("transition table is not complete")
        return cls(
            atoms=atoms,
            n_states=n,
            accepting=frozenset(int(s) for s in data["accepting"]),
            transitions=tuple(tuple(row) for row in rows),
            initial=int(data.get("initial", 0)),
        )


def letter_of(assignment: dict[str, bool], atoms: Sequence[str]) -> int:
    mask = 0
    for i, a in enumerate(atoms):
        if assignment[a]:
            mask |= 1 << i
    return mask


def assignment_of(letter: int, atoms: Sequence[str]) -> dict[str, bool]:
    return {a: bool(letter >> i & 1) for i, a in enumerate(atoms)}


def ltlf_to_dfa(
    f: fm.Formula,
    atoms: Sequence[str] | None = None,
    max_states: int = MAX_DFA_STATES,
) -> Dfa:
    """Complete, minimized DFA accepting exactly the traces satisfying ``f``.

    ``atoms`` fixes the alphabet (it must cover every atom of ``f``); by
    default the formula's own atoms in sorted order.
    """
    f_atoms = f.atoms()
    if atoms is None:
        atoms = sorted(f_atoms)
    atoms = tuple(atoms)
    missing = f_atoms - set(atoms)
    if missing:
        raise DomainError(f"alphabet is missing atoms: {sorted(missing)}")
    if len(atoms) > _MAX_ATOMS:
        raise ResourceLimitError(f"too many atoms ({len(atoms)} > {_MAX_ATOMS})")

    initial = fm.state_form(fm.to_nnf(f))
    letters = [assignment_of(letter, atoms) for letter in range(1 << len(atoms))]

    index: dict[fm.Formula, int] = {initial: 0}
    order: list[fm.Formula] = [initial]
    rows: list[list[int]] = []
    memo: dict[tuple[fm.Formula, int], fm.Formula] = {}

    pos = 0
    while pos < len(order):
        state_formula = order[pos]
        row = []
        for letter, assignment in enumerate(letters):
            key = (state_formula, letter)
            nxt = memo.get(key)
            if nxt is None:
                nxt = fm.state_form(fm.progress(state_formula, assignment))
                memo[key] = nxt
            dst = index.get(nxt)
            if dst is None:
                dst = len(order)
                if dst >= max_states:
                    raise ResourceLimitError(
                        f"state cap {max_states} exceeded while translating {f}"
                    )
                index[nxt] = dst
                order.append(nxt)
            row.append(dst)
        rows.append(row)
        pos += 1

    dfa = Dfa(
        atoms=atoms,
        n_states=len(order),
        accepting=frozenset(i for i, g in enumerate(order) if fm.eval_empty(g)),
        transitions=tuple(tuple(row) for row in rows),
    )
    return minimize(dfa)


def _reachable(d: Dfa) -> list[int]:
    seen = {d.initial}
    bfs = deque([d.initial])
    out = []
    while bfs:
        s = bfs.popleft()
        out.append(s)
        for letter in range(d.n_letters):
            t = d.transitions[s][letter]
            if t not in seen:
                seen.add(t)
                bfs.append(t)
    return out


def minimize(d: Dfa) -> Dfa:
    """Hopcroft minimization plus deterministic BFS renumbering.

    Unreachable states are dropped first.  The result's states are numbered
    by BFS from the initial state, exploring letters in ascending order, so
    minimization is a pure function of the automaton.
    """
    reach = _reachable(d)
    reach_set = set(reach)
    n_letters = d.n_letters

    preimage: dict[int, list[set[int]]] = {s: [set() for _ in range(n_letters)] for s in reach}
    for s in reach:
        for letter in range(n_letters):
            t = d.transitions[s][letter]
            preimage[t][letter].add(s)

    final = frozenset(s for s in reach if s in d.accepting)
    nonfinal = frozenset(reach_set - final)
    partition: set[frozenset[int]] = {b for b in (final, nonfinal) if b}
    # worklist starts from the smaller half — keeps refinement O(n log n)
    worklist: set[frozenset[int]] = set()
    if final and nonfinal:
        worklist.add(final if len(final) <= len(nonfinal) else nonfinal)
    elif partition:
        worklist.add(next(iter(partition)))

    while worklist:
        splitter = worklist.pop()
        for letter in range(n_letters):
            x = set()
            for t in splitter:
                x |= preimage[t][letter]
            if not x:
                continue
            for block in list(partition):
                inside = block & x
                outside = block - x
                if not inside or not outside:
                    continue
                partition.discard(block)
                b_in, b_out = frozenset(inside), frozenset(outside)
                partition.add(b_in)
                partition.add(b_out)
                if block in worklist:
                    worklist.discard(block)
                    worklist.add(b_in)
                    worklist.add(b_out)
                else:
                    worklist.add(b_in if len(b_in) <= len(b_out) else b_out)
    block_of = {}
    for block in partition:
        for s in block:
            block_of[s] = block

    # deterministic renumbering: BFS over blocks, letters ascending
    start = block_of[d.initial]
    number = {start: 0}
    bfs = deque([start])
    ordered = [start]
    while bfs:
        block = bfs.popleft()
        rep = min(block)
        for letter in range(n_letters):
            succ = block_of[d.transitions[rep][letter]]
            if succ not in number:
                number[succ] = len(ordered)
                ordered.append(succ)
                bfs.append(succ)

    rows = []
    for block in ordered:
        rep = min(block)
        rows.append(
            tuple(number[block_of[d.transitions[rep][letter]]] for letter in range(n_letters))
        )
    accepting = frozenset(i for i, block in enumerate(ordered) if min(block) in d.accepting)
    return Dfa(
        atoms=d.atoms,
        n_states=len(ordered),
        accepting=accepting,
        transitions=tuple(rows),
    )


@dataclass(frozen=True)
class Guard:
    """Propositional condition under which ``source`` steps to ``target``."""

    source: int
    target: int
    letters: tuple[int, ...]
    formula: PropFormula


def _minterm(letter: int, atoms: Sequence[str]) -> PropFormula:
    lits = []
    for i, a in enumerate(atoms):
        v = PVar(a)
        lits.append(v if letter >> i & 1 else pnot(v))
    return pand(lits)


def transition_guard(d: Dfa, source: int, target: int) -> Guard:
    """Guard formula: DNF over the letters driving ``source`` to ``target``."""
    letters = tuple(
        letter for letter in range(d.n_letters) if d.transitions[source][letter] == target
    )
    if len(letters) == d.n_letters:
        formula: PropFormula = PTRUE
    elif not letters:
        formula = PFALSE
    else:
        formula = por(_minterm(letter, d.atoms) for letter in letters)
    return Guard(source=source, target=target, letters=letters, formula=formula)


def guard_table(d: Dfa) -> list[Guard]:
    """All non-empty guards, ordered by (source, target)."""
    out = []
    for s in range(d.n_states):
        targets = sorted(set(d.transitions[s]))
        for t in targets:
            out.append(transition_guard(d, s, t))
    return out
