"""Reference implementations the tests check the library against.

Everything here is written independently of the package internals: direct
finite-trace semantics by recursion over formula structure, and a random
formula generator for property-style checks.
"""

from ltlseq.formulas import (
    FALSE,
    TRUE,
    And,
    Atom,
    Finally,
    Globally,
    Iff,
    Implies,
    Next,
    Not,
    Or,
    Release,
    Until,
    WeakNext,
)

ATOMS = ["p", "q", "r"]


def rand_formula(rng, depth):
    if depth == 0:
        return rng.choice([TRUE, FALSE] + [Atom(a) for a in ATOMS])
    k = rng.randrange(12)
    sub = lambda: rand_formula(rng, depth - 1)
    if k == 0:
        return TRUE
    if k == 1:
        return Atom(rng.choice(ATOMS))
    if k == 2:
        return Not(sub())
    if k == 3:
        return And(sub(), sub())
    if k == 4:
        return Or(sub(), sub())
    if k == 5:
        return Implies(sub(), sub())
    if k == 6:
        return Iff(sub(), sub())
    if k == 7:
        return Next(sub())
    if k == 8:
        return WeakNext(sub())
    if k == 9:
        return Finally(sub())
    if k == 10:
        return Globally(sub())
    return rng.choice([Until, Release])(sub(), sub())


def holds(f, trace, i):
    """Direct finite-trace semantics: does ``trace[i:]`` satisfy ``f``?"""
    t = type(f)
    if f == TRUE:
        return True
    if f == FALSE:
        return False
    if t is Atom:
        return trace[i][f.name]
    if t is Not:
        return not holds(f.child, trace, i)
    if t is And:
        return holds(f.left, trace, i) and holds(f.right, trace, i)
    if t is Or:
        return holds(f.left, trace, i) or holds(f.right, trace, i)
    if t is Implies:
        return (not holds(f.left, trace, i)) or holds(f.right, trace, i)
    if t is Iff:
        return holds(f.left, trace, i) == holds(f.right, trace, i)
    if t is Next:
        return i + 1 < len(trace) and holds(f.child, trace, i + 1)
    if t is WeakNext:
        return i + 1 >= len(trace) or holds(f.child, trace, i + 1)
    if t is Finally:
        return any(holds(f.child, trace, j) for j in range(i, len(trace)))
    if t is Globally:
        return all(holds(f.child, trace, j) for j in range(i, len(trace)))
    if t is Until:
        return any(
            holds(f.right, trace, j)
            and all(holds(f.left, trace, k) for k in range(i, j))
            for j in range(i, len(trace))
        )
    if t is Release:
        return all(
            holds(f.right, trace, j)
            or any(holds(f.left, trace, k) for k in range(i, j))
            for j in range(i, len(trace))
        )
    raise AssertionError(f"unhandled formula {f!r}")


def rand_trace(rng, n, atoms=ATOMS):
    return [{a: rng.random() < 0.5 for a in atoms} for _ in range(n)]
