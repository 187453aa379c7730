"""Built-in benchmark tasks.

Six numbered tasks over digit and fashion-item classes, plus a small
``example`` task mixing two digit datasets.  Fashion classes are enumerated
in lexicographic label order (bag=0 .. trouser=9); ``fashion_high`` keeps
only the upper five classes with their original values 5..9.
"""

from __future__ import annotations

from dataclasses import replace

from .constraints import SymbolicDomain, VariableSpec, parse_constraint
from .errors import DomainError
from .tasks import TaskSpec

FASHION_LABELS = (
    "bag",
    "boot",
    "coat",
    "dress",
    "pullover",
    "sandal",
    "shirt",
    "sneaker",
    "top",
    "trouser",
)

DIGITS = SymbolicDomain.from_range("digits", 0, 9)
DIGITS_2TO8 = SymbolicDomain.from_range("digits_2to8", 2, 8)
FASHION = SymbolicDomain.from_labels("fashion", FASHION_LABELS)
FASHION_HIGH = SymbolicDomain.from_values(
    "fashion_high", FASHION_LABELS[5:], (5, 6, 7, 8, 9)
)


def _mnist(*names: str) -> list[VariableSpec]:
    return [VariableSpec(n, DIGITS, "mnist") for n in names]


def _fmnist(domain: SymbolicDomain, *names: str) -> list[VariableSpec]:
    return [VariableSpec(n, domain, "fmnist") for n in names]


def _spec(name, domains, variables, constraints, formula) -> TaskSpec:
    return TaskSpec(
        name=name,
        domains=tuple(domains),
        variables=tuple(variables),
        constraints=tuple(parse_constraint(a, text) for a, text in constraints),
        formula=formula,
    )


def _task1() -> TaskSpec:
    return _spec(
        "task1",
        [FASHION, FASHION_HIGH],
        _fmnist(FASHION_HIGH, "V", "W", "X") + _fmnist(FASHION, "Y", "Z"),
        [("p", "Y < Z"), ("q", "all_equal(V, W, X)")],
        "G(p <-> X X q)",
    )


def _task2() -> TaskSpec:
    return replace(
        _task1(), name="task2", formula="G((p & X p & X X p) -> X X X q)"
    )


def _task3() -> TaskSpec:
    return _spec(
        "task3",
        [DIGITS],
        _mnist("X", "Y", "Z"),
        [("p", "all_different(X, Y, Z)"), ("q", "X < Y + Z")],
        "F p & (q U X p)",
    )


def _task4() -> TaskSpec:
    return _spec(
        "task4",
        [DIGITS, FASHION],
        _mnist("X") + _fmnist(FASHION, "Y", "Z"),
        [("p", "all_different(X, Y, Z)"), ("q", "X < Y + Z")],
        "F p & (q U X p)",
    )


def _task5() -> TaskSpec:
    return _spec(
        "task5",
        [DIGITS],
        _mnist("W", "X", "Y", "Z"),
        [("p", "W + X = Y + Z")],
        "G(p <-> WX !p)",
    )


def _task6() -> TaskSpec:
    return _spec(
        "task6",
        [DIGITS],
        _mnist("X", "Y", "Z"),
        [("p", "X + Y = Z"), ("q", "X + Y = 2*Z")],
        "G(p <-> X q)",
    )


def _example() -> TaskSpec:
    return _spec(
        "example",
        [DIGITS, DIGITS_2TO8],
        _mnist("A", "B") + [VariableSpec("C", DIGITS_2TO8, "svhn")],
        [("p", "A + B = C"), ("q", "all_different(A, B, C)")],
        "p & G(p <-> X q)",
    )


_BUILTIN = {
    "task1": _task1,
    "task2": _task2,
    "task3": _task3,
    "task4": _task4,
    "task5": _task5,
    "task6": _task6,
    "example": _example,
}


def builtin_task_names() -> tuple[str, ...]:
    return tuple(_BUILTIN)


def builtin_task(name: str, **overrides) -> TaskSpec:
    """A built-in TaskSpec by name; keyword overrides replace spec fields."""
    factory = _BUILTIN.get(name)
    if factory is None:
        raise DomainError(
            f"unknown task {name!r}; built-ins: {', '.join(_BUILTIN)}"
        )
    spec = factory()
    return replace(spec, **overrides) if overrides else spec
