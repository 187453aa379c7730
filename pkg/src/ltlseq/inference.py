"""Probabilistic temporal inference over a task DFA.

A belief state is a distribution over DFA states, advanced one step per time
step from the per-atom constraint beliefs.  Three step semantics exist:

* ``exact_step``: enumerate letters — the true stochastic-matrix update;
* ``sddnnf_step``: algebraic model counting on compiled next-state circuits
  with the multi-hot state encoding (coincides with exact for one-hot
  beliefs);
* ``fuzzy_step``: structural semiring evaluation of the simplified
  next-state formulas.

Raw step outputs keep whatever mass the semantics produced; Engine wrappers
renormalize each step and record the pre-normalization mass as a diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .automata import Dfa
from .circuits import (
    LOGPROB,
    PROB,
    Circuit,
    Semiring,
    WeightMap,
    amc,
    compile_sddnnf,
    fuzzy_eval,
    next_state_formulas,
    smooth,
    state_var,
)
from .errors import DegenerateBeliefError, DomainError
from .props import PropFormula, simplify

_CLAMP = 1e-7

ENGINE_NAMES = ("exact", "fuzzy-p", "fuzzy-lp", "sddnnf-p", "sddnnf-lp")


# ---------------------------------------------------------------------------
# Temperature scaling


def apply_temperature(prob, temp: float):
    """Logit-space temperature rescaling; preserves the argmax.

    Scalars go through σ(σ⁻¹(p)/temp); vectors through softmax(log(b)/temp).
    Inputs are clamped away from {0, 1} by 1e-7 first.
    """
    if temp <= 0:
        raise DomainError(f"temperature must be positive, got {temp}")
    if np.ndim(prob) == 0:
        p = min(max(float(prob), _CLAMP), 1.0 - _CLAMP)
        z = math.log(p / (1.0 - p)) / temp
        if z >= 0:
            return 1.0 / (1.0 + math.exp(-z))
        e = math.exp(z)
        return e / (1.0 + e)
    b = np.clip(np.asarray(prob, dtype=float), _CLAMP, 1.0 - _CLAMP)
    logits = np.log(b) / temp
    logits -= logits.max()
    out = np.exp(logits)
    return out / out.sum()


def _nll(pairs: Sequence[tuple[float, int]], temp: float) -> float:
    total = 0.0
    for prob, truth in pairs:
        p = apply_temperature(prob, temp)
        p = min(max(p, _CLAMP), 1.0 - _CLAMP)
        total -= math.log(p) if truth else math.log(1.0 - p)
    return total


def calibrate_temperature(
    pairs: Sequence[tuple[float, int]],
    tol: float = 1e-4,
) -> tuple[float, bool]:
    """Fit a scalar temperature by golden-section search on log-temp.

    Returns (temperature, degenerate).  A flat objective — e.g. every
    prediction exactly 0.5 — cannot be calibrated; then (1.0, True) comes
    back.  The calibrated predictions provably keep their argmax; this is
    asserted on the inputs.
    """
    if not pairs:
        raise DomainError("calibration needs at least one (probability, truth) pair")
    for _, truth in pairs:
        if truth not in (0, 1):
            raise DomainError(f"truth labels must be 0/1, got {truth!r}")

    lo, hi = -5.0, 5.0
    probe = [_nll(pairs, math.exp(x)) for x in np.linspace(lo, hi, 9)]
    if max(probe) - min(probe) < 1e-12:
        return 1.0, True

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = _nll(pairs, math.exp(c)), _nll(pairs, math.exp(d))
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = _nll(pairs, math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = _nll(pairs, math.exp(d))
    temp = math.exp((a + b) / 2.0)
    for prob, _ in pairs:
        assert (apply_temperature(prob, temp) >= 0.5) == (prob >= 0.5)
    return temp, False


# ---------------------------------------------------------------------------
# Step semantics


def letter_probabilities(cb: np.ndarray, n_atoms: int) -> np.ndarray:
    """P(letter) for every bitmask, treating atoms as independent."""
    cb = np.asarray(cb, dtype=float)
    if cb.shape != (n_atoms,):
        raise DomainError(f"expected {n_atoms} constraint beliefs, got shape {cb.shape}")
    if np.any(cb < 0) or np.any(cb > 1):
        raise DomainError("constraint beliefs must lie in [0, 1]")
    out = np.ones(1)
    for i in range(n_atoms):
        # doubling the array adds atom i at bit position i
        out = np.concatenate([out * (1.0 - cb[i]), out * cb[i]])
    return out


def exact_step(dfa: Dfa, b: np.ndarray, cb: np.ndarray) -> np.ndarray:
    """One stochastic-matrix update: b'(s') = Σ_s b(s)·P(letters s→s')."""
    lp = letter_probabilities(cb, len(dfa.atoms))
    out = np.zeros(dfa.n_states)
    for s in range(dfa.n_states):
        if b[s] == 0.0:
            continue
        row = dfa.transitions[s]
        for letter, p in enumerate(lp):
            out[row[letter]] += b[s] * p
    return out


def _weights(dfa: Dfa, b: np.ndarray, cb: np.ndarray, s: Semiring) -> WeightMap:
    w: dict[tuple[str, bool], float] = {}
    for i in range(dfa.n_states):
        p = float(b[i])
        w[(state_var(i), True)] = s.from_prob(p)
        w[(state_var(i), False)] = s.from_prob(1.0 - p)
    for i, atom in enumerate(dfa.atoms):
        p = float(cb[i])
        w[(atom, True)] = s.from_prob(p)
        w[(atom, False)] = s.from_prob(1.0 - p)
    return w


def sddnnf_step(
    circuits: Sequence[Circuit],
    dfa: Dfa,
    b: np.ndarray,
    cb: np.ndarray,
    s: Semiring = PROB,
) -> np.ndarray:
    """Raw AMC value of each next-state circuit (semiring carrier space)."""
    w = _weights(dfa, b, cb, s)
    return np.array([amc(c, w, s) for c in circuits])


def fuzzy_step(
    formulas: Sequence[PropFormula],
    dfa: Dfa,
    b: np.ndarray,
    cb: np.ndarray,
    s: Semiring = PROB,
) -> np.ndarray:
    """Raw structural evaluation of each next-state formula."""
    w = _weights(dfa, b, cb, s)
    return np.array([fuzzy_eval(f, w, s) for f in formulas])


# ---------------------------------------------------------------------------
# Engines


class ExactEngine:
    name = "exact"

    def __init__(self, dfa: Dfa):
        self.dfa = dfa

    def step(self, b: np.ndarray, cb: np.ndarray) -> tuple[np.ndarray, float]:
        out = exact_step(self.dfa, b, cb)
        return out, float(out.sum())


class _AlgebraicEngine:
    """Shared renormalization logic for the fuzzy and circuit engines."""

    semiring: Semiring

    def _raw(self, b: np.ndarray, cb: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def step(self, b: np.ndarray, cb: np.ndarray) -> tuple[np.ndarray, float]:
        raw = self._raw(b, cb)
        if self.semiring is LOGPROB:
            top = float(raw.max())
            if top == float("-inf"):
                raise DegenerateBeliefError(f"{self.name}: all next-state scores are zero")
            mass = float(np.exp(raw - top).sum() * math.exp(top)) if top < 700 else math.inf
            belief = np.exp(raw - top)
            return belief / belief.sum(), mass
        mass = float(raw.sum())
        if mass == 0.0:
            raise DegenerateBeliefError(f"{self.name}: all next-state scores are zero")
        return raw / mass, mass


class FuzzyEngine(_AlgebraicEngine):
    def __init__(self, dfa: Dfa, semiring: Semiring = PROB):
        self.dfa = dfa
        self.semiring = semiring
        self.formulas = [simplify(f) for f in next_state_formulas(dfa)]
        self.name = "fuzzy-lp" if semiring is LOGPROB else "fuzzy-p"

    def _raw(self, b: np.ndarray, cb: np.ndarray) -> np.ndarray:
        return fuzzy_step(self.formulas, self.dfa, b, cb, self.semiring)


class SddnnfEngine(_AlgebraicEngine):
    def __init__(self, dfa: Dfa, semiring: Semiring = PROB):
        self.dfa = dfa
        self.semiring = semiring
        self.circuits = [smooth(compile_sddnnf(f)) for f in next_state_formulas(dfa)]
        self.name = "sddnnf-lp" if semiring is LOGPROB else "sddnnf-p"

    def _raw(self, b: np.ndarray, cb: np.ndarray) -> np.ndarray:
        return sddnnf_step(self.circuits, self.dfa, b, cb, self.semiring)


def make_engine(name: str, dfa: Dfa):
    """Engine registry: exact, fuzzy-p, fuzzy-lp, sddnnf-p, sddnnf-lp."""
    if name == "exact":
        return ExactEngine(dfa)
    if name == "fuzzy-p":
        return FuzzyEngine(dfa, PROB)
    if name == "fuzzy-lp":
        return FuzzyEngine(dfa, LOGPROB)
    if name == "sddnnf-p":
        return SddnnfEngine(dfa, PROB)
    if name == "sddnnf-lp":
        return SddnnfEngine(dfa, LOGPROB)
    raise DomainError(f"unknown engine {name!r}; valid: {', '.join(ENGINE_NAMES)}")


@dataclass
class RunResult:
    """Belief after each step, final acceptance mass, per-step raw masses."""

    beliefs: np.ndarray
    acceptance: float
    masses: list[float]


def run_sequence(engine, cb_trace: Sequence[np.ndarray]) -> RunResult:
    """Iterate an engine from the one-hot initial belief over a cb trace."""
    if len(cb_trace) == 0:
        raise DomainError("constraint-belief trace must be non-empty")
    dfa = engine.dfa
    b = np.zeros(dfa.n_states)
    b[dfa.initial] = 1.0
    beliefs, masses = [], []
    for cb in cb_trace:
        b, mass = engine.step(b, np.asarray(cb, dtype=float))
        beliefs.append(b)
        masses.append(mass)
    final = beliefs[-1]
    acceptance = float(sum(final[s] for s in dfa.accepting))
    return RunResult(beliefs=np.array(beliefs), acceptance=acceptance, masses=masses)
