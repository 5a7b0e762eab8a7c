"""Weakest pre-expectation semantics of pGCL over enumerated state spaces.

Everything is computed with :class:`fractions.Fraction`, so results are exact
and comparisons between expectations never need a tolerance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Tuple

import numpy as np

from pgclabs.ast import (
    Abort,
    Assign,
    DemonicChoice,
    If,
    Loop,
    ProbChoice,
    Seq,
    Skip,
)
from pgclabs.expectation import ONE, ZERO, Expectation, eval_expectation
from pgclabs.statespace import EvaluationError, StateSpace, eval_arith, eval_pred
from pgclabs.syntax import parse_expectation, parse_predicate, parse_program

DEFAULT_FUEL = 10**5


class FuelExhausted(RuntimeWarning):
    """A loop fixed point was not reached; the result is a lower bound."""


def _as_program(prog):
    return parse_program(prog) if isinstance(prog, str) else prog


def _as_pred(pred):
    return parse_predicate(pred) if isinstance(pred, str) else pred


def as_expectation(e, space: StateSpace) -> Expectation:
    """Coerce an expectation, expression AST or source string to an :class:`Expectation`."""
    if isinstance(e, Expectation):
        return e
    if isinstance(e, str):
        e = parse_expectation(e)
    return eval_expectation(e, space)


def _merge(mask: Optional[np.ndarray], other: Optional[np.ndarray]) -> Optional[np.ndarray]:
    if mask is None:
        return other
    if other is None:
        return mask
    return mask | other


def _clean(mask: Optional[np.ndarray]) -> Optional[np.ndarray]:
    return mask if mask is not None and mask.any() else None


class _Transformer:
    """Structural recursion over the program.

    Each step returns the transformed values together with a mask of states
    from which execution may perform an out-of-domain assignment (``None``
    when there are none).
    """

    def __init__(self, space: StateSpace, fuel: int):
        self.space = space
        self.fuel = fuel
        self.approximate = False

    def run(self, prog, vals: np.ndarray, undef: Optional[np.ndarray]) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        space = self.space
        if isinstance(prog, Skip):
            return vals, undef
        if isinstance(prog, Abort):
            return _zeros(space.count), None
        if isinstance(prog, Assign):
            if prog.var not in space.names:
                raise EvaluationError(f"assignment to undeclared variable {prog.var!r}")
            succ, invalid = space.assign(prog.var, eval_arith(prog.expr, space))
            out = vals[succ]
            bad = _clean(_merge(invalid, None if undef is None else undef[succ]))
            if bad is not None:
                out = np.where(bad, ZERO, out)
            return out, bad
        if isinstance(prog, Seq):
            v, u = self.run(prog.second, vals, undef)
            return self.run(prog.first, v, u)
        if isinstance(prog, ProbChoice):
            p = prog.prob
            if p == 1:
                return self.run(prog.left, vals, undef)
            if p == 0:
                return self.run(prog.right, vals, undef)
            a, ua = self.run(prog.left, vals, undef)
            b, ub = self.run(prog.right, vals, undef)
            return p * a + (1 - p) * b, _merge(ua, ub)
        if isinstance(prog, DemonicChoice):
            a, ua = self.run(prog.left, vals, undef)
            b, ub = self.run(prog.right, vals, undef)
            return np.minimum(a, b), _merge(ua, ub)
        if isinstance(prog, If):
            g = eval_pred(prog.guard, space)
            a, ua = self.run(prog.then, vals, undef)
            b, ub = self.run(prog.orelse, vals, undef)
            return np.where(g, a, b), _select(g, ua, ub)
        if isinstance(prog, Loop):
            return self.loop(prog, vals, undef)
        raise TypeError(f"not a program: {prog!r}")

    def loop(self, prog: Loop, vals, undef):
        g = eval_pred(prog.guard, self.space)
        x = _zeros(self.space.count)
        ux = None
        for _ in range(self.fuel):
            bv, bu = self.run(prog.body, x, ux)
            nx = np.where(g, bv, vals)
            nu = _select(g, bu, undef)
            if nu is not None:
                nx = np.where(nu, ZERO, nx)
            if np.array_equal(nx, x) and _same_mask(nu, ux):
                return nx, nu
            x, ux = nx, nu
        self.approximate = True
        warnings.warn(
            f"loop fixed point not reached within {self.fuel} iterations; "
            "returning a lower bound",
            FuelExhausted,
            stacklevel=4,
        )
        return x, ux


def _zeros(n: int) -> np.ndarray:
    arr = np.empty(n, dtype=object)
    arr[:] = ZERO
    return arr


def _select(g, a, b):
    if a is None and b is None:
        return None
    n = len(g)
    a = np.zeros(n, dtype=bool) if a is None else a
    b = np.zeros(n, dtype=bool) if b is None else b
    return _clean(np.where(g, a, b))


def _same_mask(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return bool(np.array_equal(a, b))


def wp(prog, post, space: StateSpace, fuel: int = DEFAULT_FUEL) -> Expectation:
    """Weakest pre-expectation of ``post`` through ``prog``.

    Loops are evaluated as least fixed points by iteration from the zero
    expectation, stopping when two successive iterates coincide. If ``fuel``
    iterations pass first, a :class:`FuelExhausted` warning is issued and the
    (sound, lower-bound) iterate is returned with ``approximate=True``.

    Raises :class:`EvaluationError` if some state can reach an assignment
    whose value leaves a non-wrapping domain.
    """
    prog = _as_program(prog)
    post = as_expectation(post, space)
    t = _Transformer(space, fuel)
    vals, undef = t.run(prog, post.values, None)
    if undef is not None:
        s = int(np.flatnonzero(undef)[0])
        raise EvaluationError(f"out-of-domain assignment reachable from state {space.label(s)}")
    return Expectation(space, vals, post.approximate or t.approximate)


def wp_bounded_loop(guard, body, post, k: int, space: StateSpace) -> Expectation:
    """Probability-weighted ``post`` on exit from ``do guard -> body od``
    within at most ``k`` iterations.

    Computes ``X_0 = [not guard] * post`` and
    ``X_{i+1} = [not guard] * post + [guard] * wp(body, X_i)``; the result is
    ``X_k``. With ``post = 1`` this is the probability that the loop
    terminates after no more than ``k`` iterations.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    g = eval_pred(_as_pred(guard), space)
    body = _as_program(body)
    post = as_expectation(post, space)
    t = _Transformer(space, DEFAULT_FUEL)
    x = np.where(g, ZERO, post.values)
    ux = None
    for _ in range(k):
        bv, bu = t.run(body, x, ux)
        x = np.where(g, bv, post.values)
        ux = _select(g, bu, None)
        if ux is not None:
            x = np.where(ux, ZERO, x)
    if ux is not None:
        s = int(np.flatnonzero(ux)[0])
        raise EvaluationError(f"out-of-domain assignment reachable from state {space.label(s)}")
    return Expectation(space, x, post.approximate or t.approximate)


@dataclass
class Verdict:
    """Outcome of :func:`check_refinement_refute`.

    ``refuted`` False only means no witness was found, not that refinement holds.
    """

    refuted: bool
    witness: Optional[Expectation] = None
    state: Optional[int] = None
    lhs: Optional[Fraction] = None
    rhs: Optional[Fraction] = None
    witnesses_tried: int = 0


def check_refinement_refute(p, q, space: StateSpace, witnesses: Iterable = ()) -> Verdict:
    """Search for an expectation ``E`` with ``wp(p, E) <= wp(q, E)`` failing somewhere.

    The candidates are the constant 1, the point indicator of every state, and
    any user supplied ``witnesses`` (expectations, ASTs or source strings).
    """
    p = _as_program(p)
    q = _as_program(q)
    candidates = [Expectation.constant(space, ONE)]
    for s in range(space.count):
        mask = np.zeros(space.count, dtype=bool)
        mask[s] = True
        candidates.append(Expectation.indicator(space, mask))
    candidates.extend(as_expectation(w, space) for w in witnesses)
    for n, e in enumerate(candidates, start=1):
        a = wp(p, e, space)
        b = wp(q, e, space)
        for s, (x, y) in enumerate(zip(a.values, b.values)):
            if x > y:
                return Verdict(True, e, s, x, y, n)
    return Verdict(False, witnesses_tried=len(candidates))
