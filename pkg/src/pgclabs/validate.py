"""Static checks on parsed models."""

from __future__ import annotations

from typing import List

import numpy as np

from pgclabs.ast import (
    Abort,
    Assign,
    BinOp,
    DemonicChoice,
    If,
    Label,
    Loop,
    Model,
    ProbChoice,
    Seq,
    Skip,
    Var,
    children,
)
from pgclabs.statespace import StateSpace, StateSpaceError, eval_arith, eval_pred
from pgclabs.syntax import Diagnostic

# the domain check enumerates states; skip it above this size
VALIDATION_STATE_LIMIT = 10**6


def _at(node, severity: str, message: str) -> Diagnostic:
    line, col = node.loc if getattr(node, "loc", None) else (0, 0)
    return Diagnostic(line, col, severity, message)


def validate_model(model: Model) -> List[Diagnostic]:
    """Return every problem found in ``model``; an empty list means it is valid.

    Errors: undeclared or duplicate variables, empty domains, probabilities
    outside [0, 1], labels used inside the model, and assignments that can
    leave a non-wrapping domain from some state. Warnings: possible division
    by zero (which evaluates to 0).
    """
    diags: List[Diagnostic] = []
    names = set()
    for d in model.decls:
        if d.name in names:
            diags.append(_at(d, "error", f"duplicate declaration of {d.name!r}"))
        names.add(d.name)
        if d.lo > d.hi:
            diags.append(_at(d, "error", f"empty domain {d.lo}..{d.hi} for {d.name!r}"))

    roots = [model.program] + ([model.init] if model.init is not None else [])
    for root in roots:
        _walk(root, names, diags)
    if diags:
        return diags

    try:
        space = StateSpace(model.decls, limit=VALIDATION_STATE_LIMIT)
    except StateSpaceError:
        return diags
    checker = _DomainCheck(space)
    checker.post(model.program, np.ones(space.count, dtype=bool))
    return diags + checker.diags


def _walk(node, names: set, diags: List[Diagnostic]) -> None:
    if isinstance(node, Var) and node.name not in names:
        diags.append(_at(node, "error", f"undeclared variable {node.name!r}"))
    elif isinstance(node, Assign) and node.var not in names:
        diags.append(_at(node, "error", f"assignment to undeclared variable {node.var!r}"))
    elif isinstance(node, ProbChoice) and not 0 <= node.prob <= 1:
        diags.append(_at(node, "error", f"probability {node.prob} outside [0, 1]"))
    elif isinstance(node, Label):
        diags.append(_at(node, "error", f"label {node.name!r} is only allowed in queries"))
    for c in children(node):
        _walk(c, names, diags)


def _division_by_zero(expr, space: StateSpace) -> np.ndarray:
    mask = np.zeros(space.count, dtype=bool)
    if isinstance(expr, BinOp):
        if expr.op in ("/", "%"):
            mask |= eval_arith(expr.right, space) == 0
        mask |= _division_by_zero(expr.left, space)
        mask |= _division_by_zero(expr.right, space)
    else:
        for c in children(expr):
            mask |= _division_by_zero(c, space)
    return mask


class _DomainCheck:
    """Forward reachability from every state, flagging bad assignments."""

    def __init__(self, space: StateSpace):
        self.space = space
        self.diags: List[Diagnostic] = []
        self._reported = set()

    def report(self, node, severity, message):
        key = (id(node), severity)
        if key not in self._reported:
            self._reported.add(key)
            self.diags.append(_at(node, severity, message))

    def post(self, prog, reach: np.ndarray) -> np.ndarray:
        space = self.space
        if not reach.any():
            return reach
        if isinstance(prog, Skip):
            return reach
        if isinstance(prog, Abort):
            return np.zeros(space.count, dtype=bool)
        if isinstance(prog, Assign):
            zero_div = _division_by_zero(prog.expr, space) & reach
            if zero_div.any():
                s = space.label(int(np.flatnonzero(zero_div)[0]))
                self.report(prog, "warning", f"possible division by zero (e.g. from {s})")
            succ, invalid = space.assign(prog.var, eval_arith(prog.expr, space))
            bad = invalid & reach
            if bad.any():
                s = int(np.flatnonzero(bad)[0])
                d = space.decl(prog.var)
                value = int(eval_arith(prog.expr, space)[s])
                self.report(
                    prog,
                    "error",
                    f"{prog.var} := {value} leaves {d.lo}..{d.hi} (from {space.label(s)});"
                    " declare the variable 'wrap' or guard the assignment",
                )
            out = np.zeros(space.count, dtype=bool)
            out[succ[reach & ~invalid]] = True
            return out
        if isinstance(prog, Seq):
            return self.post(prog.second, self.post(prog.first, reach))
        if isinstance(prog, ProbChoice):
            if prog.prob == 0:
                return self.post(prog.right, reach)
            if prog.prob == 1:
                return self.post(prog.left, reach)
            return self.post(prog.left, reach) | self.post(prog.right, reach)
        if isinstance(prog, DemonicChoice):
            return self.post(prog.left, reach) | self.post(prog.right, reach)
        if isinstance(prog, If):
            g = eval_pred(prog.guard, space)
            return self.post(prog.then, reach & g) | self.post(prog.orelse, reach & ~g)
        if isinstance(prog, Loop):
            g = eval_pred(prog.guard, space)
            seen = reach.copy()
            while True:
                new = seen | self.post(prog.body, seen & g)
                if np.array_equal(new, seen):
                    return seen & ~g
                seen = new
        raise TypeError(f"not a program: {prog!r}")
