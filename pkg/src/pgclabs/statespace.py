"""Finite state spaces and vectorised evaluation of expressions over them."""

from __future__ import annotations

from typing import Dict, Iterable, Mapping, Sequence, Tuple

import numpy as np

from pgclabs.ast import (
    And,
    BinOp,
    BoolLit,
    Cmp,
    Label,
    Neg,
    Not,
    Num,
    Or,
    Var,
    VarDecl,
)

DEFAULT_STATE_LIMIT = 10**7


class StateSpaceError(ValueError):
    pass


class EvaluationError(ValueError):
    pass


class StateSpace:
    """All valuations of a list of bounded integer variables.

    States are numbered lexicographically in declaration order, the first
    declared variable being the most significant digit.
    """

    def __init__(self, decls: Sequence[VarDecl], limit: int = DEFAULT_STATE_LIMIT):
        names = [d.name for d in decls]
        if len(set(names)) != len(names):
            raise StateSpaceError("duplicate variable names")
        for d in decls:
            if d.lo > d.hi:
                raise StateSpaceError(f"empty domain for {d.name}: {d.lo}..{d.hi}")
        self.decls: Tuple[VarDecl, ...] = tuple(decls)
        self.names: Tuple[str, ...] = tuple(names)
        self.sizes = tuple(d.size for d in decls)
        count = 1
        for s in self.sizes:
            count *= s
            if count > limit:
                raise StateSpaceError(f"state space exceeds the limit of {limit} states")
        self.count = count
        strides = []
        acc = 1
        for s in reversed(self.sizes):
            strides.append(acc)
            acc *= s
        self.strides = tuple(reversed(strides))
        self._columns: Dict[str, np.ndarray] = {}

    def __len__(self) -> int:
        return self.count

    def __eq__(self, other) -> bool:
        return isinstance(other, StateSpace) and self.decls == other.decls

    def __hash__(self) -> int:
        return hash(self.decls)

    def __repr__(self) -> str:
        return f"StateSpace({', '.join(f'{d.name}:{d.lo}..{d.hi}' for d in self.decls)})"

    def decl(self, name: str) -> VarDecl:
        return self.decls[self.names.index(name)]

    def column(self, name: str) -> np.ndarray:
        """Value of variable ``name`` in every state, as an int64 array."""
        col = self._columns.get(name)
        if col is None:
            k = self.names.index(name)
            d = self.decls[k]
            idx = np.arange(self.count, dtype=np.int64)
            col = (idx // self.strides[k]) % self.sizes[k] + d.lo
            col.setflags(write=False)
            self._columns[name] = col
        return col

    def index(self, valuation: Mapping[str, int]) -> int:
        i = 0
        for d, stride in zip(self.decls, self.strides):
            v = valuation[d.name]
            if not d.lo <= v <= d.hi:
                raise StateSpaceError(f"{d.name}={v} outside {d.lo}..{d.hi}")
            i += (v - d.lo) * stride
        return i

    def valuation(self, i: int) -> Dict[str, int]:
        if not 0 <= i < self.count:
            raise IndexError(i)
        return {
            d.name: (i // stride) % d.size + d.lo
            for d, stride in zip(self.decls, self.strides)
        }

    def label(self, i: int) -> str:
        """Human readable form of state ``i``, e.g. ``x=1,y=0``."""
        return ",".join(f"{k}={v}" for k, v in self.valuation(i).items())

    def states(self) -> Iterable[Dict[str, int]]:
        for i in range(self.count):
            yield self.valuation(i)

    def assign(self, name: str, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Successor index of every state after ``name := values``.

        Values outside the domain wrap around for ``wrap`` variables. For other
        variables the second result marks states whose new value leaves the
        domain; their successor is reported as the state itself.
        """
        k = self.names.index(name)
        d = self.decls[k]
        values = np.asarray(values, dtype=np.int64)
        if d.wrap:
            values = (values - d.lo) % d.size + d.lo
            invalid = np.zeros(self.count, dtype=bool)
        else:
            invalid = (values < d.lo) | (values > d.hi)
            values = np.where(invalid, self.column(name), values)
        succ = np.arange(self.count, dtype=np.int64) + (values - self.column(name)) * self.strides[k]
        return succ, invalid


def enumerate_states(decls: Sequence[VarDecl], limit: int = DEFAULT_STATE_LIMIT) -> StateSpace:
    return StateSpace(decls, limit)


def _trunc_div(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # truncation toward zero; x / 0 is defined as 0
    safe = np.where(b == 0, 1, b)
    q = np.abs(a) // np.abs(safe) * np.sign(a) * np.sign(safe)
    return np.where(b == 0, 0, q)


def eval_arith(expr, space: StateSpace) -> np.ndarray:
    """Evaluate an arithmetic expression in every state."""
    if isinstance(expr, Num):
        return np.full(space.count, expr.value, dtype=np.int64)
    if isinstance(expr, Var):
        if expr.name not in space.names:
            raise EvaluationError(f"undeclared variable {expr.name!r}")
        return space.column(expr.name)
    if isinstance(expr, Neg):
        return -eval_arith(expr.operand, space)
    if isinstance(expr, BinOp):
        a = eval_arith(expr.left, space)
        b = eval_arith(expr.right, space)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        if expr.op == "/":
            return _trunc_div(a, b)
        if expr.op == "%":
            return a - _trunc_div(a, b) * b
    raise EvaluationError(f"not an arithmetic expression: {expr!r}")


_CMP = {
    "=": np.equal,
    "!=": np.not_equal,
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
}


def eval_pred(pred, space: StateSpace, labels: Mapping[str, np.ndarray] = None) -> np.ndarray:
    """Evaluate a predicate in every state, giving a boolean mask."""
    if isinstance(pred, BoolLit):
        return np.full(space.count, pred.value, dtype=bool)
    if isinstance(pred, Cmp):
        return _CMP[pred.op](eval_arith(pred.left, space), eval_arith(pred.right, space))
    if isinstance(pred, Not):
        return ~eval_pred(pred.operand, space, labels)
    if isinstance(pred, And):
        return eval_pred(pred.left, space, labels) & eval_pred(pred.right, space, labels)
    if isinstance(pred, Or):
        return eval_pred(pred.left, space, labels) | eval_pred(pred.right, space, labels)
    if isinstance(pred, Label):
        if labels is None or pred.name not in labels:
            raise EvaluationError(f"unknown label {pred.name!r}")
        return np.asarray(labels[pred.name], dtype=bool)
    raise EvaluationError(f"not a predicate: {pred!r}")
