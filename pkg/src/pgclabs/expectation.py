"""Expectations: total maps from states to non-negative exact rationals."""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

from pgclabs.ast import EBin, EConst, Indicator
from pgclabs.statespace import EvaluationError, StateSpace, eval_pred

ZERO = Fraction(0)
ONE = Fraction(1)

Scalar = Union[int, Fraction]


def _fractions(values: Iterable) -> np.ndarray:
    arr = np.empty(len(values), dtype=object)
    for i, v in enumerate(values):
        arr[i] = v if isinstance(v, Fraction) else Fraction(v)
    return arr


class Expectation:
    """A dense vector of rationals indexed by the states of ``space``.

    Arithmetic is pointwise and exact. ``e - f`` truncates at zero, so the
    result is again an expectation. The order ``e <= f`` is the pointwise
    order and yields a single ``bool``.

    ``approximate`` marks results of loop iterations that ran out of fuel;
    such values are lower bounds of the exact answer.
    """

    __slots__ = ("space", "values", "approximate")
    __hash__ = None

    def __init__(self, space: StateSpace, values, approximate: bool = False):
        if isinstance(values, np.ndarray) and values.dtype == object:
            arr = values
        else:
            arr = _fractions(list(values))
        if len(arr) != space.count:
            raise ValueError(f"expected {space.count} values, got {len(arr)}")
        self.space = space
        self.values = arr
        self.approximate = approximate

    # -- constructors ---------------------------------------------------------

    @classmethod
    def constant(cls, space: StateSpace, c: Scalar) -> "Expectation":
        arr = np.empty(space.count, dtype=object)
        arr[:] = Fraction(c)
        return cls(space, arr)

    @classmethod
    def zeros(cls, space: StateSpace) -> "Expectation":
        return cls.constant(space, 0)

    @classmethod
    def indicator(cls, space: StateSpace, mask) -> "Expectation":
        return cls(space, np.where(np.asarray(mask, dtype=bool), ONE, ZERO).astype(object))

    # -- container protocol ---------------------------------------------------

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> Fraction:
        return self.values[i]

    def __iter__(self):
        return iter(self.values)

    def tolist(self) -> list:
        return list(self.values)

    def __repr__(self) -> str:
        body = ", ".join(str(v) for v in self.values)
        tag = ", approximate" if self.approximate else ""
        return f"Expectation([{body}]{tag})"

    # -- arithmetic -----------------------------------------------------------

    def _wrap(self, arr, other=None) -> "Expectation":
        approx = self.approximate or (isinstance(other, Expectation) and other.approximate)
        return Expectation(self.space, arr, approx)

    def _operand(self, other):
        if isinstance(other, Expectation):
            if other.space != self.space:
                raise ValueError("expectations over different state spaces")
            return other.values
        return Fraction(other)

    def __add__(self, other) -> "Expectation":
        return self._wrap(self.values + self._operand(other), other)

    __radd__ = __add__

    def __sub__(self, other) -> "Expectation":
        diff = self.values - self._operand(other)
        return self._wrap(np.maximum(diff, ZERO), other)

    def __rsub__(self, other) -> "Expectation":
        diff = self._operand(other) - self.values
        return self._wrap(np.maximum(diff, ZERO), other)

    def __mul__(self, other) -> "Expectation":
        o = self._operand(other)
        if not isinstance(other, Expectation) and o < 0:
            raise ValueError("expectations may only be scaled by non-negative factors")
        return self._wrap(self.values * o, other)

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> "Expectation":
        d = Fraction(other)
        if d <= 0:
            raise ValueError("division by a non-positive constant")
        return self._wrap(self.values / d)

    def max(self, other) -> "Expectation":
        """Pointwise maximum."""
        return self._wrap(np.maximum(self.values, self._operand(other)), other)

    def min(self, other) -> "Expectation":
        """Pointwise minimum."""
        return self._wrap(np.minimum(self.values, self._operand(other)), other)

    def where(self, mask, other: "Expectation") -> "Expectation":
        """``self`` on states in ``mask``, ``other`` elsewhere."""
        return self._wrap(np.where(mask, self.values, self._operand(other)), other)

    # -- comparisons ----------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, Expectation):
            return NotImplemented
        return self.space == other.space and all(a == b for a, b in zip(self.values, other.values))

    def __le__(self, other) -> bool:
        return all(a <= b for a, b in zip(self.values, self._operand_seq(other)))

    def __ge__(self, other) -> bool:
        return all(a >= b for a, b in zip(self.values, self._operand_seq(other)))

    def __lt__(self, other) -> bool:
        """Strictly below: pointwise ``<=`` and different somewhere."""
        return self <= other and self != other

    def _operand_seq(self, other):
        if isinstance(other, Expectation):
            return other.values
        return [Fraction(other)] * len(self.values)

    def differences(self, other: "Expectation") -> list:
        """State indices where the two expectations disagree."""
        return [i for i, (a, b) in enumerate(zip(self.values, other.values)) if a != b]

    def sup(self) -> Fraction:
        return max(self.values) if len(self.values) else ZERO

    def inf(self) -> Fraction:
        return min(self.values) if len(self.values) else ZERO

    # -- serialisation --------------------------------------------------------

    def to_json(self) -> list:
        """``[{"state": {"x": 0}, "value": "1/2"}, ...]`` in state order."""
        return [
            {"state": self.space.valuation(i), "value": str(v)} for i, v in enumerate(self.values)
        ]

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, space: StateSpace, data: list) -> "Expectation":
        arr = np.empty(space.count, dtype=object)
        arr[:] = None
        for item in data:
            arr[space.index(item["state"])] = Fraction(item["value"])
        if any(v is None for v in arr):
            raise ValueError("expectation JSON does not cover every state")
        return cls(space, arr)


def eval_expectation(expr, space: StateSpace) -> Expectation:
    """Evaluate an expectation expression pointwise over ``space``."""
    if isinstance(expr, Expectation):
        return expr
    if isinstance(expr, EConst):
        if expr.value < 0:
            raise EvaluationError("negative constant in expectation")
        return Expectation.constant(space, expr.value)
    if isinstance(expr, Indicator):
        return Expectation.indicator(space, eval_pred(expr.pred, space))
    if isinstance(expr, EBin):
        a = eval_expectation(expr.left, space)
        if expr.op == "/":
            if not isinstance(expr.right, EConst):
                raise EvaluationError("expectations may only be divided by constants")
            return a / expr.right.value
        b = eval_expectation(expr.right, space)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        if expr.op == "max":
            return a.max(b)
        if expr.op == "min":
            return a.min(b)
    raise EvaluationError(f"not an expectation expression: {expr!r}")
