"""Abstract syntax for pGCL models, expectations and queries.

All nodes are frozen dataclasses. Source locations are carried in a ``loc``
field that is excluded from equality, so two trees parsed from differently
formatted text compare equal when they have the same structure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Tuple, Union

Loc = Optional[Tuple[int, int]]


def _loc() -> Loc:
    return field(default=None, compare=False, repr=False)


# -- arithmetic ---------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: int
    loc: Loc = _loc()


@dataclass(frozen=True)
class Var:
    name: str
    loc: Loc = _loc()


@dataclass(frozen=True)
class Neg:
    operand: "Arith"
    loc: Loc = _loc()


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / %
    left: "Arith"
    right: "Arith"
    loc: Loc = _loc()


Arith = Union[Num, Var, Neg, BinOp]

# -- predicates ---------------------------------------------------------------

COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class BoolLit:
    value: bool
    loc: Loc = _loc()


@dataclass(frozen=True)
class Cmp:
    op: str  # one of COMPARISONS
    left: Arith
    right: Arith
    loc: Loc = _loc()


@dataclass(frozen=True)
class Not:
    operand: "Pred"
    loc: Loc = _loc()


@dataclass(frozen=True)
class And:
    left: "Pred"
    right: "Pred"
    loc: Loc = _loc()


@dataclass(frozen=True)
class Or:
    left: "Pred"
    right: "Pred"
    loc: Loc = _loc()


@dataclass(frozen=True)
class Label:
    """A named state label; only meaningful in queries against an MDP."""

    name: str
    loc: Loc = _loc()


Pred = Union[BoolLit, Cmp, Not, And, Or, Label]

# -- programs -----------------------------------------------------------------


@dataclass(frozen=True)
class Skip:
    loc: Loc = _loc()


@dataclass(frozen=True)
class Abort:
    loc: Loc = _loc()


@dataclass(frozen=True)
class Assign:
    var: str
    expr: Arith
    loc: Loc = _loc()


@dataclass(frozen=True)
class Seq:
    first: "Program"
    second: "Program"
    loc: Loc = _loc()


@dataclass(frozen=True)
class ProbChoice:
    prob: Fraction
    left: "Program"
    right: "Program"
    loc: Loc = _loc()


@dataclass(frozen=True)
class DemonicChoice:
    left: "Program"
    right: "Program"
    loc: Loc = _loc()


@dataclass(frozen=True)
class If:
    guard: Pred
    then: "Program"
    orelse: "Program"
    loc: Loc = _loc()


@dataclass(frozen=True)
class Loop:
    guard: Pred
    body: "Program"
    loc: Loc = _loc()


Program = Union[Skip, Abort, Assign, Seq, ProbChoice, DemonicChoice, If, Loop]

# -- expectations -------------------------------------------------------------


@dataclass(frozen=True)
class EConst:
    value: Fraction
    loc: Loc = _loc()


@dataclass(frozen=True)
class Indicator:
    pred: Pred
    loc: Loc = _loc()


@dataclass(frozen=True)
class EBin:
    """Pointwise binary operation; ``-`` is truncated at zero."""

    op: str  # one of + - * / max min
    left: "ExpectationExpr"
    right: "ExpectationExpr"
    loc: Loc = _loc()


ExpectationExpr = Union[EConst, Indicator, EBin]

# -- models and queries -------------------------------------------------------


@dataclass(frozen=True)
class VarDecl:
    name: str
    lo: int
    hi: int
    wrap: bool = False
    loc: Loc = _loc()

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class Model:
    decls: Tuple[VarDecl, ...]
    program: Program
    init: Optional[Pred] = None

    def decl(self, name: str) -> VarDecl:
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)


@dataclass(frozen=True)
class BoundedUntil:
    target: Pred
    horizon: int
    mode: str  # "min" | "max"


@dataclass(frozen=True)
class ExpectedReward:
    target: Pred
    mode: str


Query = Union[BoundedUntil, ExpectedReward]


# -- traversal helpers --------------------------------------------------------


def variables(node) -> set:
    """Names of all variables read or written anywhere below ``node``."""
    out: set = set()
    _collect_vars(node, out)
    return out


def _collect_vars(node, out: set) -> None:
    if isinstance(node, Var):
        out.add(node.name)
    elif isinstance(node, Assign):
        out.add(node.var)
        _collect_vars(node.expr, out)
    elif isinstance(node, (Num, BoolLit, Label, Skip, Abort, EConst)):
        pass
    else:
        for child in children(node):
            _collect_vars(child, out)


def children(node) -> tuple:
    if isinstance(node, (Neg, Not)):
        return (node.operand,)
    if isinstance(node, (BinOp, Cmp, And, Or, EBin)):
        return (node.left, node.right)
    if isinstance(node, Seq):
        return (node.first, node.second)
    if isinstance(node, (ProbChoice, DemonicChoice)):
        return (node.left, node.right)
    if isinstance(node, If):
        return (node.guard, node.then, node.orelse)
    if isinstance(node, Loop):
        return (node.guard, node.body)
    if isinstance(node, Assign):
        return (node.expr,)
    if isinstance(node, Indicator):
        return (node.pred,)
    return ()


def is_deterministic(prog: Program) -> bool:
    """True when ``prog`` contains no demonic choice."""
    if isinstance(prog, DemonicChoice):
        return False
    return all(is_deterministic(c) for c in children(prog) if _is_program(c))


def contains_loop(prog: Program) -> bool:
    if isinstance(prog, Loop):
        return True
    return any(contains_loop(c) for c in children(prog) if _is_program(c))


def _is_program(node) -> bool:
    return isinstance(node, (Skip, Abort, Assign, Seq, ProbChoice, DemonicChoice, If, Loop))


def demonic_components(prog: Program) -> list:
    """Flatten the top-level demonic choices of ``prog`` into a list."""
    if isinstance(prog, DemonicChoice):
        return demonic_components(prog.left) + demonic_components(prog.right)
    return [prog]


def demonic(*progs: Program) -> Program:
    """Right-nested demonic choice over one or more programs."""
    if not progs:
        raise ValueError("demonic choice needs at least one alternative")
    out = progs[-1]
    for p in reversed(progs[:-1]):
        out = DemonicChoice(p, out)
    return out


def sequence(*progs: Program) -> Program:
    if not progs:
        return Skip()
    out = progs[-1]
    for p in reversed(progs[:-1]):
        out = Seq(p, out)
    return out
