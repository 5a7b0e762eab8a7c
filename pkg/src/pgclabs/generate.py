"""Random models, predicates and expectations for property testing.

Generated programs are loop-free and every variable wraps, so ``wp`` is total
and exact on them. All functions take a :class:`random.Random`, which lets
hypothesis drive them through ``st.randoms()``.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from pgclabs.ast import (
    Abort,
    And,
    Assign,
    BinOp,
    BoolLit,
    Cmp,
    DemonicChoice,
    If,
    Model,
    Not,
    Num,
    Or,
    ProbChoice,
    Seq,
    Skip,
    Var,
    VarDecl,
)
from pgclabs.expectation import Expectation
from pgclabs.statespace import StateSpace

NAMES = ("x", "y", "z")
PROBS = (Fraction(1, 2), Fraction(1, 3), Fraction(2, 3), Fraction(1, 4), Fraction(3, 4), Fraction(1, 5))


def random_decls(rng: random.Random, max_vars: int = 3, max_size: int = 4) -> List[VarDecl]:
    n = rng.randint(1, max_vars)
    return [VarDecl(NAMES[i], 0, rng.randint(1, max_size) - 1, True) for i in range(n)]


def random_arith(rng: random.Random, decls: Sequence[VarDecl], depth: int = 2):
    if depth <= 0 or rng.random() < 0.4:
        if rng.random() < 0.6:
            return Var(rng.choice(decls).name)
        return Num(rng.randint(0, 3))
    op = rng.choice("+-*/%" if rng.random() < 0.3 else "+-")
    return BinOp(op, random_arith(rng, decls, depth - 1), random_arith(rng, decls, depth - 1))


def random_predicate(rng: random.Random, decls: Sequence[VarDecl], depth: int = 2):
    r = rng.random()
    if depth <= 0 or r < 0.5:
        if r < 0.05:
            return BoolLit(rng.random() < 0.5)
        op = rng.choice(("=", "!=", "<", "<=", ">", ">="))
        return Cmp(op, random_arith(rng, decls, 1), random_arith(rng, decls, 1))
    if r < 0.65:
        return Not(random_predicate(rng, decls, depth - 1))
    cls = And if r < 0.85 else Or
    return cls(random_predicate(rng, decls, depth - 1), random_predicate(rng, decls, depth - 1))


def random_program(
    rng: random.Random,
    decls: Sequence[VarDecl],
    depth: int = 6,
    demonic: bool = True,
):
    """A loop-free program of AST depth at most ``depth``."""
    if depth <= 1 or rng.random() < 0.3:
        r = rng.random()
        if r < 0.08:
            return Skip()
        if r < 0.12:
            return Abort()
        return Assign(rng.choice(decls).name, random_arith(rng, decls, 2))
    kinds = ["seq", "prob", "if"] + (["demonic"] if demonic else [])
    kind = rng.choice(kinds)
    a = random_program(rng, decls, depth - 1, demonic)
    b = random_program(rng, decls, depth - 1, demonic)
    if kind == "seq":
        return Seq(a, b)
    if kind == "prob":
        return ProbChoice(rng.choice(PROBS), a, b)
    if kind == "demonic":
        return DemonicChoice(a, b)
    return If(random_predicate(rng, decls, 1), a, b)


def random_model(rng: random.Random, depth: int = 6, demonic: bool = True) -> Model:
    decls = random_decls(rng)
    return Model(tuple(decls), random_program(rng, decls, depth, demonic))


def random_phi(rng: random.Random, decls: Sequence[VarDecl], max_preds: int = 3) -> list:
    return [random_predicate(rng, decls, 1) for _ in range(rng.randint(0, max_preds))]


def random_expectation(
    rng: random.Random,
    space: StateSpace,
    bound: Optional[Fraction] = Fraction(1),
) -> Expectation:
    """Random values ``k/d`` with small denominators, in ``[0, bound]``."""
    denom = rng.choice((1, 2, 3, 4, 6))
    top = int((bound if bound is not None else 3) * denom)
    vals = np.empty(space.count, dtype=object)
    for i in range(space.count):
        vals[i] = Fraction(rng.randint(0, top), denom)
    return Expectation(space, vals)


def random_cubed(rng: random.Random, part) -> Expectation:
    """A random expectation that is constant on every cube of ``part``."""
    vals = np.empty(part.space.count, dtype=object)
    for members in part.cubes:
        vals[members] = Fraction(rng.randint(0, 4), rng.choice((1, 2, 3, 4)))
    return Expectation(part.space, vals)
