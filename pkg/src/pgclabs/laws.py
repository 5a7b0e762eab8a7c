"""Algebraic laws of the abstract transformer, checked on concrete instances.

:func:`check_laws` evaluates every law on one program, a pair of predicate
sets and random expectations, and returns the names of the laws that fail
(an empty list when all hold). The test suite feeds it random models.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

from pgclabs.abstraction import check_info_preserving, cubed, cubes, is_cubed, wp_abs
from pgclabs.ast import DemonicChoice, ProbChoice, Seq, is_deterministic
from pgclabs.generate import PROBS, random_cubed, random_expectation, random_phi, random_program
from pgclabs.semantics import wp
from pgclabs.statespace import StateSpace


@dataclass
class LawReport:
    checked: List[str] = field(default_factory=list)
    violations: List[str] = field(default_factory=list)
    ip: bool = False

    def check(self, name: str, ok: bool) -> None:
        self.checked.append(name)
        if not ok:
            self.violations.append(name)


def check_laws(
    rng: random.Random,
    model,
    phi: Optional[list] = None,
    extra: Optional[list] = None,
) -> LawReport:
    """Check the abstraction laws for ``model.program`` against ``phi``.

    A second program ``Q`` over the same variables is drawn from ``rng`` for
    the laws about composition. When the program is deterministic and passes
    the information-preservation check, the exactness laws are checked too.
    """
    decls = list(model.decls)
    space = StateSpace(decls)
    P = model.program
    Q = random_program(rng, decls, 4, demonic=not is_deterministic(P))
    phi = random_phi(rng, decls) if phi is None else phi
    extra = random_phi(rng, decls) if extra is None else extra
    part = cubes(phi, space)
    finer = cubes(list(phi) + list(extra), space)
    e = random_expectation(rng, space, bound=Fraction(3))
    e2 = random_expectation(rng, space, bound=Fraction(3))
    alpha = Fraction(rng.randint(0, 6), rng.randint(1, 4))
    p = rng.choice(PROBS)
    rep = LawReport()

    def A(prog, x, part_=part):
        return wp_abs(prog, x, part_, space)

    a_e = A(P, e)
    rep.check("sound: wp_abs <= wp", a_e <= wp(P, e, space))
    rep.check("finer predicates are more accurate", a_e <= A(P, e, finer))
    rep.check("superadditive", a_e + A(P, e2) <= A(P, e + e2))
    rep.check("scaling", a_e * alpha == A(P, e * alpha))
    rep.check("subtracting one", a_e - 1 <= A(P, e - 1))

    c1, c2 = random_cubed(rng, part), random_cubed(rng, part)
    rep.check("sums of cubed are cubed", is_cubed(c1 + c2, part))
    rep.check("maxima of cubed are cubed", is_cubed(c1.max(c2), part))
    rep.check("minima of cubed are cubed", is_cubed(c1.min(c2), part))

    ce = cubed(e, part)
    rep.check("cubed idempotent", cubed(ce, part) == ce)
    rep.check("cubed reductive", ce <= e)
    rep.check("cubed monotone", ce <= cubed(e + e2, part))

    a_q = A(Q, e)
    rep.check("demonic choice is a minimum", A(DemonicChoice(P, Q), e) == a_e.min(a_q))
    rep.check("composing abstractions loses precision", A(P, A(Q, e)) <= A(Seq(P, Q), e))
    rep.check("probabilistic choice is superlinear", a_e * p + a_q * (1 - p) <= A(ProbChoice(p, P, Q), e))

    if is_deterministic(P) and check_info_preserving(P, part, space).preserving:
        rep.ip = True
        for _ in range(3):
            c = random_cubed(rng, part)
            rep.check("exact: cubed expectations", A(P, c) == wp(P, c, space))
        if is_deterministic(Q) and check_info_preserving(Q, part, space).preserving:
            c = random_cubed(rng, part)
            rep.check("exact: composition", A(P, A(Q, c)) == A(Seq(P, Q), c))
            rep.check("exact: probabilistic choice", A(P, c) * p + A(Q, c) * (1 - p) == A(ProbChoice(p, P, Q), c))
    return rep


def random_law_case(rng: random.Random):
    """A model and predicate set; about a third of the programs are deterministic
    and a quarter of the predicate sets are fine enough to be preserving."""
    from pgclabs.generate import random_model

    model = random_model(rng, depth=6, demonic=rng.random() < 0.65)
    decls = list(model.decls)
    r = rng.random()
    if r < 0.15:
        from pgclabs.ast import Cmp, Num, Var

        phi = [Cmp("=", Var(d.name), Num(v)) for d in decls for v in range(d.lo, d.hi + 1)]
    elif r < 0.25:
        phi = []
    else:
        phi = random_phi(rng, decls)
    return model, phi
