"""Predicate abstraction of expectation transformers.

A finite set of predicates partitions the state space into *cubes*: maximal
sets of states that agree on every predicate. ``cubed(e)`` is the largest
expectation below ``e`` that is constant on every cube, and the abstract
transformer is ``wp_abs(P, e) = cubed(wp(P, e))``.

An abstraction is information preserving for a deterministic program when the
abstract and concrete transformers agree on every cube indicator; in that
case the quotient introduces no nondeterminism and abstract analysis of
cube-granular properties is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from pgclabs.ast import (
    And,
    BoolLit,
    Cmp,
    Not,
    Var,
    VarDecl,
    demonic_components,
    is_deterministic,
)
from pgclabs.expectation import Expectation
from pgclabs.semantics import as_expectation, wp
from pgclabs.statespace import StateSpace, eval_pred
from pgclabs.syntax import parse_predicate, parse_program, to_source


class NondeterminismError(ValueError):
    pass


def _preds(phi) -> Tuple:
    return tuple(parse_predicate(p) if isinstance(p, str) else p for p in phi)


@dataclass(frozen=True, eq=False)
class Partition:
    """The cubes induced by ``predicates`` over ``space``.

    ``cubes[k]`` holds the (sorted) state indices of cube ``k`` and
    ``truth[k]`` its truth vector over the predicates; ``cube_of[s]`` is the
    cube containing state ``s``. Cubes are ordered lexicographically by truth
    vector, ``False`` before ``True``; empty cubes do not appear.
    """

    space: StateSpace
    predicates: Tuple
    cubes: Tuple[np.ndarray, ...]
    truth: Tuple[Tuple[bool, ...], ...]
    cube_of: np.ndarray

    def __len__(self) -> int:
        return len(self.cubes)

    def cube_predicate(self, k: int):
        """A conjunction of literals characterising cube ``k``."""
        lits = [p if t else Not(p) for p, t in zip(self.predicates, self.truth[k])]
        if not lits:
            return BoolLit(True)
        out = lits[0]
        for lit in lits[1:]:
            out = And(out, lit)
        return out

    def indicator(self, k: int) -> Expectation:
        mask = np.zeros(self.space.count, dtype=bool)
        mask[self.cubes[k]] = True
        return Expectation.indicator(self.space, mask)

    def describe(self, k: int) -> str:
        return to_source(self.cube_predicate(k))


def cubes(phi: Iterable, space: StateSpace) -> Partition:
    """Partition ``space`` by the truth values of the predicates in ``phi``."""
    preds = _preds(phi)
    if preds:
        table = np.stack([eval_pred(p, space) for p in preds], axis=1)
    else:
        table = np.zeros((space.count, 0), dtype=bool)
    keys = [tuple(bool(b) for b in row) for row in table]
    order = sorted(set(keys))
    number = {t: k for k, t in enumerate(order)}
    cube_of = np.fromiter((number[t] for t in keys), dtype=np.int64, count=space.count)
    members = tuple(np.flatnonzero(cube_of == k) for k in range(len(order)))
    return Partition(space, preds, members, tuple(order), cube_of)


def singleton_partition(space: StateSpace) -> Partition:
    """The finest partition: one cube per state."""
    idx = np.arange(space.count, dtype=np.int64)
    return Partition(space, (), tuple(np.array([i]) for i in idx), tuple((i,) for i in idx), idx)


def _partition(phi_or_part, space: StateSpace) -> Partition:
    if isinstance(phi_or_part, Partition):
        return phi_or_part
    return cubes(phi_or_part, space)


def cubed(e: Expectation, part: Partition) -> Expectation:
    """Greatest cube-constant expectation below ``e``: the per-cube minimum."""
    out = np.empty(len(e), dtype=object)
    for members in part.cubes:
        out[members] = min(e.values[members])
    return Expectation(e.space, out, e.approximate)


def is_cubed(e: Expectation, part: Partition) -> bool:
    """Exact test that ``e`` is constant on every cube."""
    for members in part.cubes:
        vals = e.values[members]
        first = vals[0]
        if any(v != first for v in vals[1:]):
            return False
    return True


def wp_abs(prog, e, phi, space: StateSpace) -> Expectation:
    """Abstract weakest pre-expectation ``cubed(wp(prog, e))``.

    ``phi`` is a predicate collection or an already computed :class:`Partition`.
    """
    part = _partition(phi, space)
    return cubed(wp(prog, as_expectation(e, space), space), part)


# -- information preservation -------------------------------------------------


@dataclass
class Witness:
    """Evidence that an abstraction loses information.

    ``kind`` is ``"predicate"`` when ``wp(prog, [predicate])`` is not cubed, or
    ``"cube"`` when ``wp(prog, [cube])`` differs from its abstract value.
    ``states`` lists ``(state label, concrete value, cubed value)``.
    """

    kind: str
    predicate: str
    states: List[Tuple[str, Fraction, Fraction]]
    cube: Optional[Tuple[bool, ...]] = None
    cube_index: Optional[int] = None
    predicate_index: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "predicate": self.predicate,
            "cube": None if self.cube is None else list(self.cube),
            "states": [
                {"state": s, "wp": str(a), "cubed": str(b)} for s, a, b in self.states
            ],
        }


@dataclass
class IpReport:
    verdict: str  # "preserving" | "not-preserving"
    witness: Optional[Witness] = None
    details: List[dict] = field(default_factory=list)
    components: List["IpReport"] = field(default_factory=list)
    method: str = ""
    program: str = ""

    @property
    def preserving(self) -> bool:
        return self.verdict == "preserving"

    def to_json(self) -> dict:
        out = {
            "verdict": self.verdict,
            "program": self.program,
            "method": self.method,
            "witness": None if self.witness is None else self.witness.to_json(),
            "predicates": self.details,
        }
        if self.components:
            out["components"] = [c.to_json() for c in self.components]
        return out


def _differing(space, concrete: Expectation, abstract: Expectation):
    return [
        (space.label(s), concrete[s], abstract[s]) for s in concrete.differences(abstract)
    ]


def _check_deterministic(prog, part: Partition, space: StateSpace) -> IpReport:
    details = []
    witness = None
    for i, phi in enumerate(part.predicates):
        w = wp(prog, Expectation.indicator(space, eval_pred(phi, space)), space)
        c = cubed(w, part)
        diff = _differing(space, w, c)
        details.append({"predicate": to_source(phi), "cubed": not diff})
        if diff and witness is None:
            witness = Witness("predicate", to_source(phi), diff, predicate_index=i)

    # Cube-wise check. When the predicate check failed this locates the cube;
    # when it passed it certifies the result even for partial programs.
    cube_witness = None
    for k in range(len(part)):
        w = wp(prog, part.indicator(k), space)
        c = cubed(w, part)
        if w != c:
            cube_witness = Witness(
                "cube", part.describe(k), _differing(space, w, c), part.truth[k], k
            )
            break

    text = to_source(prog)
    if witness is not None:
        if cube_witness is not None:
            witness.cube = cube_witness.cube
            witness.cube_index = cube_witness.cube_index
        return IpReport("not-preserving", witness, details, method="predicates", program=text)
    if cube_witness is not None:
        return IpReport("not-preserving", cube_witness, details, method="cubes", program=text)
    return IpReport("preserving", None, details, method="predicates+cubes", program=text)


def check_info_preserving(prog, phi, space: StateSpace) -> IpReport:
    """Decide whether the abstraction induced by ``phi`` preserves information.

    ``prog`` must be deterministic or a top-level demonic choice of
    deterministic components; in the latter case every component is checked
    and the verdict is their conjunction.
    """
    if isinstance(prog, str):
        prog = parse_program(prog)
    part = _partition(phi, space)
    parts = demonic_components(prog)
    for c in parts:
        if not is_deterministic(c):
            raise NondeterminismError(
                "program contains a demonic choice below the top level; rewrite it as "
                "a top-level choice 'P1 [] P2 [] ...' of deterministic components"
            )
    if len(parts) == 1:
        return _check_deterministic(prog, part, space)
    reports = [_check_deterministic(c, part, space) for c in parts]
    failing = next((r for r in reports if not r.preserving), None)
    return IpReport(
        "preserving" if failing is None else "not-preserving",
        None if failing is None else failing.witness,
        [],
        reports,
        method="components",
        program=to_source(prog),
    )


# -- data independence --------------------------------------------------------

_ORDER_RELATIONS = {"<", "<=", ">", ">="}
_EQ_RELATIONS = {"=", "!="}
ALL_RELATIONS = frozenset(_ORDER_RELATIONS | _EQ_RELATIONS)


def di_predicates(decls: Sequence[VarDecl], relations: Iterable[str] = ALL_RELATIONS) -> list:
    """All comparisons ``x R y`` between distinct variables.

    Tautologies and predicates equal to another one up to negation or operand
    swap are dropped, leaving ``x = y`` for the equality relations and
    ``x < y``, ``y < x`` for the order relations, per unordered pair.
    """
    relations = set(relations)
    unknown = relations - ALL_RELATIONS
    if unknown:
        raise ValueError(f"unknown relations: {sorted(unknown)}")
    names = [d.name for d in decls]
    out = []
    for i, x in enumerate(names):
        for y in names[i + 1:]:
            if relations & _EQ_RELATIONS:
                out.append(Cmp("=", Var(x), Var(y)))
            if relations & _ORDER_RELATIONS:
                out.append(Cmp("<", Var(x), Var(y)))
                out.append(Cmp("<", Var(y), Var(x)))
    return out


def check_data_independent(prog, space: StateSpace) -> IpReport:
    """Information preservation with respect to all pairwise comparisons."""
    psi = di_predicates(space.decls)
    try:
        return check_info_preserving(prog, psi, space)
    except NondeterminismError as exc:
        return IpReport("not-preserving", None, [], method=f"rejected: {exc}",
                        program=to_source(prog if not isinstance(prog, str) else parse_program(prog)))
