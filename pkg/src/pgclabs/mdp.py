"""Explicit-state Markov decision processes and the two query shapes:
step-bounded reachability (``P{min,max}=? [true U<=T target]``) and expected
accumulated reward until reaching a target (``R{min,max}=? [F target]``).

Probabilities are :class:`~fractions.Fraction` throughout. Bounded queries run
exactly by default; reward queries iterate in floating point to pick a policy
and then evaluate and verify it exactly.
"""

from __future__ import annotations

import heapq
import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from pgclabs.ast import (
    Abort,
    Assign,
    DemonicChoice,
    If,
    Loop,
    Model,
    ProbChoice,
    Seq,
    Skip,
    contains_loop,
)
from pgclabs.statespace import EvaluationError, StateSpace, eval_arith, eval_pred

Distribution = Tuple[Tuple[int, Fraction], ...]

DEFAULT_ACTION_CAP = 2**12
ONE = Fraction(1)


class MdpError(ValueError):
    pass


def make_distribution(weights: Mapping[int, Fraction]) -> Distribution:
    """Canonical form: successors ascending, zero weights dropped."""
    return tuple((t, Fraction(p)) for t, p in sorted(weights.items()) if p != 0)


class Mdp:
    """A finite MDP.

    ``actions[s]`` is the list of distributions available in state ``s``;
    identical distributions are merged on construction. ``labels`` maps label
    names to sets of states; ``state_names`` optionally gives a readable name
    for every state.
    """

    def __init__(
        self,
        actions: Sequence[Iterable[Distribution]],
        initial: Iterable[int] = (0,),
        labels: Optional[Mapping[str, Iterable[int]]] = None,
        state_names: Optional[Sequence[str]] = None,
    ):
        n = len(actions)
        merged: List[List[Distribution]] = []
        for s, acts in enumerate(actions):
            seen = {}
            for d in acts:
                d = tuple((int(t), Fraction(p)) for t, p in d)
                if sum(p for _, p in d) != 1:
                    raise MdpError(f"action of state {s} does not sum to 1: {d}")
                for t, p in d:
                    if not 0 <= t < n:
                        raise MdpError(f"successor {t} of state {s} out of range")
                    if p <= 0:
                        raise MdpError(f"non-positive probability in state {s}")
                seen.setdefault(d, None)
            if not seen:
                raise MdpError(f"state {s} has no action")
            merged.append(list(seen))
        self.actions = merged
        self.n = n
        self.initial = tuple(sorted(set(initial)))
        for s in self.initial:
            if not 0 <= s < n:
                raise MdpError(f"initial state {s} out of range")
        self.labels: Dict[str, frozenset] = {k: frozenset(v) for k, v in (labels or {}).items()}
        self.state_names = list(state_names) if state_names is not None else None
        self._float = None

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"Mdp({self.n} states, {self.num_choices} choices)"

    @property
    def num_choices(self) -> int:
        return sum(len(a) for a in self.actions)

    @property
    def num_transitions(self) -> int:
        return sum(len(d) for acts in self.actions for d in acts)

    def name(self, s: int) -> str:
        return self.state_names[s] if self.state_names else str(s)

    def mask(self, states) -> np.ndarray:
        """Boolean mask from a label name, a mask, or a collection of states."""
        if isinstance(states, str):
            states = self.labels[states]
        if isinstance(states, np.ndarray) and states.dtype == bool:
            if len(states) != self.n:
                raise MdpError("mask has the wrong length")
            return states
        out = np.zeros(self.n, dtype=bool)
        out[list(states)] = True
        return out

    def successors(self, s: int) -> set:
        return {t for d in self.actions[s] for t, _ in d}

    # -- float view for fast iteration ---------------------------------------

    def _matrix(self):
        if self._float is None:
            rows, cols, vals, owner = [], [], [], []
            k = 0
            for s, acts in enumerate(self.actions):
                for d in acts:
                    for t, p in d:
                        rows.append(k)
                        cols.append(t)
                        vals.append(float(p))
                    owner.append(s)
                    k += 1
            P = sp.csr_matrix((vals, (rows, cols)), shape=(k, self.n))
            owner = np.asarray(owner, dtype=np.int64)
            starts = np.searchsorted(owner, np.arange(self.n))
            self._float = (P, owner, starts)
        return self._float

    # -- serialisation --------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "states": self.n,
            "initial": list(self.initial),
            "actions": [
                [[[t, str(p)] for t, p in d] for d in acts] for acts in self.actions
            ],
            "labels": {k: sorted(v) for k, v in sorted(self.labels.items())},
            "state_names": self.state_names,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, data) -> "Mdp":
        if isinstance(data, str):
            data = json.loads(data)
        actions = [
            [tuple((int(t), Fraction(p)) for t, p in d) for d in acts] for acts in data["actions"]
        ]
        if len(actions) != data["states"]:
            raise MdpError("state count does not match the action table")
        return cls(actions, data.get("initial", [0]), data.get("labels"), data.get("state_names"))

    def to_prism_explicit(self) -> Dict[str, str]:
        """PRISM explicit-engine files: ``tra`` (transitions), ``lab`` and ``sta``.

        Probabilities are written as decimals, as PRISM expects; use the JSON
        form for an exact round trip. PRISM reserves the label ``init`` for the
        initial states, so a separate ``init`` label is not written.
        """
        tra = [f"{self.n} {self.num_choices} {self.num_transitions}"]
        for s, acts in enumerate(self.actions):
            for a, d in enumerate(acts):
                for t, p in d:
                    tra.append(f"{s} {a} {t} {_decimal(p)}")
        names = ["init"] + sorted(k for k in self.labels if k != "init")
        lab = [" ".join(f'{i}="{name}"' for i, name in enumerate(names))]
        for s in range(self.n):
            idx = [0] if s in self.initial else []
            idx += [i for i, name in enumerate(names) if i and s in self.labels[name]]
            if idx:
                lab.append(f"{s}: " + " ".join(map(str, idx)))
        sta = ["(state)"] + [f"{s}:({self.name(s)})" for s in range(self.n)]
        return {"tra": "\n".join(tra) + "\n", "lab": "\n".join(lab) + "\n", "sta": "\n".join(sta) + "\n"}

    @classmethod
    def from_prism_explicit(cls, tra: str, lab: Optional[str] = None) -> "Mdp":
        lines = [l for l in tra.splitlines() if l.strip()]
        n, _, _ = (int(x) for x in lines[0].split())
        table: Dict[Tuple[int, int], Dict[int, Fraction]] = {}
        for line in lines[1:]:
            parts = line.split()
            s, a, t = int(parts[0]), int(parts[1]), int(parts[2])
            table.setdefault((s, a), {})[t] = Fraction(parts[3]).limit_denominator(10**12)
        actions: List[List[Distribution]] = [[] for _ in range(n)]
        for (s, a) in sorted(table):
            actions[s].append(make_distribution(table[(s, a)]))
        initial, labels = [0], {}
        if lab:
            lab_lines = [l for l in lab.splitlines() if l.strip()]
            names = {}
            for item in lab_lines[0].split():
                i, name = item.split("=", 1)
                names[int(i)] = name.strip('"')
            members: Dict[str, set] = {name: set() for name in names.values()}
            for line in lab_lines[1:]:
                s, rest = line.split(":", 1)
                for i in rest.split():
                    members[names[int(i)]].add(int(s))
            initial = sorted(members.get("init", {0}))
            labels = members
        return cls(actions, initial, labels)


def _decimal(p: Fraction) -> str:
    if p.denominator == 1:
        return str(p.numerator)
    return repr(float(p))


# -- extraction from loop-form models -----------------------------------------


class _Extractor:
    def __init__(self, space: StateSpace, cap: int):
        self.space = space
        self.cap = cap
        self.sink = space.count  # index used for aborting runs
        self.used_sink = False
        self._assign_cache: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        self._guard_cache: Dict[int, np.ndarray] = {}
        self._memo: Dict[Tuple[int, int], List[Dict[int, Fraction]]] = {}

    def assign(self, node: Assign):
        hit = self._assign_cache.get(id(node))
        if hit is None:
            if node.var not in self.space.names:
                raise EvaluationError(f"assignment to undeclared variable {node.var!r}")
            hit = self.space.assign(node.var, eval_arith(node.expr, self.space))
            self._assign_cache[id(node)] = hit
        return hit

    def guard(self, pred):
        hit = self._guard_cache.get(id(pred))
        if hit is None:
            hit = eval_pred(pred, self.space)
            self._guard_cache[id(pred)] = hit
        return hit

    def dists(self, prog, s: int) -> List[Dict[int, Fraction]]:
        key = (id(prog), s)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._dedup(self._dists(prog, s))
            if len(hit) > self.cap:
                raise MdpError(
                    f"more than {self.cap} demonic resolutions from state {self.space.label(s)}"
                )
            self._memo[key] = hit
        return hit

    @staticmethod
    def _dedup(ds):
        seen = {}
        for d in ds:
            seen.setdefault(make_distribution(d), d)
        return list(seen.values())

    def _dists(self, prog, s: int):
        if isinstance(prog, Skip):
            return [{s: ONE}]
        if isinstance(prog, Abort):
            self.used_sink = True
            return [{self.sink: ONE}]
        if isinstance(prog, Assign):
            succ, invalid = self.assign(prog)
            if invalid[s]:
                raise EvaluationError(
                    f"assignment to {prog.var} leaves its domain from {self.space.label(s)}"
                )
            return [{int(succ[s]): ONE}]
        if isinstance(prog, If):
            branch = prog.then if self.guard(prog.guard)[s] else prog.orelse
            return self.dists(branch, s)
        if isinstance(prog, DemonicChoice):
            return self.dists(prog.left, s) + self.dists(prog.right, s)
        if isinstance(prog, ProbChoice):
            p = prog.prob
            if p == 1:
                return self.dists(prog.left, s)
            if p == 0:
                return self.dists(prog.right, s)
            out = []
            for a in self.dists(prog.left, s):
                for b in self.dists(prog.right, s):
                    out.append(_mix([(p, a), (1 - p, b)]))
            return out
        if isinstance(prog, Seq):
            out = []
            for d in self.dists(prog.first, s):
                support = sorted(d)
                options = [
                    [{self.sink: ONE}] if t == self.sink else self.dists(prog.second, t)
                    for t in support
                ]
                total = math.prod(len(o) for o in options)
                if total > self.cap:
                    raise MdpError(
                        f"more than {self.cap} demonic resolutions from state {self.space.label(s)}"
                    )
                for combo in itertools.product(*options):
                    out.append(_mix([(d[t], e) for t, e in zip(support, combo)]))
            return out
        if isinstance(prog, Loop):
            raise MdpError("nested loops are not supported in loop bodies")
        raise TypeError(f"not a program: {prog!r}")


def _mix(weighted) -> Dict[int, Fraction]:
    out: Dict[int, Fraction] = {}
    for w, d in weighted:
        for t, p in d.items():
            out[t] = out.get(t, 0) + w * p
    return out


def loop_of(model: Model) -> Loop:
    prog = model.program
    if not isinstance(prog, Loop):
        raise MdpError("model is not in loop form 'do G -> Body od'")
    if contains_loop(prog.body):
        raise MdpError("nested loops are not supported in loop bodies")
    return prog


def extract_mdp(model: Model, action_cap: int = DEFAULT_ACTION_CAP) -> Mdp:
    """Operational MDP of a loop-form model; one MDP step is one loop iteration.

    States where the guard is false are absorbing. In a guarded state there is
    one action per way of resolving the demonic choices of the body, where a
    choice may depend on the outcome of earlier probabilistic choices in the
    same iteration. An ``abort`` leads to an extra absorbing state labelled
    ``aborted``. Labels: ``init`` (the ``init`` predicate, or every state),
    ``guard`` and ``exit``.
    """
    loop = loop_of(model)
    space = StateSpace(model.decls)
    ext = _Extractor(space, action_cap)
    g = eval_pred(loop.guard, space)
    actions: List[List[Distribution]] = []
    for s in range(space.count):
        if g[s]:
            actions.append([make_distribution(d) for d in ext.dists(loop.body, s)])
        else:
            actions.append([((s, ONE),)])
    names = [space.label(s) for s in range(space.count)]
    init = eval_pred(model.init, space) if model.init is not None else np.ones(space.count, bool)
    labels = {
        "init": np.flatnonzero(init).tolist(),
        "guard": np.flatnonzero(g).tolist(),
        "exit": np.flatnonzero(~g).tolist(),
    }
    if ext.used_sink:
        actions.append([((ext.sink, ONE),)])
        names.append("aborted")
        labels["aborted"] = [ext.sink]
    return Mdp(actions, labels["init"], labels, names)


def quotient_mdp(m: Mdp, part) -> Mdp:
    """Lift ``m`` to the blocks of ``part``.

    ``part`` is an :class:`~pgclabs.abstraction.Partition` or an integer array
    mapping states to blocks. States beyond the partition's state space (such
    as the abort sink) become singleton blocks. Each abstract state offers
    every member's actions with probabilities summed per block; identical
    lifted distributions are merged. A block carries a label when all its
    members do.
    """
    if hasattr(part, "cube_of"):
        block = np.asarray(part.cube_of, dtype=np.int64)
        names = [part.describe(k) for k in range(len(part))]
    else:
        block = np.asarray(part, dtype=np.int64)
        nb = int(block.max()) + 1 if len(block) else 0
        names = [str(k) for k in range(nb)]
    if len(block) < m.n:
        extra = np.arange(m.n - len(block)) + len(names)
        names += [m.name(s) for s in range(len(block), m.n)]
        block = np.concatenate([block, extra])
    nb = len(names)
    actions: List[List[Distribution]] = [[] for _ in range(nb)]
    members: List[List[int]] = [[] for _ in range(nb)]
    for s in range(m.n):
        b = int(block[s])
        members[b].append(s)
        for d in m.actions[s]:
            lifted: Dict[int, Fraction] = {}
            for t, p in d:
                k = int(block[t])
                lifted[k] = lifted.get(k, 0) + p
            actions[b].append(make_distribution(lifted))
    if any(not ms for ms in members):
        raise MdpError("partition has empty blocks")
    labels = {
        name: [b for b in range(nb) if all(s in states for s in members[b])]
        for name, states in m.labels.items()
    }
    initial = sorted({int(block[s]) for s in m.initial})
    return Mdp(actions, initial, labels, names)


def is_deterministic(m: Mdp) -> bool:
    """True when every state offers exactly one (merged) distribution."""
    return all(len(acts) == 1 for acts in m.actions)


# -- queries ------------------------------------------------------------------


@dataclass
class QueryResult:
    """Per-state values of a query.

    ``values[s]`` is a :class:`~fractions.Fraction` (or ``float`` when run in
    floating point); reward queries use ``math.inf`` for states whose
    expected reward is unbounded.
    """

    values: list
    mode: str
    exact: bool = True
    iterations: int = 0
    residual: float = 0.0
    tags: set = field(default_factory=set)

    def __getitem__(self, s: int):
        return self.values[s]

    def __len__(self) -> int:
        return len(self.values)

    def at(self, states: Iterable[int]) -> list:
        return [self.values[s] for s in states]

    def optimum(self, states: Iterable[int]):
        """min (or max) of the values over ``states``, following ``mode``."""
        vals = self.at(states)
        return min(vals) if self.mode == "min" else max(vals)

    def to_json(self, m: Optional[Mdp] = None) -> dict:
        def fmt(v):
            if v == math.inf:
                return "inf"
            return str(v) if isinstance(v, Fraction) else repr(v)

        return {
            "mode": self.mode,
            "exact": self.exact,
            "iterations": self.iterations,
            "residual": self.residual,
            "tags": sorted(self.tags),
            "values": [
                {"state": m.name(s) if m else s, "value": fmt(v)} for s, v in enumerate(self.values)
            ],
        }


def _check_mode(mode: str) -> None:
    if mode not in ("min", "max"):
        raise ValueError(f"mode must be 'min' or 'max', not {mode!r}")


def pbounded(m: Mdp, target, T: int, mode: str = "min", exact: bool = True) -> QueryResult:
    """Optimal probability of reaching ``target`` within ``T`` steps.

    ``V_0 = [target]`` and ``V_{t+1}(s) = 1`` on target states, otherwise the
    min (or max) over actions of the expected value of ``V_t``.
    """
    _check_mode(mode)
    if T < 0:
        raise ValueError("horizon must be non-negative")
    tgt = m.mask(target)
    if exact:
        v = [ONE if tgt[s] else Fraction(0) for s in range(m.n)]
        opt = min if mode == "min" else max
        live = [s for s in range(m.n) if not tgt[s]]
        for _ in range(T):
            v = _exact_step(m, v, live, opt)
        return QueryResult(v, mode, True, T)
    vf = pbounded_curve(m, target, T, mode)[-1]
    return QueryResult(vf.tolist(), mode, False, T)


def _exact_step(m: Mdp, v: list, live: list, opt) -> list:
    new = list(v)
    for s in live:
        new[s] = opt(sum(p * v[t] for t, p in d) for d in m.actions[s])
    return new


def _float_step(m: Mdp, v: np.ndarray, mode: str) -> np.ndarray:
    P, owner, starts = m._matrix()
    q = P @ v
    red = np.minimum if mode == "min" else np.maximum
    return red.reduceat(q, starts)


def pbounded_curve(m: Mdp, target, T: int, mode: str = "min", exact: bool = False) -> list:
    """Value vectors for every horizon ``0..T`` (floats unless ``exact``)."""
    _check_mode(mode)
    tgt = m.mask(target)
    if exact:
        v = [ONE if tgt[s] else Fraction(0) for s in range(m.n)]
        opt = min if mode == "min" else max
        live = [s for s in range(m.n) if not tgt[s]]
        out = [v]
        for _ in range(T):
            v = _exact_step(m, v, live, opt)
            out.append(v)
        return out
    v = tgt.astype(float)
    out = [v]
    for _ in range(T):
        v = np.where(tgt, 1.0, _float_step(m, v, mode))
        out.append(v)
    return out


# -- graph algorithms for almost-sure reachability ----------------------------


def _predecessors(m: Mdp) -> List[set]:
    pre = [set() for _ in range(m.n)]
    for s, acts in enumerate(m.actions):
        for d in acts:
            for t, _ in d:
                pre[t].add(s)
    return pre


def _backward_closure(m: Mdp, seeds: np.ndarray, pre, allowed: Optional[np.ndarray] = None) -> np.ndarray:
    seen = seeds.copy()
    queue = deque(np.flatnonzero(seeds).tolist())
    while queue:
        t = queue.popleft()
        for s in pre[t]:
            if not seen[s] and (allowed is None or allowed[s]):
                seen[s] = True
                queue.append(s)
    return seen


def prob0_exists(m: Mdp, target: np.ndarray) -> np.ndarray:
    """States where some scheduler avoids ``target`` forever with probability 1."""
    x = ~target
    while True:
        new = x.copy()
        for s in np.flatnonzero(x):
            if not any(all(x[t] for t, _ in d) for d in m.actions[s]):
                new[s] = False
        if np.array_equal(new, x):
            return x
        x = new


def prob1_all(m: Mdp, target: np.ndarray) -> np.ndarray:
    """States from which every scheduler reaches ``target`` almost surely."""
    avoid = prob0_exists(m, target)
    # a state fails if it can reach an avoiding state without passing the target
    bad = _backward_closure(m, avoid, _predecessors(m), allowed=~target)
    return ~bad


def prob1_exists(m: Mdp, target: np.ndarray) -> np.ndarray:
    """States from which some scheduler reaches ``target`` almost surely."""
    u = np.ones(m.n, dtype=bool)
    while True:
        r = target.copy()
        while True:
            new = r.copy()
            for s in np.flatnonzero(u & ~r):
                for d in m.actions[s]:
                    if all(u[t] for t, _ in d) and any(r[t] for t, _ in d):
                        new[s] = True
                        break
            if np.array_equal(new, r):
                break
            r = new
        if np.array_equal(r, u):
            return u
        u = r


# -- expected rewards ---------------------------------------------------------

RESIDUAL = 1e-9


def expected_reward(
    m: Mdp,
    target,
    rewards=None,
    mode: str = "min",
    residual: float = RESIDUAL,
    max_iterations: int = 10**6,
) -> QueryResult:
    """Optimal expected reward accumulated before reaching ``target``.

    ``rewards`` gives a non-negative state reward (default 1 everywhere, so
    the result counts steps). Each visit to a non-target state earns its
    reward. States that reach the target with probability below 1 under the
    optimising scheduler (for ``max``: under some scheduler) get ``inf``.

    Value iteration in floating point runs until the largest update is at most
    ``residual``; the resulting policy is then evaluated exactly and improved
    with exact arithmetic until no action is strictly better, so the returned
    values are exact optima.
    """
    _check_mode(mode)
    tgt = m.mask(target)
    if not tgt.any():
        raise ValueError("target must be non-empty")
    if rewards is None:
        rew = [ONE] * m.n
    else:
        rew = [Fraction(r) for r in rewards]
        if len(rew) != m.n or any(r < 0 for r in rew):
            raise ValueError("rewards must be one non-negative value per state")

    finite = prob1_all(m, tgt) if mode == "max" else prob1_exists(m, tgt)
    live = [s for s in range(m.n) if finite[s] and not tgt[s]]
    allowed: Dict[int, List[Distribution]] = {}
    for s in live:
        acts = [d for d in m.actions[s] if all(finite[t] for t, _ in d)]
        if mode == "max" and len(acts) != len(m.actions[s]):
            raise AssertionError("almost-sure region is not closed")
        allowed[s] = acts

    # floating point value iteration to pick a starting policy
    index = {s: i for i, s in enumerate(live)}
    choices, owner, rows, cols, vals = [], [], [], [], []
    for s in live:
        for d in allowed[s]:
            k = len(choices)
            choices.append(d)
            owner.append(index[s])
            for t, p in d:
                if t in index:
                    rows.append(k)
                    cols.append(index[t])
                    vals.append(float(p))
    iterations = 0
    res = 0.0
    policy: Dict[int, Distribution] = {}
    if live:
        P = sp.csr_matrix((vals, (rows, cols)), shape=(len(choices), len(live)))
        owner_arr = np.asarray(owner)
        starts = np.searchsorted(owner_arr, np.arange(len(live)))
        r = np.array([float(rew[s]) for s in live])
        red = np.minimum if mode == "min" else np.maximum
        v = np.zeros(len(live))
        for iterations in range(1, max_iterations + 1):
            nv = r + red.reduceat(P @ v, starts)
            res = float(np.max(np.abs(nv - v)))
            v = nv
            if res <= residual:
                break
        q = r[owner_arr] + P @ v
        for i, s in enumerate(live):
            lo, hi = starts[i], starts[i + 1] if i + 1 < len(live) else len(choices)
            seg = q[lo:hi]
            best = int(np.argmin(seg) if mode == "min" else np.argmax(seg))
            policy[s] = choices[lo + best]

    exact_vals = _policy_iteration(policy, allowed, rew, tgt, mode)
    values: list = []
    for s in range(m.n):
        if tgt[s]:
            values.append(Fraction(0))
        elif not finite[s]:
            values.append(math.inf)
        else:
            values.append(exact_vals[s])
    return QueryResult(values, mode, True, iterations, res)


def _policy_iteration(policy, allowed, rew, tgt, mode) -> Dict[int, Fraction]:
    better = (lambda a, b: a < b) if mode == "min" else (lambda a, b: a > b)
    while True:
        vals = solve_policy(policy, rew, tgt)
        changed = False
        for s, acts in allowed.items():
            cur = vals[s]
            best, best_val = None, cur
            for d in acts:
                q = rew[s] + sum(p * vals.get(t, 0) for t, p in d if not tgt[t])
                if better(q, best_val):
                    best, best_val = d, q
            if best is not None:
                policy[s] = best
                changed = True
        if not changed:
            return vals


def solve_policy(policy: Mapping[int, Distribution], rew, tgt) -> Dict[int, Fraction]:
    """Exact expected reward to the target for a fixed memoryless policy.

    Solves ``x_s = r_s + sum_t P(s, t) x_t`` (target states fixed at 0) by
    sparse Gaussian elimination over the rationals, eliminating low-degree
    states first.
    """
    rows: Dict[int, Dict[int, Fraction]] = {}
    rhs: Dict[int, Fraction] = {}
    for s, d in policy.items():
        rows[s] = {t: p for t, p in d if not tgt[t]}
        rhs[s] = Fraction(rew[s])
    for s, row in rows.items():
        for t in row:
            if t not in rows:
                raise MdpError(f"policy leaves the solved region at state {t}")
    preds: Dict[int, set] = {s: set() for s in rows}
    for s, row in rows.items():
        for t in row:
            if t != s:
                preds[t].add(s)

    def cost(s):
        return len(rows[s]) * len(preds[s])

    heap = [(cost(s), s) for s in rows]
    heapq.heapify(heap)
    done = set()
    order = []
    while heap:
        c, s = heapq.heappop(heap)
        if s in done:
            continue
        if c != cost(s):
            heapq.heappush(heap, (cost(s), s))
            continue
        done.add(s)
        order.append(s)
        row = rows[s]
        loop = row.pop(s, 0)
        if loop == 1:
            raise MdpError(f"policy never reaches the target from state {s}")
        if loop:
            f = 1 / (1 - loop)
            for t in row:
                row[t] *= f
            rhs[s] *= f
        for t in row:
            preds[t].discard(s)
        for u in preds[s]:
            urow = rows[u]
            c_us = urow.pop(s)
            rhs[u] += c_us * rhs[s]
            for t, q in row.items():
                urow[t] = urow.get(t, 0) + c_us * q
                if t != u:
                    preds[t].add(u)
            heapq.heappush(heap, (cost(u), u))
        preds[s] = set()
    x: Dict[int, Fraction] = {}
    for s in reversed(order):
        x[s] = rhs[s] + sum(q * x[t] for t, q in rows[s].items())
    return x
