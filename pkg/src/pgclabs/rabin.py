"""Rabin's choice-coordination protocol: simulator, truncated concrete MDP and
the slot abstraction.

Tourists wait in ``lout`` (``rout``) to read the left (right) noticeboard,
which shows ``L`` (``R``). A served tourist holding ``k`` either goes inside
(``lin``/``rin``) when somebody already decided there or ``k > K``; copies the
board when ``k < K``; or, when ``k = K``, bumps the board to ``K + 2`` or its
conjugate with a fair coin and copies it. Either way a tourist who stays
undecided walks to the other place.

One step is one loop iteration: a single tourist is served.

Two reward conventions are supported. ``"step"`` earns 1 per iteration in
non-target states. ``"sweep"`` groups iterations into rounds in which every
waiting tourist is served exactly once; each round earns 1. Sweep states
carry the already-served waiting tourists in ``lout_done``/``rout_done`` and
a ``mid_round`` flag.
"""

from __future__ import annotations

import csv
import io
import json
import random
from collections import Counter, deque
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple

from pgclabs.mdp import Mdp, MdpError, expected_reward, make_distribution, pbounded_curve

HALF = Fraction(1, 2)
CONVENTIONS = ("step", "sweep")
DEFAULT_STATE_LIMIT = 2 * 10**6


def conj(n: int) -> int:
    """``n + 1`` for even ``n``, ``n - 1`` for odd ``n``."""
    return n + 1 if n % 2 == 0 else n - 1


def _add(bag: tuple, v: int) -> tuple:
    return tuple(sorted(bag + (v,)))


def _remove(bag: tuple, v: int) -> tuple:
    i = bag.index(v)
    return bag[:i] + bag[i + 1:]


@dataclass(frozen=True)
class ConcreteRabinState:
    """Bags are sorted tuples of notepad values."""

    lout: tuple
    rout: tuple
    lin: tuple
    rin: tuple
    L: int
    R: int
    lout_done: tuple = ()
    rout_done: tuple = ()
    mid_round: bool = False

    @property
    def tourists(self) -> int:
        return sum(map(len, (self.lout, self.rout, self.lin, self.rin, self.lout_done, self.rout_done)))

    @property
    def waiting(self) -> int:
        return len(self.lout) + len(self.rout) + len(self.lout_done) + len(self.rout_done)

    @property
    def terminated(self) -> bool:
        return self.waiting == 0

    def decided(self, n: int) -> bool:
        """All ``n`` tourists are inside the same place."""
        return len(self.lin) == n or len(self.rin) == n

    @property
    def round_start(self) -> bool:
        return not self.mid_round

    def to_json(self) -> dict:
        d = asdict(self)
        d = {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
        if not self.lout_done and not self.rout_done and not self.mid_round:
            del d["lout_done"], d["rout_done"], d["mid_round"]
        return d


def initial_state(A: int, B: int) -> ConcreteRabinState:
    if A < 0 or B < 0:
        raise ValueError("tourist counts must be non-negative")
    return ConcreteRabinState((0,) * A, (0,) * B, (), (), 0, 0)


def moves(s: ConcreteRabinState) -> List[Tuple[str, int]]:
    """Enabled demonic choices: a side and a distinct value in its queue."""
    out = [("left", v) for v in sorted(set(s.lout))]
    out += [("right", v) for v in sorted(set(s.rout))]
    return out


def step(s: ConcreteRabinState, side: str, value: int, sweep: bool = False) -> List[Tuple[Fraction, ConcreteRabinState]]:
    """Serve one tourist holding ``value`` on ``side``; the outcome distribution."""
    if side == "left":
        own, other, inside, board = s.lout, s.rout, s.lin, s.L
    else:
        own, other, inside, board = s.rout, s.lout, s.rin, s.R
    own = _remove(own, value)

    def build(own, other_pad, inside, board):
        # other_pad: value added to the other queue, or None if the tourist went in
        lout_done, rout_done = s.lout_done, s.rout_done
        if side == "left":
            lout, rout, lin, L, R = own, other, inside, board, s.R
            rin = s.rin
            if other_pad is not None:
                if sweep:
                    rout_done = _add(rout_done, other_pad)
                else:
                    rout = _add(rout, other_pad)
        else:
            rout, lout, rin, R, L = own, other, inside, board, s.L
            lin = s.lin
            if other_pad is not None:
                if sweep:
                    lout_done = _add(lout_done, other_pad)
                else:
                    lout = _add(lout, other_pad)
        mid = sweep
        if sweep and not lout and not rout:
            lout, rout, lout_done, rout_done = lout_done, rout_done, (), ()
            mid = False
        return ConcreteRabinState(lout, rout, lin, rin, L, R, lout_done, rout_done, mid)

    if inside or value > board:
        return [(Fraction(1), build(own, None, _add(inside, value), board))]
    if value < board:
        return [(Fraction(1), build(own, board, inside, board))]
    hi, lo = board + 2, conj(board + 2)
    return [(HALF, build(own, hi, inside, hi)), (HALF, build(own, lo, inside, lo))]


def invariant_violations(s: ConcreteRabinState, n: int) -> List[str]:
    out = []
    if abs(s.L - s.R) > 2:
        out.append(f"|L-R| = {abs(s.L - s.R)} > 2")
    if s.tourists != n:
        out.append(f"tourist count {s.tourists} != {n}")
    return out


# -- simulation ---------------------------------------------------------------

SCHEDULERS = ("uniform", "round-robin", "adversarial")


@dataclass
class Trace:
    states: List[ConcreteRabinState]
    choices: List[Tuple[str, int]]
    terminated: bool
    violations: List[Tuple[int, str]] = field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.choices)

    def to_jsonl(self) -> str:
        lines = []
        for i, s in enumerate(self.states):
            rec = {"step": i, **s.to_json()}
            if i < len(self.choices):
                rec["next"] = list(self.choices[i])
            lines.append(json.dumps(rec))
        return "\n".join(lines) + "\n"


def _adversarial(s: ConcreteRabinState, options, rng: random.Random):
    # Prefer serving tourists that stay undecided, coin flips first.
    def rank(opt):
        side, v = opt
        inside, board = (s.lin, s.L) if side == "left" else (s.rin, s.R)
        if inside or v > board:
            return 2
        return 0 if v == board else 1

    best = min(rank(o) for o in options)
    return rng.choice([o for o in options if rank(o) == best])


def simulate(
    A: int,
    B: int,
    scheduler: str = "uniform",
    seed: int = 0,
    max_steps: int = 10**4,
) -> Trace:
    """Run the protocol once; the coin and the ``uniform`` scheduler use ``seed``."""
    if scheduler not in SCHEDULERS:
        raise ValueError(f"unknown scheduler {scheduler!r}; choose from {SCHEDULERS}")
    rng = random.Random(seed)
    s = initial_state(A, B)
    n = A + B
    states, choices, violations = [s], [], []
    last_side = "right"
    while not s.terminated and len(choices) < max_steps:
        options = moves(s)
        if scheduler == "uniform":
            choice = rng.choice(options)
        elif scheduler == "round-robin":
            want = "left" if last_side == "right" else "right"
            pick = [o for o in options if o[0] == want] or options
            choice = pick[0]
        else:
            choice = _adversarial(s, options, rng)
        last_side = choice[0]
        outcomes = step(s, *choice)
        if len(outcomes) == 1:
            s = outcomes[0][1]
        else:
            s = outcomes[0][1] if rng.random() < 0.5 else outcomes[1][1]
        choices.append(choice)
        states.append(s)
        for v in invariant_violations(s, n):
            violations.append((len(choices), v))
    return Trace(states, choices, s.terminated, violations)


# -- explicit MDP construction -------------------------------------------------


def _explore(
    initial: Sequence[ConcreteRabinState],
    n: int,
    sweep: bool,
    key: Callable[[ConcreteRabinState], Hashable],
    representative: Callable[[Hashable], ConcreteRabinState],
    admissible: Callable[[ConcreteRabinState], bool],
    state_limit: int,
) -> Tuple[Mdp, list, list]:
    """Breadth-first construction; inadmissible successors go to ``overflow``."""
    OVER = "overflow"
    index: Dict[Hashable, int] = {}
    keys: List[Hashable] = []
    queue = deque()

    def intern(k):
        i = index.get(k)
        if i is None:
            if len(keys) >= state_limit:
                raise MdpError(f"state limit {state_limit} exceeded")
            i = index[k] = len(keys)
            keys.append(k)
            queue.append(k)
        return i

    init_ids = [intern(key(s)) for s in initial]
    actions: List[List] = []
    while queue:
        k = queue.popleft()
        i = index[k]
        if k == OVER:
            acts = [((i, Fraction(1)),)]
        else:
            s = representative(k)
            if s.terminated or s.decided(n):
                acts = [((i, Fraction(1)),)]
            else:
                acts = []
                for side, v in moves(s):
                    dist: Dict[int, Fraction] = {}
                    for p, t in step(s, side, v, sweep):
                        j = intern(key(t) if admissible(t) else OVER)
                        dist[j] = dist.get(j, 0) + p
                    acts.append(make_distribution(dist))
        while len(actions) <= i:
            actions.append(None)
        actions[i] = acts

    target, rewards, names = [], [], []
    for i, k in enumerate(keys):
        if k == OVER:
            names.append("overflow")
            rewards.append(Fraction(0))
            continue
        s = representative(k)
        names.append(_name(k))
        if s.decided(n):
            target.append(i)
        rewards.append(Fraction(1) if (s.round_start or not sweep) and not s.decided(n) else Fraction(0))
    labels = {"target": target, "init": init_ids}
    if OVER in index:
        labels["overflow"] = [index[OVER]]
    return Mdp(actions, init_ids, labels, names), keys, rewards


def _name(k) -> str:
    if isinstance(k, ConcreteRabinState):
        return json.dumps(k.to_json(), separators=(",", ":"))
    return str(k)


def splits(n: int) -> List[Tuple[int, int]]:
    return [(a, n - a) for a in range(n + 1)]


def truncated_mdp(
    A: int,
    B: int,
    board_cap: int,
    convention: str = "step",
    state_limit: int = DEFAULT_STATE_LIMIT,
) -> Mdp:
    """Concrete MDP with every noticeboard and notepad value at most ``board_cap``.

    A transition producing a larger value goes to the absorbing ``overflow``
    state. One step raises any value by at most 3, so the model is exact for
    horizons ``T`` with ``board_cap >= 3T + 3``. The state rewards of the chosen
    convention are attached as ``m.rewards``.
    """
    if board_cap < 2:
        raise ValueError("board_cap must be at least 2")
    _check_convention(convention)
    sweep = convention == "sweep"

    def admissible(s):
        return s.L <= board_cap and s.R <= board_cap

    m, keys, rewards = _explore(
        [initial_state(A, B)], A + B, sweep, lambda s: s, lambda k: k, admissible, state_limit
    )
    m.rewards = rewards
    m.concrete = keys
    return m


# -- the slot abstraction -------------------------------------------------------

LOW = "low"  # any notepad value below both boards
# Largest reachable board gap. A bump from K = 0 gives 3 while the other board
# still shows 0, so the gap is not bounded by 2.
MAX_GAP = 3
_QUEUES = ("lout", "rout", "lin", "rin", "lout_done", "rout_done")


def _cmp(a: int, b: int) -> str:
    return "lt" if a < b else ("eq" if a == b else "gt")


@dataclass(frozen=True, order=True)
class AbstractRabinState:
    """``d = L - R`` and the parity of ``L`` fix the boards up to an even shift;
    each tourist is a descriptor ``(queue, cmp to L, cmp to R)``."""

    d: int
    parity: int
    descriptors: Tuple[Tuple[str, str, str], ...]
    mid_round: bool = False

    @property
    def slot(self) -> Optional[int]:
        """0 if L = R, 1 if the boards are 2 apart, 2 if L is the conjugate of
        R; ``None`` for gaps outside these three cases."""
        L = self.d + (self.parity - self.d) % 2  # representative with R in {0, 1}
        R = L - self.d
        if L == R:
            return 0
        if abs(self.d) == 2:
            return 1
        if L == conj(R):
            return 2
        return None

    def __str__(self) -> str:
        counts = Counter(self.descriptors)
        body = ",".join(
            f"{q}:{l}/{r}" + (f"*{c}" if c > 1 else "") for (q, l, r), c in sorted(counts.items())
        )
        mid = ",mid-round" if self.mid_round else ""
        return f"slot={self.slot},d={self.d},L%2={self.parity},[{body}]{mid}"


def abstract(s: ConcreteRabinState) -> AbstractRabinState:
    """Abstraction function from concrete states to slot/descriptor states."""
    d = s.L - s.R
    if abs(d) > MAX_GAP:
        raise AssertionError(f"|L-R| = {abs(d)} exceeds {MAX_GAP} in {s}")
    descs = []
    for q in _QUEUES:
        for v in getattr(s, q):
            descs.append((q, _cmp(v, s.L), _cmp(v, s.R)))
    return AbstractRabinState(d, s.L % 2, tuple(sorted(descs)), s.mid_round)


def concretize(a: AbstractRabinState) -> ConcreteRabinState:
    """A representative concrete state of ``a``."""
    p_r = (a.parity - a.d) % 2
    R = 6 + p_r
    L = R + a.d
    low = min(L, R) - 1
    bags: Dict[str, list] = {q: [] for q in _QUEUES}
    for q, cl, cr in a.descriptors:
        if cl == "eq":
            v = L
        elif cr == "eq":
            v = R
        elif cl == "lt" and cr == "lt":
            v = low
        else:
            raise AssertionError(f"inconsistent descriptor {(q, cl, cr)} in {a}")
        if (_cmp(v, L), _cmp(v, R)) != (cl, cr):
            raise AssertionError(f"inconsistent descriptor {(q, cl, cr)} in {a}")
        bags[q].append(v)
    return ConcreteRabinState(*(tuple(sorted(bags[q])) for q in _QUEUES[:4]), L, R,
                              tuple(sorted(bags["lout_done"])), tuple(sorted(bags["rout_done"])),
                              a.mid_round)


def abstract_mdp(A: int, B: int, convention: str = "step", state_limit: int = DEFAULT_STATE_LIMIT) -> Mdp:
    """Finite MDP over board-gap/descriptor states.

    A notepad value is always below both boards or equal to one of them, so a
    descriptor determines it up to values that behave identically.
    Transitions are obtained by stepping a representative concrete state and
    abstracting the outcomes; consistency of the abstraction is asserted on
    every state produced. Labels ``target`` and ``init``; the convention's
    rewards are attached as ``m.rewards`` and the abstract states as
    ``m.abstract``.
    """
    _check_convention(convention)
    if A + B < 0:
        raise ValueError("tourist counts must be non-negative")
    sweep = convention == "sweep"

    def rep(a):
        c = concretize(a)
        if abstract(c) != a:
            raise AssertionError(f"representative of {a} does not abstract back")
        return c

    m, keys, rewards = _explore(
        [initial_state(A, B)], A + B, sweep, abstract, rep, lambda s: True, state_limit
    )
    m.rewards = rewards
    m.abstract = keys
    return m


def quotient_check(A: int, B: int, board_cap: int, convention: str = "step") -> dict:
    """Compare the abstraction of the truncated MDP with :func:`abstract_mdp`.

    For every concrete state whose actions stay below the cap, its actions are
    lifted through :func:`abstract` and must, after merging duplicates, be
    exactly the actions of the corresponding abstract state. Also reports
    whether every abstract state is hit by some such concrete state.
    """
    conc = truncated_mdp(A, B, board_cap, convention)
    absm = abstract_mdp(A, B, convention)
    a_index = {a: i for i, a in enumerate(absm.abstract)}
    over = set(conc.labels.get("overflow", ()))
    checked, mismatches, covered = 0, [], set()
    for i, s in enumerate(conc.concrete):
        if i in over or any(t in over for d in conc.actions[i] for t, _ in d):
            continue
        a = abstract(s)
        ai = a_index.get(a)
        if ai is None:
            mismatches.append((str(s), "abstract state missing"))
            continue
        lifted = set()
        for d in conc.actions[i]:
            dist: Dict[int, Fraction] = {}
            for t, p in d:
                j = a_index[abstract(conc.concrete[t])]
                dist[j] = dist.get(j, 0) + p
            lifted.add(make_distribution(dist))
        if lifted != set(absm.actions[ai]):
            mismatches.append((str(s), str(a)))
        checked += 1
        covered.add(ai)
    return {
        "concrete_states": conc.n,
        "checked": checked,
        "abstract_states": absm.n,
        "covered": len(covered),
        "mismatches": mismatches,
    }


def _check_convention(convention: str) -> None:
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}; choose from {CONVENTIONS}")


# -- the study queries ------------------------------------------------------------


@dataclass
class RabinReport:
    n: int
    t_max: int
    split: Optional[Tuple[int, int]]
    curve: List[Tuple[int, Fraction, Fraction]]
    per_split_curve: Dict[Tuple[int, int], List[Tuple[Fraction, Fraction]]]
    rewards: Dict[str, Dict[str, object]]
    abstract_states: Dict[str, int]
    oracle: Optional[dict] = None

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["T", "pmin", "pmax"])
        for t, lo, hi in self.curve:
            w.writerow([t, f"{float(lo):.12g}", f"{float(hi):.12g}"])
        return buf.getvalue()

    def table(self) -> str:
        lines = [f"N = {self.n}" + (f", split {self.split}" if self.split else ", demonic split")]
        lines.append(f"{'convention':<10} {'Rmin':>12} {'Rmax':>12}")
        for conv, row in self.rewards.items():
            lines.append(f"{conv:<10} {_fmt(row['rmin']):>12} {_fmt(row['rmax']):>12}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "N": self.n,
            "T_max": self.t_max,
            "split": list(self.split) if self.split else None,
            "curve": [{"T": t, "pmin": str(lo), "pmax": str(hi)} for t, lo, hi in self.curve],
            "per_split_curve": {
                f"{a},{b}": [{"pmin": str(lo), "pmax": str(hi)} for lo, hi in rows]
                for (a, b), rows in self.per_split_curve.items()
            },
            "rewards": {
                conv: {
                    k: (_fmt(v) if not isinstance(v, dict) else {kk: _fmt(vv) for kk, vv in v.items()})
                    for k, v in row.items()
                }
                for conv, row in self.rewards.items()
            },
            "abstract_states": self.abstract_states,
            "oracle": self.oracle,
        }


def _fmt(v) -> str:
    if v == float("inf"):
        return "inf"
    return str(v)


def _initial_optimum(result, m: Mdp, mode: str):
    vals = [result[s] for s in m.initial]
    return min(vals) if mode == "min" else max(vals)


def run_paper_queries(
    n: int,
    split: Optional[Tuple[int, int]] = None,
    t_max: int = 30,
    conventions: Sequence[str] = CONVENTIONS,
    oracle_t: int = 0,
) -> RabinReport:
    """Pmin/Pmax curves of reaching an all-in-one-place state within ``T`` steps,
    and Rmin/Rmax expected rounds until then, on the abstract model.

    Without ``split`` the initial distribution of tourists over the two places
    is chosen demonically: minima take the worst split, maxima the best one
    for the maximiser. ``oracle_t > 0`` additionally computes the curve up to
        ``oracle_t`` on the truncated concrete model with cap ``3 * oracle_t + 3``,
    together with lower bounds for the rewards on that model.
    """
    if split is not None and sum(split) != n:
        raise ValueError("split must add up to N")
    cases = [tuple(split)] if split is not None else splits(n)
    per_split: Dict[Tuple[int, int], List[Tuple[Fraction, Fraction]]] = {}
    models = {}
    for a, b in cases:
        m = abstract_mdp(a, b)
        models[(a, b)] = m
        lo = pbounded_curve(m, "target", t_max, "min", exact=True)
        hi = pbounded_curve(m, "target", t_max, "max", exact=True)
        per_split[(a, b)] = [(lo[t][m.initial[0]], hi[t][m.initial[0]]) for t in range(t_max + 1)]
    curve = [
        (t, min(per_split[c][t][0] for c in cases), max(per_split[c][t][1] for c in cases))
        for t in range(t_max + 1)
    ]
    rewards: Dict[str, Dict[str, object]] = {}
    sizes = {}
    for conv in conventions:
        by_split = {}
        for a, b in cases:
            m = models[(a, b)] if conv == "step" else abstract_mdp(a, b, conv)
            sizes[f"{conv}:{a},{b}"] = m.n
            rmin = expected_reward(m, "target", m.rewards, "min")[m.initial[0]]
            rmax = expected_reward(m, "target", m.rewards, "max")[m.initial[0]]
            by_split[f"{a},{b}"] = (rmin, rmax)
        rewards[conv] = {
            "rmin": min(v[0] for v in by_split.values()),
            "rmax": max(v[1] for v in by_split.values()),
            "per_split": {k: f"{_fmt(v[0])} / {_fmt(v[1])}" for k, v in by_split.items()},
        }
    oracle = None
    if oracle_t > 0:
        oracle = truncated_curve_check(n, oracle_t, cases, per_split)
        cap = 3 * oracle_t + 3
        oracle["reward_lower_bounds"] = {
            conv: {
                f"{a},{b}": {k: _fmt(v) for k, v in truncated_reward_bounds(a, b, cap, conv).items()}
                for a, b in cases
            }
            for conv in conventions
        }
    return RabinReport(n, t_max, tuple(split) if split else None, curve, per_split, rewards, sizes, oracle)


def truncated_curve(a: int, b: int, t_max: int, board_cap: Optional[int] = None, exact: bool = False):
    """Pmin/Pmax at the initial state for ``T = 0..t_max`` on the truncated model."""
    cap = 3 * t_max + 3 if board_cap is None else board_cap
    m = truncated_mdp(a, b, cap)
    lo = pbounded_curve(m, "target", t_max, "min", exact=exact)
    hi = pbounded_curve(m, "target", t_max, "max", exact=exact)
    s0 = m.initial[0]
    conv = (lambda v: v) if exact else float
    return [(conv(lo[t][s0]), conv(hi[t][s0])) for t in range(t_max + 1)], m


def truncated_curve_check(n, t_max, cases, per_split, tol: float = 1e-6) -> dict:
    worst = 0.0
    states = {}
    for a, b in cases:
        rows, m = truncated_curve(a, b, t_max)
        states[f"{a},{b}"] = m.n
        for t, (lo, hi) in enumerate(rows):
            alo, ahi = per_split[(a, b)][t]
            worst = max(worst, abs(float(lo) - float(alo)), abs(float(hi) - float(ahi)))
    return {"T_max": t_max, "board_cap": 3 * t_max + 3, "max_abs_diff": worst,
            "agrees": worst <= tol, "truncated_states": states}


def truncated_reward_bounds(a: int, b: int, board_cap: int, convention: str = "step") -> dict:
    """Rmin/Rmax on the truncated model with ``overflow`` counted as a target.

    Every run is cut short at the cap, so both values are lower bounds for the
    unbounded concrete system; they increase towards the exact values as the
    cap grows.
    """
    m = truncated_mdp(a, b, board_cap, convention)
    tgt = set(m.labels["target"]) | set(m.labels.get("overflow", ()))
    s0 = m.initial[0]
    rmin = expected_reward(m, tgt, m.rewards, "min")[s0]
    rmax = expected_reward(m, tgt, m.rewards, "max")[s0]
    return {"board_cap": board_cap, "states": m.n, "rmin_lower": rmin, "rmax_lower": rmax}
