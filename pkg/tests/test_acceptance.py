"""Acceptance criteria, one test each.

Every test records its outcome through ``criterion`` so the terminal summary
prints one PASS/FAIL line per criterion with the details gathered on the way.
A criterion that does not hold is left failing; the notes say why.
"""

import random
import time
from fractions import Fraction as F

from conftest import criterion

from pgclabs import corpus
from pgclabs.abstraction import check_info_preserving, cubed, cubes, wp_abs
from pgclabs.laws import check_laws, random_law_case
from pgclabs.mdp import expected_reward, extract_mdp, is_deterministic, loop_of, pbounded, pbounded_curve, quotient_mdp
from pgclabs.rabin import (
    abstract_mdp,
    run_paper_queries,
    simulate,
    splits,
    truncated_curve,
)
from pgclabs.semantics import as_expectation, wp, wp_bounded_loop
from pgclabs.statespace import StateSpace

INC = "x := x / 2 [1/2] x := x + 1"
EVEN = ["x = 0 or x = 2"]


def _subchecks(notes, checks):
    failed = []
    for name, fn in checks:
        start = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash counts as a failed sub-check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        secs = time.perf_counter() - start
        ok = ok and secs < 1.0
        notes.append(f"{'ok ' if ok else 'BAD'} {name} ({secs:.3f}s){': ' + detail if detail else ''}")
        if not ok:
            failed.append(name)
    assert not failed, f"failed sub-checks: {failed}"


def test_worked_examples():
    space = StateSpace(corpus.load("inc").decls)
    two = StateSpace(corpus.load("twoflip").decls)

    def E(text, sp=space):
        return as_expectation(text, sp)

    def vals(e):
        return "(" + ", ".join(str(v) for v in e.values) + ")"

    def inc_x1():
        got = wp(INC, "[x=1]", space)
        want = E("[x=0 or x=2]/2")
        return got == want, f"got {vals(got)}, expected {vals(want)}"

    def inc_even():
        got = wp(INC, "[x=0 or x=2]", space)
        return got == E("[x=0 or x=3]/2 + [x=1]"), vals(got)

    def abs_even():
        return wp_abs(INC, "[x=0 or x=2]", EVEN, space) == E("[x=1 or x=3]/2"), ""

    def abs_odd():
        return wp_abs(INC, "[x=1 or x=3]", EVEN, space) == E("[x=0 or x=2]/2"), ""

    def gap():
        whole = wp_abs(f"({INC}); ({INC})", "[x=0 or x=2]", EVEN, space)
        step = wp_abs(INC, wp_abs(INC, "[x=0 or x=2]", EVEN, space), EVEN, space)
        ok = whole == E("3/4*[x=0 or x=2] + 1/4*[x=1 or x=3]") and step == E("[x=0 or x=2]/4") and step < whole
        return ok, f"whole {vals(whole)}, stepwise {vals(step)}"

    def twoflip_ip():
        return check_info_preserving(corpus.load("twoflip").program, ["x = y"], two).preserving, ""

    def inc_witness():
        r = check_info_preserving(INC, EVEN, space)
        w = r.witness
        concrete = wp(INC, f"[{w.predicate}]", space)
        abstract = cubed(concrete, cubes(EVEN, space))
        labels = [space.label(s) for s in range(space.count)]
        rechecked = all(concrete[labels.index(s)] == a != abstract[labels.index(s)] == b for s, a, b in w.states)
        return (not r.preserving) and bool(w.states) and rechecked, f"witness on [{w.predicate}]"

    def quotients():
        tf = corpus.load("twoflip_loop")
        q_tf = quotient_mdp(extract_mdp(tf), cubes(["x = y"], StateSpace(tf.decls)))
        il = corpus.load("inc_loop")
        q_inc = quotient_mdp(extract_mdp(il), cubes(EVEN, StateSpace(il.decls)))
        return is_deterministic(q_tf) and not is_deterministic(q_inc), f"inc quotient has {q_inc.num_choices} choices"

    with criterion("worked-example exactness") as notes:
        _subchecks(notes, [
            ("wp(inc, [x=1])", inc_x1),
            ("wp(inc, [even])", inc_even),
            ("wp_abs(inc, [even])", abs_even),
            ("wp_abs(inc, [odd])", abs_odd),
            ("abstraction gap of inc;inc", gap),
            ("twoFlip with x=y preserving", twoflip_ip),
            ("inc with even not preserving, witness re-checked", inc_witness),
            ("quotient determinism (twoFlip yes, inc no)", quotients),
        ])


def test_property_suite():
    with criterion("property suite") as notes:
        start = time.perf_counter()
        cases = ip = exact = 0
        violations = []
        for seed in range(400):
            rng = random.Random(seed)
            model, phi = random_law_case(rng)
            rep = check_laws(rng, model, phi)
            cases += 1
            ip += rep.ip
            exact += sum(n.startswith("exact: composition") for n in rep.checked)
            violations += [(seed, v) for v in rep.violations]
        secs = time.perf_counter() - start
        notes.append(f"{cases} models, {ip} pass the preservation check, {exact} composition-law checks")
        notes.append(f"{len(violations)} violations in {secs:.1f}s")
        assert cases >= 200 and ip > 0 and exact > 0
        assert violations == []
        assert secs < 120


def test_oracle_equivalence():
    with criterion("transformer/MDP oracle equivalence") as notes:
        start = time.perf_counter()
        for name in corpus.loop_models():
            md = corpus.load(name)
            space = StateSpace(md.decls)
            loop = loop_of(md)
            m = extract_mdp(md)
            for k in range(9):
                want = list(wp_bounded_loop(loop.guard, loop.body, "1", k, space).values)
                got = pbounded(m, "exit", k, "min").values[: space.count]
                assert got == want, (name, k)
        notes.append(f"{len(corpus.loop_models())} loop models, k = 0..8")
        for name, preds in (("twoflip_loop", "twoflip"), ("race", "race")):
            md = corpus.load(name)
            space = StateSpace(md.decls)
            phi = corpus.predicates(preds)
            part = cubes(phi, space)
            assert check_info_preserving(md.program.body, phi, space).preserving
            m = extract_mdp(md)
            q = quotient_mdp(m, part)
            for mode in ("min", "max"):
                for T in range(9):
                    a, b = pbounded(m, "exit", T, mode).values, pbounded(q, "exit", T, mode).values
                    assert all(a[s] == b[part.cube_of[s]] for s in range(space.count)), (name, mode, T)
                a = expected_reward(m, "exit", mode=mode).values
                b = expected_reward(q, "exit", mode=mode).values
                assert all(a[s] == b[part.cube_of[s]] for s in range(space.count)), (name, mode)
            notes.append(f"{name}: quotient ({q.n} states) equals concrete ({m.n} states)")
        assert time.perf_counter() - start < 60


def test_rabin_invariants():
    with criterion("Rabin invariants") as notes:
        start = time.perf_counter()
        schedulers = ("uniform", "round-robin", "adversarial")
        gap_traces = conservation = unfinished = 0
        worst = 0
        for n in (2, 3):
            cases = splits(n)
            for i in range(10_000):
                a, b = cases[i % len(cases)]
                tr = simulate(a, b, schedulers[i % 3], seed=i)
                unfinished += not tr.terminated
                conservation += sum(1 for _, v in tr.violations if v.startswith("tourist"))
                gap_traces += any(v.startswith("|L-R|") for _, v in tr.violations)
                worst = max(worst, max(abs(s.L - s.R) for s in tr.states))
        single = {simulate(1, 0, seed=s).steps for s in range(100)} | {simulate(0, 1, seed=s).steps for s in range(100)}
        secs = time.perf_counter() - start
        notes.append(f"20000 traces in {secs:.1f}s, {unfinished} unfinished")
        notes.append(f"tourist conservation violations: {conservation}")
        notes.append(f"single-tourist step counts: {sorted(single)}")
        notes.append(f"traces with |L-R| > 2: {gap_traces} (largest gap {worst})")
        notes.append("a bump from K = 0 yields board 3 while the other board still reads 0")
        assert conservation == 0 and single == {2} and unfinished == 0 and secs < 60
        assert gap_traces == 0, f"{gap_traces} traces violate |L-R| <= 2"


def test_rabin_abstraction_soundness():
    with criterion("Rabin abstraction soundness") as notes:
        start = time.perf_counter()
        T = 10
        worst = 0.0
        for n in (2, 3):
            for a, b in splits(n):
                m = abstract_mdp(a, b)
                lo = pbounded_curve(m, "target", T, "min", exact=True)
                hi = pbounded_curve(m, "target", T, "max", exact=True)
                s0 = m.initial[0]
                rows, conc = truncated_curve(a, b, T, board_cap=3 * T + 3)
                for t in range(T + 1):
                    worst = max(worst, abs(float(lo[t][s0]) - rows[t][0]), abs(float(hi[t][s0]) - rows[t][1]))
                notes.append(f"N={n} split {a},{b}: abstract {m.n} states, truncated {conc.n} states")
        notes.append(f"largest difference for T <= {T}: {worst:.3g}")
        assert worst <= 1e-6
        for n in (2, 3):
            curve = run_paper_queries(n, t_max=60, conventions=()).curve
            lows = [float(lo) for _, lo, _ in curve]
            assert all(x <= y for x, y in zip(lows, lows[1:]))
            first = next((t for t, v in enumerate(lows) if v > 0.99), None)
            notes.append(f"N={n}: Pmin first exceeds 0.99 at T={first}")
            assert first is not None
        assert time.perf_counter() - start < 300


def test_rabin_table():
    with criterion("Rabin reward table (documented conventions)") as notes:
        reference = {2: (F(2), F(7)), 3: (F(2), F(11))}
        matches = {"step": True, "sweep": True}
        reported = set()
        for n in (2, 3):
            rep = run_paper_queries(n, t_max=6, oracle_t=6)
            assert rep.oracle["agrees"]
            for conv, row in rep.rewards.items():
                pair = (row["rmin"], row["rmax"])
                reported.add((n, conv))
                matches[conv] &= pair == reference[n]
                per = "; ".join(f"{k}: {v}" for k, v in row["per_split"].items())
                notes.append(f"N={n} {conv}: Rmin={pair[0]} Rmax={pair[1]}  ({per})")
                for split, b in rep.oracle["reward_lower_bounds"][conv].items():
                    a_min, a_max = (F(x) for x in row["per_split"][split].split(" / "))
                    assert F(b["rmin_lower"]) <= a_min and F(b["rmax_lower"]) <= a_max
            notes.append(f"N={n}: truncated curve agrees up to T=6; truncated reward lower bounds lie below")
        reproduced = [c for c, ok in matches.items() if ok]
        notes.append(f"conventions giving the reference values (2,7), (2,11): {reproduced or 'none'}")
        # Either a convention reproduces the table, or both are reported for
        # both sizes next to the truncated cross-check.
        assert reproduced or reported == {(n, c) for n in (2, 3) for c in ("step", "sweep")}
