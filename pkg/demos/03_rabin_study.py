"""
Rabin's choice coordination
===========================

``N`` tourists must all end up in the same place, left or right, using only
a noticeboard at each place and a notepad each. We simulate the protocol,
check its invariants, build a finite abstract MDP and ask how quickly the
tourists agree under the best and worst schedulers.
"""

from collections import Counter

from pgclabs.rabin import abstract_mdp, quotient_check, run_paper_queries, simulate, truncated_curve

# %%
# Simulation
# ----------
# One step serves one tourist. The board gap ``|L - R|`` is tracked on every
# state.

gaps = Counter()
steps = []
for seed in range(2000):
    tr = simulate(2, 1, "uniform", seed)
    steps.append(tr.steps)
    gaps.update(abs(s.L - s.R) for s in tr.states)
print("mean steps:", sum(steps) / len(steps), " longest:", max(steps))
print("board gaps seen:", dict(sorted(gaps.items())))

# %%
# The gap reaches 3: a tourist holding 0 at a board showing 0 bumps it to
# 3 with probability 1/2 while the other board still shows 0. A single
# tourist shows it on the first step.

tr = simulate(1, 0, seed=1)
for s in tr.states:
    print(s.to_json())

# %%
# A finite abstraction
# --------------------
# Concrete board values grow without bound. The abstraction keeps the gap
# ``L - R``, the parity of ``L`` and, per tourist, how the notepad compares
# with both boards.

m = abstract_mdp(2, 1)
print(m)
for a in m.abstract[:5]:
    print(" ", a)

# %%
# It is a quotient of the concrete model: lifting every concrete action gives
# exactly the abstract actions.

rep = quotient_check(2, 1, board_cap=15)
print({k: v for k, v in rep.items() if k != "mismatches"}, "mismatches:", len(rep["mismatches"]))

# %%
# Agreement probabilities
# -----------------------
# Pmin and Pmax of all tourists being inside one place within ``T`` steps.
# The initial split over the two places is chosen by the adversary. The
# truncated concrete model gives the same numbers for small ``T``.

report = run_paper_queries(3, t_max=30, conventions=("step",))
print(report.csv())
rows, conc = truncated_curve(2, 1, 8)
print("truncated (2,1), T=8:", rows[8], "on", conc.n, "states")

# %%
# Expected time to agree
# ----------------------
# ``step`` counts iterations; ``sweep`` counts rounds in which every waiting
# tourist is served once.

for n in (2, 3):
    print(run_paper_queries(n, t_max=0).table())
