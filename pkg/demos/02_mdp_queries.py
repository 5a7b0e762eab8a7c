"""
Loops as Markov decision processes
==================================

A loop ``do G -> Body od`` becomes an MDP whose steps are loop iterations.
Bounded-reachability values on that MDP agree with unrolling the loop in the
expectation transformer, and a preserving predicate set gives a smaller MDP
with the same values.
"""

from pgclabs import corpus
from pgclabs.abstraction import check_info_preserving, cubes
from pgclabs.mdp import expected_reward, extract_mdp, loop_of, pbounded, quotient_mdp
from pgclabs.semantics import wp_bounded_loop
from pgclabs.statespace import StateSpace

# %%
# Two players chase each other
# ----------------------------
# In ``race`` the scheduler decides who tries to catch up. Each attempt
# succeeds with probability 1/2 for ``x`` and 1/3 for ``y``.

model = corpus.load("race")
print(corpus.source("race"))
space = StateSpace(model.decls)
loop = loop_of(model)
m = extract_mdp(model)
print(m, "labels:", sorted(m.labels))

# %%
# Transformer and MDP agree
# -------------------------
# The probability of leaving the loop within ``k`` iterations, computed both
# ways, for the start state ``x=0, y=3``.

s = next(i for i in range(space.count) if space.label(i) == "x=0,y=3")
for k in range(6):
    by_wp = wp_bounded_loop(loop.guard, loop.body, "1", k, space)[s]
    by_mdp = pbounded(m, "exit", k, "min")[s]
    print(f"k={k}: wp {str(by_wp):>6}   Pmin {str(by_mdp):>6}")

# %%
# Quotient by ``x = y``
# ---------------------
# Each branch of the demonic choice is preserving for ``x = y``, so the
# two-state quotient gives the same values as the 16-state MDP.

phi = corpus.predicates("race")
print(check_info_preserving(loop.body, phi, space).verdict)
part = cubes(phi, space)
q = quotient_mdp(m, part)
print(q, [q.name(b) for b in range(q.n)])
for mode in ("min", "max"):
    conc = expected_reward(m, "exit", mode=mode)[s]
    abst = expected_reward(q, "exit", mode=mode)[part.cube_of[s]]
    print(f"R{mode} iterations until x = y: concrete {conc}, quotient {abst}")

# %%
# Exporting
# ---------
# The explicit files can be loaded by PRISM's explicit engine.

print(q.to_prism_explicit()["tra"])
