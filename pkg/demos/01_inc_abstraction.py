"""
Abstracting a small probabilistic program
=========================================

``inc`` halves or increments a counter modulo 4 with a fair coin. We compute
its exact pre-expectations, then look at what is lost when only the parity
of ``x`` is tracked.
"""

from pgclabs import corpus
from pgclabs.abstraction import check_info_preserving, cubes, wp_abs
from pgclabs.ast import Seq
from pgclabs.semantics import wp
from pgclabs.statespace import StateSpace

model = corpus.load("inc")
space = StateSpace(model.decls)
inc = model.program


def show(label, e):
    print(f"{label:<34}", "  ".join(f"{space.label(s)}:{v}" for s, v in enumerate(e.values)))


# %%
# Exact pre-expectations
# ----------------------
# ``wp(inc, [x=1])`` is the probability of ending in ``x = 1``. Division
# truncates, so ``3 / 2 = 1`` and state ``x=3`` reaches 1 by halving.

show("wp(inc, [x=1])", wp(inc, "[x=1]", space))
show("wp(inc, [even])", wp(inc, "[x=0 or x=2]", space))

# %%
# The parity abstraction
# ----------------------
# With the single predicate ``x = 0 or x = 2`` there are two cubes. The
# abstract transformer keeps, on each cube, the worst value over its states.

phi = corpus.predicates("inc")
part = cubes(phi, space)
for k in range(len(part)):
    print("cube", k, "=", part.describe(k))
show("wp_abs(inc, [even])", wp_abs(inc, "[x=0 or x=2]", phi, space))
show("wp_abs(inc, [odd])", wp_abs(inc, "[x=1 or x=3]", phi, space))

# %%
# Stepwise abstraction loses precision
# ------------------------------------
# Abstracting ``inc; inc`` as a whole is more accurate than abstracting each
# copy of ``inc`` and composing.

whole = wp_abs(Seq(inc, inc), "[x=0 or x=2]", phi, space)
stepwise = wp_abs(inc, wp_abs(inc, "[x=0 or x=2]", phi, space), phi, space)
show("wp_abs(inc;inc, [even])", whole)
show("wp_abs(inc, wp_abs(inc, [even]))", stepwise)
print("stepwise < whole:", stepwise < whole)

# %%
# Why: the checker finds a witness
# --------------------------------
# ``wp(inc, [even])`` is not constant on the cubes, so parity is not enough
# information to predict ``inc`` exactly.

report = check_info_preserving(inc, phi, space)
print(report.verdict)
for s, concrete, abstract in report.witness.states:
    print(f"  {s}: wp = {concrete}, cubed = {abstract}")
