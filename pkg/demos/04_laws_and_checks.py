"""
Laws of the abstract transformer
================================

The abstract transformer is sound but not compositional in general. This
script checks its algebraic laws on random programs and shows the
data-independence check on a variable swap.
"""

import random
from collections import Counter
from fractions import Fraction

from pgclabs import corpus
from pgclabs.abstraction import check_data_independent, check_info_preserving, cubes, di_predicates, wp_abs
from pgclabs.ast import Seq, Skip
from pgclabs.expectation import Expectation
from pgclabs.laws import check_laws, random_law_case
from pgclabs.statespace import StateSpace
from pgclabs.syntax import parse_program, to_source

# %%
# Random programs
# ---------------
# Each case is a loop-free program over up to three small variables and a
# random predicate set. Laws that need preservation only run when the
# checker accepts the program.

checked, failed = Counter(), Counter()
preserving = 0
for seed in range(300):
    rng = random.Random(seed)
    model, phi = random_law_case(rng)
    rep = check_laws(rng, model, phi)
    checked.update(rep.checked)
    failed.update(rep.violations)
    preserving += rep.ip
print(f"{preserving} of 300 programs preserve their predicates")
for name, n in sorted(checked.items()):
    print(f"  {name:<45} {n:>4} checks, {failed[name]} failures")

# %%
# Exactness needs cubed expectations
# ----------------------------------
# A fair coin on ``x`` preserves the empty predicate set. Composed with
# ``skip`` the abstraction is still exact on constant expectations, but not
# on ``[x = 0]``, which the empty predicate set cannot express.

space = StateSpace(corpus.load("twoflip").decls[:1])
coin = parse_program("x := 0 [1/2] x := 1")
print(check_info_preserving(coin, [], space).verdict)
e = Expectation(space, [Fraction(1), Fraction(0)])
print("composed:", wp_abs(coin, wp_abs(Skip(), e, [], space), [], space).tolist())
print("whole:   ", wp_abs(Seq(coin, Skip()), e, [], space).tolist())

# %%
# Data independence
# -----------------
# A swap through a temporary only copies values around, so the comparisons
# between variables are all it needs to track.

swap = corpus.load("swap")
swap_space = StateSpace(swap.decls)
print([to_source(p) for p in di_predicates(swap.decls)])
print(check_data_independent(swap.program, swap_space).verdict)
print(len(cubes(di_predicates(swap.decls), swap_space)), "cubes over", swap_space.count, "states")
