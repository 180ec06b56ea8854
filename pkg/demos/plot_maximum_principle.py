"""
Maximum and comparison principles
=================================

The assembled matrix has nonpositive off-diagonal entries and is strictly
diagonally dominant, so nonnegative sources give nonnegative solutions and
ordered sources give ordered solutions.  A potential only lowers the solution.
"""

import numpy as np

from fracgreen import FractionalOrder, Kernel, Potential, assemble, build_grid, check_comparison, check_maximum_principle
from fracgreen.fields import random_nonnegative_field, random_smooth_field

rng = np.random.default_rng(0)
g = build_grid(2, 1.0, 33)
A = assemble(Kernel(FractionalOrder(0.5, 2)), Potential(), g)

D = A.to_dense()
off = D - np.diag(np.diag(D))
print("largest off-diagonal entry:", off.max())
print("smallest diagonal surplus :", (np.diag(D) + off.sum(axis=1)).min())

# nonnegative sources
mins = [check_maximum_principle(A, random_nonnegative_field(g, rng))[0] for _ in range(10)]
print("min u over 10 nonnegative sources:", min(mins))

# ordered sources h1 <= h2, of either sign
gaps = []
for _ in range(10):
    h1 = random_smooth_field(g, rng).values
    gaps.append(check_comparison(A, h1, h1 + random_nonnegative_field(g, rng).values)[0])
print("max(u1 - u2) over 10 ordered pairs:", max(gaps))

# a constant potential V = 5 lowers the solution everywhere
h = random_nonnegative_field(g, rng)
_, r0 = check_maximum_principle(A, h)
_, r5 = check_maximum_principle(A.with_potential(Potential("constant", 5.0, q=10)), h)
print("max(u_V5 - u_V0):", np.max(r5.solution.values - r0.solution.values))
