"""
The Fourier symbol of a nonlocal kernel
=======================================

For the pure fractional kernel the symbol is exactly |xi|^{2s}.  A kernel
with an angular modulation between 1 and 2 has a symbol squeezed between
|xi|^{2s} and 2|xi|^{2s}.
"""

import numpy as np

from fracgreen import FractionalOrder, Kernel, multiplier, normalization_constant

order = FractionalOrder(0.5, 2)

# the normalization constant comes from its defining integral; 1/(2 pi) here
print("c_{2,1/2} =", normalization_constant(order), " 1/(2 pi) =", 1 / (2 * np.pi))

pure = Kernel(order)
modulated = Kernel(order, lam=1.0, Lam=2.0, family="modulated", modulation="axis")

# sweep |xi| over three decades along two directions
print(f"{'|xi|':>8} {'pure':>10} {'mod, e1':>10} {'mod, e2':>10}")
for mag in np.logspace(-1, 2, 7):
    ratios = [multiplier(pure, np.array([mag, 0.0])) / mag]
    ratios += [multiplier(modulated, mag * e) / mag for e in np.eye(2)]
    print(f"{mag:8.3g} " + " ".join(f"{r:10.6f}" for r in ratios))

# the modulated ratio depends on direction but not on |xi|: the symbol is
# homogeneous of degree 2s
