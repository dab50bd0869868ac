"""
One window of the dual dynamics on Weyl symbols
===============================================

A single interaction window acts on a Weyl operator by shrinking it with a
Gaussian prefactor and rotating its argument: ``W(z) -> Gamma(z) W(U z)``.
This script builds the propagator ``U`` for the desk parameters and looks at
what it does.
"""

import numpy as np

from qfchain import ModelParams, kappa
from qfchain import quasifree as qf

# Desk parameters: system energy 1, chain modes at 0.5, coupling 0.5, loss
# 0.4, gain 0.1, unit window, one chain mode.
p = ModelParams(E=1.0, epsilon=0.5, eta=0.5, tau=1.0, sigma_plus=0.1, sigma_minus=0.4, N=1)
print("kappa =", kappa(p))

# The propagator is the exponential of a non-Hermitian generator.  Its largest
# singular value stays below one: the map is a contraction.
for t in (0.0, 0.25, 0.5, 1.0):
    U = qf.propagator(p, 1, t)
    print(f"t={t:4.2f}  ||U||_2 = {qf.max_singular_value(U):.6f}")

# The scalar prefactor is exp[-(kappa/4)(|z|^2 - |Uz|^2)].
m = qf.one_step_map(p, 1, 1.0)
for z in ([0.5, 0], [0, 0.5], [0.3, 0.3j]):
    g, w = qf.apply_to_weyl(m, z)
    print(f"zeta={np.round(z, 3)}  Gamma={g:.6f}  U zeta={np.round(w, 4)}")

# Splitting a window in two and composing gives the same map.
a, b = qf.one_step_map(p, 1, 0.4), qf.one_step_map(p, 1, 0.6)
print("semigroup defect:", np.abs(qf.compose(a, b).U - m.U).max())
