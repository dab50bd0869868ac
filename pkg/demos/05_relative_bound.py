"""
How small is the coupling?
==========================

The hopping term ``eta (b0^+ bn + bn^+ b0)`` is controlled by the dissipative
free part ``K0`` with a relative bound ``c < 1``.  This script prints ``c``
across couplings and tests the bound on random low-occupation vectors in a
truncated Fock space.
"""

import numpy as np

from qfchain import ModelParams, relative_bound_c
from qfchain import fock

for frac in (0.1, 0.5, 0.9, 1.0):
    eta = frac * np.sqrt(0.5) * (1 - 1e-15)
    p = ModelParams(E=1.0, epsilon=0.5, eta=eta, tau=1.0, sigma_plus=0.1, sigma_minus=0.4, N=2)
    print(f"eta = {frac:.1f} * sqrt(E eps)  ->  c = {relative_bound_c(p):.6f}")

p = ModelParams(E=1.0, epsilon=0.5, eta=0.5, tau=1.0, sigma_plus=0.1, sigma_minus=0.4, N=2)
modes = fock.build_modes(N=2, M=6)
rng = np.random.default_rng(0)
Phi = fock.random_low_occupation_vectors(modes, max_level=4, count=5000, rng=rng)
for n in (1, 2):
    print(f"window {n}: worst margin {fock.relative_bound_margin(p, n, modes, Phi):.4f} (<= 0 holds)")
    print(f"          min Re<phi, K phi> = {fock.numerical_range_min(fock.k_operator(p, n, modes), 5000, rng):.4f}")
