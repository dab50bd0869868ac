"""
Checking the closed form against brute force
============================================

The closed-form dual map is an exact statement about an infinite-dimensional
system.  Here the same dynamics is integrated directly: each mode is cut off
at ``M`` Fock levels, the master equation is stepped with RK4, and the
characteristic function ``Tr[rho W(z)]`` is compared with the closed form.
Takes a few seconds.
"""

import numpy as np

from qfchain import ModelParams
from qfchain import fock
from qfchain import quasifree as qf

p = ModelParams(E=1.0, epsilon=0.5, eta=0.5, tau=1.0, sigma_plus=0.1, sigma_minus=0.4, N=1)
modes = fock.build_modes(N=1, M=14)
print("Fock dimension:", modes.dim)

rho0 = fock.gibbs_rho(2.0, 1.0, modes, tail_tol=None)
X0 = qf.gibbs_covariance(2.0, 1.0, p.N)
prop = fock.Propagator(p, modes, rho0, dt=1e-3)

probes = [np.array([0.5, 0]), np.array([0, 0.5]), np.array([0.2 + 0.1j, -0.3j])]
weyl = [fock.weyl_matrix(modes, z) for z in probes]

for t in (0.25, 0.5, 0.75):
    rho = prop.advance_to(t)
    X = qf.evolve_covariance(qf.one_step_map(p, 1, t), X0)
    devs = [abs(qf.char_function(X, z) - fock.oracle_char_function(rho, modes, z, W))
            for z, W in zip(probes, weyl)]
    d = fock.diagnostics(rho, modes)
    print(f"t={t:4.2f}  max |closed - oracle| = {max(devs):.2e}  "
          f"trace err = {d.trace_err:.1e}  tail = {d.tail_mass:.1e}")

# With too few levels the tail diagnostic flags the truncation.
small = fock.build_modes(N=1, M=3)
rho_small = fock.gibbs_rho(2.0, 1.0, small, tail_tol=None)
print("tail mass at M=3:", fock.diagnostics(rho_small, small).tail_mass)
