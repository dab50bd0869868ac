"""
Relaxation of a Gibbs state along the chain
===========================================

Quasi-free states are stored by their covariance ``X``; the characteristic
function is ``exp(-<z, X z>/4)`` and the occupations are ``(X_jj - 1)/2``.
The repeated-interaction evolution maps covariances to covariances, so a
whole trajectory is a sequence of small matrix products.
"""

import math

import numpy as np

from qfchain import ModelParams, kappa
from qfchain import quasifree as qf

p = ModelParams(E=1.0, epsilon=0.5, eta=0.5, tau=1.0, sigma_plus=0.1, sigma_minus=0.4, N=4)

# Start with a cold system (beta0 = 3) and a warmer chain (beta = 1).
X0 = qf.gibbs_covariance(3.0, 1.0, p.N)
print("initial occupations:", np.round(qf.occupations(X0), 4))

# The system mode talks to chain mode n during window n.
for t in np.arange(0.0, p.t_end, 0.5):
    X = qf.evolve_covariance(qf.repeated_interaction_map(p, t), X0)
    n, _ = qf.window_of(p, t)
    print(f"t={t:3.1f}  window={n}  occ={np.round(qf.occupations(X), 4)}")

# The reservoir pins the system at the temperature log(sigma_-/sigma_+).
# Starting everything there gives a fixed point with occupation (kappa-1)/2.
beta = math.log(p.sigma_minus / p.sigma_plus)
Xm = qf.gibbs_covariance(beta, beta, p.N)
Xt = qf.evolve_covariance(qf.repeated_interaction_map(p, 3.7), Xm)
print("matched state drift:", np.abs(Xt.X - Xm.X).max())
print("occupation", qf.occupations(Xt)[0], "vs (kappa-1)/2 =", (kappa(p) - 1) / 2)
