"""
Complete positivity of the composite map
========================================

A pair ``(U, kappa)`` defines a completely positive map exactly when
``I - U^H U`` is positive semidefinite and ``kappa >= 1``.  The prefactor is
then the characteristic function of a Gibbs state at inverse temperature
``log((kappa+1)/(kappa-1))``, seen through the defect map ``C``.
"""

import numpy as np

from qfchain import ModelParams
from qfchain import quasifree as qf

p = ModelParams(E=1.0, epsilon=0.5, eta=0.5, tau=1.0, sigma_plus=0.1, sigma_minus=0.4, N=3)
m = qf.repeated_interaction_map(p, 2.5)
cert = qf.cp_certificate(m)
for key, val in cert.as_dict().items():
    print(f"{key:>22}: {val}")

# Gamma(z) = exp[-(kappa/4) |C z|^2]
C = qf.defect_map(m)
z = np.array([0.3, -0.2j, 0.1, 0.4])
print("Gamma:", qf.gamma(m, z), " via defect map:", np.exp(-0.25 * m.kappa * np.linalg.norm(C @ z) ** 2))

# An expanding U is rejected, and the certificate says by how much.
bad = qf.QuasiFreeMap(np.diag([1.1, 0.9]), kappa=5 / 3)
print("expanding map:", qf.cp_certificate(bad).as_dict()["verdict"],
      "min defect eigenvalue", qf.cp_certificate(bad).min_defect_eigenvalue)
