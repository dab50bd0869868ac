"""Independent reference computations used by several test modules."""
import numpy as np


def zeta_ode_propagator(p, n, checkpoints, h=1e-5):
    """Integrate d zeta/dt = i (Y_n + i (s- - s+)/2 P0) zeta from zeta(0) = I by RK4.

    The generator is written out entrywise here, not taken from the library.
    Returns {t: Z(t)} for each checkpoint.
    """
    d = p.N + 1
    A = np.zeros((d, d), dtype=complex)
    A[0, 0] = p.E + 0.5j * (p.sigma_minus - p.sigma_plus)
    for k in range(1, d):
        A[k, k] = p.epsilon
    A[0, n] = A[n, 0] = p.eta
    A = 1j * A

    out = {}
    Z = np.eye(d, dtype=complex)
    t = 0.0
    for target in sorted(checkpoints):
        steps = int(round((target - t) / h))
        hh = (target - t) / steps if steps else 0.0
        for _ in range(steps):
            k1 = A @ Z
            k2 = A @ (Z + 0.5 * hh * k1)
            k3 = A @ (Z + 0.5 * hh * k2)
            k4 = A @ (Z + hh * k3)
            Z = Z + (hh / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = target
        out[target] = Z.copy()
    return out


def stepwise_symbol(maps, zeta):
    """Apply dual maps one by one to W(zeta): innermost (last) map acts first.

    Returns the accumulated scalar and the final Weyl argument.
    """
    from qfchain.quasifree import gamma

    g = 1.0
    z = np.asarray(zeta, dtype=complex)
    for m in reversed(maps):
        g *= gamma(m, z)
        z = m.U @ z
    return g, z


def random_probe(rng, d, radius):
    z = rng.normal(size=d) + 1j * rng.normal(size=d)
    return z / np.linalg.norm(z) * radius * rng.uniform(0.05, 1.0)
