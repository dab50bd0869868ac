"""Brute-force truncated Fock-space oracle.

Every mode keeps occupations ``0..M-1``; mode ``k`` is the ``(k+1)``-th
Kronecker factor, so the basis index of ``|m_0 ... m_N>`` is
``sum_k m_k M**(N-k)``.  Operators are dense numpy arrays; only the
master-equation superoperator is sparse.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import product

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from .model import ModelParams, build_layout, relative_bound_c, require_valid

DIM_BUDGET = 4096
PROBE_RADIUS = 0.5
TAIL_TOL = 1e-10
TOL_TRACE = 1e-8
TOL_MIN_EIG = 1e-8
TOL_HERM_RHO = 1e-12
SUPEROP_MAX_DIM = 64


class DimensionBudgetError(ValueError):
    def __init__(self, required: int, allowed: int):
        self.required = required
        self.allowed = allowed
        super().__init__(f"Fock space dimension {required} exceeds budget {allowed}")


class TailMassError(ValueError):
    pass


class InvariantBreach(RuntimeError):
    """Density-matrix invariant violated during integration."""

    def __init__(self, message: str, diagnostics: "RhoDiagnostics"):
        self.diagnostics = diagnostics
        super().__init__(f"{message}: {diagnostics}")


def ladder(M: int) -> np.ndarray:
    """Truncated single-mode annihilator ``a|m> = sqrt(m)|m-1>``."""
    return np.diag(np.sqrt(np.arange(1, M, dtype=float)), k=1)


@dataclass(frozen=True)
class TruncatedModes:
    N: int
    M: int
    b: tuple
    b_dag: tuple
    n_hat: np.ndarray

    @property
    def dim(self) -> int:
        return self.M ** (self.N + 1)

    @property
    def n_modes(self) -> int:
        return self.N + 1

    def index(self, m) -> int:
        """Basis index of the occupation tuple ``m``."""
        if len(m) != self.n_modes or any(not 0 <= x < self.M for x in m):
            raise ValueError(f"occupation {m} outside the truncated basis")
        idx = 0
        for x in m:
            idx = idx * self.M + int(x)
        return idx

    def occupation_table(self) -> np.ndarray:
        """Row ``i`` holds the occupation tuple of basis state ``i``."""
        return np.array(list(product(range(self.M), repeat=self.n_modes)), dtype=int)

    def basis_projector(self, m) -> np.ndarray:
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        i = self.index(m)
        rho[i, i] = 1.0
        return rho


def build_modes(N: int, M: int, budget: int = DIM_BUDGET) -> TruncatedModes:
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    if M < 2:
        raise ValueError(f"cutoff M must be >= 2, got {M}")
    dim = M ** (N + 1)
    if dim > budget:
        raise DimensionBudgetError(dim, budget)
    a = ladder(M)
    eye = np.eye(M)
    b = []
    for k in range(N + 1):
        op = np.ones((1, 1))
        for j in range(N + 1):
            op = np.kron(op, a if j == k else eye)
        b.append(op.astype(complex))
    b_dag = [x.conj().T.copy() for x in b]
    # from integer occupations rather than b^H b, so the diagonal is exact
    levels = np.arange(dim) // M ** np.arange(N, -1, -1)[:, None] % M
    n_hat = np.diag(levels.sum(axis=0).astype(float)).astype(complex)
    return TruncatedModes(N, M, tuple(b), tuple(b_dag), n_hat)


def _check_modes(p: ModelParams, n: int, modes: TruncatedModes) -> None:
    require_valid(p)
    if modes.N != p.N:
        raise ValueError(f"modes built for N={modes.N}, params have N={p.N}")
    if not 1 <= n <= p.N:
        raise ValueError(f"chain mode n={n} outside 1..{p.N}")


def hamiltonian(p: ModelParams, n: int, modes: TruncatedModes) -> np.ndarray:
    """``H_n = E b0+ b0 + eps sum_k bk+ bk + eta (b0+ bn + bn+ b0)``."""
    _check_modes(p, n, modes)
    b, bd = modes.b, modes.b_dag
    H = p.E * (bd[0] @ b[0])
    for k in range(1, modes.n_modes):
        H = H + p.epsilon * (bd[k] @ b[k])
    return H + p.eta * (bd[0] @ b[n] + bd[n] @ b[0])


def hamiltonian_from_layout(p: ModelParams, n: int, modes: TruncatedModes) -> np.ndarray:
    """``sum_jk (Y_n)_jk b_j+ b_k``, built from the coupling layout."""
    _check_modes(p, n, modes)
    Y = np.asarray(build_layout(p, n).Y, dtype=float)
    H = np.zeros((modes.dim, modes.dim), dtype=complex)
    for j, k in zip(*np.nonzero(Y)):
        H += Y[j, k] * (modes.b_dag[j] @ modes.b[k])
    return H


def k0_operator(p: ModelParams, modes: TruncatedModes) -> np.ndarray:
    """``K_0 = s+/2 b0 b0+ + s-/2 b0+ b0 + i((E - eps) b0+ b0 + eps n_hat)``."""
    require_valid(p)
    b0, b0d = modes.b[0], modes.b_dag[0]
    num0 = b0d @ b0
    return (
        0.5 * p.sigma_plus * (b0 @ b0d)
        + 0.5 * p.sigma_minus * num0
        + 1j * ((p.E - p.epsilon) * num0 + p.epsilon * modes.n_hat)
    )


def k_operator(p: ModelParams, n: int, modes: TruncatedModes) -> np.ndarray:
    """``K_n = K_0 + i eta (b0+ bn + bn+ b0)``."""
    _check_modes(p, n, modes)
    hop = modes.b_dag[0] @ modes.b[n] + modes.b_dag[n] @ modes.b[0]
    return k0_operator(p, modes) + 1j * p.eta * hop


def k_operator_from_dual(p: ModelParams, n: int, modes: TruncatedModes) -> np.ndarray:
    """``K_n = Q*(1)/2 + i H_n`` with ``Q*(1) = s- b0+ b0 + s+ b0 b0+``."""
    b0, b0d = modes.b[0], modes.b_dag[0]
    q_unit = p.sigma_minus * (b0d @ b0) + p.sigma_plus * (b0 @ b0d)
    return 0.5 * q_unit + 1j * hamiltonian(p, n, modes)


def k0_eigenvalue(p: ModelParams, m) -> complex:
    """Closed-form K_0 eigenvalue on the Fock state ``m`` (untruncated)."""
    return (
        (0.5 * (p.sigma_plus + p.sigma_minus) + 1j * p.E) * m[0]
        + 0.5 * p.sigma_plus
        + 1j * p.epsilon * sum(m[1:])
    )


class KLDGenerator:
    """Master-equation generator for window ``n``, cached for repeated use.

    ``L(rho) = -K rho - rho K^H + s- b0 rho b0^H + s+ b0^H rho b0``, held as a
    sparse superoperator on row-major ``rho.ravel()`` (about seven nonzeros
    per row), which is what the RK4 loop applies.
    """

    def __init__(self, p: ModelParams, n: int, modes: TruncatedModes):
        _check_modes(p, n, modes)
        self.p, self.n, self.modes = p, n, modes
        d = modes.dim
        K = sp.csr_matrix(k_operator(p, n, modes))
        b0 = sp.csr_matrix(modes.b[0])
        b0d = sp.csr_matrix(modes.b_dag[0])
        eye = sp.identity(d, format="csr")
        # vec(A rho B) = kron(A, B^T) vec(rho) for row-major vec
        S = -sp.kron(K, eye) - sp.kron(eye, K.conj())
        S = S + p.sigma_minus * sp.kron(b0, b0.conj())
        if p.sigma_plus:
            S = S + p.sigma_plus * sp.kron(b0d, b0d.conj())
        self.S = S.tocsr()

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        d = self.modes.dim
        return (self.S @ rho.reshape(d * d)).reshape(d, d)

    def superoperator(self) -> np.ndarray:
        """Dense copy of the superoperator (small spaces only)."""
        d = self.modes.dim
        if d > SUPEROP_MAX_DIM:
            raise DimensionBudgetError(d, SUPEROP_MAX_DIM)
        return self.S.toarray()


def lindblad_rhs(p: ModelParams, n: int, modes: TruncatedModes, rho: np.ndarray) -> np.ndarray:
    """Dense evaluation of ``-K rho - rho K^H + s- b0 rho b0^H + s+ b0^H rho b0``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (modes.dim, modes.dim):
        raise ValueError(f"rho has shape {rho.shape}, expected {(modes.dim, modes.dim)}")
    K = k_operator(p, n, modes)
    b0, b0d = modes.b[0], modes.b_dag[0]
    return (
        -K @ rho - rho @ K.conj().T
        + p.sigma_minus * (b0 @ rho @ b0d)
        + p.sigma_plus * (b0d @ rho @ b0)
    )


def rk4_step(f, rho: np.ndarray, h: float) -> np.ndarray:
    k1 = f(rho)
    k2 = f(rho + 0.5 * h * k1)
    k3 = f(rho + 0.5 * h * k2)
    k4 = f(rho + h * k3)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_window(gen: KLDGenerator, rho: np.ndarray, duration: float, dt: float) -> np.ndarray:
    """Autonomous RK4 propagation by ``duration`` with ``ceil(duration/dt)`` equal steps."""
    if duration < 0:
        raise ValueError(f"negative duration {duration}")
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    steps = math.ceil(duration / dt - 1e-9)
    if steps == 0:
        return rho.copy()
    h = duration / steps
    for _ in range(steps):
        rho = rk4_step(gen, rho, h)
    return rho


@dataclass(frozen=True)
class RhoDiagnostics:
    trace_err: float
    herm_defect: float
    min_eig: float
    tail_mass: float

    def ok(self, tol_trace=TOL_TRACE, tol_herm=TOL_HERM_RHO, tol_eig=TOL_MIN_EIG) -> bool:
        return self.trace_err <= tol_trace and self.herm_defect <= tol_herm and self.min_eig >= -tol_eig


def tail_mass(rho: np.ndarray, modes: TruncatedModes) -> np.ndarray:
    """Population in the top two Fock levels of each mode."""
    pops = np.diag(rho).real
    occ = modes.occupation_table()
    return np.array([pops[occ[:, k] >= modes.M - 2].sum() for k in range(modes.n_modes)])


def diagnostics(rho: np.ndarray, modes: TruncatedModes) -> RhoDiagnostics:
    herm = float(np.abs(rho - rho.conj().T).max())
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    return RhoDiagnostics(
        trace_err=float(abs(np.trace(rho) - 1.0)),
        herm_defect=herm,
        min_eig=float(lam.min()),
        tail_mass=float(tail_mass(rho, modes).max()),
    )


class Propagator:
    """Piecewise RK4 integration of the repeated-interaction master equation.

    Steps are aligned to window boundaries ``k tau``; the state is carried
    forward across calls, so sampling a trajectory costs one pass.
    """

    def __init__(self, p: ModelParams, modes: TruncatedModes, rho0: np.ndarray, dt: float = 1e-3):
        require_valid(p)
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.p, self.modes, self.dt = p, modes, dt
        self.rho = np.array(rho0, dtype=complex)
        self.t = 0.0
        self._gens: dict[int, KLDGenerator] = {}

    def _gen(self, n: int) -> KLDGenerator:
        if n not in self._gens:
            self._gens[n] = KLDGenerator(self.p, n, self.modes)
        return self._gens[n]

    def advance_to(self, t: float) -> np.ndarray:
        p = self.p
        if t < self.t:
            raise ValueError(f"cannot integrate backwards from {self.t} to {t}")
        if t > p.t_end:
            raise ValueError(f"t={t} beyond {p.t_end}")
        while self.t < t:
            n = min(int(self.t // p.tau) + 1, p.N)
            boundary = n * p.tau
            stop = t if n == p.N else min(t, boundary)
            self.rho = integrate_window(self._gen(n), self.rho, stop - self.t, self.dt)
            self.t = boundary if stop == boundary else stop
        return self.rho


def evolve_rho(
    p: ModelParams,
    modes: TruncatedModes,
    rho0: np.ndarray,
    t: float,
    dt: float = 1e-3,
    check: bool = True,
) -> np.ndarray:
    """State at time ``t`` in ``[0, N tau)`` from RK4 with window switching.

    With ``check`` the result is tested against the density-matrix invariants
    and :class:`InvariantBreach` carries the diagnostics on failure.
    """
    if not 0 <= t < p.t_end:
        raise ValueError(f"t={t} outside [0, {p.t_end})")
    rho = Propagator(p, modes, rho0, dt).advance_to(t)
    if check:
        diag = diagnostics(rho, modes)
        tol_trace = TOL_TRACE * max(t, 1.0)
        if not diag.ok(tol_trace=tol_trace, tol_herm=TOL_HERM_RHO * max(1, round(t / dt))):
            raise InvariantBreach("density matrix invariant violated", diag)
    return rho


def evolve_rho_superop(p: ModelParams, n: int, modes: TruncatedModes, rho0: np.ndarray, t: float) -> np.ndarray:
    """Secondary oracle: ``exp(t L_n) rho0`` by exponentiating the superoperator."""
    S = KLDGenerator(p, n, modes).superoperator()
    d = modes.dim
    return (expm(t * S) @ np.asarray(rho0, dtype=complex).ravel()).reshape(d, d)


def weyl_generator(modes: TruncatedModes, zeta) -> np.ndarray:
    """Hermitian ``(<zeta, b> + <b, zeta>)/sqrt(2)`` at the cutoff."""
    z = np.asarray(zeta, dtype=complex)
    if z.shape != (modes.n_modes,):
        raise ValueError(f"zeta has shape {z.shape}, expected ({modes.n_modes},)")
    G = np.zeros((modes.dim, modes.dim), dtype=complex)
    for j in range(modes.n_modes):
        G += np.conj(z[j]) * modes.b[j] + z[j] * modes.b_dag[j]
    return G / math.sqrt(2.0)


def weyl_matrix(modes: TruncatedModes, zeta, probe_radius: float = PROBE_RADIUS) -> np.ndarray:
    """Truncated Weyl operator ``exp[i (<zeta,b> + <b,zeta>)/sqrt(2)]``.

    The generator is Hermitian, so the exponential goes through ``eigh``.
    """
    norm = float(np.linalg.norm(zeta))
    if norm > probe_radius:
        warnings.warn(
            f"probe norm {norm:.3g} exceeds radius {probe_radius}; truncation error may be large",
            stacklevel=2,
        )
    lam, V = np.linalg.eigh(weyl_generator(modes, zeta))
    return (V * np.exp(1j * lam)) @ V.conj().T


def unitarity_defect(W: np.ndarray) -> float:
    return float(np.abs(W.conj().T @ W - np.eye(W.shape[0])).max())


def oracle_char_function(rho: np.ndarray, modes: TruncatedModes, zeta, W: np.ndarray | None = None) -> complex:
    """``Tr[rho W(zeta)]``; pass a precomputed ``W`` to skip the exponential."""
    if W is None:
        W = weyl_matrix(modes, zeta)
    return complex(np.sum(rho * W.T))


def _gibbs_populations(beta: float, M: int, tail_tol: float | None) -> np.ndarray:
    if not beta > 0:
        raise ValueError(f"inverse temperature must be positive, got {beta}")
    if math.isinf(beta):
        pops = np.zeros(M)
        pops[0] = 1.0
        return pops
    tail = math.exp(-beta * M)
    if tail_tol is not None and tail > tail_tol:
        raise TailMassError(f"Gibbs tail mass {tail:.3g} above {tail_tol:.3g} at beta={beta}, M={M}")
    w = np.exp(-beta * np.arange(M))
    return w / w.sum()


def gibbs_rho(beta0: float, beta: float, modes: TruncatedModes, tail_tol: float | None = TAIL_TOL) -> np.ndarray:
    """Normalized truncated product Gibbs state, system at ``beta0``, chain at ``beta``.

    ``tail_tol`` bounds the untruncated mass beyond the cutoff, ``exp(-beta M)``;
    ``None`` disables the check.
    """
    diag = _gibbs_populations(beta0, modes.M, tail_tol)
    chain = _gibbs_populations(beta, modes.M, tail_tol)
    for _ in range(modes.N):
        diag = np.kron(diag, chain)
    return np.diag(diag).astype(complex)


def occupations_rho(rho: np.ndarray, modes: TruncatedModes) -> np.ndarray:
    pops = np.diag(rho).real
    occ = modes.occupation_table()
    return occ.T @ pops


def random_low_occupation_rho(modes: TruncatedModes, max_level: int, rng, rank: int = 4) -> np.ndarray:
    """Random density matrix supported on states with every ``m_k <= max_level``."""
    occ = modes.occupation_table()
    support = np.nonzero((occ <= max_level).all(axis=1))[0]
    A = np.zeros((modes.dim, rank), dtype=complex)
    A[support] = rng.normal(size=(len(support), rank)) + 1j * rng.normal(size=(len(support), rank))
    rho = A @ A.conj().T
    return rho / np.trace(rho).real


def random_low_occupation_vectors(modes: TruncatedModes, max_level: int, count: int, rng) -> np.ndarray:
    """``count`` random unit columns supported on states with every ``m_k <= max_level``."""
    occ = modes.occupation_table()
    support = np.nonzero((occ <= max_level).all(axis=1))[0]
    Phi = np.zeros((modes.dim, count), dtype=complex)
    Phi[support] = rng.normal(size=(len(support), count)) + 1j * rng.normal(size=(len(support), count))
    return Phi / np.linalg.norm(Phi, axis=0)


def numerical_range_min(K: np.ndarray, n_samples: int, rng, Phi: np.ndarray | None = None) -> float:
    """Smallest ``Re <phi, K phi>`` over random unit vectors."""
    if Phi is None:
        d = K.shape[0]
        Phi = rng.normal(size=(d, n_samples)) + 1j * rng.normal(size=(d, n_samples))
        Phi /= np.linalg.norm(Phi, axis=0)
    vals = np.einsum("ij,ij->j", Phi.conj(), K @ Phi).real
    return float(vals.min())


def relative_bound_margin(p: ModelParams, n: int, modes: TruncatedModes, Phi: np.ndarray) -> float:
    """Largest ``|eta hop phi| - (c |K0 phi| + C |phi|)`` over the columns of ``Phi``.

    ``C = c |E + eps - i s-/2|`` from the closing estimate.  Non-positive means
    the relative bound holds on every sample.  Columns must vanish on the top
    Fock level of mode 0.
    """
    _check_modes(p, n, modes)
    c = relative_bound_c(p)
    C = c * abs(p.E + p.epsilon - 0.5j * p.sigma_minus)
    hop = p.eta * (modes.b_dag[0] @ modes.b[n] + modes.b_dag[n] @ modes.b[0])
    K0 = k0_operator(p, modes)
    lhs = np.linalg.norm(hop @ Phi, axis=0)
    rhs = c * np.linalg.norm(K0 @ Phi, axis=0) + C * np.linalg.norm(Phi, axis=0)
    return float((lhs - rhs).max())
