"""Closed-form dual dynamics on Weyl symbols and quasi-free states.

A dual map acts on a Weyl operator as ``W(z) -> Gamma(z) W(U z)`` with
``Gamma(z) = exp[-(kappa/4) (<z,z> - <Uz,Uz>)]``.  The pair ``(U, kappa)``
determines the map completely, so that is what :class:`QuasiFreeMap` stores.

Inner products are antilinear in the first slot: ``<a, b> = sum(conj(a) * b)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .model import ModelParams, build_layout, damping_rate, kappa, require_valid

TOL_SV = 1e-12
TOL_PSD = 1e-10
TOL_HERM = 1e-12
TOL_KAPPA = 1e-14


def generator(p: ModelParams, n: int) -> np.ndarray:
    """``Y_n + i (sigma_minus - sigma_plus)/2 P0``; the propagator is exp(i t G)."""
    lay = build_layout(p, n)
    return np.asarray(lay.Y, dtype=complex) + 0.5j * damping_rate(p) * np.asarray(lay.P0, dtype=float)


def shifted_energy_generator(p: ModelParams, n: int) -> np.ndarray:
    """Same generator obtained by the complex energy shift E -> E + i(s- - s+)/2.

    Built entrywise without the layout matrices, as an independent route.
    """
    require_valid(p)
    d = p.dim
    G = np.zeros((d, d), dtype=complex)
    G[0, 0] = p.E + 0.5j * damping_rate(p)
    for k in range(1, d):
        G[k, k] = p.epsilon
    G[0, n] = G[n, 0] = p.eta
    return G


def propagator(p: ModelParams, n: int, t: float) -> np.ndarray:
    """Weyl-argument propagator ``U_n(t) = exp[i t (Y_n + i (s- - s+)/2 P0)]``."""
    if t < 0:
        raise ValueError(f"negative time t={t}")
    G = generator(p, n)
    if t == 0:
        return np.eye(p.dim, dtype=complex)
    return expm(1j * t * G)


def max_singular_value(U: np.ndarray) -> float:
    return float(np.linalg.norm(U, 2))


@dataclass(frozen=True)
class QuasiFreeMap:
    """Dual quasi-free map represented by ``(U, kappa)``.

    The constructor does not enforce contraction so that invalid maps can be
    handed to :func:`cp_certificate`; use :meth:`check` for that.
    """

    U: np.ndarray
    kappa: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        U = np.asarray(self.U, dtype=complex)
        if U.ndim != 2 or U.shape[0] != U.shape[1]:
            raise ValueError(f"U must be square, got shape {U.shape}")
        object.__setattr__(self, "U", U)

    @property
    def dim(self) -> int:
        return self.U.shape[0]

    def check(self, tol_sv: float = TOL_SV) -> None:
        """Raise ``ValueError`` if the map violates contraction or kappa >= 1."""
        s = max_singular_value(self.U)
        if s > 1 + tol_sv:
            raise ValueError(f"U is not a contraction: largest singular value {s!r}")
        if self.kappa < 1:
            raise ValueError(f"kappa={self.kappa!r} < 1")


def identity_map(dim: int, kappa_: float = 1.0) -> QuasiFreeMap:
    return QuasiFreeMap(np.eye(dim, dtype=complex), kappa_, {"steps": []})


def one_step_map(p: ModelParams, n: int, t: float) -> QuasiFreeMap:
    """Dual semigroup element ``T*_{n,t}`` for a single window."""
    m = QuasiFreeMap(propagator(p, n, t), kappa(p), {"steps": [(n, float(t))]})
    m.check()
    return m


def _vec(m: QuasiFreeMap, zeta) -> np.ndarray:
    z = np.asarray(zeta, dtype=complex)
    if z.shape != (m.dim,):
        raise ValueError(f"zeta has shape {z.shape}, expected ({m.dim},)")
    return z


def log_gamma(m: QuasiFreeMap, zeta) -> float:
    z = _vec(m, zeta)
    a = float(np.abs(z).max(initial=0.0))
    if a == 0.0:
        return 0.0
    # scaled so that huge zeta gives -inf rather than inf - inf
    r = a * float(np.linalg.norm(z / a))
    u = z / r
    q = float(np.vdot(u, defect_gram(m) @ u).real)
    if q == 0.0:
        return 0.0
    return -0.25 * m.kappa * q * r * r


def gamma(m: QuasiFreeMap, zeta) -> float:
    """Scalar prefactor of the map at ``zeta``; underflows to 0 for huge ``zeta``."""
    return math.exp(log_gamma(m, zeta))


def apply_to_weyl(m: QuasiFreeMap, zeta) -> tuple[float, np.ndarray]:
    """Symbol-level action ``W(zeta) -> (Gamma(zeta), U zeta)``."""
    z = _vec(m, zeta)
    return gamma(m, z), m.U @ z


def compose(left: QuasiFreeMap, right: QuasiFreeMap) -> QuasiFreeMap:
    """Map acting as ``left`` after substituting ``right``'s output.

    ``(left o right)(W(z)) = Gamma_r(z) Gamma_l(U_r z) W(U_l U_r z)``, which
    telescopes to the pair ``(U_l U_r, kappa)``.
    """
    if abs(left.kappa - right.kappa) > TOL_KAPPA:
        raise ValueError(f"kappa mismatch: {left.kappa!r} vs {right.kappa!r}")
    if left.dim != right.dim:
        raise ValueError(f"dimension mismatch: {left.dim} vs {right.dim}")
    steps = list(left.meta.get("steps", [])) + list(right.meta.get("steps", []))
    return QuasiFreeMap(left.U @ right.U, left.kappa, {"steps": steps})


def window_of(p: ModelParams, t: float) -> tuple[int, float]:
    """Split ``t`` into ``(n, nu)`` with ``t = (n-1) tau + nu`` and ``0 <= nu < tau``.

    A time exactly on a boundary ``k tau`` belongs to window ``k+1``.
    """
    if not 0 <= t < p.t_end:
        raise ValueError(f"t={t} outside [0, {p.t_end})")
    n = int(t // p.tau) + 1
    n = min(n, p.N)
    return n, max(t - (n - 1) * p.tau, 0.0)


def repeated_interaction_map(p: ModelParams, t: float) -> QuasiFreeMap:
    """Dual evolution ``T*_{t,0} = T*_1 ... T*_{n-1} T*_{n,nu}`` from 0 to ``t``."""
    require_valid(p)
    n, nu = window_of(p, t)
    m = identity_map(p.dim, kappa(p))
    for k in range(1, n):
        m = compose(m, one_step_map(p, k, p.tau))
    return compose(m, one_step_map(p, n, nu))


@dataclass(frozen=True)
class CovarianceState:
    """Zero-mean quasi-free state with ``omega(W(z)) = exp[-<z, X z>/4]``."""

    X: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=complex)
        if X.ndim != 2 or X.shape[0] != X.shape[1]:
            raise ValueError(f"X must be square, got shape {X.shape}")
        object.__setattr__(self, "X", X)

    @property
    def dim(self) -> int:
        return self.X.shape[0]

    def min_eig_excess(self) -> float:
        """Smallest eigenvalue of ``X - I`` (physicality margin)."""
        H = 0.5 * (self.X + self.X.conj().T)
        return float(np.linalg.eigvalsh(H - np.eye(self.dim)).min())

    def check(self, tol_herm: float = TOL_HERM, tol_psd: float = TOL_PSD) -> None:
        herm = float(np.abs(self.X - self.X.conj().T).max())
        if herm > tol_herm:
            raise ValueError(f"X not Hermitian (defect {herm!r})")
        lam = self.min_eig_excess()
        if lam < -tol_psd:
            raise ValueError(f"X - I not positive semidefinite (min eigenvalue {lam!r})")


def coth_half(beta: float) -> float:
    """``(1 + e^-beta)/(1 - e^-beta)``; equals 1 at beta = inf."""
    if not beta > 0:
        raise ValueError(f"inverse temperature must be positive, got {beta}")
    x = math.exp(-beta)
    return (1 + x) / (1 - x)


def gibbs_covariance(beta0: float, beta: float, N: int) -> CovarianceState:
    """Covariance of the product Gibbs state (system at beta0, chain at beta)."""
    c0, c = coth_half(beta0), coth_half(beta)
    X = c * np.eye(N + 1, dtype=complex)
    X[0, 0] = c0
    return CovarianceState(X)


def evolve_covariance(m: QuasiFreeMap, s: CovarianceState) -> CovarianceState:
    """State after the dual map: ``X' = U^H X U + kappa (I - U^H U)``."""
    if m.dim != s.dim:
        raise ValueError(f"dimension mismatch: map {m.dim} vs state {s.dim}")
    U = m.U
    UH = U.conj().T
    Xn = UH @ s.X @ U + m.kappa * (np.eye(m.dim) - UH @ U)
    return CovarianceState(0.5 * (Xn + Xn.conj().T))


def char_function(s: CovarianceState, zeta) -> float:
    z = np.asarray(zeta, dtype=complex)
    if z.shape != (s.dim,):
        raise ValueError(f"zeta has shape {z.shape}, expected ({s.dim},)")
    return math.exp(-0.25 * np.vdot(z, s.X @ z).real)


def occupations(s: CovarianceState) -> np.ndarray:
    """Mean occupation of each mode, ``(X_jj - 1)/2``."""
    return (np.diag(s.X).real - 1.0) / 2.0


@dataclass(frozen=True)
class CPCertificate:
    defect_eigenvalues: np.ndarray
    kappa: float
    tol: float

    @property
    def min_defect_eigenvalue(self) -> float:
        return float(self.defect_eigenvalues.min())

    @property
    def defect_psd(self) -> bool:
        return self.min_defect_eigenvalue >= -self.tol

    @property
    def kappa_ok(self) -> bool:
        return self.kappa >= 1.0

    @property
    def is_cp(self) -> bool:
        return self.defect_psd and self.kappa_ok

    @property
    def effective_beta(self) -> float:
        """Inverse temperature whose Gibbs coth(beta/2) equals kappa."""
        if self.kappa <= 1.0:
            return math.inf
        return math.log((self.kappa + 1.0) / (self.kappa - 1.0))

    def as_dict(self) -> dict:
        return {
            "verdict": "CP" if self.is_cp else "NOT CP",
            "min_defect_eigenvalue": self.min_defect_eigenvalue,
            "defect_psd": self.defect_psd,
            "kappa": self.kappa,
            "kappa_ok": self.kappa_ok,
            "effective_beta": self.effective_beta,
            "tol": self.tol,
        }


def defect_gram(m: QuasiFreeMap) -> np.ndarray:
    U = m.U
    D = np.eye(m.dim) - U.conj().T @ U
    return 0.5 * (D + D.conj().T)


def defect_map(m: QuasiFreeMap) -> np.ndarray:
    """A map C with ``<Ca, Cb> = <a, b> - <Ua, Ub>`` (PSD square root of the defect Gram)."""
    lam, V = np.linalg.eigh(defect_gram(m))
    return (V * np.sqrt(np.clip(lam, 0.0, None))) @ V.conj().T


def cp_certificate(m: QuasiFreeMap, tol: float = TOL_SV) -> CPCertificate:
    """Finite-dimensional complete-positivity certificate for ``m``.

    CP iff the defect Gram ``I - U^H U`` is PSD (within ``tol``) and
    ``kappa >= 1``, so that Gamma is the characteristic function
    ``exp[-(kappa/4)|C z|^2]`` of a Gibbs state of the deformed CCR algebra.
    Never raises.
    """
    lam = np.linalg.eigvalsh(defect_gram(m))
    return CPCertificate(lam, float(m.kappa), tol)
