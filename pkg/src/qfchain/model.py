"""Model parameters, hypothesis checks and coupling matrices.

Mode 0 is the system oscillator; chain mode ``k`` (1..N) sits at matrix
index ``k``.  All matrices here are (N+1) x (N+1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


class InvalidParamsError(ValueError):
    """Raised when a dynamical object is built from invalid parameters."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid model parameters: " + "; ".join(self.violations))


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the repeated-interaction model.

    ``E`` is the system energy, ``epsilon`` the chain-mode energy, ``eta`` the
    coupling, ``tau`` the interaction window, ``sigma_plus``/``sigma_minus``
    the gain/loss rates and ``N`` the number of chain modes.
    """

    E: float
    epsilon: float
    eta: float
    tau: float
    sigma_plus: float
    sigma_minus: float
    N: int

    @property
    def dim(self) -> int:
        return self.N + 1

    @property
    def t_end(self) -> float:
        """Right end of the (half-open) time domain ``[0, N*tau)``."""
        return self.N * self.tau

    def to_dict(self) -> dict:
        return {
            "E": self.E,
            "epsilon": self.epsilon,
            "eta": self.eta,
            "tau": self.tau,
            "sigma_plus": self.sigma_plus,
            "sigma_minus": self.sigma_minus,
            "N": self.N,
        }


@dataclass(frozen=True)
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_params(p: ModelParams) -> ValidationReport:
    """Check every constraint on ``p`` and report all violations by name.

    Never raises.  Names are ``"H1"`` (eta^2 <= E*epsilon), ``"H2"``
    (0 <= sigma_plus < sigma_minus) and ``"<field> > 0"`` style sign labels.
    """
    def holds(check) -> bool:
        try:
            return bool(check())
        except TypeError:
            return False

    v = []
    for name in ("E", "epsilon", "tau", "sigma_minus"):
        if not holds(lambda: getattr(p, name) > 0):
            v.append(f"{name} > 0")
    # eta = 0 is the decoupled limit, kept as a valid reference case
    if not holds(lambda: p.eta >= 0):
        v.append("eta >= 0")
    if not (isinstance(p.N, (int, np.integer)) and not isinstance(p.N, bool) and p.N >= 1):
        v.append("N >= 1 (integer)")
    if not holds(lambda: p.eta**2 <= p.E * p.epsilon):
        v.append("H1")
    if not holds(lambda: 0 <= p.sigma_plus < p.sigma_minus):
        v.append("H2")
    return ValidationReport(v)


def require_valid(p: ModelParams) -> None:
    report = validate_params(p)
    if not report.ok:
        raise InvalidParamsError(report.violations)


def kappa(p: ModelParams) -> float:
    """Attenuation coefficient (sigma_minus + sigma_plus)/(sigma_minus - sigma_plus)."""
    if not (0 <= p.sigma_plus < p.sigma_minus):
        raise InvalidParamsError(["H2"])
    return (p.sigma_minus + p.sigma_plus) / (p.sigma_minus - p.sigma_plus)


def damping_rate(p: ModelParams) -> float:
    """Net loss rate sigma_minus - sigma_plus (imaginary energy shift is half of it)."""
    return p.sigma_minus - p.sigma_plus


def relative_bound_c(p: ModelParams) -> float:
    """Relative-bound constant of the coupling with respect to K_0.

    ``c = sqrt(2) * eta / sqrt((E + sqrt(E^2 + (s+ + s-)^2/4)) * epsilon)``,
    strictly below 1 under H1 and H2.
    """
    require_valid(p)
    s = p.sigma_plus + p.sigma_minus
    return math.sqrt(2.0) * p.eta / math.sqrt((p.E + math.sqrt(p.E**2 + s**2 / 4.0)) * p.epsilon)


@dataclass(frozen=True)
class CouplingLayout:
    """Matrices J_n, X_n, Y_n and P0 for active chain mode ``n``."""

    n: int
    J: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    P0: np.ndarray


def _is_exact(*values) -> bool:
    return any(isinstance(x, Fraction) for x in values)


def build_layout(p: ModelParams, n: int) -> CouplingLayout:
    """Build the coupling matrices for window ``n``.

    With :class:`fractions.Fraction` parameters the matrices are object arrays
    and the arithmetic is exact.
    """
    require_valid(p)
    if not 1 <= n <= p.N:
        raise ValueError(f"chain mode n={n} outside 1..{p.N}")
    d = p.dim
    dtype = object if _is_exact(p.E, p.epsilon, p.eta) else float
    zero = Fraction(0) if dtype is object else 0.0
    one = Fraction(1) if dtype is object else 1.0

    J = np.full((d, d), zero, dtype=dtype)
    J[0, 0] = one
    J[n, n] = one

    half_gap = (p.E - p.epsilon) / 2
    X = np.full((d, d), zero, dtype=dtype)
    X[0, 0] = half_gap
    X[n, n] = -half_gap
    X[0, n] = p.eta
    X[n, 0] = p.eta

    eye = np.full((d, d), zero, dtype=dtype)
    for j in range(d):
        eye[j, j] = one
    Y = p.epsilon * eye + half_gap * J + X

    P0 = np.full((d, d), zero, dtype=dtype)
    P0[0, 0] = one
    return CouplingLayout(n=n, J=J, X=X, Y=Y, P0=P0)


def hamiltonian_coefficients(p: ModelParams, n: int) -> np.ndarray:
    """Coefficient matrix of H_n written directly from the Hamiltonian.

    Independent of :func:`build_layout`; used to cross-check Y_n.
    """
    d = p.dim
    dtype = object if _is_exact(p.E, p.epsilon, p.eta) else float
    h = np.zeros((d, d), dtype=dtype)
    if dtype is object:
        h[:] = Fraction(0)
    h[0, 0] = p.E
    for k in range(1, d):
        h[k, k] = p.epsilon
    h[0, n] = p.eta
    h[n, 0] = p.eta
    return h
