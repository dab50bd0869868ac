"""Quasi-free dynamics of a bosonic mode under repeated interaction with a chain.

Closed-form dual semigroup on Weyl symbols (:mod:`qfchain.quasifree`), a
brute-force truncated Fock-space master-equation oracle (:mod:`qfchain.fock`)
and a scenario runner that cross-validates the two (:mod:`qfchain.scenario`).
"""
from .model import (
    CouplingLayout, InvalidParamsError, ModelParams, ValidationReport,
    build_layout, kappa, relative_bound_c, validate_params,
)
from .quasifree import (
    CovarianceState, CPCertificate, QuasiFreeMap, apply_to_weyl, char_function,
    compose, cp_certificate, evolve_covariance, gamma, gibbs_covariance,
    occupations, one_step_map, propagator, repeated_interaction_map,
)

__version__ = "0.1.0"
