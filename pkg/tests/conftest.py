import numpy as np
import pytest

from qfchain.model import ModelParams


def desk_params(N=1, **overrides):
    base = dict(E=1.0, epsilon=0.5, eta=0.5, tau=1.0, sigma_plus=0.1, sigma_minus=0.4, N=N)
    base.update(overrides)
    return ModelParams(**base)


@pytest.fixture
def desk():
    return desk_params()


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def h1_eta(E, eps, frac):
    """``frac * sqrt(E eps)`` nudged down so H1 holds in floating point."""
    eta = float(frac * np.sqrt(E * eps))
    while eta**2 > E * eps:
        eta = float(np.nextafter(eta, 0.0))
    return eta


def valid_param_grid(N=2):
    """Deterministic grid of parameter sets satisfying H1 and H2 (>= 100 points)."""
    grid = []
    for E in (0.5, 1.0, 3.0):
        for eps in (0.25, 1.0, 2.0):
            for frac in (0.0, 0.5, 1.0):
                eta = h1_eta(E, eps, frac)
                for sm, sp in ((0.4, 0.1), (1.0, 0.0), (0.05, 0.049)):
                    for tau in (0.5, 2.0):
                        grid.append(ModelParams(E, eps, eta, tau, sp, sm, N))
    return grid


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} ({detail})")
    print(ACCEPTANCE_LINES[-1])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
