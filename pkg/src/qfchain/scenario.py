"""Scenario configs, trajectory runs and closed-form vs oracle cross-validation."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from . import fock, quasifree as qf
from .model import ModelParams, kappa, relative_bound_c, validate_params

MODES = ("closed_form", "oracle", "cross_validate")
ORACLE_MODES = ("oracle", "cross_validate")

DEFAULT_TOLERANCES = {
    "tol_sv": qf.TOL_SV,
    "tol_psd": qf.TOL_PSD,
    "tol_herm": qf.TOL_HERM,
    "tol_char": 5e-3,
    "tol_tail": 1e-4,
    "tol_trace": fock.TOL_TRACE,
    "tol_occ": 1e-8,
}

PARAM_KEYS = ("E", "epsilon", "eta", "tau", "sigma_plus", "sigma_minus", "N")
CONFIG_KEYS = (
    "params", "beta0", "beta", "mode", "t_max", "sample_dt",
    "cutoff_M", "rk4_dt", "probes", "seed", "tolerances",
)
REQUIRED_KEYS = ("params", "beta0", "beta", "mode", "t_max", "sample_dt")

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2, 3


class ConfigError(ValueError):
    """Config could not be parsed or failed validation; lists every problem."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class ScenarioConfig:
    params: ModelParams
    beta0: float
    beta: float
    mode: str
    t_max: float
    sample_dt: float
    cutoff_M: int | None = None
    rk4_dt: float = 1e-3
    probes: list = field(default_factory=list)
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def tol(self, name: str) -> float:
        return self.tolerances[name]

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "beta0": self.beta0,
            "beta": self.beta,
            "mode": self.mode,
            "t_max": self.t_max,
            "sample_dt": self.sample_dt,
            "cutoff_M": self.cutoff_M,
            "rk4_dt": self.rk4_dt,
            "probes": [[[z.real, z.imag] for z in probe] for probe in self.probes],
            "seed": self.seed,
            "tolerances": dict(self.tolerances),
        }


def default_probes(N: int, seed: int, radius: float = fock.PROBE_RADIUS) -> list[np.ndarray]:
    """``radius*e0``, ``radius*e1`` and five seeded random vectors of norm <= radius."""
    d = N + 1
    probes = []
    for j in (0, 1):
        e = np.zeros(d, dtype=complex)
        e[j] = radius
        probes.append(e)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        z = rng.normal(size=d) + 1j * rng.normal(size=d)
        probes.append(z / np.linalg.norm(z) * radius * rng.uniform(0.2, 1.0))
    return probes


def _parse_probe(raw, d: int, i: int, problems: list) -> np.ndarray | None:
    if not isinstance(raw, list) or len(raw) != d:
        problems.append(f"probes[{i}]: expected a list of {d} entries")
        return None
    out = np.zeros(d, dtype=complex)
    for j, entry in enumerate(raw):
        if isinstance(entry, (int, float)) and not isinstance(entry, bool):
            out[j] = entry
        elif isinstance(entry, list) and len(entry) == 2 and all(isinstance(x, (int, float)) for x in entry):
            out[j] = complex(entry[0], entry[1])
        else:
            problems.append(f"probes[{i}][{j}]: expected a number or [re, im]")
            return None
    return out


def _number(raw: dict, key: str, problems: list, where: str = "") -> float | None:
    val = raw.get(key)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        problems.append(f"{where}{key}: expected a number, got {val!r}")
        return None
    return float(val)


def parse_config(raw) -> ScenarioConfig:
    """Validate a decoded JSON object; all problems are reported together."""
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object"])
    for key in raw:
        if key not in CONFIG_KEYS:
            problems.append(f"unknown key {key!r}")
    for key in REQUIRED_KEYS:
        if key not in raw:
            problems.append(f"missing key {key!r}")
    if problems:
        raise ConfigError(problems)

    praw = raw["params"]
    params = None
    t_end = None
    if not isinstance(praw, dict):
        problems.append("params: expected an object")
    else:
        for key in praw:
            if key not in PARAM_KEYS:
                problems.append(f"params: unknown key {key!r}")
        vals = {}
        for key in PARAM_KEYS:
            if key not in praw:
                problems.append(f"params: missing key {key!r}")
            elif key == "N":
                if isinstance(praw["N"], bool) or not isinstance(praw["N"], int):
                    problems.append(f"params.N: expected an integer, got {praw['N']!r}")
                else:
                    vals["N"] = praw["N"]
            else:
                v = _number(praw, key, problems, "params.")
                if v is not None:
                    vals[key] = v
        if "N" in vals and vals.get("tau", 0) > 0:
            t_end = vals["N"] * vals["tau"]
        if len(vals) == len(PARAM_KEYS):
            params = ModelParams(**vals)
            violations = validate_params(params).violations
            problems.extend(f"params: violates {name}" for name in violations)
            if violations:
                params = None

    beta0 = _number(raw, "beta0", problems)
    beta = _number(raw, "beta", problems)
    for name, b in (("beta0", beta0), ("beta", beta)):
        if b is not None and not b > 0:
            problems.append(f"{name}: inverse temperature must be positive")

    mode = raw["mode"]
    if mode not in MODES:
        problems.append(f"mode: expected one of {MODES}, got {mode!r}")

    t_max = _number(raw, "t_max", problems)
    if t_max is not None:
        if t_max < 0:
            problems.append("t_max: must be >= 0")
        if t_end is not None and not t_max < t_end:
            problems.append(f"t_max: must lie in [0, N*tau) = [0, {t_end})")
    sample_dt = _number(raw, "sample_dt", problems)
    if sample_dt is not None and not sample_dt > 0:
        problems.append("sample_dt: must be > 0")

    cutoff_M = raw.get("cutoff_M")
    if mode in ORACLE_MODES:
        if cutoff_M is None:
            problems.append(f"cutoff_M: required for mode {mode!r}")
        elif isinstance(cutoff_M, bool) or not isinstance(cutoff_M, int) or cutoff_M < 2:
            problems.append("cutoff_M: expected an integer >= 2")
    rk4_dt = 1e-3
    if "rk4_dt" in raw:
        rk4_dt = _number(raw, "rk4_dt", problems)
        if rk4_dt is not None and not rk4_dt > 0:
            problems.append("rk4_dt: must be > 0")

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        problems.append(f"seed: expected an integer, got {seed!r}")
        seed = 0

    tolerances = dict(DEFAULT_TOLERANCES)
    traw = raw.get("tolerances", {})
    if not isinstance(traw, dict):
        problems.append("tolerances: expected an object")
    else:
        for key, val in traw.items():
            if key not in DEFAULT_TOLERANCES:
                problems.append(f"tolerances: unknown key {key!r}")
            elif isinstance(val, bool) or not isinstance(val, (int, float)) or val < 0:
                problems.append(f"tolerances.{key}: expected a non-negative number")
            else:
                tolerances[key] = float(val)

    probes = []
    if params is not None:
        if "probes" in raw:
            if not isinstance(raw["probes"], list) or not raw["probes"]:
                problems.append("probes: expected a non-empty list")
            else:
                for i, pr in enumerate(raw["probes"]):
                    z = _parse_probe(pr, params.dim, i, problems)
                    if z is not None:
                        probes.append(z)
        else:
            probes = default_probes(params.N, seed)

    if problems:
        raise ConfigError(problems)
    return ScenarioConfig(
        params=params, beta0=beta0, beta=beta, mode=mode, t_max=t_max, sample_dt=sample_dt,
        cutoff_M=cutoff_M, rk4_dt=rk4_dt, probes=probes, seed=seed, tolerances=tolerances,
    )


def read_config_json(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc


def load_config(path) -> ScenarioConfig:
    return parse_config(read_config_json(path))


def sample_times(t_max: float, sample_dt: float) -> np.ndarray:
    count = int(math.floor(t_max / sample_dt + 1e-9))
    return sample_dt * np.arange(count + 1)


@dataclass
class TrajectoryRecord:
    step_index: int
    time: float
    window_n: int
    occ: np.ndarray
    gamma_probe: np.ndarray
    trace_err: float = 0.0
    min_eig_X_minus_I: float = 0.0


class RuntimeInvariantError(RuntimeError):
    def __init__(self, message: str, diagnostics: dict):
        self.diagnostics = diagnostics
        super().__init__(f"{message}: {diagnostics}")


def _window(p: ModelParams, t: float) -> int:
    return qf.window_of(p, t)[0]


def closed_form_states(cfg: ScenarioConfig) -> Iterator[tuple[float, qf.QuasiFreeMap, qf.CovarianceState]]:
    """Yield ``(t, composite map, covariance)`` at each sample time.

    Advances window by window with per-segment maps, so memory does not grow
    with the number of samples.
    """
    p = cfg.params
    k = kappa(p)
    total = qf.identity_map(p.dim, k)
    state = qf.gibbs_covariance(cfg.beta0, cfg.beta, p.N)
    t_now = 0.0
    for t in sample_times(cfg.t_max, cfg.sample_dt):
        while t_now < t:
            n = min(int(t_now // p.tau) + 1, p.N)
            boundary = n * p.tau
            stop = min(t, boundary) if n < p.N else t
            seg = qf.one_step_map(p, n, stop - t_now)
            total = qf.compose(total, seg)
            state = qf.evolve_covariance(seg, state)
            t_now = stop
        yield float(t), total, state


def closed_form_trajectory(cfg: ScenarioConfig) -> Iterator[TrajectoryRecord]:
    p = cfg.params
    for i, (t, total, state) in enumerate(closed_form_states(cfg)):
        occ = qf.occupations(state)
        lam = state.min_eig_excess()
        if lam < -cfg.tol("tol_psd") or occ.min() < -cfg.tol("tol_occ"):
            raise RuntimeInvariantError(
                "covariance left the physical set", {"time": t, "min_eig_X_minus_I": lam}
            )
        g = np.array([qf.gamma(total, z) for z in cfg.probes])
        yield TrajectoryRecord(i, t, _window(p, t), occ, g, 0.0, lam)


def _oracle_setup(cfg: ScenarioConfig):
    modes = fock.build_modes(cfg.params.N, cfg.cutoff_M)
    rho0 = fock.gibbs_rho(cfg.beta0, cfg.beta, modes, tail_tol=None)
    return modes, rho0


def oracle_states(cfg: ScenarioConfig) -> Iterator[tuple[float, np.ndarray, fock.TruncatedModes]]:
    modes, rho0 = _oracle_setup(cfg)
    prop = fock.Propagator(cfg.params, modes, rho0, cfg.rk4_dt)
    for t in sample_times(cfg.t_max, cfg.sample_dt):
        yield float(t), prop.advance_to(t), modes


def _check_rho(cfg: ScenarioConfig, t: float, rho, modes) -> fock.RhoDiagnostics:
    diag = fock.diagnostics(rho, modes)
    if diag.trace_err > cfg.tol("tol_trace") * max(t, 1.0) or diag.min_eig < -fock.TOL_MIN_EIG:
        raise RuntimeInvariantError("density matrix left the physical set", {"time": t, **diag.__dict__})
    return diag


def oracle_trajectory(cfg: ScenarioConfig) -> Iterator[TrajectoryRecord]:
    p = cfg.params
    zeros = np.zeros(len(cfg.probes))
    for i, (t, rho, modes) in enumerate(oracle_states(cfg)):
        diag = _check_rho(cfg, t, rho, modes)
        occ = fock.occupations_rho(rho, modes)
        yield TrajectoryRecord(i, t, _window(p, t), occ, zeros, diag.trace_err, 0.0)


@dataclass
class CrossValidationReport:
    times: np.ndarray
    deviations: np.ndarray  # (n_times, n_probes)
    occ_deviation: float
    max_trace_drift: float
    max_tail_mass: float
    tol_char: float
    tol_tail: float
    records: list = field(default_factory=list, repr=False)

    @property
    def max_deviation(self) -> float:
        return float(self.deviations.max()) if self.deviations.size else 0.0

    @property
    def tail_ok(self) -> bool:
        return self.max_tail_mass <= self.tol_tail

    @property
    def passed(self) -> bool:
        return self.tail_ok and self.max_deviation <= self.tol_char

    def as_dict(self) -> dict:
        return {
            "verdict": "pass" if self.passed else "fail",
            "max_char_deviation": self.max_deviation,
            "max_occ_deviation": self.occ_deviation,
            "max_trace_drift": self.max_trace_drift,
            "max_tail_mass": self.max_tail_mass,
            "tail_ok": self.tail_ok,
            "tol_char": self.tol_char,
            "tol_tail": self.tol_tail,
            "per_time_max_deviation": [float(x) for x in self.deviations.max(axis=1)],
            "deviations": self.deviations.tolist(),
        }


def cross_validate(cfg: ScenarioConfig) -> CrossValidationReport:
    """Run both pipelines and compare characteristic functions at every sample.

    Records (closed-form occupations and Gamma, oracle trace error) are kept
    on the report for CSV output.
    """
    p = cfg.params
    modes, _ = _oracle_setup(cfg)
    weyl = [fock.weyl_matrix(modes, z) for z in cfg.probes]
    times, devs, records = [], [], []
    occ_dev = drift = tail = 0.0
    pairs = zip(closed_form_states(cfg), oracle_states(cfg))
    for i, ((t, total, state), (_, rho, _)) in enumerate(pairs):
        diag = _check_rho(cfg, t, rho, modes)
        drift = max(drift, diag.trace_err)
        tail = max(tail, diag.tail_mass)
        row = [
            abs(qf.char_function(state, z) - fock.oracle_char_function(rho, modes, z, W))
            for z, W in zip(cfg.probes, weyl)
        ]
        occ = qf.occupations(state)
        occ_dev = max(occ_dev, float(np.abs(occ - fock.occupations_rho(rho, modes)).max()))
        times.append(t)
        devs.append(row)
        g = np.array([qf.gamma(total, z) for z in cfg.probes])
        records.append(
            TrajectoryRecord(i, t, _window(p, t), occ, g, diag.trace_err, state.min_eig_excess())
        )
    return CrossValidationReport(
        np.array(times), np.array(devs), occ_dev, drift, tail,
        cfg.tol("tol_char"), cfg.tol("tol_tail"), records,
    )


def _fmt(x) -> str:
    return format(float(x), ".17g")


def csv_header(cfg: ScenarioConfig) -> list[str]:
    d = cfg.params.dim
    return (
        ["step", "time", "window_n"]
        + [f"occ_{j}" for j in range(d)]
        + [f"gamma_probe_{j}" for j in range(len(cfg.probes))]
        + ["trace_err", "min_eig_X_minus_I"]
    )


def record_row(r: TrajectoryRecord) -> list[str]:
    return (
        [str(r.step_index), _fmt(r.time), str(r.window_n)]
        + [_fmt(x) for x in r.occ]
        + [_fmt(x) for x in r.gamma_probe]
        + [_fmt(r.trace_err), _fmt(r.min_eig_X_minus_I)]
    )


def _json_safe(x):
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


FILLED_COLUMNS = {
    "closed_form": ["trace_err"],
    "oracle": ["gamma_probe", "min_eig_X_minus_I"],
    "cross_validate": [],
}


def base_summary(cfg: ScenarioConfig) -> dict:
    p = cfg.params
    composite = qf.repeated_interaction_map(p, cfg.t_max)
    return {
        "config": cfg.to_dict(),
        "kappa": kappa(p),
        "relative_bound_c": relative_bound_c(p),
        "cp_certificate": qf.cp_certificate(composite, cfg.tol("tol_sv")).as_dict(),
    }


def run_scenario(cfg: ScenarioConfig, out_dir) -> dict:
    """Run ``cfg`` and write ``trajectory.csv`` and ``summary.json`` into ``out_dir``.

    Closed-form and oracle records are written as they are produced.  Returns
    the summary dict.  Raises :class:`RuntimeInvariantError` (after writing a
    partial summary) if a state leaves the physical set.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = base_summary(cfg)
    summary["mode"] = cfg.mode
    summary["zero_filled_columns"] = FILLED_COLUMNS[cfg.mode]
    summary["max_trace_drift"] = None
    summary["max_char_deviation"] = None
    n_records = 0
    try:
        with open(out / "trajectory.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(csv_header(cfg))
            if cfg.mode == "cross_validate":
                report = cross_validate(cfg)
                records = report.records
                summary["cross_validation"] = report.as_dict()
                summary["max_trace_drift"] = report.max_trace_drift
                summary["max_char_deviation"] = report.max_deviation
                summary["verdict"] = "pass" if report.passed else "fail"
            elif cfg.mode == "oracle":
                records = oracle_trajectory(cfg)
            else:
                records = closed_form_trajectory(cfg)
            drift = 0.0
            for rec in records:
                writer.writerow(record_row(rec))
                drift = max(drift, rec.trace_err)
                n_records += 1
            if cfg.mode == "oracle":
                summary["max_trace_drift"] = drift
    except RuntimeInvariantError as exc:
        summary["error"] = str(exc)
        summary["diagnostics"] = exc.diagnostics
        raise
    finally:
        summary["n_records"] = n_records
        with open(out / "summary.json", "w") as fh:
            json.dump(_json_safe(summary), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return summary
