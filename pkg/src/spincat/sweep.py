"""Parameter sweeps over (N, theta, q_tilde, seed) with resumable persistence.

Each job optimizes a budgeted pulse sequence, runs the time-reversal protocol,
and appends one record to a CSV or JSON-lines file as soon as it completes.
Finished (N, theta, Q_tilde, n_pulses, seed) keys are skipped on re-runs, so
an interrupted sweep resumes to the identical record set.  Floats are written
with repr(), which round-trips exactly.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from spincat.dynamics import propagate_sequence
from spincat.interferometer import ProtocolConfig, loss_db, sensitivity
from spincat.pulse_optimizer import (
    FixedBudget,
    OptimizationProblem,
    _initial_css,
    optimize,
)
from spincat.spin_core import CatSpec, DickeState, _css_amplitudes, qfi_z

WORKERS_ENV_VAR = "SPINCAT_WORKERS"
SCHEMA_VERSION = 1


class InsufficientDataError(ValueError):
    """Raised when a scaling fit has fewer than three distinct N values."""


@dataclass(frozen=True)
class SweepConfig:
    """Axes and budget of one sweep; see README for the config-file schema."""

    n_list: tuple[int, ...]
    theta_list: tuple[float, ...]
    q_tilde_list: tuple[float, ...]
    n_pulses: int
    restarts: int
    seeds: int
    gamma: float
    output_dir: Path
    format: str = "csv"
    workers: "int | str" = "auto"
    max_iterations: int = 1000

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "theta_list", tuple(float(t) for t in self.theta_list))
        object.__setattr__(self, "q_tilde_list", tuple(float(q) for q in self.q_tilde_list))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if not (self.n_list and self.theta_list and self.q_tilde_list):
            raise ValueError("n_atoms, theta and q_tilde lists must be non-empty")
        if any(n < 2 for n in self.n_list):
            raise ValueError("every swept atom number must be >= 2")
        if self.seeds < 1 or self.restarts < 1:
            raise ValueError("seeds and restarts must be positive")
        if self.gamma < 0.0:
            raise ValueError("gamma must be nonnegative")
        if self.format not in ("csv", "json"):
            raise ValueError(f"format must be 'csv' or 'json', got {self.format!r}")


@dataclass(frozen=True)
class SweepRecord:
    """One completed sweep job; `error` is empty on success."""

    N: int
    theta: float
    Q_tilde: float
    n_pulses: int
    seed: int
    infidelity: float = math.nan
    qfi: float = math.nan
    gain_db_lossless: float = math.nan
    gain_db_lossy: float = math.nan
    amplification: float = math.nan
    slope: float = math.nan
    noise: float = math.nan
    wall_time_s: float = math.nan
    error: str = ""

    @property
    def key(self) -> tuple:
        return (self.N, self.theta, self.Q_tilde, self.n_pulses, self.seed)


@dataclass(frozen=True)
class ScalingFit:
    """Power law gain = a * N^b fitted by least squares on log10-log10 axes."""

    a: float
    b: float
    r_squared: float
    N_range: tuple[int, int]
    n_points: int


RECORD_FIELDS = [f.name for f in fields(SweepRecord)]
_INT_FIELDS = {"N", "n_pulses", "seed"}


def _parse_angle(token: str) -> float:
    """Float token in radians; a trailing 'pi' multiplies by pi ('0.8pi', 'pi')."""
    token = token.strip()
    if token.endswith("pi"):
        prefix = token[:-2].strip()
        if prefix in ("", "-"):
            prefix += "1"
        return float(prefix) * math.pi
    return float(token)


def _parse_list(raw: str, conv) -> tuple:
    return tuple(conv(tok) for tok in raw.replace(",", " ").split())


def load_sweep_config(path: "str | Path") -> SweepConfig:
    """Read the flat key-value config (INI section [sweep], schema_version 1)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    if not parser.has_section("sweep"):
        raise ValueError("config must contain a [sweep] section")
    sec = parser["sweep"]
    version = sec.getint("schema_version", fallback=None)
    if version != SCHEMA_VERSION:
        raise ValueError(
            f"unsupported schema_version {version!r}; this build reads {SCHEMA_VERSION}"
        )
    workers_raw = sec.get("workers", "auto").strip()
    return SweepConfig(
        n_list=_parse_list(sec.get("n_atoms", ""), int),
        theta_list=_parse_list(sec.get("theta", ""), _parse_angle),
        q_tilde_list=_parse_list(sec.get("q_tilde", ""), float),
        n_pulses=sec.getint("n_pulses"),
        restarts=sec.getint("restarts", fallback=8),
        seeds=sec.getint("seeds", fallback=1),
        gamma=sec.getfloat("gamma", fallback=0.36),
        output_dir=Path(sec.get("output_dir", "sweep-out")),
        format=sec.get("format", "csv").strip(),
        workers=workers_raw if workers_raw == "auto" else int(workers_raw),
        max_iterations=sec.getint("max_iterations", fallback=1000),
    )


def resolve_workers(configured: "int | str", override: "int | None" = None) -> int:
    """Worker count; an explicit override beats SPINCAT_WORKERS beats the config."""
    if override is not None:
        return max(1, int(override))
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        return max(1, int(env))
    if configured == "auto":
        return max(1, os.cpu_count() or 1)
    return max(1, int(configured))


# ---------------------------------------------------------------------------
# record persistence

def _format_value(name: str, value) -> str:
    if name == "error":
        return value
    if name in _INT_FIELDS:
        return str(int(value))
    v = float(value)
    return repr(v) if math.isfinite(v) else ""


def _parse_value(name: str, raw: str):
    if name == "error":
        return raw
    if name in _INT_FIELDS:
        return int(raw)
    return float(raw) if raw else math.nan


def _record_to_json_obj(record: SweepRecord) -> dict:
    obj = {}
    for name, value in asdict(record).items():
        if name != "error" and name not in _INT_FIELDS and not math.isfinite(value):
            obj[name] = None
        else:
            obj[name] = value
    return obj


def _record_from_json_obj(obj: dict) -> SweepRecord:
    kwargs = {}
    for name in RECORD_FIELDS:
        value = obj.get(name)
        if value is None and name != "error":
            value = math.nan
        kwargs[name] = value if name != "error" else (value or "")
    return SweepRecord(**kwargs)


def records_path(config: SweepConfig) -> Path:
    suffix = "csv" if config.format == "csv" else "jsonl"
    return config.output_dir / f"records.{suffix}"


def append_record(path: Path, record: SweepRecord, fmt: str) -> None:
    """Append one record, writing the CSV header if the file is new."""
    new_file = not path.exists() or path.stat().st_size == 0
    with open(path, "a", encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            if new_file:
                writer.writerow(RECORD_FIELDS)
            writer.writerow([_format_value(n, getattr(record, n)) for n in RECORD_FIELDS])
        else:
            fh.write(json.dumps(_record_to_json_obj(record)) + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def read_records(path: "str | Path") -> list[SweepRecord]:
    """Load a records file written by this module (CSV or JSON lines)."""
    path = Path(path)
    if not path.exists():
        return []
    out = []
    with open(path, encoding="utf-8") as fh:
        if path.suffix == ".csv":
            reader = csv.DictReader(fh)
            for row in reader:
                out.append(SweepRecord(**{n: _parse_value(n, row[n]) for n in RECORD_FIELDS}))
        else:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(_record_from_json_obj(json.loads(line)))
    return out


# ---------------------------------------------------------------------------
# jobs

def _run_sweep_job(payload: tuple) -> SweepRecord:
    """One (N, theta, Q_tilde, seed) job; failures land in the record's error field."""
    n, theta, q_tilde, n_pulses, seed, restarts, gamma, max_iterations = payload
    start = time.perf_counter()
    base = SweepRecord(N=n, theta=theta, Q_tilde=q_tilde, n_pulses=n_pulses, seed=seed)
    try:
        problem = OptimizationProblem(
            n_atoms=n,
            target=CatSpec.symmetric(theta),
            n_pulses=n_pulses,
            mode=FixedBudget(q_tilde),
            seed=seed,
            restarts=restarts,
            max_iterations=max_iterations,
        )
        result = optimize(problem)
        prepared = propagate_sequence(_initial_css(n), result.sequence)
        protocol = sensitivity(ProtocolConfig(n_atoms=n, sequence=result.sequence,
                                              gamma=gamma, loss_enabled=False))
        penalty = loss_db(gamma, q_tilde)
        return replace(
            base,
            infidelity=result.infidelity,
            qfi=qfi_z(prepared),
            gain_db_lossless=protocol.gain_db,
            gain_db_lossy=protocol.gain_db - penalty,
            amplification=protocol.amplification,
            slope=protocol.signal_slope,
            noise=protocol.noise,
            wall_time_s=time.perf_counter() - start,
        )
    except Exception as exc:  # failure must not kill the sweep
        return replace(
            base,
            wall_time_s=time.perf_counter() - start,
            error=f"{type(exc).__name__}: {exc}",
        )


def run_sweep(config: SweepConfig, workers: "int | None" = None,
              progress=None, plot: bool = True) -> dict:
    """Run all jobs not already on disk; returns a summary with fit results.

    Records append as jobs finish (single writer, crash-safe), so killing and
    re-running the sweep converges to the same record set.
    """
    config.output_dir.mkdir(parents=True, exist_ok=True)
    probe = config.output_dir / ".write-probe"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise PermissionError(f"output_dir is not writable: {exc}") from exc

    jobs = [
        (n, theta, q_tilde, config.n_pulses, seed,
         config.restarts, config.gamma, config.max_iterations)
        for n in config.n_list
        for theta in config.theta_list
        for q_tilde in config.q_tilde_list
        for seed in range(config.seeds)
    ]
    path = records_path(config)
    existing = read_records(path)
    done = {r.key for r in existing}
    pending = [j for j in jobs if (j[0], j[1], j[2], j[3], j[4]) not in done]

    n_workers = resolve_workers(config.workers, workers)
    completed, failed = 0, 0

    def handle(record: SweepRecord):
        nonlocal completed, failed
        append_record(path, record, config.format)
        completed += 1
        if record.error:
            failed += 1
        if progress is not None:
            progress(record)

    if n_workers == 1 or len(pending) <= 1:
        for job in pending:
            handle(_run_sweep_job(job))
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = [pool.submit(_run_sweep_job, job) for job in pending]
            for future in as_completed(futures):
                handle(future.result())

    records = read_records(path)
    cells = fit_cells(records, config)
    fits_path = config.output_dir / "scaling_fits.json"
    fits_path.write_text(json.dumps(cells, indent=2) + "\n", encoding="utf-8")

    figure_path = None
    if plot:
        from spincat.plotting import save_gain_scaling_figure

        figure_path = config.output_dir / "gain_scaling.png"
        save_gain_scaling_figure(records, cells["cells"], figure_path)

    return {
        "scheduled": len(jobs),
        "skipped": len(jobs) - len(pending),
        "completed": completed,
        "failed": failed,
        "records_path": str(path),
        "fits_path": str(fits_path),
        "figure_path": str(figure_path) if figure_path else None,
        "fits": cells,
    }


def fit_scaling(records: list[SweepRecord], gain_field: str = "gain_db_lossless",
                aggregate: str = "none") -> ScalingFit:
    """Least-squares power-law fit of gain versus N over successful records.

    aggregate="max" keeps only the best gain per N before fitting (what the
    sweep reports, since optimizer failures only ever push gain down);
    aggregate="none" fits every record.
    """
    if aggregate not in ("none", "max"):
        raise ValueError(f"unknown aggregate {aggregate!r}")
    points = [
        (r.N, getattr(r, gain_field))
        for r in records
        if not r.error and math.isfinite(getattr(r, gain_field))
    ]
    if aggregate == "max":
        best: dict[int, float] = {}
        for n, g in points:
            best[n] = max(g, best.get(n, -math.inf))
        points = sorted(best.items())
    n_distinct = len({n for n, _ in points})
    if n_distinct < 3:
        raise InsufficientDataError(
            f"need at least 3 distinct N values, got {n_distinct}"
        )
    x = np.log10([n for n, _ in points])
    y = np.array([g for _, g in points]) / 10.0  # dB -> log10(gain)
    b, intercept = np.polyfit(x, y, 1)
    residuals = y - (b * x + intercept)
    ss_res = float(residuals @ residuals)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r_squared = 1.0 if ss_tot < 1e-30 else max(0.0, 1.0 - ss_res / ss_tot)
    return ScalingFit(
        a=float(10.0**intercept),
        b=float(b),
        r_squared=float(r_squared),
        N_range=(int(min(n for n, _ in points)), int(max(n for n, _ in points))),
        n_points=len(points),
    )


def fit_cells(records: list[SweepRecord], config: SweepConfig) -> dict:
    """Per-(theta, Q_tilde) scaling fits, lossless and lossy, plus the budget used."""
    cells = []
    for theta in config.theta_list:
        for q_tilde in config.q_tilde_list:
            sub = [r for r in records
                   if r.theta == theta and r.Q_tilde == q_tilde
                   and r.n_pulses == config.n_pulses]
            cell = {"theta": theta, "Q_tilde": q_tilde, "n_records": len(sub)}
            for label, field_name in (("lossless", "gain_db_lossless"),
                                      ("lossy", "gain_db_lossy")):
                try:
                    fit = fit_scaling(sub, gain_field=field_name, aggregate="max")
                    cell[label] = {
                        "a": fit.a, "b": fit.b, "r_squared": fit.r_squared,
                        "N_range": list(fit.N_range), "n_points": fit.n_points,
                    }
                except InsufficientDataError as exc:
                    cell[label] = {"error": str(exc)}
            cells.append(cell)
    return {
        "schema_version": SCHEMA_VERSION,
        "aggregate": "max",
        "budget": {
            "n_pulses": config.n_pulses,
            "restarts": config.restarts,
            "seeds": config.seeds,
            "gamma": config.gamma,
            "max_iterations": config.max_iterations,
        },
        "cells": cells,
    }


# ---------------------------------------------------------------------------
# Husimi grids

@dataclass(frozen=True)
class HusimiGrid:
    """|<theta,phi|psi>|^2 sampled on a lat-long grid, with its quadrature check."""

    n_atoms: int
    thetas: np.ndarray
    phis: np.ndarray
    values: np.ndarray
    quadrature: float


def husimi_grid(state: DickeState, n_theta: int = 181, n_phi: int = 361) -> HusimiGrid:
    """Overlap-squared of `state` with every grid coherent state.

    The quadrature field integrates values * (N+1)/(4 pi) over the sphere by
    the trapezoid rule; it sits within 1% of 1 at the default resolution.
    """
    if n_theta < 2 or n_phi < 2:
        raise ValueError("grid must be at least 2 x 2")
    n = state.n_atoms
    thetas = np.linspace(0.0, math.pi, n_theta)
    phis = np.linspace(-math.pi, math.pi, n_phi)
    # <css(theta,phi)|psi> = sum_k conj(css(theta,0))_k psi_k e^(-i k phi)
    k = np.arange(n + 1)
    phase_table = np.exp(-1j * np.outer(phis, k))
    values = np.empty((n_theta, n_phi))
    for i, theta in enumerate(thetas):
        g = np.conj(_css_amplitudes(n, theta, 0.0)) * state.amplitudes
        values[i] = np.abs(phase_table @ g) ** 2
    integrand = values * np.sin(thetas)[:, None]
    quadrature = float(
        np.trapezoid(np.trapezoid(integrand, phis, axis=1), thetas)
        * (n + 1) / (4.0 * math.pi)
    )
    return HusimiGrid(n_atoms=n, thetas=thetas, phis=phis,
                      values=values, quadrature=quadrature)


def write_husimi_csv(grid: HusimiGrid, path: "str | Path") -> None:
    """CSV columns theta, phi, q with the quadrature check in a comment header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# n_atoms = {grid.n_atoms}\n")
        fh.write(f"# quadrature_normalization = {grid.quadrature!r}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["theta", "phi", "q"])
        for i, theta in enumerate(grid.thetas):
            for j, phi in enumerate(grid.phis):
                writer.writerow([repr(float(theta)), repr(float(phi)),
                                 repr(float(grid.values[i, j]))])
