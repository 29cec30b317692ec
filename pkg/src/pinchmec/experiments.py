"""Parameter-sweep harness: scheme runs over value grids, CSV emission.

A sweep runs every (value, scheme, seed) cell, sampling a fresh device drop
per seed, and reports one row per cell plus seed-averaged aggregates.  Rows
are assembled in spec order (value, then scheme, then seed) regardless of
execution order, so the emitted CSV is byte-stable for a given spec.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, InfeasibleError
from .orchestrator import AoTrace, SchemeId, run_scheme
from .pso import PsoParams
from .scenario import (
    ScenarioConfig,
    derive_constants,
    dbm_to_watts,
    sample_devices,
    with_seed,
)
from .system_model import harvested_energy_all

SWEEPABLE_PARAMS = ("bs_power_dbm", "num_antennas", "bandwidth")

CSV_HEADER = "sweep_param,value,scheme,seed,objective_bits,harvested_joules,tau1,tau2,outer_iters"


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple
    schemes: tuple
    seeds: tuple
    output: str | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "schemes", tuple(SchemeId(s) for s in self.schemes))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.param not in SWEEPABLE_PARAMS:
            raise ConfigurationError(
                f"unknown sweep parameter {self.param!r}; expected one of {SWEEPABLE_PARAMS}"
            )
        if not self.values:
            raise ConfigurationError("sweep needs at least one value")
        if not self.schemes:
            raise ConfigurationError("sweep needs at least one scheme")
        if not self.seeds:
            raise ConfigurationError("sweep needs at least one seed")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")


@dataclass(frozen=True)
class SweepRow:
    sweep_param: str
    value: float
    scheme: str
    seed: int
    objective_bits: float
    harvested_joules: float
    tau1: float
    tau2: float
    outer_iters: int


@dataclass(frozen=True)
class SweepFailure:
    value: float
    scheme: str
    seed: int
    error: str
    kind: str = "internal"  # configuration | infeasible | internal


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[SweepRow] = field(default_factory=list)
    failures: list[SweepFailure] = field(default_factory=list)


def apply_sweep_param(config: ScenarioConfig, param: str, value) -> ScenarioConfig:
    if param == "bs_power_dbm":
        return replace(config, bs_power=dbm_to_watts(float(value)))
    if param == "num_antennas":
        return replace(config, num_antennas=int(value))
    if param == "bandwidth":
        return replace(config, bandwidth=float(value))
    raise ConfigurationError(f"unknown sweep parameter {param!r}")


def run_cell(
    config: ScenarioConfig,
    param: str,
    value,
    scheme: SchemeId,
    seed: int,
    **engine_kwargs,
) -> SweepRow:
    """Run one (value, scheme, seed) cell and summarize its outcome."""
    cfg = with_seed(apply_sweep_param(config, param, value), seed)
    devices = sample_devices(cfg)
    state, trace = run_scheme(scheme, cfg, devices, **engine_kwargs)
    consts = derive_constants(cfg)
    harvested = float(
        np.sum(
            harvested_energy_all(
                state.downlink_layout, state.w, devices, state.alloc.tau1, cfg, consts
            )
        )
    )
    return SweepRow(
        sweep_param=param,
        value=float(value),
        scheme=scheme.value,
        seed=seed,
        objective_bits=state.objective,
        harvested_joules=harvested,
        tau1=state.alloc.tau1,
        tau2=state.alloc.tau2,
        outer_iters=len(trace.records),
    )


def run_sweep(
    spec: SweepSpec,
    config: ScenarioConfig,
    *,
    outer_tol: float = 1e-6,
    max_outer: int = 30,
    pso_params: PsoParams | None = None,
) -> SweepResult:
    """Run every sweep cell; cell failures are recorded and do not abort the sweep."""
    engine_kwargs = dict(outer_tol=outer_tol, max_outer=max_outer, pso_params=pso_params)
    cells = [
        (value, scheme, seed)
        for value in spec.values
        for scheme in spec.schemes
        for seed in spec.seeds
    ]

    def one(cell):
        value, scheme, seed = cell
        try:
            return run_cell(config, spec.param, value, scheme, seed, **engine_kwargs), None
        except Exception as exc:  # recorded per cell, sweep continues
            if isinstance(exc, ConfigurationError):
                kind = "configuration"
            elif isinstance(exc, InfeasibleError):
                kind = "infeasible"
            else:
                kind = "internal"
            return None, SweepFailure(
                value=float(value), scheme=scheme.value, seed=seed, error=str(exc), kind=kind
            )

    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            outcomes = list(pool.map(one, cells))
    else:
        outcomes = [one(cell) for cell in cells]

    result = SweepResult(spec=spec)
    for row, failure in outcomes:
        if row is not None:
            result.rows.append(row)
        else:
            result.failures.append(failure)
    return result


@dataclass(frozen=True)
class AggregateRow:
    value: float
    scheme: str
    mean_objective_bits: float
    mean_harvested_joules: float
    num_seeds: int


def aggregate_means(result: SweepResult) -> list[AggregateRow]:
    """Seed-averaged objective and harvest per (value, scheme), in spec order."""
    out = []
    for value in result.spec.values:
        for scheme in result.spec.schemes:
            rows = [
                r
                for r in result.rows
                if r.value == float(value) and r.scheme == scheme.value
            ]
            if not rows:
                continue
            out.append(
                AggregateRow(
                    value=float(value),
                    scheme=scheme.value,
                    mean_objective_bits=float(np.mean([r.objective_bits for r in rows])),
                    mean_harvested_joules=float(np.mean([r.harvested_joules for r in rows])),
                    num_seeds=len(rows),
                )
            )
    return out


def csv_text(result: SweepResult) -> str:
    """Render the sweep table with stable column order and float formatting."""
    if not result.rows:
        raise ValueError("cannot emit an empty sweep table")
    lines = [CSV_HEADER]
    lines += [
        f"{r.sweep_param},{r.value:.17g},{r.scheme},{r.seed},"
        f"{r.objective_bits:.17g},{r.harvested_joules:.17g},"
        f"{r.tau1:.17g},{r.tau2:.17g},{r.outer_iters}"
        for r in result.rows
    ]
    return "\n".join(lines) + "\n"


def emit_csv(result: SweepResult, path: str | Path) -> None:
    Path(path).write_text(csv_text(result))


def run_trace(
    config: ScenarioConfig,
    seed: int,
    *,
    outer_tol: float = 1e-6,
    max_outer: int = 30,
    pso_params: PsoParams | None = None,
) -> AoTrace:
    """Convergence trace of the full design loop for one seed."""
    cfg = with_seed(config, seed)
    devices = sample_devices(cfg)
    _, trace = run_scheme(
        SchemeId.PROPOSED,
        cfg,
        devices,
        outer_tol=outer_tol,
        max_outer=max_outer,
        pso_params=pso_params,
    )
    return trace
