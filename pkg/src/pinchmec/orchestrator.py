"""Alternating optimization over placement, radiation, powers and time.

Each outer iteration runs the blocks in a fixed order: uplink placement PSO,
downlink placement PSO, radiation SCA, power recovery, then the time/CPU
subproblem.  Placement and radiation candidates are accepted only if they
raise the recovery-completed capacity (the objective once powers are pinned
to the harvested-energy frontier); otherwise the previous values are
retained.  A final per-iteration safeguard reverts any iteration that fails
to improve the true objective, so the recorded objective trace is
non-decreasing by construction.

Baselines share the same engine: fixed layouts skip the placement blocks,
and the TDMA variant replaces the NOMA offload model with per-device slots
of length T/(K+1) plus a per-device frequency/power step.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import channel, pso, radiation, time_alloc
from .channel import PaLayout
from .errors import ConfigurationError, InfeasibleError
from .pso import PsoParams
from .scenario import ChannelConstants, DeviceLayout, ScenarioConfig, derive_constants, solver_rng
from .system_model import (
    FeasibilityReport,
    RadiationVector,
    ResourceAllocation,
    SolutionState,
    check_feasibility,
    evaluate_capacity,
    harvested_energy_all,
    local_compute,
)

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class SchemeId(str, Enum):
    PROPOSED = "proposed"
    CONVENTIONAL_MIMO = "conventional_mimo"
    FIXED_PA = "fixed_pa"
    TDMA = "tdma"


@dataclass
class BlockRecord:
    block: str
    objective: float  # recovery-completed objective after the block
    delta: float


@dataclass
class OuterRecord:
    iteration: int
    objective: float  # true objective at the end of the iteration
    blocks: list[BlockRecord]
    feasibility: FeasibilityReport
    recovery_slack: np.ndarray
    recovery_clamped: np.ndarray
    recovery_energy: np.ndarray  # harvested E_k at the recovery step, for scaling
    pso_traces: dict[str, list[float]]
    wall_time: float
    reverted: bool = False


@dataclass
class AoTrace:
    scheme: SchemeId
    records: list[OuterRecord] = field(default_factory=list)
    converged: bool = False

    @property
    def objectives(self) -> list[float]:
        return [rec.objective for rec in self.records]


def trace_csv(trace: AoTrace) -> str:
    lines = ["outer_iter,objective_bits,block,delta_bits,feasible"]
    for rec in trace.records:
        feas = "true" if rec.feasibility.feasible else "false"
        for blk in rec.blocks:
            lines.append(
                f"{rec.iteration},{blk.objective:.17g},{blk.block},{blk.delta:.17g},{feas}"
            )
    return "\n".join(lines) + "\n"


# --- layouts and initial states ----------------------------------------------


def uniform_layout(config: ScenarioConfig) -> PaLayout:
    """Antennas at the M cell midpoints x_m = (2m-1) * D_x / (2M)."""
    m = config.num_antennas
    xs = (2.0 * np.arange(1, m + 1) - 1.0) * config.area_x / (2.0 * m)
    return PaLayout(xs=xs, height=config.waveguide_height)


def comb_layouts(config: ScenarioConfig, devices: DeviceLayout, consts: ChannelConstants):
    """Structured placement candidates: one guided-wavelength comb per device.

    At the perpendicular foot of a device the free-space path length is
    stationary, so antennas pitched an integer multiple of lambda_g apart
    combine almost coherently there.  These seed the placement swarm; random
    starts alone rarely line up many antennas at once.
    """
    m = config.num_antennas
    steps = max(1, math.ceil(config.min_spacing / consts.lambda_guided))
    pitch = steps * consts.lambda_guided
    offsets = (np.arange(m) - (m - 1) / 2.0) * pitch
    combs = []
    for x_dev in devices.positions[:, 0]:
        xs = x_dev + offsets
        if xs[0] < 0.0:
            xs = xs - xs[0]
        elif xs[-1] > config.area_x:
            xs = xs - (xs[-1] - config.area_x)
        if xs[0] >= 0.0 and xs[-1] <= config.area_x:
            combs.append(xs)
    return combs


def mimo_layout(config: ScenarioConfig, consts: ChannelConstants) -> PaLayout:
    """Half-wavelength ULA anchored at the feed end of the waveguide."""
    xs = np.arange(config.num_antennas) * consts.lambda_free / 2.0
    return PaLayout(xs=xs, height=config.waveguide_height)


def _recovered_alloc(
    state: SolutionState,
    devices: DeviceLayout,
    config: ScenarioConfig,
    consts: ChannelConstants,
    transmit_time: float | None,
) -> ResourceAllocation:
    rec = radiation.recover_powers(state, devices, config, consts, transmit_time)
    return replace(state.alloc, p=rec.p)


def init_solution(config: ScenarioConfig, devices: DeviceLayout) -> SolutionState:
    """Feasible starting point: uniform layouts, uniform radiation vector,
    an even time split, zero local frequencies and frontier powers."""
    m = config.num_antennas
    if config.area_x / m < config.min_spacing:
        raise ConfigurationError(
            f"uniform layout infeasible: spacing {config.area_x / m:g} m "
            f"is below min_spacing {config.min_spacing:g} m"
        )
    consts = derive_constants(config)
    layout = uniform_layout(config)
    half = config.frame_duration / 2.0
    state = SolutionState(
        uplink_layout=layout,
        downlink_layout=layout,
        w=RadiationVector.uniform(m),
        alloc=ResourceAllocation(
            p=np.zeros(len(devices)), tau1=half, tau2=half, f=np.zeros(len(devices))
        ),
    )
    state = replace(state, alloc=_recovered_alloc(state, devices, config, consts, None))
    return state


def _tdma_slot(config: ScenarioConfig) -> float:
    return config.frame_duration / (config.num_devices + 1)


def _initial_state(
    scheme: SchemeId, config: ScenarioConfig, devices: DeviceLayout, consts: ChannelConstants
) -> SolutionState:
    if scheme in (SchemeId.PROPOSED, SchemeId.FIXED_PA):
        return init_solution(config, devices)
    if scheme is SchemeId.CONVENTIONAL_MIMO:
        layout = mimo_layout(config, consts)
        if not channel.spacing_feasible(layout, config.min_spacing, config.area_x):
            raise InfeasibleError(
                f"half-wavelength ULA spacing {consts.lambda_free / 2.0:g} m violates "
                f"min_spacing {config.min_spacing:g} m"
            )
        half = config.frame_duration / 2.0
        state = SolutionState(
            uplink_layout=layout,
            downlink_layout=layout,
            w=RadiationVector.uniform(config.num_antennas),
            alloc=ResourceAllocation(
                p=np.zeros(len(devices)), tau1=half, tau2=half, f=np.zeros(len(devices))
            ),
        )
        return replace(state, alloc=_recovered_alloc(state, devices, config, consts, None))
    if scheme is SchemeId.TDMA:
        base = init_solution(config, devices)
        slot = _tdma_slot(config)
        alloc = ResourceAllocation(
            p=np.zeros(len(devices)),
            tau1=slot,
            tau2=config.frame_duration - slot,
            f=np.zeros(len(devices)),
        )
        state = replace(base, alloc=alloc)
        return replace(state, alloc=_recovered_alloc(state, devices, config, consts, slot))
    raise ValueError(f"unknown scheme {scheme!r}")


# --- scheme-aware evaluation ---------------------------------------------------


def tdma_offload_bits(
    state: SolutionState, devices: DeviceLayout, config: ScenarioConfig, consts: ChannelConstants
) -> float:
    """Per-device slotted offload: sum_k slot * B * log2(1 + p_k g_k / (M sigma^2))."""
    slot = _tdma_slot(config)
    g = channel.uplink_gains(state.uplink_layout, devices, consts)
    noise = len(state.uplink_layout) * consts.noise_power
    return float(
        np.sum(slot * config.bandwidth * np.log2(1.0 + state.alloc.p * g / noise))
    )


def scheme_objective(
    state: SolutionState,
    devices: DeviceLayout,
    config: ScenarioConfig,
    consts: ChannelConstants,
    scheme: SchemeId,
) -> float:
    if scheme is SchemeId.TDMA:
        bits, _ = local_compute(state.alloc.f, config)
        return tdma_offload_bits(state, devices, config, consts) + float(np.sum(bits))
    return evaluate_capacity(state, devices, config, consts)


def _transmit_time(scheme: SchemeId, state: SolutionState) -> float | None:
    # TDMA devices transmit only inside their own slot
    return state.alloc.tau1 if scheme is SchemeId.TDMA else None


def _completed_objective(
    state: SolutionState,
    devices: DeviceLayout,
    config: ScenarioConfig,
    consts: ChannelConstants,
    scheme: SchemeId,
) -> float:
    """Objective once powers are pinned to the harvest frontier.

    Downlink placement and radiation changes reach the capacity only through
    the recovered powers, so guard comparisons are made on this metric.
    """
    alloc = _recovered_alloc(state, devices, config, consts, _transmit_time(scheme, state))
    return scheme_objective(replace(state, alloc=alloc), devices, config, consts, scheme)


# --- TDMA per-device frequency/power step -------------------------------------


def _tdma_resource_step(
    state: SolutionState, devices: DeviceLayout, config: ScenarioConfig, consts: ChannelConstants
) -> ResourceAllocation:
    """Re-optimize each device's CPU frequency under its per-slot energy budget.

    The budget is spent exactly: p_k = (E_k - T*kappa*f^3) / slot, and the
    per-device bits are concave in f, so golden-section search suffices.
    """
    slot = _tdma_slot(config)
    t = config.frame_duration
    g = channel.uplink_gains(state.uplink_layout, devices, consts)
    noise = len(state.uplink_layout) * consts.noise_power
    e_harv = harvested_energy_all(state.downlink_layout, state.w, devices, slot, config, consts)

    def bits_k(k: int, f: float) -> float:
        p = (e_harv[k] - t * config.chip_kappa * f**3) / slot
        rate = math.log2(1.0 + g[k] * max(p, 0.0) / noise)
        return t * f / config.cycles_per_bit + slot * config.bandwidth * rate

    f_new = np.zeros(len(devices))
    p_new = np.zeros(len(devices))
    for k in range(len(devices)):
        cap = float(np.cbrt(e_harv[k] / (t * config.chip_kappa)))
        lo, hi = 0.0, cap
        while hi - lo > 1e-10 * max(cap, 1e-30):
            c = hi - _GOLDEN * (hi - lo)
            d = lo + _GOLDEN * (hi - lo)
            if bits_k(k, c) >= bits_k(k, d):
                hi = d
            else:
                lo = c
        candidates = [0.5 * (lo + hi), 0.0, cap]
        # never regress below the incumbent frequency when it is affordable
        if t * config.chip_kappa * state.alloc.f[k] ** 3 <= e_harv[k]:
            candidates.append(float(state.alloc.f[k]))
        best = max(candidates, key=lambda f: bits_k(k, f))
        f_new[k] = best
        p_new[k] = max(e_harv[k] - t * config.chip_kappa * best**3, 0.0) / slot
    return ResourceAllocation(p=p_new, tau1=slot, tau2=t - slot, f=f_new)


# --- the alternating engine ----------------------------------------------------


def run_scheme(
    scheme: SchemeId,
    config: ScenarioConfig,
    devices: DeviceLayout,
    *,
    outer_tol: float = 1e-6,
    max_outer: int = 30,
    pso_params: PsoParams | None = None,
    init: SolutionState | None = None,
) -> tuple[SolutionState, AoTrace]:
    """Run the alternating loop for one scheme and return the final state and trace."""
    consts = derive_constants(config)
    params = pso_params or PsoParams()
    state = init if init is not None else _initial_state(scheme, config, devices, consts)

    report = check_feasibility(
        state, devices, config, consts, transmit_time=_transmit_time(scheme, state)
    )
    if not report.feasible:
        raise InfeasibleError(f"initial state infeasible: {', '.join(report.violations)}")

    rng = solver_rng(config)
    bounds = [(0.0, config.area_x)] * config.num_antennas
    optimize_placement = scheme in (SchemeId.PROPOSED, SchemeId.TDMA)
    combs = comb_layouts(config, devices, consts) if optimize_placement else []

    trace = AoTrace(scheme=scheme)
    prev_obj = scheme_objective(state, devices, config, consts, scheme)

    for iteration in range(1, max_outer + 1):
        tick = time.perf_counter()
        saved_state = state
        blocks: list[BlockRecord] = []
        pso_traces: dict[str, list[float]] = {}
        metric = _completed_objective(state, devices, config, consts, scheme)

        def accept_if_better(cand: SolutionState, name: str):
            nonlocal state, metric
            cand_metric = _completed_objective(cand, devices, config, consts, scheme)
            if cand_metric > metric:
                state, delta = cand, cand_metric - metric
                metric = cand_metric
            else:
                delta = 0.0  # previous values retained
            blocks.append(BlockRecord(name, metric, delta))

        if optimize_placement:
            fit_ul = lambda xs: pso.uplink_fitness(xs, devices, state.alloc.p, consts, config)
            result = pso.run_pso_multistart(
                fit_ul, bounds, params, rng, config.min_spacing,
                seed_layouts=[state.uplink_layout.xs, *combs],
            )
            accept_if_better(
                replace(state, uplink_layout=PaLayout(np.sort(result.x), config.waveguide_height)),
                "uplink_pso",
            )
            pso_traces["uplink"] = result.trace

            g_now = channel.uplink_gains(state.uplink_layout, devices, consts)
            fit_dl = lambda xs: pso.downlink_fitness(
                xs, devices, state.w, g_now, state.alloc.tau1, consts, config
            )
            result = pso.run_pso_multistart(
                fit_dl, bounds, params, rng, config.min_spacing,
                seed_layouts=[state.downlink_layout.xs, *combs],
            )
            accept_if_better(
                replace(state, downlink_layout=PaLayout(np.sort(result.x), config.waveguide_height)),
                "downlink_pso",
            )
            pso_traces["downlink"] = result.trace

        g_now = channel.uplink_gains(state.uplink_layout, devices, consts)
        chan_eff = radiation.build_effective_channels(
            state.downlink_layout, devices, g_now, state.alloc.tau1, config, consts
        )
        sca = radiation.optimize_radiation(chan_eff, state.w)
        accept_if_better(replace(state, w=sca.w), "radiation_sca")

        t_tx = _transmit_time(scheme, state)
        rec = radiation.recover_powers(state, devices, config, consts, t_tx)
        state = replace(state, alloc=replace(state.alloc, p=rec.p))
        e_harv = harvested_energy_all(
            state.downlink_layout, state.w, devices, state.alloc.tau1, config, consts
        )
        _, e_local = local_compute(state.alloc.f, config)
        tx = state.alloc.tau2 if t_tx is None else t_tx
        recovery_slack = e_harv - state.alloc.p * tx - e_local
        obj_now = scheme_objective(state, devices, config, consts, scheme)
        blocks.append(BlockRecord("power_recovery", obj_now, obj_now - metric))
        metric = obj_now

        if scheme is SchemeId.TDMA:
            state = replace(
                state, alloc=_tdma_resource_step(state, devices, config, consts)
            )
            final_block = "local_freq"
        else:
            prob = time_alloc.build_time_alloc_problem(state, devices, config, consts)
            sol = time_alloc.solve_time_alloc(
                prob, incumbent=(state.alloc.tau1, state.alloc.tau2, state.alloc.f)
            )
            state = replace(
                state,
                alloc=ResourceAllocation(p=state.alloc.p, tau1=sol.tau1, tau2=sol.tau2, f=sol.f),
            )
            final_block = "time_alloc"

        obj = scheme_objective(state, devices, config, consts, scheme)
        blocks.append(BlockRecord(final_block, obj, obj - metric))

        reverted = False
        if obj < prev_obj:
            state, obj, reverted = saved_state, prev_obj, True

        report = check_feasibility(
            state, devices, config, consts, transmit_time=_transmit_time(scheme, state)
        )
        trace.records.append(
            OuterRecord(
                iteration=iteration,
                objective=obj,
                blocks=blocks,
                feasibility=report,
                recovery_slack=recovery_slack,
                recovery_clamped=rec.clamped,
                recovery_energy=e_harv,
                pso_traces=pso_traces,
                wall_time=time.perf_counter() - tick,
                reverted=reverted,
            )
        )
        delta_rel = (obj - prev_obj) / max(abs(prev_obj), 1e-300)
        prev_obj = obj
        if delta_rel < outer_tol:
            trace.converged = True
            break

    state = replace(state, objective=prev_obj, scheme=scheme.value, feasibility=report)
    return state, trace


def run_alternating(
    config: ScenarioConfig,
    devices: DeviceLayout,
    init: SolutionState,
    outer_tol: float = 1e-6,
    max_outer: int = 30,
    pso_params: PsoParams | None = None,
) -> tuple[SolutionState, AoTrace]:
    """Alternating optimization of the full design from a given feasible start."""
    return run_scheme(
        SchemeId.PROPOSED,
        config,
        devices,
        outer_tol=outer_tol,
        max_outer=max_outer,
        pso_params=pso_params,
        init=init,
    )


def run_baseline(scheme: SchemeId, config: ScenarioConfig, devices: DeviceLayout, **kwargs) -> SolutionState:
    """Run one scheme end to end and return its final state."""
    state, _ = run_scheme(scheme, config, devices, **kwargs)
    return state
