"""Harvested energy, computation bits, sum capacity and feasibility checks.

The frame of length T splits into a harvest phase tau1 and an offload phase
tau2.  Device k harvests E_k = beta*tau1*P_B*|sum_m h^D_mk|^2, computes
T*f_k/D bits locally at energy T*kappa*f_k^3, and the NOMA uplink carries
B*tau2*log2(1 + sum_k p_k*g_k / (M*sigma^2)) bits in total.  Bits are kept
as real numbers throughout (continuous-rate model).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channel
from .channel import PaLayout
from .scenario import ChannelConstants, DeviceLayout, ScenarioConfig

#: default relative feasibility tolerance (constraint-scaled)
FEAS_TOL = 1e-9


@dataclass(frozen=True)
class RadiationVector:
    """Real per-antenna radiation factors, constrained to the unit ball."""

    alpha: np.ndarray  # (M,)

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float).reshape(-1))

    def norm_sq(self) -> float:
        return float(self.alpha @ self.alpha)

    @staticmethod
    def uniform(m: int) -> "RadiationVector":
        return RadiationVector(np.full(m, 1.0 / np.sqrt(m)))


@dataclass(frozen=True)
class ResourceAllocation:
    """Per-device transmit powers and CPU frequencies plus the time split."""

    p: np.ndarray      # (K,) W
    tau1: float        # s
    tau2: float        # s
    f: np.ndarray      # (K,) cycles/s

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).reshape(-1))
        object.__setattr__(self, "f", np.asarray(self.f, dtype=float).reshape(-1))
        if np.any(self.p < 0.0):
            raise ValueError("transmit powers must be non-negative")
        if np.any(self.f < 0.0):
            raise ValueError("CPU frequencies must be non-negative")
        if self.tau1 < 0.0 or self.tau2 < 0.0:
            raise ValueError("time allocations must be non-negative")


@dataclass(frozen=True)
class FeasibilityReport:
    """Signed slacks, one entry per constraint family; slack >= 0 means satisfied."""

    spacing_uplink: float
    spacing_downlink: float
    range_uplink: float
    range_downlink: float
    energy: np.ndarray  # (K,)
    radiation: float
    time: float
    feasible: bool
    violations: tuple = ()


@dataclass(frozen=True)
class SolutionState:
    """Full decision-variable bundle exchanged between the solver blocks."""

    uplink_layout: PaLayout
    downlink_layout: PaLayout
    w: RadiationVector
    alloc: ResourceAllocation
    objective: float = float("nan")
    scheme: str = "proposed"
    feasibility: FeasibilityReport | None = None

    @property
    def feasible(self) -> bool:
        return self.feasibility is not None and self.feasibility.feasible


def harvested_energy(
    downlink_layout: PaLayout,
    w: RadiationVector,
    device,
    tau1: float,
    config: ScenarioConfig,
    consts: ChannelConstants,
) -> float:
    """Energy harvested by one device during the harvest phase, in joules."""
    gain = channel.aggregate_downlink_gain(downlink_layout, w, device, consts)
    return config.harvest_efficiency * tau1 * config.bs_power * gain


def harvested_energy_all(
    downlink_layout: PaLayout,
    w: RadiationVector,
    devices: DeviceLayout,
    tau1: float,
    config: ScenarioConfig,
    consts: ChannelConstants,
) -> np.ndarray:
    gains = channel.downlink_gains(downlink_layout, w, devices, consts)
    return config.harvest_efficiency * tau1 * config.bs_power * gains


def local_compute(f, config: ScenarioConfig):
    """Bits computed locally and the energy spent doing so, for frequency f.

    Accepts a scalar or an array of frequencies; returns (bits, joules).
    """
    f = np.asarray(f, dtype=float)
    bits = config.frame_duration * f / config.cycles_per_bit
    energy = config.frame_duration * config.chip_kappa * f**3
    if f.ndim == 0:
        return float(bits), float(energy)
    return bits, energy


def offload_bits(
    uplink_layout: PaLayout,
    alloc: ResourceAllocation,
    devices: DeviceLayout,
    config: ScenarioConfig,
    consts: ChannelConstants,
) -> float:
    """Total NOMA offload bits B*tau2*log2(1 + sum_k p_k g_k / (M sigma^2))."""
    g = channel.uplink_gains(uplink_layout, devices, consts)
    noise = len(uplink_layout) * consts.noise_power
    snr = float(alloc.p @ g) / noise
    return config.bandwidth * alloc.tau2 * np.log2(1.0 + snr)


def evaluate_capacity(
    state: SolutionState,
    devices: DeviceLayout,
    config: ScenarioConfig,
    consts: ChannelConstants,
) -> float:
    """Sum computation capacity: offloaded plus locally computed bits."""
    local_bits, _ = local_compute(state.alloc.f, config)
    return offload_bits(state.uplink_layout, state.alloc, devices, config, consts) + float(
        np.sum(local_bits)
    )


def _spacing_slack(xs: np.ndarray, delta: float) -> float:
    if xs.size < 2:
        return float("inf")
    return float(np.min(np.diff(np.sort(xs))) - delta)


def _range_slack(xs: np.ndarray, x_range: float) -> float:
    if xs.size == 0:
        return float("inf")
    return float(min(np.min(xs), np.min(x_range - xs)))


def check_feasibility(
    state: SolutionState,
    devices: DeviceLayout,
    config: ScenarioConfig,
    consts: ChannelConstants,
    tol: float = FEAS_TOL,
    transmit_time: float | None = None,
) -> FeasibilityReport:
    """Evaluate all constraints and report the signed slack of each.

    Infeasibility is a report, not an error.  ``transmit_time`` is the
    per-device transmit duration charged against the energy budget; it
    defaults to tau2 (simultaneous NOMA transmission).
    """
    alloc = state.alloc
    t_tx = alloc.tau2 if transmit_time is None else transmit_time

    e_harv = harvested_energy_all(state.downlink_layout, state.w, devices, alloc.tau1, config, consts)
    _, e_local = local_compute(alloc.f, config)
    e_spent = alloc.p * t_tx + e_local
    energy_slack = e_harv - e_spent

    report_fields = {
        "spacing_uplink": _spacing_slack(state.uplink_layout.xs, config.min_spacing),
        "spacing_downlink": _spacing_slack(state.downlink_layout.xs, config.min_spacing),
        "range_uplink": _range_slack(state.uplink_layout.xs, config.area_x),
        "range_downlink": _range_slack(state.downlink_layout.xs, config.area_x),
        "radiation": 1.0 - state.w.norm_sq(),
        "time": config.frame_duration - alloc.tau1 - alloc.tau2,
    }
    scales = {
        "spacing_uplink": max(config.min_spacing, 1e-30),
        "spacing_downlink": max(config.min_spacing, 1e-30),
        "range_uplink": config.area_x,
        "range_downlink": config.area_x,
        "radiation": 1.0,
        "time": config.frame_duration,
    }

    violations = [
        name for name, slack in report_fields.items() if slack < -tol * scales[name]
    ]
    energy_scale = np.maximum(np.maximum(e_harv, e_spent), 1e-30)
    bad_energy = energy_slack < -tol * energy_scale
    if np.any(bad_energy):
        violations.extend(f"energy[{k}]" for k in np.flatnonzero(bad_energy))

    return FeasibilityReport(
        spacing_uplink=report_fields["spacing_uplink"],
        spacing_downlink=report_fields["spacing_downlink"],
        range_uplink=report_fields["range_uplink"],
        range_downlink=report_fields["range_downlink"],
        energy=energy_slack,
        radiation=report_fields["radiation"],
        time=report_fields["time"],
        feasible=not violations,
        violations=tuple(violations),
    )
