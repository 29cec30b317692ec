"""Radiation-vector optimization and device transmit-power recovery.

The harvest-weighted objective sum_k c_k |u_k^T w|^2 with c_k = g_k * beta *
tau1 * P_B * eta^2 is maximized over the unit ball by successive convex
approximation: each round linearizes |u_k^T w|^2 around the current point,
which reduces to maximizing a^T w with a = 2 * sum_k c_k R_k w_hat, whose
norm-ball maximizer is a/||a||.  With a single device this is exactly power
iteration on R_1, so the fixed point is the principal eigenvector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channel
from .channel import PaLayout
from .scenario import ChannelConstants, DeviceLayout, ScenarioConfig
from .system_model import (
    RadiationVector,
    SolutionState,
    harvested_energy_all,
    local_compute,
)

__all__ = [
    "RadiationVector",
    "EffectiveChannels",
    "ScaResult",
    "RecoveredPowers",
    "build_effective_channels",
    "radiation_objective",
    "surrogate_gain",
    "sca_step",
    "optimize_radiation",
    "recover_powers",
]


@dataclass(frozen=True)
class EffectiveChannels:
    """Per-device effective channel data for the radiation subproblem.

    u holds the per-antenna downlink phasors divided by distance (no eta, no
    alpha), r_mats the real symmetric outer products Re(u* u^T), and c the
    scalar weights g_k * beta * tau1 * P_B * eta^2.
    """

    u: np.ndarray       # (K, M) complex
    r_mats: np.ndarray  # (K, M, M) real symmetric
    c: np.ndarray       # (K,)


@dataclass
class ScaResult:
    w: RadiationVector
    objectives: list[float]


@dataclass
class RecoveredPowers:
    p: np.ndarray          # (K,) W
    clamped: np.ndarray    # (K,) bool, harvested energy below local spend
    no_offload: bool       # transmit time was zero, powers undefined


def build_effective_channels(
    downlink_layout: PaLayout,
    devices: DeviceLayout,
    g: np.ndarray,
    tau1: float,
    config: ScenarioConfig,
    consts: ChannelConstants,
) -> EffectiveChannels:
    u = channel.field_terms(downlink_layout.xs, downlink_layout.height, devices, consts).T
    r_mats = np.real(np.conj(u)[:, :, None] * u[:, None, :])
    c = (
        np.asarray(g, dtype=float)
        * config.harvest_efficiency
        * tau1
        * config.bs_power
        * consts.eta**2
    )
    return EffectiveChannels(u=u, r_mats=r_mats, c=c)


def radiation_objective(chan: EffectiveChannels, w) -> float:
    """Exact subproblem objective sum_k c_k |u_k^T w|^2."""
    alpha = np.asarray(getattr(w, "alpha", w), dtype=float)
    return float(chan.c @ np.abs(chan.u @ alpha) ** 2)


def surrogate_gain(chan: EffectiveChannels, w_hat, w) -> np.ndarray:
    """Linearized per-device gains 2*w_hat^T R_k w - w_hat^T R_k w_hat."""
    w_hat = np.asarray(getattr(w_hat, "alpha", w_hat), dtype=float)
    w = np.asarray(getattr(w, "alpha", w), dtype=float)
    rw_hat = chan.r_mats @ w_hat
    return 2.0 * (rw_hat @ w) - rw_hat @ w_hat


def sca_step(chan: EffectiveChannels, w_hat) -> np.ndarray:
    """One SCA round: solve the linearized subproblem on the unit ball exactly."""
    w_hat = np.asarray(getattr(w_hat, "alpha", w_hat), dtype=float)
    a = 2.0 * np.einsum("k,kij,j->i", chan.c, chan.r_mats, w_hat)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return w_hat
    return a / norm


def _canonical_sign(alpha: np.ndarray) -> np.ndarray:
    # w and -w are equivalent; pin the largest-magnitude component >= 0
    lead = int(np.argmax(np.abs(alpha)))
    return -alpha if alpha[lead] < 0.0 else alpha


def optimize_radiation(
    chan: EffectiveChannels,
    w_init,
    max_iters: int = 100,
    tol: float = 1e-8,
) -> ScaResult:
    """Iterate SCA rounds until the relative objective improvement drops below tol."""
    w = np.asarray(getattr(w_init, "alpha", w_init), dtype=float)
    objectives = [radiation_objective(chan, w)]
    best_w, best_obj = w, objectives[0]
    for _ in range(max_iters):
        w = sca_step(chan, w)
        obj = radiation_objective(chan, w)
        objectives.append(obj)
        if obj > best_obj:
            best_w, best_obj = w, obj
        if obj - objectives[-2] <= tol * max(abs(objectives[-2]), 1e-300):
            break
    return ScaResult(w=RadiationVector(_canonical_sign(best_w)), objectives=objectives)


def recover_powers(
    state: SolutionState,
    devices: DeviceLayout,
    config: ScenarioConfig,
    consts: ChannelConstants,
    transmit_time: float | None = None,
) -> RecoveredPowers:
    """Transmit powers that spend exactly the harvested energy left over after
    local computing: p_k = max(0, (E_k - e_k) / t_tx).

    Devices whose local spend already exceeds the harvest are clamped to zero
    and flagged; the time-allocation step repairs their frequencies.
    """
    t_tx = state.alloc.tau2 if transmit_time is None else transmit_time
    k = len(devices)
    if t_tx <= 0.0:
        return RecoveredPowers(p=np.zeros(k), clamped=np.zeros(k, dtype=bool), no_offload=True)
    e_harv = harvested_energy_all(
        state.downlink_layout, state.w, devices, state.alloc.tau1, config, consts
    )
    _, e_local = local_compute(state.alloc.f, config)
    margin = e_harv - e_local
    clamped = margin < 0.0
    return RecoveredPowers(
        p=np.maximum(margin, 0.0) / t_tx, clamped=clamped, no_offload=False
    )
