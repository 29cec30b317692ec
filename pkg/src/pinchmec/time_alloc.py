"""Convex time-allocation and CPU-frequency subproblem.

With powers fixed, the harvest phase is always worth stretching, so
tau1 = T - tau2 at the optimum, and for a given tau2 each device's best
frequency sits on the energy frontier
f_k = ((beta*(T-tau2)*P_B*H_k - p_k*tau2)+ / (T*kappa))^(1/3).
Substituting both leaves a concave single-variable objective
phi(tau2) = A*tau2 + (T/D)*sum_k f_k(tau2) over the interval where every
device can still afford its transmit power, which golden-section search
maximizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import channel
from .scenario import ChannelConstants, DeviceLayout, ScenarioConfig
from .system_model import SolutionState

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TimeAllocProblem:
    offload_rate: float     # A, bits/s once tau2 is known
    h_gains: np.ndarray     # (K,) downlink power gains |sum_m h^D_mk|^2
    p: np.ndarray           # (K,) fixed transmit powers, W
    frame: float            # T, s
    cycles_per_bit: float   # D
    kappa: float
    beta: float
    bs_power: float

    def __post_init__(self):
        object.__setattr__(self, "h_gains", np.asarray(self.h_gains, dtype=float).reshape(-1))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float).reshape(-1))
        if self.offload_rate < 0.0 or np.any(self.h_gains < 0.0):
            raise ValueError("offload rate and downlink gains must be non-negative")


@dataclass
class TimeAllocSolution:
    tau1: float
    tau2: float
    f: np.ndarray
    objective: float
    degenerate: bool = False


def build_time_alloc_problem(
    state: SolutionState,
    devices: DeviceLayout,
    config: ScenarioConfig,
    consts: ChannelConstants,
) -> TimeAllocProblem:
    g = channel.uplink_gains(state.uplink_layout, devices, consts)
    noise = len(state.uplink_layout) * consts.noise_power
    rate = config.bandwidth * math.log2(1.0 + float(state.alloc.p @ g) / noise)
    h = channel.downlink_gains(state.downlink_layout, state.w, devices, consts)
    return TimeAllocProblem(
        offload_rate=rate,
        h_gains=h,
        p=state.alloc.p,
        frame=config.frame_duration,
        cycles_per_bit=config.cycles_per_bit,
        kappa=config.chip_kappa,
        beta=config.harvest_efficiency,
        bs_power=config.bs_power,
    )


def _frontier_f(prob: TimeAllocProblem, tau2: float) -> np.ndarray:
    """Energy-frontier frequencies for a given tau2 (tau1 = T - tau2)."""
    budget = prob.beta * (prob.frame - tau2) * prob.bs_power * prob.h_gains - prob.p * tau2
    return np.cbrt(np.maximum(budget, 0.0) / (prob.frame * prob.kappa))


def _objective(prob: TimeAllocProblem, tau2: float, f: np.ndarray) -> float:
    return prob.offload_rate * tau2 + prob.frame / prob.cycles_per_bit * float(np.sum(f))


def _phi(prob: TimeAllocProblem, tau2: float) -> float:
    return _objective(prob, tau2, _frontier_f(prob, tau2))


def _tau2_upper(prob: TimeAllocProblem) -> float:
    """Largest tau2 at which every device can still afford p_k with f_k = 0."""
    a = prob.beta * prob.frame * prob.bs_power * prob.h_gains
    b = prob.p + prob.beta * prob.bs_power * prob.h_gains
    upper = prob.frame
    for ak, bk in zip(a, b):
        if bk > 0.0:
            upper = min(upper, ak / bk)
    return max(upper, 0.0)


def _phi_prime(prob: TimeAllocProblem, tau2: float) -> float:
    """Analytic derivative of the reduced objective, valid strictly inside the
    feasible interval (every budget positive)."""
    a = prob.beta * prob.frame * prob.bs_power * prob.h_gains
    b = prob.p + prob.beta * prob.bs_power * prob.h_gains
    budget = a - b * tau2
    active = budget > 0.0
    scale = (prob.frame * prob.kappa) ** (1.0 / 3.0)
    slope = np.zeros_like(budget)
    slope[active] = b[active] / (3.0 * scale * budget[active] ** (2.0 / 3.0))
    return prob.offload_rate - prob.frame / prob.cycles_per_bit * float(np.sum(slope))


def _polish_root(prob: TimeAllocProblem, upper: float) -> float | None:
    """Bisect the analytic derivative to machine precision.

    The frontier term's slope blows up at the budget kink, so the argmax can
    sit within ~1e-6 of the interval end where golden section alone leaves a
    visible first-order residual; bisection on phi' removes it.
    """
    lo = 0.0
    hi = upper * (1.0 - 1e-12)
    if hi <= lo or _phi_prime(prob, lo) <= 0.0:
        return None
    if _phi_prime(prob, hi) >= 0.0:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if _phi_prime(prob, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _incumbent_feasible(prob: TimeAllocProblem, tau1, tau2, f, tol) -> bool:
    if tau1 < 0 or tau2 < 0 or tau1 + tau2 > prob.frame * (1.0 + tol):
        return False
    budget = prob.beta * tau1 * prob.bs_power * prob.h_gains
    spend = prob.p * tau2 + prob.frame * prob.kappa * np.asarray(f, dtype=float) ** 3
    scale = np.maximum(np.maximum(budget, spend), 1e-30)
    return bool(np.all(spend - budget <= tol * scale))


def solve_time_alloc(
    prob: TimeAllocProblem,
    tol: float | None = None,
    incumbent: tuple | None = None,
) -> TimeAllocSolution:
    """Maximize A*tau2 + (T/D)*sum f_k under the per-device energy budgets.

    ``incumbent`` is an optional (tau1, tau2, f) triple; when it is feasible
    and scores higher than the search result (golden section is approximate),
    it is returned unchanged so callers never regress.
    """
    t = prob.frame
    gs_tol = 1e-10 * t if tol is None else tol

    if prob.offload_rate == 0.0 and not np.any(prob.h_gains > 0.0):
        return TimeAllocSolution(
            tau1=t, tau2=0.0, f=np.zeros_like(prob.h_gains), objective=0.0, degenerate=True
        )

    if prob.offload_rate == 0.0:
        # offloading earns nothing: harvest the whole frame and compute locally
        best_tau2 = 0.0
    else:
        upper = _tau2_upper(prob)
        lo, hi = 0.0, upper
        while hi - lo > gs_tol:
            c = hi - _INVPHI * (hi - lo)
            d = lo + _INVPHI * (hi - lo)
            if _phi(prob, c) >= _phi(prob, d):
                hi = d
            else:
                lo = c
        best_tau2 = max([0.5 * (lo + hi), 0.0, upper], key=lambda t2: _phi(prob, t2))
        # concavity makes the stationary point the exact argmax; prefer it over
        # the golden-section midpoint whenever the two tie within float noise
        root = _polish_root(prob, upper)
        if root is not None and _phi(prob, root) >= _phi(prob, best_tau2) - 1e-9 * max(
            abs(_phi(prob, best_tau2)), 1.0
        ):
            best_tau2 = root

    f = _frontier_f(prob, best_tau2)
    best = TimeAllocSolution(
        tau1=t - best_tau2,
        tau2=best_tau2,
        f=f,
        objective=_objective(prob, best_tau2, f),
    )

    if incumbent is not None:
        tau1_i, tau2_i, f_i = incumbent
        f_i = np.asarray(f_i, dtype=float)
        obj_i = _objective(prob, tau2_i, f_i)
        if obj_i > best.objective and _incumbent_feasible(prob, tau1_i, tau2_i, f_i, 1e-9):
            return TimeAllocSolution(tau1=tau1_i, tau2=tau2_i, f=f_i, objective=obj_i)
    return best
