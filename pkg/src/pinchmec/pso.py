"""Penalty-based particle swarm optimizer for antenna placement.

Minimization convention: placement subproblems are expressed as negated
gains plus a large finite penalty whenever the spacing or range constraint
fails.  Fitness callables are vectorized: they accept an (N, M) batch of
candidate layouts and return an (N,) array, which keeps the per-iteration
cost at a handful of numpy operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channel
from .errors import InfeasibleError
from .scenario import ChannelConstants, ScenarioConfig

#: finite stand-in for the infinite penalty; keeps fitness totally ordered
BIG = 1e30

#: stall rule: stop once the relative gbest improvement over this many
#: iterations drops below STALL_RTOL
STALL_WINDOW = 20
STALL_RTOL = 1e-8

_MAX_INIT_ROUNDS = 100


@dataclass(frozen=True)
class PsoParams:
    num_particles: int = 50
    inertia: float = 0.72
    cognitive: float = 1.49
    social: float = 1.49
    max_iters: int = 200
    velocity_clamp: float | None = None  # None -> a quarter of the search span
    num_starts: int = 4

    def __post_init__(self):
        if self.num_particles < 1:
            raise ValueError("num_particles must be >= 1")
        if not 0.0 <= self.inertia <= 1.0:
            raise ValueError("inertia must lie in [0, 1]")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.num_starts < 1:
            raise ValueError("num_starts must be >= 1")


@dataclass
class PsoResult:
    x: np.ndarray
    fitness: float
    trace: list[float]
    iterations: int


def trace_csv(result: PsoResult) -> str:
    lines = ["iteration,gbest_fitness"]
    lines += [f"{i},{v:.17g}" for i, v in enumerate(result.trace)]
    return "\n".join(lines) + "\n"


def _batched(fitness, xs):
    """Evaluate a shape-polymorphic fitness on an (N, M) batch."""
    out = np.asarray(fitness(xs), dtype=float)
    return out.reshape(xs.shape[0])


def uplink_fitness(xs, devices, p, consts: ChannelConstants, config: ScenarioConfig):
    """Negated power-weighted uplink gain, penalized outside the feasible set.

    Accepts a single (M,) layout or an (N, M) batch; returns a scalar or (N,).
    """
    xs_arr = np.asarray(xs, dtype=float)
    single = xs_arr.ndim == 1
    batch = xs_arr[None, :] if single else xs_arr
    sums = channel.uplink_field_sums(batch, config.waveguide_height, devices, consts)
    base = -(np.abs(sums) ** 2 @ np.asarray(p, dtype=float))
    ok = channel.spacing_feasible_batch(batch, config.min_spacing, config.area_x)
    out = np.where(ok, base, BIG)
    return float(out[0]) if single else out


def downlink_fitness(xs, devices, w, g, tau1: float, consts: ChannelConstants, config: ScenarioConfig):
    """Negated harvest objective sum_k g_k * beta * tau1 * P_B * |sum_m h^D_mk|^2."""
    xs_arr = np.asarray(xs, dtype=float)
    single = xs_arr.ndim == 1
    batch = xs_arr[None, :] if single else xs_arr
    alpha = np.asarray(getattr(w, "alpha", w), dtype=float)
    sums = channel.downlink_field_sums(batch, config.waveguide_height, devices, consts, alpha)
    weights = np.asarray(g, dtype=float) * (config.harvest_efficiency * tau1 * config.bs_power)
    base = -(np.abs(sums) ** 2 @ weights)
    ok = channel.spacing_feasible_batch(batch, config.min_spacing, config.area_x)
    out = np.where(ok, base, BIG)
    return float(out[0]) if single else out


def sample_feasible_layouts(
    rng: np.random.Generator, n: int, lo: float, hi: float, m: int, delta: float
) -> np.ndarray:
    """Draw n layouts satisfying the spacing constraint by construction.

    Points are drawn uniformly, sorted, pushed apart to separation delta and
    pulled back under the upper bound; this never degenerates the way
    rejection sampling does when m*delta approaches the span.
    """
    if (m - 1) * delta > hi - lo:
        raise InfeasibleError(
            f"spacing constraint blocks sampling: (M-1)*delta = {(m - 1) * delta:g} m "
            f"exceeds the waveguide range {hi - lo:g} m"
        )
    x = rng.uniform(lo, hi, size=(n, m))
    if delta <= 0.0 or m == 1:
        return x
    x.sort(axis=1)
    for j in range(1, m):
        x[:, j] = np.maximum(x[:, j], x[:, j - 1] + delta)
    x[:, -1] = np.minimum(x[:, -1], hi)
    for j in range(m - 2, -1, -1):
        x[:, j] = np.minimum(x[:, j], x[:, j + 1] - delta)
    return x


def advance(positions, velocities, pbest, gbest, params: PsoParams, rng, vclamp):
    """One velocity/position update for the whole swarm.

    Velocity mixes inertia with cognitive and social pulls scaled by fresh
    per-dimension uniform draws; the new position adds the new velocity.
    """
    c1 = rng.uniform(size=positions.shape)
    c2 = rng.uniform(size=positions.shape)
    v = (
        params.inertia * velocities
        + params.cognitive * c1 * (pbest - positions)
        + params.social * c2 * (gbest - positions)
    )
    np.clip(v, -vclamp, vclamp, out=v)
    return positions + v, v


def run_pso(
    fitness,
    bounds,
    params: PsoParams,
    rng: np.random.Generator,
    min_spacing: float = 0.0,
    seed_layouts=None,
) -> PsoResult:
    """Single-start PSO; returns the best layout found and its fitness trace.

    ``bounds`` is a sequence of (lo, hi) pairs, one per dimension; placement
    problems use the same waveguide interval for every antenna.  Feasible
    ``seed_layouts`` replace the first random particles, letting callers
    enumerate structured starting points.  Raises InfeasibleError if no
    sampled particle ever evaluates below the penalty sentinel.
    """
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    m = bounds.shape[0]
    if m == 0:
        raise ValueError("bounds must be nonempty")
    lo, hi = float(bounds[:, 0].min()), float(bounds[:, 1].max())
    span = hi - lo
    vclamp = params.velocity_clamp if params.velocity_clamp is not None else span / 4.0

    seeds = []
    if seed_layouts is not None:
        seeds = [
            np.asarray(xs, dtype=float).reshape(m)
            for xs in seed_layouts
            if channel.spacing_feasible(np.asarray(xs, dtype=float), min_spacing, hi)
        ][: max(params.num_particles // 2, 1)]

    positions = fit = None
    for _ in range(_MAX_INIT_ROUNDS):
        cand = sample_feasible_layouts(rng, params.num_particles, lo, hi, m, min_spacing)
        if seeds:
            cand[: len(seeds)] = np.asarray(seeds)
        cand_fit = _batched(fitness, cand)
        if np.any(cand_fit < BIG):
            positions, fit = cand, cand_fit
            break
    if positions is None:
        raise InfeasibleError(
            "no feasible particle found: every sampled layout hit the penalty "
            f"(spacing delta = {min_spacing:g} m, range [{lo:g}, {hi:g}] m)"
        )

    velocities = rng.uniform(-vclamp, vclamp, size=positions.shape)
    pbest = positions.copy()
    pbest_fit = fit.copy()
    best = int(np.argmin(pbest_fit))
    gbest = pbest[best].copy()
    gbest_fit = float(pbest_fit[best])
    trace = [gbest_fit]

    iterations = 0
    for _ in range(params.max_iters):
        iterations += 1
        positions, velocities = advance(positions, velocities, pbest, gbest, params, rng, vclamp)
        fit = _batched(fitness, positions)
        improved = fit <= pbest_fit
        pbest[improved] = positions[improved]
        pbest_fit[improved] = fit[improved]
        best = int(np.argmin(pbest_fit))
        if pbest_fit[best] <= gbest_fit:
            gbest = pbest[best].copy()
            gbest_fit = float(pbest_fit[best])
        trace.append(gbest_fit)
        if len(trace) > STALL_WINDOW:
            ref = trace[-1 - STALL_WINDOW]
            if ref - trace[-1] <= STALL_RTOL * max(abs(ref), 1e-300):
                break

    return PsoResult(x=gbest, fitness=gbest_fit, trace=trace, iterations=iterations)


def run_pso_multistart(
    fitness,
    bounds,
    params: PsoParams,
    rng: np.random.Generator,
    min_spacing: float = 0.0,
    seed_layouts=None,
) -> PsoResult:
    """Best result over params.num_starts independent PSO runs.

    Seed layouts, when given, join the first start's swarm; the remaining
    starts stay fully random.
    """
    best = None
    for start in range(params.num_starts):
        result = run_pso(
            fitness, bounds, params, rng, min_spacing,
            seed_layouts=seed_layouts if start == 0 else None,
        )
        if best is None or result.fitness < best.fitness:
            best = result
    return best
