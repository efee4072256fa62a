"""Particle swarm optimization of antenna positions inside movement regions.

Each particle is a full candidate placement of the M antennas in their square
regions. Box constraints are kept exact by clamping after every move; the
half-wavelength coupling constraint enters as an additive quadratic penalty on
the objective and the best penalty-free placement seen is the one returned.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .channels import OfdmGrid, SubcarrierChannels, UserPaths, subcarrier_channels
from .geometry import ArrayLayout, MoveRegion, SPACING_RTOL, min_pairwise_distance
from .rates import (
    DL_DPC,
    DL_LIN,
    UL_LIN,
    UL_SIC,
    ImpairedLinkConfig,
    dl_dpc_sum_rate,
    dl_linear_sum_rate,
    duality_precoders,
    ul_linear_sum_rate,
    ul_sic_sum_rate,
)


@dataclass(frozen=True)
class PsoConfig:
    """Swarm hyperparameters. The inertia/coefficient defaults are the
    standard constriction values; velocities are clamped per coordinate to a
    fraction of the region side."""

    particle_count: int = 150
    max_iterations: int = 100
    inertia: float = 0.7298
    cognitive: float = 1.4962
    social: float = 1.4962
    velocity_clamp: float = 0.5
    penalty_weight: float = 1e3
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.particle_count < 1:
            raise ValueError("need at least one particle")
        if self.max_iterations < 0:
            raise ValueError("iteration count must be nonnegative")
        for name in ("inertia", "cognitive", "social", "velocity_clamp", "penalty_weight"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True, eq=False)
class OptimizationTrace:
    """Global-best history and the best placement found.

    `best_values` has one entry for the initial swarm plus one per iteration
    and is nondecreasing. `spacing_feasible` records whether any penalty-free
    particle was seen; if so, `best_layout` is the best such particle.
    """

    best_values: np.ndarray
    best_layout: ArrayLayout
    best_objective: float
    spacing_feasible: bool


def repair_to_regions(coords: np.ndarray, regions: Sequence[MoveRegion]) -> np.ndarray:
    """Clamp (..., M, 2) yz-coordinates into their closed boxes. Idempotent."""
    coords = np.asarray(coords, dtype=float)
    lo = np.array([[r.center_y - r.half, r.center_z - r.half] for r in regions])
    hi = np.array([[r.center_y + r.half, r.center_z + r.half] for r in regions])
    return np.clip(coords, lo, hi)


def spacing_penalty(positions: np.ndarray, wavelength: float, weight: float = 1e3) -> float:
    """Quadratic penalty on antenna pairs closer than half a wavelength.

    Zero exactly when every pair satisfies the constraint (pairs sitting on
    the boundary up to representation rounding count as satisfied).
    """
    positions = np.asarray(positions, dtype=float)
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    iu = np.triu_indices(positions.shape[0], k=1)
    pair_dist = dist[iu]
    limit = wavelength / 2.0
    violating = pair_dist < limit * (1.0 - SPACING_RTOL)
    if not np.any(violating):
        return 0.0
    gaps = limit - pair_dist[violating]
    return float(weight * np.sum(gaps**2))


def _coords_to_layout(
    coords: np.ndarray, wavelength: float, regions: tuple[MoveRegion, ...]
) -> ArrayLayout:
    positions = np.zeros((coords.shape[0], 3))
    positions[:, 1:] = coords
    return ArrayLayout(positions, wavelength, regions)


def _spacing_feasible(coords: np.ndarray, wavelength: float) -> bool:
    positions = np.zeros((coords.shape[0], 3))
    positions[:, 1:] = coords
    return min_pairwise_distance(positions) >= wavelength / 2.0 * (1.0 - SPACING_RTOL)


def pso_optimize(
    objective: Callable[[ArrayLayout], float],
    regions: Sequence[MoveRegion],
    wavelength: float,
    config: PsoConfig,
    rng: np.random.Generator | None = None,
    seed_layouts: Iterable[ArrayLayout | np.ndarray] = (),
) -> OptimizationTrace:
    """Maximize `objective` over antenna placements, one antenna per region.

    `seed_layouts` are placed into the initial swarm when they lie in the
    regions (after a clamp that only absorbs rounding) and satisfy the
    spacing constraint, so the result never scores below a feasible seed.
    """
    regions = tuple(regions)
    if not regions:
        raise ValueError("need at least one movement region")
    if rng is None:
        rng = np.random.default_rng(config.seed)
    m = len(regions)
    n = config.particle_count

    lo = np.array([[r.center_y - r.half, r.center_z - r.half] for r in regions])
    hi = np.array([[r.center_y + r.half, r.center_z + r.half] for r in regions])
    sides = np.array([[r.side, r.side] for r in regions])
    vmax = config.velocity_clamp * sides

    positions = lo + rng.uniform(size=(n, m, 2)) * (hi - lo)
    slot = 0
    for seed in seed_layouts:
        if slot >= n:
            break
        coords = seed.positions[:, 1:] if isinstance(seed, ArrayLayout) else np.asarray(seed, dtype=float)
        if coords.shape != (m, 2):
            raise ValueError("seed layout does not match the region count")
        clamped = repair_to_regions(coords, regions)
        displacement = np.abs(clamped - coords)
        if np.any(displacement > 1e-9 * sides):
            continue  # seed lies outside its regions
        if not _spacing_feasible(clamped, wavelength):
            continue
        positions[slot] = clamped
        slot += 1

    velocities = np.zeros_like(positions)

    def evaluate(coords: np.ndarray) -> float:
        return float(objective(_coords_to_layout(coords, wavelength, regions)))

    values = np.array([evaluate(p) for p in positions])
    pbest_pos = positions.copy()
    pbest_val = values.copy()
    g = int(np.argmax(values))
    gbest_pos = positions[g].copy()
    gbest_val = float(values[g])

    feasible_val = -np.inf
    feasible_pos: np.ndarray | None = None

    def track_feasible(coords: np.ndarray, value: float) -> None:
        nonlocal feasible_val, feasible_pos
        if value > feasible_val and _spacing_feasible(coords, wavelength):
            feasible_val = value
            feasible_pos = coords.copy()

    for p, v in zip(positions, values):
        track_feasible(p, v)

    trace = [gbest_val]
    for _ in range(config.max_iterations):
        r_cog = rng.uniform(size=(n, m, 2))
        r_soc = rng.uniform(size=(n, m, 2))
        velocities = (
            config.inertia * velocities
            + config.cognitive * r_cog * (pbest_pos - positions)
            + config.social * r_soc * (gbest_pos[None] - positions)
        )
        velocities = np.clip(velocities, -vmax, vmax)
        positions = repair_to_regions(positions + velocities, regions)
        values = np.array([evaluate(p) for p in positions])
        better = values > pbest_val
        pbest_pos[better] = positions[better]
        pbest_val[better] = values[better]
        g = int(np.argmax(pbest_val))
        if pbest_val[g] > gbest_val:
            gbest_val = float(pbest_val[g])
            gbest_pos = pbest_pos[g].copy()
        for p, v in zip(positions, values):
            track_feasible(p, v)
        trace.append(gbest_val)

    if feasible_pos is not None:
        best_layout = _coords_to_layout(feasible_pos, wavelength, regions)
        feasible = True
    else:
        best_layout = _coords_to_layout(gbest_pos, wavelength, regions)
        feasible = False
    return OptimizationTrace(np.array(trace), best_layout, gbest_val, feasible)


def evaluate_rate_scheme(
    scheme: str,
    channels: SubcarrierChannels,
    config: ImpairedLinkConfig,
    *,
    dpc_max_iterations: int = 500,
    summary_only: bool = False,
):
    """Dispatch a rate scheme name to its sum-rate computation.

    `summary_only` skips the per-user breakdowns that optimization loops do
    not need.
    """
    if scheme == UL_LIN:
        return ul_linear_sum_rate(channels, config)
    if scheme == UL_SIC:
        return ul_sic_sum_rate(channels, config, include_user_rates=not summary_only)
    if scheme == DL_LIN:
        precoders = duality_precoders(channels, config)
        return dl_linear_sum_rate(channels, precoders, config)
    if scheme == DL_DPC:
        if config.total_power is None:
            raise ValueError("config.total_power must be set for downlink schemes")
        return dl_dpc_sum_rate(
            channels,
            config.total_power,
            config,
            max_iterations=dpc_max_iterations,
            include_user_rates=not summary_only,
        )
    raise ValueError(f"unknown rate scheme {scheme!r}")


def objective_adapter(
    scheme: str,
    paths: Sequence[UserPaths],
    grid: OfdmGrid,
    config: ImpairedLinkConfig,
    *,
    penalty_weight: float = 1e3,
    dpc_max_iterations: int = 100,
) -> Callable[[ArrayLayout], float]:
    """Objective closure for one fixed channel realization.

    The paths are independent of the antenna placement; only the per-antenna
    phase signatures change, so each call rebuilds the subcarrier channels for
    the candidate layout and scores the chosen scheme minus the spacing
    penalty.
    """
    def objective(layout: ArrayLayout) -> float:
        h = subcarrier_channels(paths, layout, grid)
        report = evaluate_rate_scheme(
            scheme, h, config, dpc_max_iterations=dpc_max_iterations, summary_only=True
        )
        return report.sum_rate - spacing_penalty(
            layout.positions, layout.wavelength, penalty_weight
        )

    return objective
