"""Monte Carlo campaign orchestration: sweeps, benchmarks, and aggregation.

A campaign is a pure function of its `ExperimentSpec` (including the master
seed): channel draws, swarm runs, and result tables are all reproducible
bit-for-bit, and realizations can run in parallel without changing anything.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .channels import (
    OfdmGrid,
    ScenarioConfig,
    SubcarrierChannels,
    UserPaths,
    sample_user_positions,
    subcarrier_channels,
    synthesize_paths,
)
from .geometry import (
    SPEED_OF_LIGHT,
    ArrayLayout,
    MoveRegion,
    make_compact_upa,
    make_move_regions,
    make_sparse_upa,
    make_staggered_ura,
    save_layout,
)
from .pso import (
    OptimizationTrace,
    PsoConfig,
    evaluate_rate_scheme,
    objective_adapter,
    pso_optimize,
)
from .rates import RATE_SCHEMES, UL_LIN, UL_SIC, ImpairedLinkConfig, RateReport

MOVABLE = "movable"
ZERO_INTERFERENCE = "zero-interference"
COMPACT_UPA = "compact-upa"
SPARSE_UPA = "sparse-upa"
STAGGERED_URA = "staggered-ura"
FIXED_ARRAYS = (COMPACT_UPA, SPARSE_UPA, STAGGERED_URA)
ARRAY_SCHEMES = (MOVABLE, ZERO_INTERFERENCE) + FIXED_ARRAYS

PAPER_SCALE_REALIZATIONS = 100
PAPER_SCALE_ITERATIONS = 100
PAPER_SCALE_PARTICLES = 150


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 64-bit stream seed from the master seed and a label tuple.

    Streams are keyed by content (labels, indices, parameter values), never by
    positions in a list, so adding schemes or sweep points leaves all other
    draws untouched.
    """
    text = repr((int(master_seed),) + tuple(parts))
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved campaign description.

    Fields carry the units of the config file (GHz, kHz, pW, mW/MHz) so the
    manifest round-trips exactly; SI values are derived through the builder
    methods. Programmatic defaults are desk-scale; `paper_scale` switches the
    Monte Carlo and swarm sizes to the full-study values.
    """

    scenario_kind: str = "los-dominant"
    carrier_ghz: float = 3.0
    rice_factor_db: float = 10.0
    r_min_m: float = 100.0
    r_max_m: float = 300.0
    azimuth_min_rad: float = -np.pi / 3
    azimuth_max_rad: float = np.pi / 3
    bs_height_m: float = 4.0
    user_height_m: float = 1.25
    cluster_count: int = 6
    paths_per_cluster: int = 20
    cluster_azimuth_spread_deg: float = 40.0
    cluster_elevation_spread_deg: float = 20.0
    path_angle_spread_deg: float = 5.0
    rich_cluster_count: int = 100
    rich_paths_per_cluster: int = 2
    delay_stretch: float = 10.0
    los_pathloss_intercept_db: float = 30.18
    los_pathloss_slope_db: float = 26.0
    nlos_pathloss_intercept_db: float = 34.53
    nlos_pathloss_slope_db: float = 38.0
    normalized_gain: float = 1e-9
    spacing_khz: float = 15.0
    subcarrier_counts: tuple[int, ...] = (1,)
    array_schemes: tuple[str, ...] = ARRAY_SCHEMES
    m_rows: int = 4
    m_cols: int = 4
    region_side_wavelengths: float = 5.0
    rate_schemes: tuple[str, ...] = (UL_SIC,)
    evms: tuple[float, ...] = (0.02,)
    noise_pw: float = 3.98
    ul_psd_mw_per_mhz: float = 1.0
    dl_psd_mw_per_mhz: float = 20.0
    optimize_scheme: str | None = None
    pso_particles: int = 50
    pso_iterations: int = 30
    pso_inertia: float = 0.7298
    pso_cognitive: float = 1.4962
    pso_social: float = 1.4962
    pso_velocity_clamp: float = 0.5
    pso_penalty_weight: float = 1e3
    realizations: int = 20
    user_counts: tuple[int, ...] = (10,)
    master_seed: int = 1
    paper_scale: bool = False
    fdd_eval_carriers_ghz: tuple[float, ...] = ()
    cross_pairs: tuple[tuple[str, str], ...] = ()

    def validate(self) -> None:
        if self.realizations < 1:
            raise ValueError("campaign.realizations must be >= 1")
        for name in ("subcarrier_counts", "user_counts", "rate_schemes", "array_schemes", "evms"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        for s in self.subcarrier_counts:
            if s < 1:
                raise ValueError("grid.subcarrier_counts entries must be >= 1")
        for k in self.user_counts:
            if k < 1:
                raise ValueError("campaign.user_counts entries must be >= 1")
        for scheme in self.rate_schemes:
            if scheme not in RATE_SCHEMES:
                raise ValueError(f"rates.schemes entry {scheme!r} not in {RATE_SCHEMES}")
        for scheme in self.array_schemes:
            if scheme not in ARRAY_SCHEMES:
                raise ValueError(f"arrays.schemes entry {scheme!r} not in {ARRAY_SCHEMES}")
        if self.optimize_scheme is not None and self.optimize_scheme not in RATE_SCHEMES:
            raise ValueError(f"rates.optimize_scheme {self.optimize_scheme!r} not in {RATE_SCHEMES}")
        for pair in self.cross_pairs:
            if len(pair) != 2 or any(s not in RATE_SCHEMES for s in pair):
                raise ValueError(f"campaign.cross_pairs entry {pair!r} must name two rate schemes")
        for e in self.evms:
            if not (0.0 <= e < 1.0):
                raise ValueError("rates.evms entries must lie in [0, 1)")
        if not self.noise_pw > 0:
            raise ValueError("rates.noise_pw must be > 0")
        if not self.ul_psd_mw_per_mhz > 0:
            raise ValueError("rates.ul_psd_mw_per_mhz must be > 0")
        if not self.dl_psd_mw_per_mhz > 0:
            raise ValueError("rates.dl_psd_mw_per_mhz must be > 0")
        if not (0 < self.r_min_m < self.r_max_m):
            raise ValueError("scenario user radii must satisfy 0 < r_min_m < r_max_m")
        if self.m_rows < 1 or self.m_cols < 1:
            raise ValueError("arrays.m_rows and arrays.m_cols must be >= 1")
        if not self.region_side_wavelengths > 0:
            raise ValueError("arrays.region_side_wavelengths must be > 0")
        if not self.spacing_khz > 0:
            raise ValueError("grid.spacing_khz must be > 0")
        if self.pso_particles < 1:
            raise ValueError("pso.particles must be >= 1")
        if self.pso_iterations < 0:
            raise ValueError("pso.iterations must be >= 0")
        self.scenario()  # validates the remaining scenario fields

    # --- derived SI quantities -------------------------------------------------

    @property
    def carrier_hz(self) -> float:
        return self.carrier_ghz * 1e9

    @property
    def subcarrier_spacing_hz(self) -> float:
        return self.spacing_khz * 1e3

    @property
    def noise_variance_w(self) -> float:
        # noise_pw is an effective noise density in pW per GHz (3.98 pW/GHz is
        # the thermal floor kT at 288 K); the per-subcarrier noise scales with
        # the subcarrier spacing.
        return self.noise_pw * 1e-21 * self.subcarrier_spacing_hz

    @property
    def ul_power_per_subcarrier_w(self) -> float:
        # mW/MHz equals 1e-9 W/Hz
        return self.ul_psd_mw_per_mhz * 1e-9 * self.subcarrier_spacing_hz

    def dl_total_power_w(self, subcarriers: int) -> float:
        return self.dl_psd_mw_per_mhz * 1e-9 * subcarriers * self.subcarrier_spacing_hz

    def effective_realizations(self) -> int:
        return PAPER_SCALE_REALIZATIONS if self.paper_scale else self.realizations

    def scenario(self) -> ScenarioConfig:
        return ScenarioConfig(
            kind=self.scenario_kind,
            carrier_hz=self.carrier_hz,
            rice_factor_db=self.rice_factor_db,
            cluster_count=self.cluster_count,
            paths_per_cluster=self.paths_per_cluster,
            cluster_azimuth_spread=np.deg2rad(self.cluster_azimuth_spread_deg),
            cluster_elevation_spread=np.deg2rad(self.cluster_elevation_spread_deg),
            path_angle_spread=np.deg2rad(self.path_angle_spread_deg),
            rich_cluster_count=self.rich_cluster_count,
            rich_paths_per_cluster=self.rich_paths_per_cluster,
            delay_stretch=self.delay_stretch,
            los_pathloss_intercept_db=self.los_pathloss_intercept_db,
            los_pathloss_slope_db=self.los_pathloss_slope_db,
            nlos_pathloss_intercept_db=self.nlos_pathloss_intercept_db,
            nlos_pathloss_slope_db=self.nlos_pathloss_slope_db,
            normalized_gain=self.normalized_gain,
            r_min=self.r_min_m,
            r_max=self.r_max_m,
            azimuth_min=self.azimuth_min_rad,
            azimuth_max=self.azimuth_max_rad,
            bs_height=self.bs_height_m,
            user_height=self.user_height_m,
        )

    def grid(self, subcarriers: int) -> OfdmGrid:
        return OfdmGrid(subcarriers, self.subcarrier_spacing_hz)

    def pso_config(self) -> PsoConfig:
        particles = PAPER_SCALE_PARTICLES if self.paper_scale else self.pso_particles
        iterations = PAPER_SCALE_ITERATIONS if self.paper_scale else self.pso_iterations
        return PsoConfig(
            particle_count=particles,
            max_iterations=iterations,
            inertia=self.pso_inertia,
            cognitive=self.pso_cognitive,
            social=self.pso_social,
            velocity_clamp=self.pso_velocity_clamp,
            penalty_weight=self.pso_penalty_weight,
        )

    def link_config(self, user_count: int, subcarriers: int, evm: float) -> ImpairedLinkConfig:
        return ImpairedLinkConfig.uniform(
            user_count,
            subcarriers,
            self.ul_power_per_subcarrier_w,
            evm,
            self.noise_variance_w,
            total_power=self.dl_total_power_w(subcarriers),
        )

    def resolved_optimize_scheme(self) -> str:
        return self.optimize_scheme or self.rate_schemes[0]


@dataclass(frozen=True)
class ResultRow:
    """One evaluated (realization, array, scheme, sweep point) combination."""

    realization: int
    array_scheme: str
    rate_scheme: str
    optimized_for: str | None
    subcarriers: int
    evm: float
    users: int
    carrier_ghz: float
    channel_seed: int
    pso_seed: int | None
    sum_rate: float
    per_user_rates: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class RealizationOutput:
    rows: tuple[ResultRow, ...]
    traces: dict[str, OptimizationTrace]
    layouts: dict[str, ArrayLayout]


@dataclass(frozen=True, eq=False)
class CampaignResult:
    spec: ExperimentSpec
    rows: tuple[ResultRow, ...]
    traces: dict[str, OptimizationTrace]
    layouts: dict[str, ArrayLayout]


def zero_interference_bound(
    channels: SubcarrierChannels, config: ImpairedLinkConfig
) -> RateReport:
    """Per-user matched-filter rates with every cross-user term removed.

    Upper-bounds both the linear and the SIC sum rate on the same channel
    instance; only each user's own distortion and thermal noise remain.
    """
    h = channels.matrices
    norms2 = np.sum(np.abs(h) ** 2, axis=1)  # (S, K)
    g = config.powers * norms2
    sinr = config.kappa * g / ((1.0 - config.kappa) * g + config.noise_variance)
    rates = np.log2(1.0 + sinr)
    per_subcarrier = rates.sum(axis=1)
    return RateReport(
        scheme=ZERO_INTERFERENCE,
        sum_rate=float(per_subcarrier.mean()),
        per_user_rates=rates.mean(axis=0),
        per_subcarrier_rates=per_subcarrier,
        per_user_per_subcarrier=rates,
    )


def build_fixed_layouts(spec: ExperimentSpec) -> dict[str, ArrayLayout]:
    lam = SPEED_OF_LIGHT / spec.carrier_hz
    builders = {
        COMPACT_UPA: make_compact_upa,
        SPARSE_UPA: make_sparse_upa,
        STAGGERED_URA: make_staggered_ura,
    }
    return {name: fn(spec.m_rows, spec.m_cols, lam) for name, fn in builders.items()}


def cross_evaluate(
    optimize_scheme: str,
    evaluate_scheme: str,
    paths: Sequence[UserPaths],
    grid: OfdmGrid,
    config: ImpairedLinkConfig,
    regions: Sequence[MoveRegion],
    wavelength: float,
    pso_config: PsoConfig,
    rng: np.random.Generator,
    seed_layouts: Sequence[ArrayLayout] = (),
) -> tuple[float, float, OptimizationTrace]:
    """Optimize positions under one scheme, evaluate the result under another.

    Returns (rate under the optimizing scheme, rate under the evaluating
    scheme, swarm trace); both rates are measured on the same final layout, so
    an identity pairing returns two equal numbers.
    """
    objective = objective_adapter(
        optimize_scheme, paths, grid, config, penalty_weight=pso_config.penalty_weight
    )
    trace = pso_optimize(objective, regions, wavelength, pso_config, rng, seed_layouts)
    h = subcarrier_channels(paths, trace.best_layout, grid)
    opt_value = evaluate_rate_scheme(optimize_scheme, h, config).sum_rate
    eval_value = evaluate_rate_scheme(evaluate_scheme, h, config).sum_rate
    return opt_value, eval_value, trace


def fdd_evaluate(
    layout: ArrayLayout,
    paths: Sequence[UserPaths],
    grid: OfdmGrid,
    config: ImpairedLinkConfig,
    eval_carrier_hz: float,
    scheme: str,
) -> RateReport:
    """Re-evaluate a placement at a shifted carrier frequency.

    The antenna positions and the path geometry stay fixed; only the
    wavelength-dependent phase signatures and carrier rotations are
    re-derived at the evaluation frequency.
    """
    if not eval_carrier_hz > 0:
        raise ValueError("evaluation carrier frequency must be positive")
    shifted = layout.with_wavelength(SPEED_OF_LIGHT / eval_carrier_hz)
    h = subcarrier_channels(paths, shifted, grid)
    return evaluate_rate_scheme(scheme, h, config)


def _trace_key(index: int, users: int, subcarriers: int, evm: float, scheme: str) -> str:
    return f"r{index:04d}_k{users}_s{subcarriers}_evm{evm:g}_{scheme}"


def run_realization(spec: ExperimentSpec, index: int) -> RealizationOutput:
    """Draw one channel realization and evaluate every requested combination.

    The channel seed depends only on (master seed, realization, user count),
    so array and rate schemes always see identical channels. Swarm seeds
    additionally hash the sweep point and the optimizing scheme.
    """
    scenario = spec.scenario()
    lam = scenario.wavelength
    regions = make_move_regions(spec.m_rows, spec.m_cols, spec.region_side_wavelengths * lam)
    fixed_layouts = build_fixed_layouts(spec)
    seed_layouts = [fixed_layouts[STAGGERED_URA], fixed_layouts[SPARSE_UPA], fixed_layouts[COMPACT_UPA]]
    needs_movable = (
        MOVABLE in spec.array_schemes
        or bool(spec.cross_pairs)
        or bool(spec.fdd_eval_carriers_ghz)
    )

    rows: list[ResultRow] = []
    traces: dict[str, OptimizationTrace] = {}
    layouts: dict[str, ArrayLayout] = {
        name: fixed_layouts[name] for name in spec.array_schemes if name in fixed_layouts
    }

    for users in spec.user_counts:
        channel_seed = derive_seed(spec.master_seed, "channel", index, users)
        rng = np.random.default_rng(channel_seed)
        user_positions = sample_user_positions(rng, scenario, users)
        paths = [synthesize_paths(rng, scenario, pos) for pos in user_positions]
        for subcarriers in spec.subcarrier_counts:
            grid = spec.grid(subcarriers)
            fixed_channels = {
                name: subcarrier_channels(paths, layout, grid)
                for name, layout in fixed_layouts.items()
                if name in spec.array_schemes
            }
            for evm in spec.evms:
                config = spec.link_config(users, subcarriers, evm)
                opt_scheme = spec.resolved_optimize_scheme()
                channels_by_array = dict(fixed_channels)
                movable_layout = None
                if needs_movable:
                    pso_seed = derive_seed(
                        spec.master_seed, "pso", index, users, subcarriers, evm, opt_scheme
                    )
                    objective = objective_adapter(
                        opt_scheme, paths, grid, config, penalty_weight=spec.pso_penalty_weight
                    )
                    trace = pso_optimize(
                        objective,
                        regions,
                        lam,
                        spec.pso_config(),
                        np.random.default_rng(pso_seed),
                        seed_layouts,
                    )
                    movable_layout = trace.best_layout
                    key = _trace_key(index, users, subcarriers, evm, opt_scheme)
                    traces[key] = trace
                    layouts[f"{MOVABLE}_{key}"] = movable_layout
                    channels_by_array[MOVABLE] = subcarrier_channels(paths, movable_layout, grid)
                else:
                    pso_seed = None

                def make_row(array, rate_scheme, report, optimized_for=None, carrier_ghz=None,
                             seed=None):
                    if seed is None and array == MOVABLE:
                        seed = pso_seed
                    return ResultRow(
                        realization=index,
                        array_scheme=array,
                        rate_scheme=rate_scheme,
                        optimized_for=optimized_for,
                        subcarriers=subcarriers,
                        evm=evm,
                        users=users,
                        carrier_ghz=carrier_ghz if carrier_ghz is not None else spec.carrier_ghz,
                        channel_seed=channel_seed,
                        pso_seed=seed if array == MOVABLE else None,
                        sum_rate=report.sum_rate,
                        per_user_rates=tuple(float(r) for r in report.per_user_rates),
                    )

                for array in spec.array_schemes:
                    if array == ZERO_INTERFERENCE:
                        continue
                    h = channels_by_array[array]
                    for rate_scheme in spec.rate_schemes:
                        report = evaluate_rate_scheme(rate_scheme, h, config)
                        rows.append(
                            make_row(
                                array,
                                rate_scheme,
                                report,
                                optimized_for=opt_scheme if array == MOVABLE else None,
                            )
                        )

                if ZERO_INTERFERENCE in spec.array_schemes:
                    # The analytic bound depends on the layout through the channel
                    # norms; taking the max over evaluated layouts keeps it an
                    # upper bound for every scheme row of this realization.
                    bound_channels = list(channels_by_array.values())
                    if not bound_channels:
                        bound_channels = [
                            subcarrier_channels(paths, fixed_layouts[STAGGERED_URA], grid)
                        ]
                    reports = [zero_interference_bound(h, config) for h in bound_channels]
                    best = max(reports, key=lambda r: r.sum_rate)
                    for rate_scheme in spec.rate_schemes:
                        if rate_scheme in (UL_LIN, UL_SIC):
                            rows.append(make_row(ZERO_INTERFERENCE, rate_scheme, best))

                for pair in spec.cross_pairs:
                    pair_opt, pair_eval = pair
                    if pair_opt == opt_scheme and movable_layout is not None:
                        cross_layout = movable_layout
                        cross_seed = pso_seed
                    else:
                        cross_seed = derive_seed(
                            spec.master_seed, "pso", index, users, subcarriers, evm, pair_opt
                        )
                        cross_objective = objective_adapter(
                            pair_opt, paths, grid, config, penalty_weight=spec.pso_penalty_weight
                        )
                        cross_trace = pso_optimize(
                            cross_objective,
                            regions,
                            lam,
                            spec.pso_config(),
                            np.random.default_rng(cross_seed),
                            seed_layouts,
                        )
                        cross_layout = cross_trace.best_layout
                        traces[_trace_key(index, users, subcarriers, evm, pair_opt)] = cross_trace
                    h = subcarrier_channels(paths, cross_layout, grid)
                    report = evaluate_rate_scheme(pair_eval, h, config)
                    rows.append(
                        make_row(MOVABLE, pair_eval, report, optimized_for=pair_opt, seed=cross_seed)
                    )

                if spec.fdd_eval_carriers_ghz and movable_layout is not None:
                    eval_arrays = {MOVABLE: movable_layout, **{
                        name: fixed_layouts[name]
                        for name in spec.array_schemes
                        if name in fixed_layouts
                    }}
                    for carrier_ghz in spec.fdd_eval_carriers_ghz:
                        for array, layout in eval_arrays.items():
                            for rate_scheme in spec.rate_schemes:
                                report = fdd_evaluate(
                                    layout, paths, grid, config, carrier_ghz * 1e9, rate_scheme
                                )
                                rows.append(
                                    make_row(
                                        array,
                                        rate_scheme,
                                        report,
                                        optimized_for=opt_scheme if array == MOVABLE else None,
                                        carrier_ghz=carrier_ghz,
                                    )
                                )

    return RealizationOutput(tuple(rows), traces, layouts)


def _run_realization_star(args) -> RealizationOutput:
    return run_realization(*args)


def run_campaign(spec: ExperimentSpec, workers: int = 1) -> CampaignResult:
    """Run all realizations; results are identical for any worker count."""
    spec.validate()
    indices = range(spec.effective_realizations())
    if workers <= 1:
        outputs = [run_realization(spec, i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            outputs = list(executor.map(_run_realization_star, [(spec, i) for i in indices]))
    rows: list[ResultRow] = []
    traces: dict[str, OptimizationTrace] = {}
    layouts: dict[str, ArrayLayout] = {}
    for output in outputs:
        rows.extend(output.rows)
        traces.update(output.traces)
        layouts.update(output.layouts)
    return CampaignResult(spec, tuple(rows), traces, layouts)


# --- aggregation and persistence ------------------------------------------------


def empirical_cdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """Sorted (value, fraction at or below) pairs of an empirical distribution."""
    if len(values) == 0:
        raise ValueError("cannot build a CDF from no values")
    ordered = sorted(float(v) for v in values)
    n = len(ordered)
    return [(v, (i + 1) / n) for i, v in enumerate(ordered)]


def _series_key(row: ResultRow) -> tuple:
    return (
        row.array_scheme,
        row.rate_scheme,
        row.optimized_for or "",
        row.subcarriers,
        row.evm,
        row.users,
        row.carrier_ghz,
    )


def aggregate(rows: Sequence[ResultRow]) -> dict:
    """Per data series: mean sum rate, mean per-user rates, empirical CDF.

    Invariant under reordering of the input rows (realizations are folded in
    sorted order).
    """
    if not rows:
        raise ValueError("cannot aggregate an empty result set")
    groups: dict[tuple, list[ResultRow]] = {}
    for row in rows:
        groups.setdefault(_series_key(row), []).append(row)
    series = []
    for key in sorted(groups):
        members = sorted(groups[key], key=lambda r: r.realization)
        sums = [r.sum_rate for r in members]
        user_rates = np.array([r.per_user_rates for r in members])
        series.append(
            {
                "array_scheme": key[0],
                "rate_scheme": key[1],
                "optimized_for": key[2] or None,
                "subcarriers": key[3],
                "evm": key[4],
                "users": key[5],
                "carrier_ghz": key[6],
                "realizations": len(members),
                "mean_sum_rate": float(np.mean(sums)),
                "mean_user_rates": [float(v) for v in user_rates.mean(axis=0)],
                "cdf": [[v, p] for v, p in empirical_cdf(sums)],
            }
        )
    return {"series": series}


_RESULT_HEADER = (
    "realization,array_scheme,rate_scheme,optimized_for,subcarriers,"
    "evm,users,carrier_ghz,channel_seed,pso_seed,sum_rate"
)


def write_results_csv(rows: Sequence[ResultRow], path: str | Path) -> None:
    lines = [_RESULT_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    str(r.realization),
                    r.array_scheme,
                    r.rate_scheme,
                    r.optimized_for or "",
                    str(r.subcarriers),
                    repr(r.evm),
                    str(r.users),
                    repr(r.carrier_ghz),
                    str(r.channel_seed),
                    "" if r.pso_seed is None else str(r.pso_seed),
                    repr(r.sum_rate),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_user_rates_csv(rows: Sequence[ResultRow], path: str | Path) -> None:
    lines = [
        "realization,array_scheme,rate_scheme,optimized_for,subcarriers,"
        "evm,users,carrier_ghz,user,rate"
    ]
    for r in rows:
        for u, rate in enumerate(r.per_user_rates):
            lines.append(
                ",".join(
                    [
                        str(r.realization),
                        r.array_scheme,
                        r.rate_scheme,
                        r.optimized_for or "",
                        str(r.subcarriers),
                        repr(r.evm),
                        str(r.users),
                        repr(r.carrier_ghz),
                        str(u),
                        repr(rate),
                    ]
                )
            )
    Path(path).write_text("\n".join(lines) + "\n")


def write_trace_csv(trace: OptimizationTrace, path: str | Path) -> None:
    lines = ["iteration,best_value"]
    for i, v in enumerate(trace.best_values):
        lines.append(f"{i},{float(v)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_summary_json(summary: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def write_campaign_outputs(result: CampaignResult, outdir: str | Path) -> None:
    """Persist result tables, layouts, and traces under `outdir`.

    File contents are a pure function of the spec, so re-running the same
    campaign overwrites every file with identical bytes.
    """
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    write_results_csv(result.rows, out / "results.csv")
    write_user_rates_csv(result.rows, out / "user_rates.csv")
    write_summary_json(aggregate(result.rows), out / "summary.json")
    layout_dir = out / "layouts"
    layout_dir.mkdir(exist_ok=True)
    for name, layout in sorted(result.layouts.items()):
        save_layout(layout, layout_dir / f"{name}.txt")
    trace_dir = out / "traces"
    trace_dir.mkdir(exist_ok=True)
    for name, trace in sorted(result.traces.items()):
        write_trace_csv(trace, trace_dir / f"{name}.csv")
