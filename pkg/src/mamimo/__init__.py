"""Movable-antenna wideband multi-user MIMO sum-rate simulator."""

from .campaign import (
    ARRAY_SCHEMES,
    CampaignResult,
    ExperimentSpec,
    ResultRow,
    aggregate,
    cross_evaluate,
    derive_seed,
    empirical_cdf,
    fdd_evaluate,
    run_campaign,
    run_realization,
    zero_interference_bound,
)
from .channels import (
    OfdmGrid,
    PathParams,
    ScenarioConfig,
    SubcarrierChannels,
    TapChannel,
    UserPaths,
    build_tap_channel,
    narrowband_channel,
    path_loss,
    pulse_triangle,
    sample_user_position,
    sample_user_positions,
    subcarrier_channels,
    subcarriers_from_taps,
    sync_and_tap_count,
    synthesize_paths,
    tap_coefficient,
)
from .config import ConfigError, emit_manifest, parse_config, write_manifest
from .geometry import (
    SPEED_OF_LIGHT,
    ArrayLayout,
    LayoutReport,
    MoveRegion,
    array_response,
    load_layout,
    make_compact_upa,
    make_move_regions,
    make_sparse_upa,
    make_staggered_ura,
    min_pairwise_distance,
    save_layout,
    validate_layout,
    wave_vector,
)
from .pso import (
    OptimizationTrace,
    PsoConfig,
    evaluate_rate_scheme,
    objective_adapter,
    pso_optimize,
    repair_to_regions,
    spacing_penalty,
)
from .rates import (
    RATE_SCHEMES,
    ImpairedLinkConfig,
    PrecoderSet,
    RateReport,
    disturbance_covariance,
    dl_dpc_sum_rate,
    dl_linear_sinr,
    dl_linear_sum_rate,
    duality_precoders,
    high_snr_ceiling,
    logdet_hpd,
    mmse_combiner,
    ul_linear_sinr,
    ul_linear_sum_rate,
    ul_sic_per_user_rates,
    ul_sic_sum_rate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
