"""Monte Carlo simulator and phase optimizer for multi-RIS aided MISO downlinks."""

from .ao import (
    AoOptions,
    AoResult,
    Cluster2State,
    TrialCase,
    alternate_optimize,
    build_trial_terms,
    evaluate_fixed,
    evaluate_pair,
    fixed_cluster2,
    optimize_cluster2,
)
from .channels import (
    ChannelRealization,
    ChannelStatistics,
    CorrelationModel,
    build_statistics,
    draw_realization,
    dump_realization,
    path_loss_db,
    path_loss_linear,
    sample_correlated_rayleigh,
    sample_emi,
    sample_inter_ris,
    spatial_correlation,
    trial_rng,
)
from .harness import (
    CSV_HEADER,
    DEFAULT_CASES,
    EMI_SWEEP_CASES,
    TRACE_HEADER,
    MetricRecord,
    Mode,
    ScenarioCase,
    SweepSpec,
    TrialEvaluator,
    aggregate,
    make_powers,
    parse_scenario_token,
    render_csv,
    render_trace,
    run_single_trial,
    run_sweep,
    write_csv,
    write_trace,
)
from .precoding import PrecoderSet, ZfDegenerateError, effective_channel, zf_precoder
from .rcg import (
    RcgOptions,
    RcgResult,
    armijo_search,
    euclid_grad,
    euclid_grad_eif,
    euclid_grad_emi,
    euclid_grad_emi_irr,
    optimize_phases,
    phase_objective,
    polak_ribiere,
    rcg_optimize,
    retract,
    riemannian_grad,
    vector_transport,
)
from .scenario import (
    ClusterConfig,
    ConfigError,
    GeometryDerived,
    SystemConfig,
    config_from_dict,
    config_to_dict,
    dbm_to_watts,
    default_config,
    derive_geometry,
    distance_3d,
    load_config,
    ris_element_positions,
    save_config,
    validate_config,
    watts_to_dbm,
)
from .sinr import (
    CascadeTerms,
    PowerAllocation,
    ScenarioKind,
    SinrReport,
    build_cascades,
    outage_indicator,
    scenario_sinr,
    signal_and_interference,
    sinr_eif,
    sinr_emi,
    sinr_emi_irr,
    sinr_irr,
    sum_rate,
    weighted_log_utility,
)

__version__ = "0.1.0"
