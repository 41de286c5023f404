"""Feedback-free FDD downlink MIMO link simulation.

Pipeline: uplink pilot sounding -> delay/angle path extraction -> downlink
channel reconstruction with an error-covariance estimate -> max-min-fair
rate-splitting precoding -> Monte-Carlo scoring of rate, latency, and energy.
"""

from .channel import (
    PathParams,
    Scenario,
    SystemConfig,
    array_response,
    downlink_channel,
    downlink_gain,
    received_pilot,
    sample_scenario,
    steering_u,
    uplink_channel,
)
from .ecm import (
    crlb_matrix,
    csi_error_covariance,
    ecm_diag_only,
    ecm_with_reciprocity,
    jacobian_dl,
    observed_fim,
    paths_to_psi,
)
from .evaluate import (
    EnergyConfig,
    LatencyConfig,
    MethodResult,
    TrialRecord,
    aggregate,
    emit_report,
    energy_efficiency,
    eta_sweep,
    harq_rounds,
    latency_total,
    run_trial,
    se_sweep,
)
from .nomp import (
    EstimatedPath,
    EstimateSet,
    NompConfig,
    coarse_detect,
    gain_ls_single,
    ls_update_all,
    newton_refine,
    nomp_extract,
    reconstruct_downlink,
)
from .precoder import (
    CsiInput,
    PrecoderSolution,
    SolverConfig,
    SolverError,
    build_forms,
    gpi_private_only,
    gpi_step,
    kkt_matrices,
    mmf_solve,
    mrt_precoder,
    rate_common_bar,
    rate_private_bar,
    rzf_precoder,
    waterfill_common,
)

__version__ = "0.1.0"
