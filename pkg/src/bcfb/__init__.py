"""Rate regions and Monte Carlo validation for two-user broadcast channels
with a rate-limited feedback link from the weaker receiver."""

from .channels import (
    Dmbc,
    OrderingReport,
    bebc_analytic_ordering,
    bsbc_analytic_ordering,
    channel_from_spec,
    channel_to_spec,
    check_less_noisy,
    enhance,
    is_physically_degraded,
    load_channel,
    make_bebc,
    make_bsbc,
)
from .prob import (
    FinitePmf,
    JointPmf,
    Kernel,
    binary_entropy,
    compose,
    cond_mutual_info,
    entropy,
    marginalize,
    star,
)
from .regions import (
    AuxCoding,
    ImprovementResult,
    RatePoint,
    RateRegion,
    UxStructure,
    backward_decoding_region,
    bsbc_family_nofb_frontier,
    bsbc_family_region,
    enhanced_region,
    find_dominating_enhanced,
    frontier,
    improve_boundary_point,
    includes,
    mi_terms,
    mi_terms_batch,
    no_feedback_region,
    sample_aux,
    sample_ux,
    sliding_window_region,
    sliding_window_region_capped,
)
from .sim import (
    CodebookSizeError,
    ErrorEstimate,
    SchemeInfeasibleError,
    SchemeParams,
    TrialResult,
    estimate_error,
    rates_from_aux,
    run_trial,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
