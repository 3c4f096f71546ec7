"""Stochastic-geometry analysis of downlink cell-free massive MIMO with finite fronthaul."""

__version__ = "0.1.0"

from .coverage import (
    CoverageCurve,
    TraditionalAnalytic,
    TraditionalConfig,
    UserCentricAnalytic,
    UserCentricConfig,
    approx_signal_terms,
    load_model,
    mean_user_rate,
    rate_coverage_traditional,
    rate_coverage_user_centric,
    sum_rate_scan,
)
from .geometry import DiskRegion, NetworkRealization, Point2D, aoi2, aoi3, sample_bpp, sample_ppp
from .load import (
    LoadMoments,
    LoadPmf,
    NegBinParams,
    effective_mean_load,
    fit_negbin,
    load_pmf,
    required_fronthaul,
    scnr_coverage,
    tagged_load_m1,
    tagged_load_m2,
    tagged_load_moments,
    total_variation,
    typical_load_moments,
)
from .propagation import (
    FronthaulParams,
    RadioParams,
    compression_split,
    db_to_linear,
    max_scheduled_users,
    path_loss,
    scnr,
)
from .sim import SimConfig, SimResult, associate_and_schedule, simulate_traditional, simulate_user_centric
from .sinr import Association, sinr_traditional, sinr_user_centric, term_variances
