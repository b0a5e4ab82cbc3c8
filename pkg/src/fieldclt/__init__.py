"""Stationary martingale-difference random fields on the integer lattice:
construction, simulation of normalized block sums, candidate limit laws,
and exact rational checks of the underlying filtration algebra."""

from .exactalg import (
    CheckReport,
    FiltrationGrid,
    FiniteAction,
    FiniteSpace,
    Partition,
    check_completely_commuting,
    cond_exp,
    verify_independence,
    verify_lemma_class,
    verify_prop_pro,
)
from .fields import (
    ChaosField,
    CoeffTensor,
    Composite,
    IIDField,
    ProductIID,
    Realization,
    SignFlipCocycle,
    TruncatedLocal,
    Window,
    ZeroField,
    sample,
    spec_digest,
    spec_from_json,
    spec_to_json,
    torus_parity,
)
from .limitlaw import (
    ChaosProduct,
    Convolution,
    EtaMixture,
    Normal,
    ProductOfNormals,
    bessel_cdf_many,
    bessel_k0,
    cf_eta_mixture,
    cf_limit,
    cdf_limit,
    sample_limit,
)
from .stats import (
    EmpiricalDist,
    SumReport,
    convolution_check,
    ecf,
    ks_distance,
    ks_one_sample,
    ks_two_sample,
    partial_sum,
    queue_condition_norm,
    replicate_stats,
    truncate_fC,
    truncation_martingale_defect,
    truncation_norms,
    v_statistic,
)
from .config import ExperimentConfig, load_config, save_config
from .presets import get_preset, preset_names

__version__ = "0.1.0"

__all__ = [
    "CheckReport",
    "FiltrationGrid",
    "FiniteAction",
    "FiniteSpace",
    "Partition",
    "check_completely_commuting",
    "cond_exp",
    "verify_independence",
    "verify_lemma_class",
    "verify_prop_pro",
    "ChaosField",
    "CoeffTensor",
    "Composite",
    "IIDField",
    "ProductIID",
    "Realization",
    "SignFlipCocycle",
    "TruncatedLocal",
    "Window",
    "ZeroField",
    "sample",
    "spec_digest",
    "spec_from_json",
    "spec_to_json",
    "torus_parity",
    "ChaosProduct",
    "Convolution",
    "EtaMixture",
    "Normal",
    "ProductOfNormals",
    "bessel_cdf_many",
    "bessel_k0",
    "cf_eta_mixture",
    "cf_limit",
    "cdf_limit",
    "sample_limit",
    "EmpiricalDist",
    "SumReport",
    "convolution_check",
    "ecf",
    "ks_distance",
    "ks_one_sample",
    "ks_two_sample",
    "partial_sum",
    "queue_condition_norm",
    "replicate_stats",
    "truncate_fC",
    "truncation_martingale_defect",
    "truncation_norms",
    "v_statistic",
    "ExperimentConfig",
    "load_config",
    "save_config",
    "get_preset",
    "preset_names",
    "__version__",
]
