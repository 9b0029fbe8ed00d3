"""Location-aware Shapley explanations for geospatial tabular models.

The package decomposes any model's predictions into a base value, an
intrinsic location effect, location-invariant feature effects, and
spatially varying GEO x feature interaction effects, then turns those into
global importance tables, dependence data, spatially varying coefficient
surfaces, and bootstrap confidence intervals.
"""

__version__ = "0.1.0"

from ._accel import BACKEND
from .analysis import (
    BootstrapSummary,
    ImportanceTable,
    SvcSurface,
    bootstrap,
    global_importance,
    mask_by_ci,
    pdp_points,
    select_bandwidth,
    svc_extract,
)
from .bridge import BridgedOracle, BridgeSession, fit_remote, handshake, predict_batch
from .core import (
    BackgroundSet,
    DataSet,
    FunctionOracle,
    PlayerIndex,
    build_players,
    coalition_value,
    sample_background,
)
from .exact import ExactAttribution, geoshapley_enumerated, shapley_exact, verify_efficiency
from .kernel import (
    Attribution,
    DesignMatrix,
    ExplainConfig,
    Explanation,
    ExplanationSet,
    build_design,
    default_budget,
    explain,
    shapley_kernel_weight,
    solve_attributions,
)
from .models import (
    BoostedTreesModel,
    GBTConfig,
    KernelRidgeModel,
    LinearModel,
    SyntheticTruth,
    cross_val_r2,
    gen_nonlinear,
    gen_svc,
    load_model,
    s_curve,
    save_model,
    train_boosted_trees,
    train_kernel_ridge,
    train_linear,
    trainer,
)

__all__ = [
    "BACKEND",
    "Attribution",
    "BackgroundSet",
    "BoostedTreesModel",
    "BootstrapSummary",
    "BridgeSession",
    "BridgedOracle",
    "DataSet",
    "DesignMatrix",
    "ExactAttribution",
    "ExplainConfig",
    "Explanation",
    "ExplanationSet",
    "FunctionOracle",
    "GBTConfig",
    "ImportanceTable",
    "KernelRidgeModel",
    "LinearModel",
    "PlayerIndex",
    "SvcSurface",
    "SyntheticTruth",
    "bootstrap",
    "build_design",
    "build_players",
    "coalition_value",
    "cross_val_r2",
    "default_budget",
    "explain",
    "fit_remote",
    "gen_nonlinear",
    "gen_svc",
    "geoshapley_enumerated",
    "global_importance",
    "handshake",
    "load_model",
    "mask_by_ci",
    "pdp_points",
    "predict_batch",
    "s_curve",
    "sample_background",
    "save_model",
    "select_bandwidth",
    "shapley_exact",
    "shapley_kernel_weight",
    "solve_attributions",
    "svc_extract",
    "train_boosted_trees",
    "train_kernel_ridge",
    "train_linear",
    "trainer",
    "verify_efficiency",
]
