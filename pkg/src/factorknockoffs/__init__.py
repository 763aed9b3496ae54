"""FDR-controlled feature selection with factor-model knockoffs.

The package estimates a latent-factor model of the design matrix, draws a
synthetic knockoff copy from the estimated structure, and applies the
knockoff filter to select variables at a target false discovery rate.
Around that core sit a Monte Carlo simulation bench and a rolling-window
forecasting bench.
"""

from .data import (
    Dataset,
    SeedSpec,
    StandardizationRecord,
    center_columns,
    inverse_rescale,
    load_csv,
    rescale_columns,
    save_csv,
)
from .factors import (
    FactorEstimate,
    estimate_num_factors,
    fit_pc,
    load_factor_estimate,
    noise_variance,
    save_factor_estimate,
)
from .forecasting import (
    DmResult,
    ForecastReport,
    SeriesPanel,
    ar1_step,
    dm_test,
    far_step,
    ipad_step,
    lasso_step,
    load_panel_csv,
    roll,
)
from .forest import ForestConfig, ForestModel, MdaReport, fit_forest, mda
from .inference import (
    SelectionResult,
    WStats,
    fdp,
    knockoff_threshold,
    lcd,
    mda_diff,
    select,
    tdp,
)
from .knockoffs import KnockoffMatrix, augment, generate, generate_oracle
from .lasso import CvResult, LassoFit, kkt_check, lasso_cd, lasso_cv, ols
from .procedure import SelectionDiagnostics, knockoff_select, selection_frequencies
from .simulation import (
    DesignSpec,
    RepRecord,
    SimulationReport,
    gen_design,
    run_monte_carlo,
    run_rep,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "SeedSpec", "StandardizationRecord", "center_columns",
    "inverse_rescale", "load_csv", "rescale_columns", "save_csv",
    "FactorEstimate", "estimate_num_factors", "fit_pc",
    "load_factor_estimate", "noise_variance", "save_factor_estimate",
    "KnockoffMatrix", "augment", "generate", "generate_oracle",
    "CvResult", "LassoFit", "kkt_check", "lasso_cd", "lasso_cv", "ols",
    "ForestConfig", "ForestModel", "MdaReport", "fit_forest", "mda",
    "WStats", "SelectionResult", "fdp", "knockoff_threshold", "lcd",
    "mda_diff", "select", "tdp",
    "SelectionDiagnostics", "knockoff_select", "selection_frequencies",
    "DesignSpec", "RepRecord", "SimulationReport", "gen_design",
    "run_monte_carlo", "run_rep",
    "SeriesPanel", "ForecastReport", "DmResult", "ar1_step", "far_step",
    "lasso_step", "ipad_step", "roll", "dm_test", "load_panel_csv",
    "__version__",
]
