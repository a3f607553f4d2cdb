"""Balanced subsampling of big data with categorical covariates."""

__version__ = "0.1.0"

from .anova import (
    CodedMatrix,
    Leverage,
    OlsFit,
    d_criterion,
    diagnostics,
    dummy_code,
    fit_ols,
    max_leverage,
    orthonormal_code,
)
from .criterion import (
    BalanceStats,
    Subsample,
    balance_stats,
    delta,
    f_direct,
    f_of,
    f_pairwise,
    is_orthogonal_array,
)
from .dataset import (
    DataError,
    Dataset,
    LevelSpec,
    ResponseModel,
    gen_case1,
    gen_case2,
    gen_case3,
    gen_response,
    gen_toy,
    ingest_csv,
    write_csv,
)
from .evaluate import ExperimentConfig, MetricsReport, mse, run_experiment, wspe_empirical
from .selector import DeltaTable, SelectionConfig, balanced_select, rescore, uniform_select
