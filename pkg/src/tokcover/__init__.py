"""Maximum-coverage vision-token selection engine.

Builds calibrated text-vision and vision-vision similarity matrices from
token-embedding dumps and greedily selects a token subset maximizing the
fused submodular coverage objective.
"""

from ._kernels import BACKEND, available_backends
from .core import (
    CoverageConfig,
    Mode,
    Role,
    SelectionResult,
    SimilarityMatrix,
    SimKind,
    TokenMatrix,
    normalize,
)
from .coverage import (
    coverage_value,
    exhaustive_opt,
    exhaustive_opt_fused,
    fused_value,
    greedy_select,
    greedy_select_fused,
    lazy_greedy_select,
    lazy_greedy_select_fused,
    check_submodular,
)
from .dumpio import ResultRecord, read_dump, write_dump
from .pipeline import (
    BudgetPlan,
    SampleInput,
    ic_metric,
    plan_budget,
    select_tokens,
    synth_sample,
)
from .similarity import (
    WordSpans,
    adapt_tau_bisection,
    adapt_tau_grid_kth,
    build_tv,
    build_vv,
    calibrate,
    concat_agent,
    pool_post,
    pool_pre,
)

__version__ = "0.1.0"
