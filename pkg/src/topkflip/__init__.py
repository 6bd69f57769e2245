"""Certified rank-range analysis for resource-constrained top-k selection."""

from .dataset import (
    ColumnSchema,
    DataError,
    Dataset,
    EmptyDesignError,
    OrthoBasis,
    ParseError,
    SchemaError,
    assign_splits,
    drop_columns_matching,
    keep_columns_matching,
    load_csv,
    orthonormalize,
    write_csv,
)
from .linear_fit import LinearModel, RashomonBall, fit_ols, fit_on_rows, make_ball, rss
from .ranking import RankVector, rank_descending, resolve_kappa
from .reports import FlipReport, read_reports_jsonl, write_reports_jsonl
from .solver import (
    BallRegion,
    MipInstance,
    MipSolution,
    SimplexRegion,
    SolverConfig,
    dump_instance,
    group_query,
    load_instance,
    rank_query,
    solve,
)
from .rashomon_single import (
    AmbiguityResult,
    PruneResult,
    ambiguity_single,
    flip_reports_single,
    flip_search,
    gap_bound,
    max_prediction_model,
    prune_from_sup_matrix,
    prune_unflippable,
)
from .index_model import (
    IndexEnsemble,
    Standardizer,
    ambiguity_multi,
    build_ensemble,
    fit_index_variable,
    flip_reports_multi,
    flip_search_multi,
    gap_bound_multi,
    gap_sup_multi,
    max_prediction_alpha,
    prune_never_top_multi,
)
from .fairness import (
    FairnessBundle,
    GroupRateReport,
    ModelEvaluation,
    PhaseError,
    evaluate_selection,
    fairness_workflow,
    group_rate_extremes,
    write_fairness_csv,
    write_fairness_json,
)
from .metrics import (
    CurvePoint,
    StableSet,
    ambiguity_curve,
    baseline_overlap,
    curve_rows,
    stable_points,
    stable_rows,
)
from .oracle import angle_sweep_single, simplex_sweep_k2
from .synth import SynthConfig, generate, generate_clinical

__all__ = [name for name in dir() if not name.startswith("_")]
