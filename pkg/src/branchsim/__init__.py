"""Abstract branch-and-bound tree-size models and scoring-rule simulation."""

__version__ = "0.1.0"

from .core import (
    INFEASIBLE,
    DominanceDag,
    Instance,
    Variable,
    build_dominance_dag,
    dominates,
    validate_instance,
)
from .gvb import gvb_opt_size, gvb_opt_size_with_forced_root, verify_prop3_counterexample
from .ratio import PhiCache, PhiResult, classify_solvability, compute_phi
from .scoring import RuleKind, ScoringParams, SelectionRule, product_score
from .sim import (
    Category,
    ExperimentConfig,
    count_nondominated_subsets,
    enumerate_frontiers,
    expected_nondominated_count,
    generate_instance,
    run_experiment,
    simulate_tree_size,
)
from .trees import mvb_closed_form, mvb_ratio, mvb_size, svb_log_size, svb_size, verify_mvb_counterexample
