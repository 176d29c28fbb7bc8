"""Minimal-cost adversarial examples by best-first search over transformation graphs."""
from .classifiers import (DecisionRule, GoalPredicate, LinearModel, RbfSvmModel, decide,
                          evaluate_goal, load_model, logit, save_model, sigmoid)
from .features import BucketedExample, FeatureEncoder, fit_buckets, fit_encoder, load_csv
from .graphs import (BucketGraph, DollarCostSpec, DollarGraph, PacketTrace, TraceGraph,
                     cumul_features, path_to_edits)
from .heuristics import (L1, L2, LINF, Heuristic, Norm, NormSpec, confidence_heuristic,
                         epsilon_weight, goal_aware, linear_robustness, robustness_heuristic,
                         taylor_robustness)
from .search import (Algorithm, SearchConfig, SearchResult, Status, bf_star, exhaustive_mac,
                     make_score, search)

__version__ = "0.1.0"
