"""Heuristics for adversarial graph search.

The admissible heuristics are lower bounds on the cost of moving an example
across the classifier's decision level set in the continuous superset
``S = R^m`` of the discrete domain.  When edge costs are norm distances
between feature vectors, such a bound never overestimates the remaining path
cost in the graph.
"""
from __future__ import annotations

import enum
import sys
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from .classifiers import DecisionRule, GoalPredicate, LinearModel, Model
from .search import node_key

# stands in for -inf so that scores stay totally ordered
SENTINEL = -sys.float_info.max


class Norm(enum.Enum):
    L1 = "l1"
    L2 = "l2"
    LINF = "linf"
    WEIGHTED_L1 = "weighted_l1"


@dataclass(frozen=True, eq=False)
class NormSpec:
    """Cost norm; ``WEIGHTED_L1`` is ``||A v||_1`` for a positive diagonal ``A``."""

    kind: Norm = Norm.L1
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        kind = Norm(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is Norm.WEIGHTED_L1:
            if self.weights is None:
                raise ValueError("weighted L1 needs the diagonal of the weight matrix")
            a = np.asarray(self.weights, dtype=float)
            if a.ndim != 1:
                raise ValueError("only diagonal weight matrices are supported")
            if not np.all(a > 0):
                raise ValueError("weight matrix diagonal must be strictly positive")
            object.__setattr__(self, "weights", a)
        elif self.weights is not None:
            raise ValueError(f"{kind.value} does not take weights")

    @property
    def p(self) -> float:
        return {Norm.L1: 1.0, Norm.L2: 2.0, Norm.LINF: np.inf, Norm.WEIGHTED_L1: 1.0}[self.kind]

    def dual(self) -> "NormSpec":
        if self.kind is Norm.WEIGHTED_L1:
            raise ValueError("the dual of a weighted norm is not an unweighted norm; use dual_norm()")
        return NormSpec({Norm.L1: Norm.LINF, Norm.L2: Norm.L2, Norm.LINF: Norm.L1}[self.kind])

    def __call__(self, v) -> float:
        v = np.asarray(v, dtype=float)
        if self.kind is Norm.WEIGHTED_L1:
            return float(np.sum(np.abs(self.weights * v)))
        return float(np.linalg.norm(v, self.p))

    def dual_norm(self, w) -> float:
        """``sup { w.v : ||v|| <= 1 }``."""
        w = np.asarray(w, dtype=float)
        if self.kind is Norm.WEIGHTED_L1:
            return float(np.max(np.abs(w / self.weights)))
        return self.dual()(w)

    def __repr__(self) -> str:
        return f"NormSpec({self.kind.value})"


L1 = NormSpec(Norm.L1)
L2 = NormSpec(Norm.L2)
LINF = NormSpec(Norm.LINF)


def as_norm(norm) -> NormSpec:
    if isinstance(norm, NormSpec):
        return norm
    return NormSpec(Norm(norm))


def extremal_point(w, norm: NormSpec) -> np.ndarray:
    """Unit-norm ``x`` attaining ``w.x = ||w||_*`` (equality case of Hölder)."""
    w = np.asarray(w, dtype=float)
    norm = as_norm(norm)
    x = np.zeros_like(w)
    if norm.kind is Norm.L2:
        return w / np.linalg.norm(w)
    if norm.kind is Norm.LINF:
        return np.sign(w)
    scaled = w if norm.kind is Norm.L1 else w / norm.weights
    i = int(np.argmax(np.abs(scaled)))
    x[i] = np.sign(w[i])
    if norm.kind is Norm.WEIGHTED_L1:
        x[i] /= norm.weights[i]
    return x


def linear_robustness(model: LinearModel, x, norm=L1, threshold: float = 0.0) -> float:
    """Distance from ``x`` to the level set ``f = threshold`` under ``norm``.

    Closed form ``|f(x) - threshold| / ||w||_*`` with ``||.||_*`` the dual norm.
    """
    norm = as_norm(norm)
    denom = norm.dual_norm(model.weights)
    if denom == 0:
        raise ValueError("zero weight vector: the model has no decision boundary")
    return abs(model.discriminant(x) - threshold) / denom


def taylor_robustness(model: Model, x, norm=L1, threshold: float = 0.0) -> float:
    """First-order estimate ``|f(x) - threshold| / ||grad f(x)||_*``.

    Exact for linear models, otherwise not a guaranteed lower bound.
    """
    norm = as_norm(norm)
    denom = norm.dual_norm(model.gradient(x))
    if denom == 0:
        raise ValueError("zero gradient: x is a stationary point of the model")
    return abs(model.discriminant(x) - threshold) / denom


@dataclass(frozen=True, eq=False)
class Heuristic:
    """Node heuristic.

    ``suboptimality`` is 1 for admissible heuristics, ``eps`` for an admissible
    heuristic weighted by ``eps``, and ``None`` when nothing is guaranteed.
    """

    estimator: Callable[[Any], float]
    suboptimality: Optional[float] = None
    note: str = ""

    @property
    def admissible(self) -> bool:
        return self.suboptimality == 1.0

    def __call__(self, x) -> float:
        return self.estimator(x)


def identity_features(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def zero_heuristic() -> Heuristic:
    return Heuristic(lambda x: 0.0, 1.0, "h = 0")


def goal_aware(h_raw: Callable[[Any], float], goal: GoalPredicate, model: Model,
               features: Callable[[Any], np.ndarray] = identity_features,
               admissible: Optional[bool] = None,
               min_edge_cost: Optional[float] = None, note: str = "") -> Heuristic:
    """Zero on goal nodes, ``h_raw`` elsewhere.

    With ``min_edge_cost`` the value on non-goal nodes is raised to at least
    that cost, which keeps admissibility since a goal is at least one edge away.
    """
    if admissible is None:
        admissible = bool(getattr(h_raw, "admissible", False))

    def estimate(x) -> float:
        if goal.holds(model.discriminant(features(x))):
            return 0.0
        h = h_raw(x)
        if min_edge_cost is not None:
            h = max(h, min_edge_cost)
        return h

    return Heuristic(estimate, 1.0 if admissible else None, note)


def robustness_heuristic(model: Model, goal: GoalPredicate, norm=L1,
                         features: Callable[[Any], np.ndarray] = identity_features,
                         method: str = "auto", min_edge_cost: Optional[float] = None) -> Heuristic:
    """Goal-aware distance to the goal's level set.

    ``method="linear"`` uses the exact dual-norm distance (admissible when the
    edge cost is ``norm`` between feature vectors); ``"taylor"`` linearizes the
    model at each node and carries no guarantee.
    """
    norm = as_norm(norm)
    if method == "auto":
        method = "linear" if isinstance(model, LinearModel) else "taylor"
    theta = goal.threshold
    if method == "linear":
        if not isinstance(model, LinearModel):
            raise TypeError("the exact distance needs a linear model")

        def raw(x):
            return linear_robustness(model, features(x), norm, theta)
        return goal_aware(raw, goal, model, features, admissible=True,
                          min_edge_cost=min_edge_cost,
                          note=f"exact {norm.kind.value} distance to f = {theta:.6g} over S = R^m")
    if method == "taylor":
        def raw(x):
            return taylor_robustness(model, features(x), norm, theta)
        return goal_aware(raw, goal, model, features, admissible=False,
                          note=f"linearized {norm.kind.value} distance, not admissible")
    raise ValueError(f"unknown robustness method {method!r}")


def confidence_heuristic(model: Model, target_class: int,
                         features: Callable[[Any], np.ndarray] = identity_features,
                         rule: Optional[DecisionRule] = None) -> Heuristic:
    """Black-box heuristic: lower as the model leans further towards ``target_class``."""
    if target_class not in (0, 1):
        raise ValueError("target class must be 0 or 1")
    rule = rule or DecisionRule(model.confidence_threshold)
    sign = 1.0 if target_class == 0 else -1.0

    def estimate(x) -> float:
        f = model.discriminant(features(x))
        if rule.classify(f) == target_class:
            return SENTINEL
        return sign * f

    return Heuristic(estimate, None, "confidence-based, query access only")


def epsilon_weight(h: Heuristic, epsilon: float) -> Heuristic:
    """Scale ``h`` by ``epsilon``; an admissible ``h`` becomes ``epsilon``-bounded."""
    if epsilon < 1:
        raise ValueError(f"epsilon must be >= 1, got {epsilon}")
    sub = getattr(h, "suboptimality", None)
    bound = None if sub is None else sub * epsilon
    return Heuristic(lambda x: epsilon * h(x), bound, f"{epsilon:g} x ({getattr(h, 'note', '')})")


EPSILON_PRESETS = (2, 3, 5, 10)


def random_heuristic(rng: np.random.Generator, low: float = 0.0, high: float = 2.0,
                     key: Callable[[Any], Any] = node_key) -> Heuristic:
    """Uniform random values, fixed per node once drawn."""
    drawn: dict = {}

    def estimate(x) -> float:
        k = key(x)
        if k not in drawn:
            drawn[k] = float(rng.uniform(low, high))
        return drawn[k]

    return Heuristic(estimate, None, f"uniform random in [{low:g}, {high:g}]")
