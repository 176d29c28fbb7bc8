"""Binary target models evaluated from serialized weights.

A model exposes a real-valued discriminant ``f(x)``; the class decision is
``F(x) = 1`` iff ``f(x) > logit(d)`` for a confidence threshold ``d``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np


class ModelError(ValueError):
    """Raised for malformed model files or dimension mismatches."""


_SIGMOID_LOW = math.ulp(0.0)
_SIGMOID_HIGH = math.nextafter(1.0, 0.0)


def sigmoid(y: float) -> float:
    """Logistic function, stable for large ``|y|``.

    Saturated values are clamped to the nearest doubles inside ``(0, 1)``.
    """
    if y >= 0:
        return min(1.0 / (1.0 + math.exp(-y)), _SIGMOID_HIGH)
    z = math.exp(y)
    return max(z / (1.0 + z), _SIGMOID_LOW)


def logit(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"logit undefined for p={p}")
    return math.log(p / (1.0 - p))


def _as_vector(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != dim:
        raise ModelError(f"expected a vector of length {dim}, got shape {x.shape}")
    return x


@dataclass(frozen=True, eq=False)
class LinearModel:
    weights: np.ndarray
    bias: float
    feature_names: tuple[str, ...] = ()
    confidence_threshold: float = 0.5

    kind = "linear"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise ModelError("weights must be a vector")
        names = tuple(self.feature_names) or tuple(f"x{i}" for i in range(w.size))
        if len(names) != w.size:
            raise ModelError(
                f"{w.size} weights but {len(names)} feature names")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "feature_names", names)

    @property
    def dim(self) -> int:
        return self.weights.size

    def discriminant(self, x) -> float:
        return float(self.weights @ _as_vector(x, self.dim) + self.bias)

    def gradient(self, x) -> np.ndarray:
        _as_vector(x, self.dim)
        return self.weights.copy()

    def to_dict(self) -> dict:
        return {
            "kind": "linear",
            "feature_names": list(self.feature_names),
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "confidence_threshold": self.confidence_threshold,
        }


@dataclass(frozen=True, eq=False)
class RbfSvmModel:
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    gamma: float
    intercept: float
    feature_names: tuple[str, ...] = ()
    confidence_threshold: float = 0.5

    kind = "svm_rbf"

    def __post_init__(self):
        sv = np.atleast_2d(np.asarray(self.support_vectors, dtype=float))
        coefs = np.asarray(self.dual_coefs, dtype=float).ravel()
        if sv.shape[0] != coefs.size:
            raise ModelError(
                f"{sv.shape[0]} support vectors but {coefs.size} dual coefficients")
        if not self.gamma > 0:
            raise ModelError("gamma must be positive")
        names = tuple(self.feature_names) or tuple(f"x{i}" for i in range(sv.shape[1]))
        if len(names) != sv.shape[1]:
            raise ModelError(
                f"support vectors have dimension {sv.shape[1]} "
                f"but {len(names)} feature names were given")
        sv.setflags(write=False)
        coefs.setflags(write=False)
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "dual_coefs", coefs)
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "feature_names", names)

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    def _kernel(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        diff = x - self.support_vectors
        return np.exp(-self.gamma * np.einsum("ij,ij->i", diff, diff)), diff

    def discriminant(self, x) -> float:
        k, _ = self._kernel(_as_vector(x, self.dim))
        return float(self.dual_coefs @ k + self.intercept)

    def gradient(self, x) -> np.ndarray:
        k, diff = self._kernel(_as_vector(x, self.dim))
        return -2.0 * self.gamma * ((self.dual_coefs * k) @ diff)

    def to_dict(self) -> dict:
        return {
            "kind": "svm_rbf",
            "feature_names": list(self.feature_names),
            "support_vectors": self.support_vectors.tolist(),
            "dual_coefs": self.dual_coefs.tolist(),
            "gamma": self.gamma,
            "intercept": self.intercept,
            "confidence_threshold": self.confidence_threshold,
        }


Model = Union[LinearModel, RbfSvmModel]


def discriminant(model: Model, x) -> float:
    return model.discriminant(x)


def gradient(model: Model, x) -> np.ndarray:
    return model.gradient(x)


@dataclass(frozen=True)
class DecisionRule:
    confidence_threshold: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.confidence_threshold < 1.0:
            raise ValueError("confidence threshold must lie in (0, 1)")

    @property
    def theta(self) -> float:
        return logit(self.confidence_threshold)

    def classify(self, f_value: float) -> int:
        # f == theta belongs to class 0
        return int(f_value > self.theta)


def decide(model: Model, rule: DecisionRule, x) -> int:
    return rule.classify(model.discriminant(x))


@dataclass(frozen=True)
class GoalPredicate:
    """Target class ``t`` reached with confidence above level ``l``.

    For ``t = 1`` the goal is ``sigmoid(f) > l``; for ``t = 0`` it is
    ``sigmoid(f) <= 1 - l``.  Both are evaluated as ``f > logit(l)`` and
    ``f <= logit(1 - l)``.
    """

    target_class: int
    confidence_level: float = 0.5

    def __post_init__(self):
        if self.target_class not in (0, 1):
            raise ValueError("target class must be 0 or 1")
        if not 0.5 <= self.confidence_level < 1.0:
            raise ValueError("confidence level must lie in [0.5, 1)")

    @property
    def threshold(self) -> float:
        """Discriminant value bounding the goal region."""
        if self.target_class == 1:
            return logit(self.confidence_level)
        return logit(1.0 - self.confidence_level)

    def holds(self, f_value: float) -> bool:
        # compared in discriminant space so that the goal agrees exactly with
        # DecisionRule.classify and with the level set the heuristics measure
        if self.target_class == 1:
            return f_value > self.threshold
        return f_value <= self.threshold


def evaluate_goal(goal: GoalPredicate, model: Model, x) -> bool:
    return goal.holds(model.discriminant(x))


_FIELDS = {
    "linear": {"kind", "feature_names", "weights", "bias", "confidence_threshold"},
    "svm_rbf": {"kind", "feature_names", "support_vectors", "dual_coefs", "gamma",
                "intercept", "confidence_threshold"},
}


def model_from_dict(data: dict) -> Model:
    kind = data.get("kind")
    if kind not in _FIELDS:
        raise ModelError(f"unknown model kind {kind!r}")
    unknown = set(data) - _FIELDS[kind]
    if unknown:
        raise ModelError(f"unknown fields for {kind} model: {sorted(unknown)}")
    if "feature_names" not in data:
        raise ModelError("model file must list feature_names")
    threshold = float(data.get("confidence_threshold", 0.5))
    try:
        if kind == "linear":
            return LinearModel(np.asarray(data["weights"], dtype=float), data["bias"],
                               tuple(data["feature_names"]), threshold)
        return RbfSvmModel(np.asarray(data["support_vectors"], dtype=float),
                           np.asarray(data["dual_coefs"], dtype=float),
                           data["gamma"], data["intercept"],
                           tuple(data["feature_names"]), threshold)
    except KeyError as exc:
        raise ModelError(f"{kind} model is missing field {exc.args[0]!r}") from None


def load_model(path: Union[str, Path], feature_names: Sequence[str] | None = None) -> Model:
    """Load a model file; optionally check it against the expected feature names."""
    with open(path, encoding="utf-8") as fh:
        model = model_from_dict(json.load(fh))
    if feature_names is not None and tuple(feature_names) != model.feature_names:
        raise ModelError(
            f"model features do not match the graph's features "
            f"({len(model.feature_names)} vs {len(feature_names)})")
    return model


def save_model(model: Model, path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=1)
