from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from advsearch.classifiers import (DecisionRule, GoalPredicate, LinearModel, ModelError,
                                   RbfSvmModel, decide, discriminant, evaluate_goal, gradient,
                                   load_model, logit, model_from_dict, save_model, sigmoid)
from advsearch.fixtures import random_rbf_model


def central_difference(f, x, step=1e-5):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2 * step)
    return g


def test_discriminant_examples():
    assert discriminant(LinearModel([1.0, -1.0], 0.0), [2.0, 1.0]) == 1.0
    assert discriminant(LinearModel([3.0, 4.0], 0.0), [1.0, 1.0]) == 7.0
    rbf = RbfSvmModel([[0.0, 0.0]], [1.0], 1.0, 0.0)
    assert discriminant(rbf, [0.0, 0.0]) == 1.0


def test_rbf_against_direct_formula():
    rng = np.random.default_rng(0)
    m = random_rbf_model(rng, 4, n_support=6)
    x = rng.normal(size=4)
    expected = sum(c * math.exp(-m.gamma * float(np.sum((x - sv) ** 2)))
                   for c, sv in zip(m.dual_coefs, m.support_vectors)) + m.intercept
    assert math.isclose(m.discriminant(x), expected, rel_tol=1e-12)


def test_sigmoid_examples():
    assert sigmoid(0.0) == 0.5
    assert abs(sigmoid(logit(0.75)) - 0.75) < 1e-12
    assert 1 - 1e-9 < sigmoid(50.0) < 1.0
    assert 0.0 < sigmoid(-800.0) < 1e-300
    assert sigmoid(800.0) < 1.0


@given(st.floats(-700, 700), st.floats(-700, 700))
def test_sigmoid_monotone(a, b):
    if a < b:
        assert sigmoid(a) <= sigmoid(b)


def test_decide_examples():
    rule = DecisionRule(0.5)
    assert decide(LinearModel([1.0], 0.0), rule, [0.0]) == 0
    assert decide(LinearModel([1.0], 0.0), rule, [0.1]) == 1
    # theta = ln 3 > 1
    assert decide(LinearModel([1.0], 0.0), DecisionRule(0.75), [1.0]) == 0
    assert math.isclose(DecisionRule(0.75).theta, math.log(3), rel_tol=1e-15)


def test_gradient_examples():
    lin = LinearModel([3.0, 4.0], 0.0)
    assert np.array_equal(gradient(lin, [5.0, -2.0]), [3.0, 4.0])
    rbf = RbfSvmModel([[1.0, 2.0]], [0.7], 0.5, 0.1)
    assert np.array_equal(gradient(rbf, [1.0, 2.0]), [0.0, 0.0])


def test_rbf_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    for _ in range(100):
        dim = int(rng.integers(1, 8))
        m = random_rbf_model(rng, dim, n_support=int(rng.integers(1, 8)))
        x = m.support_vectors[0] + rng.normal(scale=0.7, size=dim)
        analytic = m.gradient(x)
        numeric = central_difference(m.discriminant, x)
        scale = max(np.linalg.norm(analytic), 1e-3)
        assert np.linalg.norm(analytic - numeric) / scale < 1e-6


def test_goal_examples():
    lin = LinearModel([1.0], 0.0)
    assert not evaluate_goal(GoalPredicate(1, 0.5), lin, [0.0])
    assert evaluate_goal(GoalPredicate(1, 0.75), lin, [2.0])
    assert evaluate_goal(GoalPredicate(0, 0.5), lin, [-0.1])
    assert evaluate_goal(GoalPredicate(0, 0.5), lin, [0.0])  # sigma = 0.5 <= 0.5
    assert not evaluate_goal(GoalPredicate(0, 0.75), lin, [-1.0])  # 0.269 > 0.25


def test_goal_threshold():
    assert math.isclose(GoalPredicate(1, 0.75).threshold, math.log(3))
    assert math.isclose(GoalPredicate(0, 0.75).threshold, -math.log(3))
    assert GoalPredicate(0, 0.5).threshold == 0.0


@given(st.floats(-30, 30), st.sampled_from([0.5, 0.6, 0.75, 0.9]))
def test_goal_flip_consistency(f, d):
    rule = DecisionRule(d)
    assert GoalPredicate(1, d).holds(f) == (rule.classify(f) == 1)
    if d == 0.5:
        assert GoalPredicate(0, d).holds(f) == (rule.classify(f) == 0)


def test_bad_goal_levels():
    with pytest.raises(ValueError):
        GoalPredicate(2, 0.5)
    with pytest.raises(ValueError):
        GoalPredicate(1, 1.0)


def test_model_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    models = [LinearModel(rng.normal(size=5), 0.3, tuple("abcde"), 0.6),
              random_rbf_model(rng, 5)]
    for m in models:
        path = tmp_path / f"{m.kind}.json"
        save_model(m, path)
        back = load_model(path)
        assert back.kind == m.kind and back.confidence_threshold == m.confidence_threshold
        for _ in range(50):
            x = rng.normal(size=5)
            assert back.discriminant(x) == m.discriminant(x)


def test_model_file_errors(tmp_path):
    good = {"kind": "linear", "feature_names": ["a", "b"], "weights": [1, 2], "bias": 0}
    assert model_from_dict(good).dim == 2
    with pytest.raises(ModelError, match="unknown fields"):
        model_from_dict({**good, "extra": 1})
    with pytest.raises(ModelError, match="feature_names"):
        model_from_dict({k: v for k, v in good.items() if k != "feature_names"})
    with pytest.raises(ModelError, match="bias"):
        model_from_dict({k: v for k, v in good.items() if k != "bias"})
    with pytest.raises(ModelError, match="kind"):
        model_from_dict({**good, "kind": "mlp"})
    with pytest.raises(ModelError):
        model_from_dict({**good, "weights": [1, 2, 3]})
    path = tmp_path / "m.json"
    path.write_text(json.dumps(good))
    with pytest.raises(ModelError, match="do not match"):
        load_model(path, ["a", "c"])
    assert load_model(path, ["a", "b"]).feature_names == ("a", "b")


def test_dimension_mismatch():
    with pytest.raises(ModelError):
        LinearModel([1.0, 2.0], 0.0).discriminant([1.0])
