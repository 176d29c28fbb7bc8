"""Synthetic datasets and target models for tests and demos.

Nothing here is trained by an optimizer: linear models come either from
random weights or from the nearest-centroid rule, which is enough to exercise
the search machinery end to end.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .classifiers import LinearModel, RbfSvmModel, save_model
from .features import FeatureEncoder, fit_encoder
from .graphs import PacketTrace, cumul_feature_names, cumul_features, write_traces

BOT_FEATURES = ("tweets", "retweets", "replies", "age_days", "urls", "favourites", "lists",
                "likes_per_tweet", "retweets_per_tweet", "cdn_kb", "sources_count")
BOT_APPS = ("browser", "mobile", "osn", "automation", "marketing", "other")
INTEGER_FEATURES = frozenset({"tweets", "retweets", "replies", "age_days", "urls",
                              "sources_count"})


def bot_rows(rng: np.random.Generator, n_rows: int, features: Sequence[str] = BOT_FEATURES,
             apps: Sequence[str] = BOT_APPS) -> list[dict]:
    """Heavy-tailed account statistics with an ``is_bot`` label."""
    rows = []
    for i in range(n_rows):
        bot = bool(rng.random() < 0.35)
        row = {"id": f"acct{i:05d}", "is_bot": int(bot)}
        for j, name in enumerate(features):
            scale = np.exp(1.0 + 0.3 * j + (0.8 if bot and j % 2 == 0 else 0.0))
            v = rng.lognormal(np.log(scale), 1.0)
            row[name] = float(int(v)) if name in INTEGER_FEATURES else round(float(v), 4)
        used = [a for k, a in enumerate(apps)
                if rng.random() < (0.6 if bot == (k % 2 == 0) else 0.25)]
        row["apps"] = frozenset(used)
        rows.append(row)
    return rows


def random_linear_model(rng: np.random.Generator, names: Sequence[str], scale: float = 1.0,
                        bias: float = 0.0) -> LinearModel:
    return LinearModel(rng.normal(0.0, scale, size=len(names)), bias, tuple(names))


def centroid_model(positives: np.ndarray, negatives: np.ndarray, names: Sequence[str],
                   bias_shift: float = 0.0) -> LinearModel:
    """Linear rule ``w = mu1 - mu0`` through the midpoint of the class means."""
    mu1 = np.asarray(positives, dtype=float).mean(axis=0)
    mu0 = np.asarray(negatives, dtype=float).mean(axis=0)
    w = mu1 - mu0
    b = -float(w @ (mu1 + mu0)) / 2.0 + bias_shift
    return LinearModel(w, b, tuple(names))


def bot_model(encoder: FeatureEncoder, rows: Sequence[dict]) -> LinearModel:
    """Nearest-centroid bot detector over the one-hot encoding."""
    onehots = np.array([encoder.onehot(encoder.encode(r)) for r in rows])
    labels = np.array([r["is_bot"] for r in rows], dtype=bool)
    return centroid_model(onehots[labels], onehots[~labels], encoder.onehot_names())


def random_bucket_instance(rng: np.random.Generator, n_features: int, n_buckets: int = 5,
                           n_apps: int = 0, n_rows: int = 200,
                           weight_scale: float = 1.0) -> tuple[FeatureEncoder, LinearModel, list]:
    """Encoder on random data plus a random linear model over its one-hot space.

    The bias centres the model on the median training score, so about half of
    the training rows fall in each class.
    """
    names = [f"f{i}" for i in range(n_features)]
    apps = [f"app{j}" for j in range(n_apps)]
    rows = []
    for _ in range(n_rows):
        row = {n: float(rng.normal()) for n in names}
        row["apps"] = frozenset(a for a in apps if rng.random() < 0.5)
        rows.append(row)
    encoder = fit_encoder(rows, names, n_buckets, apps=apps)
    model = random_linear_model(rng, encoder.onehot_names(), weight_scale)
    scores = np.array([model.discriminant(encoder.onehot(encoder.encode(r))) for r in rows])
    model = LinearModel(model.weights, -float(np.median(scores)), model.feature_names)
    return encoder, model, rows


def synthetic_trace(rng: np.random.Generator, length: int, monitored: bool) -> PacketTrace:
    """Monitored traces front-load incoming packets; others are balanced."""
    pos = np.linspace(0.0, 1.0, length)
    if monitored:
        p_out = 0.15 + 0.35 * pos
    else:
        p_out = np.full(length, 0.45)
    packets = np.where(rng.random(length) < p_out, 1, -1)
    return PacketTrace(tuple(int(p) for p in packets))


def trace_corpus(rng: np.random.Generator, n_per_class: int, min_len: int = 40,
                 max_len: int = 200) -> tuple[list[PacketTrace], list[PacketTrace]]:
    monitored = [synthetic_trace(rng, int(rng.integers(min_len, max_len + 1)), True)
                 for _ in range(n_per_class)]
    other = [synthetic_trace(rng, int(rng.integers(min_len, max_len + 1)), False)
             for _ in range(n_per_class)]
    return monitored, other


def trace_model(monitored: Sequence[PacketTrace], other: Sequence[PacketTrace],
                n_samples: int = 100) -> LinearModel:
    """Centroid classifier over standardized CUMUL features (1 = monitored).

    Standardization is folded back into the weights so the model reads raw
    CUMUL vectors.
    """
    X1 = np.array([cumul_features(t, n_samples) for t in monitored])
    X0 = np.array([cumul_features(t, n_samples) for t in other])
    X = np.vstack([X1, X0])
    mu, sd = X.mean(axis=0), X.std(axis=0)
    sd[sd == 0] = 1.0
    inner = centroid_model((X1 - mu) / sd, (X0 - mu) / sd, cumul_feature_names(n_samples))
    w = inner.weights / sd
    b = inner.bias - float(w @ mu)
    return LinearModel(w, b, tuple(cumul_feature_names(n_samples)))


def random_rbf_model(rng: np.random.Generator, dim: int, n_support: int = 5,
                     gamma: Optional[float] = None) -> RbfSvmModel:
    gamma = gamma if gamma is not None else float(rng.uniform(0.1, 1.0))
    return RbfSvmModel(rng.normal(size=(n_support, dim)), rng.normal(size=n_support),
                       gamma, float(rng.normal()))


def write_bot_csv(rows: Sequence[dict], path, features: Sequence[str] = BOT_FEATURES) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["id", *features, "apps", "is_bot"]) + "\n")
        for r in rows:
            vals = [r["id"]] + [repr(r[f]) for f in features]
            vals += ["|".join(sorted(r["apps"])), str(r["is_bot"])]
            fh.write(",".join(vals) + "\n")


def write_bot_fixture(directory, seed: int = 0, n_train: int = 400, n_test: int = 40,
                      n_buckets: int = 20, cost_norm: str = "l1") -> dict:
    """Write a synthetic bot-detection setup and return the file paths.

    Files: ``train.csv``, ``test.csv``, ``encoder.json``, ``model.json``,
    ``bucket.json`` and ``dollar.json``.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = bot_rows(rng, n_train + n_test)
    train, test = rows[:n_train], rows[n_train:]
    encoder = fit_encoder(train, BOT_FEATURES, n_buckets, apps=BOT_APPS)
    model = bot_model(encoder, train)
    paths = {name: directory / name for name in
             ("train.csv", "test.csv", "encoder.json", "model.json", "bucket.json", "dollar.json")}
    write_bot_csv(train, paths["train.csv"])
    write_bot_csv(test, paths["test.csv"])
    encoder.save(paths["encoder.json"])
    save_model(model, paths["model.json"])
    with open(paths["bucket.json"], "w", encoding="utf-8") as fh:
        json.dump({"graph": "bucket", "cost_norm": cost_norm, "encoder": "encoder.json"}, fh)
    with open(paths["dollar.json"], "w", encoding="utf-8") as fh:
        json.dump({"graph": "dollar", "encoder": "encoder.json",
                   "unit_prices": {"tweets": 2.0, "replies": 2.0,
                                   "likes_per_tweet": 0.025, "retweets_per_tweet": 0.025}}, fh)
    return {name.split(".")[0]: path for name, path in paths.items()}


def write_trace_fixture(directory, seed: int = 0, n_train: int = 200, n_test: int = 20,
                        max_len: int = 200) -> dict:
    """Write ``traces.txt`` (monitored test traces), ``model.json`` and ``trace.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    monitored, other = trace_corpus(rng, n_train, max_len=max_len)
    model = trace_model(monitored, other)
    test, _ = trace_corpus(rng, n_test, max_len=max_len)
    paths = {"traces": directory / "traces.txt", "model": directory / "model.json",
             "trace": directory / "trace.json"}
    write_traces(test, paths["traces"])
    save_model(model, paths["model"])
    with open(paths["trace"], "w", encoding="utf-8") as fh:
        json.dump({"graph": "trace"}, fh)
    return paths
