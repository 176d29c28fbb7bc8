"""Transformation graphs encoding what an adversary can change and at what cost.

A graph expands a node into an ordered list of ``(child, edge_cost)`` pairs,
every child differing from its parent by one atomic change.  Graphs also know
how to turn a node into the feature vector the target model consumes.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .features import BucketedExample, FeatureEncoder
from .heuristics import L1, NormSpec, as_norm
from .search import SearchResult

CUMUL_SAMPLES = 100
OUTGOING, INCOMING = 1, -1


class TransformationGraph:
    """Base class.  Subclasses implement :meth:`expand` and :meth:`features`."""

    min_edge_cost: Optional[float] = None
    description: str = ""

    def expand(self, x) -> list:
        raise NotImplementedError

    def features(self, x) -> np.ndarray:
        raise NotImplementedError

    def feature_names(self) -> list[str]:
        raise NotImplementedError

    def key(self, x):
        return x.key()

    def describe(self, x):
        return str(x)

    def describe_edit(self, parent, child, cost: float) -> dict:
        raise NotImplementedError


class BucketGraph(TransformationGraph):
    """Move one numeric feature one bucket down or up, or flip one app.

    The edge cost is ``cost_norm`` applied to the difference of the one-hot
    vectors, i.e. 2 for L1, sqrt(2) for L2 and 1 for L-infinity.
    """

    def __init__(self, encoder: FeatureEncoder, cost_norm: Union[NormSpec, str] = L1,
                 mutable_features: Optional[Sequence[str]] = None):
        self.encoder = encoder
        self.cost_norm = as_norm(cost_norm)
        if mutable_features is None:
            mutable_features = list(encoder.features) + list(encoder.apps)
        unknown = set(mutable_features) - set(encoder.features) - set(encoder.apps)
        if unknown:
            raise ValueError(f"unknown mutable features {sorted(unknown)}")
        self.mutable = frozenset(mutable_features)
        self._weighted = self.cost_norm.weights is not None
        if self._weighted and self.cost_norm.weights.size != encoder.width:
            raise ValueError("weighted cost norm must have one weight per one-hot bit")
        self._unit = self.cost_norm(np.array([1.0, -1.0]))
        self.min_edge_cost = None if self._weighted else self._unit
        self.description = f"bucket graph ({self.cost_norm.kind.value} edge costs)"

    def key(self, x: BucketedExample) -> bytes:
        return BucketedExample(x.buckets, x.app_bits).key()

    def features(self, x: BucketedExample) -> np.ndarray:
        return self.encoder.onehot(x)

    def feature_names(self) -> list[str]:
        return self.encoder.onehot_names()

    def _cost(self, parent: BucketedExample, child: BucketedExample) -> float:
        if not self._weighted:
            return self._unit
        return self.cost_norm(self.encoder.onehot(child) - self.encoder.onehot(parent))

    def expand(self, x: BucketedExample) -> list:
        enc = self.encoder
        children = []
        for i, name in enumerate(enc.features):
            if name not in self.mutable:
                continue
            k = x.buckets[i]
            for nk in (k - 1, k + 1):
                if 0 <= nk < enc.buckets_of(name):
                    b = x.buckets[:i] + (nk,) + x.buckets[i + 1:]
                    child = BucketedExample(b, x.app_bits, None, enc)
                    children.append((child, self._cost(x, child)))
        for j, app in enumerate(enc.apps):
            if app not in self.mutable:
                continue
            bits = x.app_bits[:j] + (not x.app_bits[j],) + x.app_bits[j + 1:]
            child = BucketedExample(x.buckets, bits, None, enc)
            children.append((child, self._cost(x, child)))
        return children

    def describe(self, x: BucketedExample) -> dict:
        return self.encoder.describe(x)

    def describe_edit(self, parent: BucketedExample, child: BucketedExample, cost: float) -> dict:
        enc = self.encoder
        for i, name in enumerate(enc.features):
            if parent.buckets[i] != child.buckets[i]:
                return {"feature": name,
                        "from": enc.render_interval(name, parent.buckets[i]),
                        "to": enc.render_interval(name, child.buckets[i]),
                        "cost": cost}
        for j, app in enumerate(enc.apps):
            if parent.app_bits[j] != child.app_bits[j]:
                state = {True: "used", False: "unused"}
                return {"feature": f"app:{app}", "from": state[parent.app_bits[j]],
                        "to": state[child.app_bits[j]], "cost": cost}
        raise ValueError("parent and child are identical")


DEFAULT_UNIT_PRICES = {
    "tweets": 2.0,
    "replies": 2.0,
    "likes_per_tweet": 0.025,
    "retweets_per_tweet": 0.025,
}


@dataclass(frozen=True)
class DollarCostSpec:
    unit_prices: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_UNIT_PRICES))

    def __post_init__(self):
        for name, price in self.unit_prices.items():
            if not price > 0:
                raise ValueError(f"unit price of {name!r} must be positive")

    @property
    def mutable_features(self) -> tuple[str, ...]:
        return tuple(self.unit_prices)


class DollarGraph(TransformationGraph):
    """Increase-only bucket moves priced in dollars.

    Moving a feature up one bucket costs (lower end of the new bucket - current
    value) x unit price, and the child's value becomes that lower end, so path
    costs are lower bounds on what the changes would cost.
    """

    def __init__(self, encoder: FeatureEncoder, spec: DollarCostSpec = DollarCostSpec()):
        missing = set(spec.mutable_features) - set(encoder.features)
        if missing:
            raise ValueError(f"priced features not in the encoder: {sorted(missing)}")
        self.encoder = encoder
        self.spec = spec
        self._index = [(encoder.features.index(f), f, spec.unit_prices[f])
                       for f in encoder.features if f in spec.unit_prices]
        self.description = "dollar-cost graph (increase-only)"

    def key(self, x: BucketedExample) -> bytes:
        return x.key()

    def features(self, x: BucketedExample) -> np.ndarray:
        return self.encoder.onehot(x)

    def feature_names(self) -> list[str]:
        return self.encoder.onehot_names()

    def expand(self, x: BucketedExample) -> list:
        if x.raw is None:
            raise ValueError("the dollar graph needs raw feature values")
        children = []
        for i, name, price in self._index:
            bounds = self.encoder.boundaries[name]
            k = x.buckets[i]
            if k >= bounds.size:
                continue
            new_value = float(bounds[k])
            cost = (new_value - x.raw[i]) * price
            b = x.buckets[:i] + (k + 1,) + x.buckets[i + 1:]
            raw = x.raw[:i] + (new_value,) + x.raw[i + 1:]
            children.append((BucketedExample(b, x.app_bits, raw, self.encoder), cost))
        return children

    def describe(self, x: BucketedExample) -> dict:
        return self.encoder.describe(x)

    def describe_edit(self, parent: BucketedExample, child: BucketedExample, cost: float) -> dict:
        for i, name in enumerate(self.encoder.features):
            if parent.buckets[i] != child.buckets[i]:
                return {"feature": name, "from": parent.raw[i], "to": child.raw[i],
                        "interval": self.encoder.render_interval(name, child.buckets[i]),
                        "dollars": cost}
        raise ValueError("parent and child are identical")


@dataclass(frozen=True)
class PacketTrace:
    """Packet directions: +1 outgoing, -1 incoming."""

    packets: tuple[int, ...]

    def __post_init__(self):
        p = tuple(int(v) for v in self.packets)
        if any(v not in (OUTGOING, INCOMING) for v in p):
            raise ValueError("packet directions must be +1 or -1")
        object.__setattr__(self, "packets", p)

    def __len__(self) -> int:
        return len(self.packets)

    def key(self) -> bytes:
        return np.asarray(self.packets, dtype=np.int8).tobytes()

    def insert(self, position: int, direction: int) -> "PacketTrace":
        # skips re-validating the parent's packets
        child = object.__new__(PacketTrace)
        object.__setattr__(child, "packets",
                           self.packets[:position] + (int(direction),) + self.packets[position:])
        return child

    def __str__(self) -> str:
        return ",".join("+1" if p > 0 else "-1" for p in self.packets)


def cumul_features(x: Union[PacketTrace, Sequence[int]], n_samples: int = CUMUL_SAMPLES) -> np.ndarray:
    """``[#incoming, #outgoing]`` followed by ``n_samples`` interpolated cumulative sums.

    The cumulative sum of packet directions is sampled at equidistant
    positions over ``[1, len]`` with piecewise-linear interpolation.
    """
    packets = np.asarray(getattr(x, "packets", x), dtype=float)
    if packets.size == 0:
        raise ValueError("CUMUL features are undefined for an empty trace")
    cum = np.cumsum(packets)
    positions = np.arange(1, packets.size + 1)
    samples = np.interp(np.linspace(1, packets.size, n_samples), positions, cum)
    n_in = float(np.count_nonzero(packets < 0))
    return np.concatenate(([n_in, packets.size - n_in], samples))


def cumul_feature_names(n_samples: int = CUMUL_SAMPLES) -> list[str]:
    return ["incoming", "outgoing"] + [f"cumul_{i}" for i in range(n_samples)]


class TraceGraph(TransformationGraph):
    """Insert one dummy packet, either direction, at any position; unit cost."""

    min_edge_cost = 1.0
    description = "packet-insertion graph"

    def __init__(self, n_samples: int = CUMUL_SAMPLES):
        self.n_samples = n_samples

    def expand(self, x: PacketTrace) -> list:
        seen = set()
        children = []
        for pos in range(len(x) + 1):
            for direction in (OUTGOING, INCOMING):
                child = x.insert(pos, direction)
                k = child.key()
                if k not in seen:
                    seen.add(k)
                    children.append((child, 1.0))
        return children

    def sample_child(self, x: PacketTrace, rng: np.random.Generator) -> tuple:
        """Uniform random insertion position and direction."""
        pos = int(rng.integers(len(x) + 1))
        direction = OUTGOING if rng.random() < 0.5 else INCOMING
        return x.insert(pos, direction), 1.0

    def features(self, x: PacketTrace) -> np.ndarray:
        return cumul_features(x, self.n_samples)

    def feature_names(self) -> list[str]:
        return cumul_feature_names(self.n_samples)

    def describe(self, x: PacketTrace) -> str:
        return str(x)

    def describe_edit(self, parent: PacketTrace, child: PacketTrace, cost: float) -> dict:
        pos = next((i for i, (a, b) in enumerate(zip(parent.packets, child.packets)) if a != b),
                   len(parent))
        return {"position": pos, "direction": "+1" if child.packets[pos] > 0 else "-1",
                "cost": cost}


def path_to_edits(result: SearchResult, graph: TransformationGraph) -> list[dict]:
    """One edit description per step of a found path."""
    edits = []
    for i, (parent, child) in enumerate(zip(result.path, result.path[1:])):
        cost = result.edge_costs[i] if i < len(result.edge_costs) else math.nan
        edit = {"step": i + 1}
        edit.update(graph.describe_edit(parent, child, cost))
        edits.append(edit)
    return edits


def format_edits(edits: Sequence[Mapping]) -> list[str]:
    lines = []
    for e in edits:
        if "position" in e:
            lines.append(f"{e['step']}: insert {e['direction']} at position {e['position']}")
        elif "dollars" in e:
            lines.append(f"{e['step']}: {e['feature']} {e['from']:g} -> {e['to']:g} "
                         f"(${e['dollars']:.3f})")
        else:
            lines.append(f"{e['step']}: {e['feature']} {e['from']} -> {e['to']}")
    return lines


_GRAPH_FIELDS = {"graph", "cost_norm", "mutable_features", "unit_prices", "encoder", "n_samples"}


def graph_from_config(config: Mapping, encoder: Optional[FeatureEncoder] = None) -> TransformationGraph:
    """Build a graph from its JSON config (see README for the fields)."""
    unknown = set(config) - _GRAPH_FIELDS
    if unknown:
        raise ValueError(f"unknown graph config fields {sorted(unknown)}")
    kind = config.get("graph")
    if kind == "trace":
        return TraceGraph(int(config.get("n_samples", CUMUL_SAMPLES)))
    if kind not in ("bucket", "dollar"):
        raise ValueError(f"unknown graph kind {kind!r}")
    if encoder is None:
        raise ValueError(f"a {kind} graph needs a fitted feature encoder")
    if kind == "bucket":
        return BucketGraph(encoder, config.get("cost_norm", "l1"), config.get("mutable_features"))
    prices = dict(config.get("unit_prices") or DEFAULT_UNIT_PRICES)
    if "mutable_features" in config:
        prices = {f: prices[f] for f in config["mutable_features"]}
    return DollarGraph(encoder, DollarCostSpec(prices))


def load_graph_config(path: Union[str, Path]) -> dict:
    with open(path, encoding="utf-8") as fh:
        config = json.load(fh)
    if "encoder" in config:
        enc = Path(config["encoder"])
        if not enc.is_absolute():
            config["encoder"] = str(Path(path).parent / enc)
    return config


def read_traces(path: Union[str, Path]) -> list[PacketTrace]:
    """One trace per line, comma-separated +1/-1; blank lines are skipped."""
    traces = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                traces.append(PacketTrace(tuple(int(v) for v in line.split(","))))
            except ValueError as exc:
                raise ValueError(f"line {n}: {exc}") from None
    return traces


def write_traces(traces: Sequence[PacketTrace], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in traces:
            fh.write(",".join(str(p) for p in t.packets) + "\n")
