"""Empirical checks of heuristic admissibility and consistency on small graphs."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional, Sequence

import numpy as np

from .search import exhaustive_mac_path

TOLERANCE = 1e-9


@dataclass
class AuditReport:
    kind: str
    violations: list = field(default_factory=list)
    inconclusive: int = 0
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"kind": self.kind, "violations": self.violations,
                "inconclusive": self.inconclusive, "checked": self.checked}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=str)


def _describe(graph, x):
    describe = getattr(graph, "describe", None)
    return describe(x) if describe is not None else str(x)


def audit_admissibility(h: Callable[[Any], float], graph, goal: Callable[[Any], bool],
                        samples: Iterable, depth_cap: int, tol: float = TOLERANCE) -> AuditReport:
    """Check ``h(x) <= MAC(x)`` against depth-capped exhaustive search.

    Samples with no goal within ``depth_cap`` hops are counted as inconclusive.
    """
    report = AuditReport("admissibility")
    for x in samples:
        mac, witness = exhaustive_mac_path(graph, goal, x, depth_cap)
        if mac is None:
            report.inconclusive += 1
            continue
        report.checked += 1
        value = h(x)
        if value > mac + tol * max(1.0, abs(mac)):
            report.violations.append({
                "node": _describe(graph, x), "h": value, "mac": mac,
                "witness_path": [_describe(graph, w) for w in witness]})
    return report


def audit_consistency(h: Callable[[Any], float], graph, sample_edges: Iterable,
                      tol: float = TOLERANCE) -> AuditReport:
    """Check ``h(u) <= cost(u, v) + h(v)`` on ``(u, v, cost)`` triples."""
    report = AuditReport("consistency")
    for u, v, cost in sample_edges:
        report.checked += 1
        hu, hv = h(u), h(v)
        if hu > cost + hv + tol * max(1.0, abs(hu)):
            report.violations.append({
                "node": _describe(graph, u), "child": _describe(graph, v),
                "h": hu, "h_child": hv, "cost": cost})
    return report


def sample_edges(graph, starts: Sequence, n_edges: int, rng: np.random.Generator,
                 walk_length: int = 10) -> list:
    """Collect ``n_edges`` edges from random walks started at ``starts``."""
    if not starts:
        return []
    edges = []
    while len(edges) < n_edges:
        x = starts[int(rng.integers(len(starts)))]
        for _ in range(walk_length):
            children = graph.expand(x)
            if not children:
                break
            child, cost = children[int(rng.integers(len(children)))]
            edges.append((x, child, cost))
            x = child
            if len(edges) >= n_edges:
                break
    return edges


def sample_nodes(graph, starts: Sequence, n_nodes: int, rng: np.random.Generator,
                 max_depth: int = 4, key: Optional[Callable] = None) -> list:
    """Distinct nodes reached by short random walks from ``starts``."""
    key = key or getattr(graph, "key")
    seen, nodes = set(), []
    attempts = 0
    while len(nodes) < n_nodes and attempts < 50 * n_nodes and starts:
        attempts += 1
        x = starts[int(rng.integers(len(starts)))]
        for _ in range(int(rng.integers(0, max_depth + 1))):
            children = graph.expand(x)
            if not children:
                break
            x = children[int(rng.integers(len(children)))][0]
        k = key(x)
        if k not in seen:
            seen.add(k)
            nodes.append(x)
    return nodes
