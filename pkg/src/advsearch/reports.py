"""Per-example attack records and their JSON Lines serialization."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Optional

from .classifiers import GoalPredicate, Model, sigmoid
from .graphs import TransformationGraph, path_to_edits
from .search import SearchResult, Status, path_cost


@dataclass
class AttackRecord:
    example_id: str
    initial_confidence: float
    status: str
    path_cost: Optional[float]
    num_changes: Optional[int]
    expansions: int
    max_open_size: int
    runtime_ms: Optional[float]
    guarantee: str
    edits: list = field(default_factory=list)
    final_confidence: Optional[float] = None
    error: Optional[str] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, allow_nan=False)


def attack_record(example_id: str, start, result: SearchResult, graph: TransformationGraph,
                  model: Model, goal: GoalPredicate, timing: bool = False) -> AttackRecord:
    """Summarize a search; a FOUND result is re-checked against the goal."""
    f0 = model.discriminant(graph.features(start))
    found = result.status is Status.FOUND
    final = None
    if found:
        f1 = model.discriminant(graph.features(result.adversarial))
        if not goal.holds(f1):
            raise AssertionError(f"{example_id}: search returned a node that misses the goal")
        final = sigmoid(f1)
    return AttackRecord(
        example_id=example_id,
        initial_confidence=sigmoid(f0),
        status=result.status.value,
        path_cost=result.path_cost if found else None,
        num_changes=result.num_changes if found else None,
        expansions=result.expansions,
        max_open_size=result.max_open_size,
        runtime_ms=round(result.wall_time * 1000.0, 3) if timing else None,
        guarantee=str(result.guarantee),
        edits=path_to_edits(result, graph) if found else [],
        final_confidence=final,
    )


def failed_record(example_id: str, start, graph: TransformationGraph, model: Model,
                  message: str) -> AttackRecord:
    return AttackRecord(example_id, sigmoid(model.discriminant(graph.features(start))), "ERROR",
                        None, None, 0, 0, None, "NONE", error=message)


def replay_ok(graph, result: SearchResult, goal_fn: Callable[[Any], bool],
              rel_tol: float = 1e-12) -> bool:
    """Replaying the path reproduces its cost and ends in a goal node."""
    if not result.found:
        return True
    cost = path_cost(graph, result.path)
    return math.isclose(cost, result.path_cost, rel_tol=rel_tol, abs_tol=1e-12) \
        and bool(goal_fn(result.path[-1]))


def format_table(rows: list[dict], columns: list[str]) -> str:
    """Plain fixed-width table."""
    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.4g}"
        return str(v)

    body = [[cell(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) if body else len(c)
              for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)
