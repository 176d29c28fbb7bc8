"""Generalized best-first search over transformation graphs.

One engine, :func:`bf_star`, covers uniform-cost search, greedy best-first,
A*, static-weighted A*, beam search and hill climbing.  The variants differ
only in the scoring rule (:func:`make_score`) and in the capacity of the
open list (``SearchConfig.queue_capacity``).

A graph is any object with ``expand(state) -> [(child, cost), ...]``.  Nodes
are identified by :func:`node_key`, or by ``graph.key(state)`` when the graph
defines one.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import logging
import struct
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

KEY_DIGITS = 9


class Algorithm(enum.Enum):
    UCS = "ucs"
    GREEDY = "greedy"
    ASTAR = "astar"
    WEIGHTED_ASTAR = "wastar"


class Status(enum.Enum):
    FOUND = "FOUND"
    EXHAUSTED = "EXHAUSTED"
    EXPANSION_CAP = "EXPANSION_CAP"
    NO_GOAL_REACHABLE = "NO_GOAL_REACHABLE"


@dataclass(frozen=True)
class Guarantee:
    kind: str = "NONE"
    epsilon: Optional[float] = None

    def __str__(self) -> str:
        if self.kind == "EPSILON_BOUNDED":
            return f"EPSILON_BOUNDED({self.epsilon:g})"
        return self.kind


OPTIMAL = Guarantee("OPTIMAL")
NO_GUARANTEE = Guarantee("NONE")


def epsilon_bounded(epsilon: float) -> Guarantee:
    return Guarantee("EPSILON_BOUNDED", float(epsilon))


def _canonical_number(v) -> bytes:
    v = float(v)
    if v.is_integer() and abs(v) < 2 ** 53:
        return b"i%d" % int(v)
    return b"f" + repr(round(v, KEY_DIGITS)).encode()


def node_key(state) -> Hashable:
    """Canonical byte encoding of a node.

    Objects with a ``key()`` method encode themselves.  Numbers and nested
    sequences of numbers are rounded to ``KEY_DIGITS`` decimals first so that
    equal feature values always map to equal keys.
    """
    key = getattr(state, "key", None)
    if callable(key):
        return key()
    if isinstance(state, (str, bytes)):
        return state.encode() if isinstance(state, str) else state
    if isinstance(state, (bool, int, float, np.integer, np.floating)):
        return _canonical_number(state)
    if isinstance(state, np.ndarray):
        if state.dtype.kind in "iub":
            return state.dtype.str.encode() + state.tobytes()
        return b",".join(_canonical_number(v) for v in state.ravel())
    if isinstance(state, (tuple, list)):
        parts = [node_key(s) for s in state]
        return b"(" + b"".join(struct.pack("<I", len(p)) + p for p in parts) + b")"
    raise TypeError(f"cannot derive a node key for {type(state).__name__}")


@dataclass(frozen=True)
class SearchConfig:
    """Search variant.

    ``queue_capacity`` of 1 gives hill climbing, ``B`` gives beam search and
    ``None`` keeps the open list unbounded.
    """

    algorithm: Algorithm = Algorithm.ASTAR
    epsilon: float = 1.0
    queue_capacity: Optional[int] = None
    max_expansions: Optional[int] = None

    def __post_init__(self):
        if self.epsilon < 1:
            raise ValueError(f"epsilon must be >= 1, got {self.epsilon}")
        if self.queue_capacity is not None and self.queue_capacity < 1:
            raise ValueError("queue capacity must be a positive integer")
        if self.max_expansions is not None and self.max_expansions < 1:
            raise ValueError("max_expansions must be a positive integer")


@dataclass(frozen=True)
class ScoreRule:
    """Scores a child reached with accumulated path cost ``g``."""

    algorithm: Algorithm
    epsilon: float = 1.0
    heuristic: Optional[Callable[[Any], float]] = None

    @property
    def suboptimality(self) -> Optional[float]:
        """Cost bound factor implied by the heuristic, ``None`` if unbounded."""
        if self.algorithm is Algorithm.UCS:
            return 1.0
        sub = getattr(self.heuristic, "suboptimality", None)
        if sub is None or self.algorithm is Algorithm.GREEDY:
            return None
        return sub * self.epsilon

    def __call__(self, g: float, child) -> float:
        alg = self.algorithm
        if alg is Algorithm.UCS:
            return g
        h = self.heuristic(child)
        if alg is Algorithm.GREEDY:
            return h
        if alg is Algorithm.ASTAR:
            return g + h
        return g + self.epsilon * h


def make_score(algorithm: Algorithm, epsilon: float = 1.0,
               heuristic: Optional[Callable[[Any], float]] = None) -> ScoreRule:
    """Build the scoring rule of a best-first variant.

    ``g`` is the accumulated cost of the best known path to the child, so
    UCS scores ``g``, greedy ``h``, A* ``g + h`` and weighted A* ``g + eps*h``.
    """
    algorithm = Algorithm(algorithm)
    if epsilon < 1:
        raise ValueError(f"epsilon must be >= 1, got {epsilon}")
    if algorithm is not Algorithm.WEIGHTED_ASTAR and epsilon != 1:
        raise ValueError(f"epsilon only applies to weighted A*, not {algorithm.value}")
    if algorithm is not Algorithm.UCS and heuristic is None:
        raise ValueError(f"{algorithm.value} needs a heuristic")
    return ScoreRule(algorithm, float(epsilon), heuristic)


@dataclass
class SearchResult:
    status: Status
    adversarial: Any = None
    path: list = field(default_factory=list)
    path_cost: float = 0.0
    expansions: int = 0
    max_open_size: int = 0
    wall_time: float = 0.0
    guarantee: Guarantee = NO_GUARANTEE
    edge_costs: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.status is Status.FOUND

    @property
    def num_changes(self) -> int:
        return max(len(self.path) - 1, 0)


class _Node:
    # Immutable search-tree node; a better path creates a new _Node, so
    # existing parent chains never change underneath their descendants.
    __slots__ = ("state", "g", "parent", "cost")

    def __init__(self, state, g, parent, cost):
        self.state = state
        self.g = g
        self.parent = parent
        self.cost = cost

    def unwind(self) -> tuple[list, list]:
        states, costs = [], []
        node = self
        while node is not None:
            states.append(node.state)
            if node.parent is not None:
                costs.append(node.cost)
            node = node.parent
        return states[::-1], costs[::-1]


class _Record:
    __slots__ = ("node", "score", "tick", "open")

    def __init__(self, node, score, tick):
        self.node = node
        self.score = score
        self.tick = tick
        self.open = True


def guarantee_for(score_fn: ScoreRule, config: SearchConfig) -> Guarantee:
    if config.queue_capacity is not None:
        return NO_GUARANTEE
    bound = score_fn.suboptimality
    if bound is None:
        return NO_GUARANTEE
    return OPTIMAL if bound == 1 else epsilon_bounded(bound)


def bf_star(graph, score_fn: ScoreRule, goal: Callable[[Any], bool], start,
            config: SearchConfig = SearchConfig(),
            on_pop: Optional[Callable[[Any, float, float], None]] = None) -> SearchResult:
    """Run generalized best-first search from ``start``.

    The goal test happens when a node is popped.  A child already in OPEN or
    CLOSED is replaced when its new score is lower, and a replaced CLOSED
    node goes back to OPEN.  With a bounded ``queue_capacity`` only the best
    entries survive each expansion; the rest are dropped for good.  Ties are
    broken first-in first-out.

    ``on_pop(state, g, score)`` is called for every popped node.
    """
    if config.algorithm is not score_fn.algorithm or config.epsilon != score_fn.epsilon:
        raise ValueError("search config does not match the scoring rule")
    key_of = getattr(graph, "key", node_key)
    capacity = config.queue_capacity
    cap = config.max_expansions
    t0 = time.perf_counter()

    ticks = itertools.count()
    root = _Node(start, 0.0, None, 0.0)
    start_key = key_of(start)
    records = {start_key: _Record(root, score_fn(0.0, start), next(ticks))}
    open_keys = {start_key}
    heap = [(records[start_key].score, records[start_key].tick, start_key)]
    expansions = 0
    max_open = 1

    def finish(status, node=None):
        result = SearchResult(status, expansions=expansions, max_open_size=max_open)
        if node is not None:
            result.path, result.edge_costs = node.unwind()
            result.adversarial = node.state
            result.path_cost = node.g
            result.guarantee = guarantee_for(score_fn, config)
        result.wall_time = time.perf_counter() - t0
        return result

    while open_keys:
        score, tick, key = heapq.heappop(heap)
        rec = records.get(key)
        if rec is None or not rec.open or rec.tick != tick:
            continue
        rec.open = False
        open_keys.discard(key)
        node = rec.node
        if on_pop is not None:
            on_pop(node.state, node.g, score)
        if goal(node.state):
            return finish(Status.FOUND, node)
        if cap is not None and expansions >= cap:
            return finish(Status.EXPANSION_CAP)
        expansions += 1

        for child, cost in graph.expand(node.state):
            if not cost > 0:
                raise ValueError(f"edge costs must be positive, got {cost}")
            ckey = key_of(child)
            g = node.g + cost
            s = score_fn(g, child)
            crec = records.get(ckey)
            if crec is None:
                crec = records[ckey] = _Record(_Node(child, g, node, cost), s, next(ticks))
            elif s < crec.score:
                crec.node = _Node(child, g, node, cost)
                crec.score = s
                crec.tick = next(ticks)
                crec.open = True
            else:
                continue
            open_keys.add(ckey)
            heapq.heappush(heap, (s, crec.tick, ckey))

        if capacity is not None and len(open_keys) > capacity:
            ranked = sorted((records[k].score, records[k].tick, k) for k in open_keys)
            for _, _, k in ranked[capacity:]:
                del records[k]
            heap = ranked[:capacity]
            open_keys = {k for _, _, k in heap}
        max_open = max(max_open, len(open_keys))

    if capacity is None:
        return finish(Status.NO_GOAL_REACHABLE)
    return finish(Status.EXHAUSTED)


def search(graph, goal: Callable[[Any], bool], start, config: SearchConfig = SearchConfig(),
           heuristic: Optional[Callable[[Any], float]] = None, **kwargs) -> SearchResult:
    """Convenience wrapper: build the score rule from ``config`` and run :func:`bf_star`."""
    score_fn = make_score(config.algorithm, config.epsilon, heuristic)
    return bf_star(graph, score_fn, goal, start, config, **kwargs)


def random_walk(graph, goal: Callable[[Any], bool], start, rng: np.random.Generator,
                max_steps: int = 5000) -> SearchResult:
    """Follow random edges until a goal is hit (no guarantees).

    Uses ``graph.sample_child(state, rng)`` when the graph provides it instead
    of expanding every child.
    """
    t0 = time.perf_counter()
    sampler = getattr(graph, "sample_child", None)
    node = _Node(start, 0.0, None, 0.0)
    steps = 0
    while not goal(node.state):
        if steps >= max_steps:
            return SearchResult(Status.EXPANSION_CAP, expansions=steps, max_open_size=1,
                                wall_time=time.perf_counter() - t0)
        if sampler is not None:
            child, cost = sampler(node.state, rng)
        else:
            children = graph.expand(node.state)
            if not children:
                return SearchResult(Status.EXHAUSTED, expansions=steps, max_open_size=1,
                                    wall_time=time.perf_counter() - t0)
            child, cost = children[int(rng.integers(len(children)))]
        node = _Node(child, node.g + cost, node, cost)
        steps += 1
    path, costs = node.unwind()
    return SearchResult(Status.FOUND, node.state, path, node.g, steps, 1,
                        time.perf_counter() - t0, NO_GUARANTEE, costs)


def exhaustive_mac_path(graph, goal: Callable[[Any], bool], start,
                        depth_cap: int) -> tuple[Optional[float], list]:
    """Brute-force minimal goal cost within ``depth_cap`` hops, with a witness path.

    Layered relaxation: round ``k`` holds the cheapest cost of every node using
    at most ``k`` edges.  Nodes whose cost already matches or exceeds the best
    goal found are not expanded further (edge costs are positive).
    """
    if depth_cap < 0:
        raise ValueError("depth cap must be non-negative")
    key_of = getattr(graph, "key", node_key)
    if goal(start):
        return 0.0, [start]
    best: dict = {key_of(start): _Node(start, 0.0, None, 0.0)}
    is_goal: dict = {}
    incumbent: Optional[_Node] = None
    frontier = [key_of(start)]
    for _ in range(depth_cap):
        improved: dict = {}
        for key in frontier:
            node = best[key]
            if incumbent is not None and node.g >= incumbent.g:
                continue
            for child, cost in graph.expand(node.state):
                ckey = key_of(child)
                g = node.g + cost
                old = best.get(ckey)
                if old is not None and old.g <= g:
                    continue
                new = _Node(child, g, node, cost)
                best[ckey] = new
                if ckey not in is_goal:
                    is_goal[ckey] = bool(goal(child))
                if is_goal[ckey]:
                    if incumbent is None or g < incumbent.g:
                        incumbent = new
                else:
                    improved[ckey] = None
        frontier = list(improved)
        if not frontier:
            break
    if incumbent is None:
        return None, []
    return incumbent.g, incumbent.unwind()[0]


def exhaustive_mac(graph, goal: Callable[[Any], bool], start, depth_cap: int) -> Optional[float]:
    """Minimal cost of reaching any goal within ``depth_cap`` hops, or ``None``."""
    return exhaustive_mac_path(graph, goal, start, depth_cap)[0]


def path_cost(graph, path: Sequence) -> float:
    """Recompute the cost of ``path`` by re-expanding each step."""
    key_of = getattr(graph, "key", node_key)
    total = 0.0
    for parent, child in zip(path, path[1:]):
        target = key_of(child)
        for c, cost in graph.expand(parent):
            if key_of(c) == target:
                total += cost
                break
        else:
            raise ValueError("path contains a step that is not an edge of the graph")
    return total


class ExplicitGraph:
    """Graph given as an adjacency mapping ``{node: [(child, cost), ...]}``."""

    def __init__(self, edges: dict, min_edge_cost: Optional[float] = None,
                 description: str = "explicit graph"):
        self.edges = {k: list(v) for k, v in edges.items()}
        self.min_edge_cost = min_edge_cost
        self.description = description

    def expand(self, state) -> list:
        return list(self.edges.get(state, ()))

    def key(self, state):
        return state


def random_dag(rng: np.random.Generator, n_nodes: int, out_degree: int = 3,
               integer_costs: bool = True, max_cost: int = 10) -> ExplicitGraph:
    """Random DAG on ``0..n_nodes-1``; edges only go from lower to higher ids."""
    edges = {}
    for u in range(n_nodes - 1):
        k = min(out_degree, n_nodes - 1 - u)
        targets = rng.choice(np.arange(u + 1, n_nodes), size=k, replace=False)
        if integer_costs:
            costs = rng.integers(1, max_cost + 1, size=k).astype(float)
        else:
            costs = rng.uniform(0.1, max_cost, size=k)
        edges[u] = [(int(v), float(c)) for v, c in zip(targets, costs)]
    return ExplicitGraph(edges, description=f"random DAG ({n_nodes} nodes)")

