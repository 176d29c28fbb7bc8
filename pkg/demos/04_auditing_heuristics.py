"""Checking a heuristic against brute force.

An admissible heuristic never overestimates the cheapest remaining cost.  On
small bucket graphs the exact cost is computable, so the claim can be
checked node by node.
"""
# %%
import numpy as np

from advsearch import GoalPredicate
from advsearch.audit import audit_admissibility, audit_consistency, sample_edges, sample_nodes
from advsearch.fixtures import random_bucket_instance
from advsearch.graphs import BucketGraph
from advsearch.heuristics import L1, L2, LINF, Heuristic, confidence_heuristic, robustness_heuristic

rng = np.random.default_rng(2)
encoder, model, rows = random_bucket_instance(rng, n_features=4, n_buckets=5, n_apps=1)
goal = GoalPredicate(0, 0.5)
starts = [encoder.encode(r) for r in rows]

# %% Matching the edge-cost norm with its dual keeps the bound exact
for norm in (L1, L2, LINF):
    graph = BucketGraph(encoder, norm)

    def is_goal(x, graph=graph):
        return goal.holds(model.discriminant(graph.features(x)))

    h = robustness_heuristic(model, goal, norm, graph.features)
    nodes = sample_nodes(graph, starts, 60, rng)
    rep = audit_admissibility(h, graph, is_goal, nodes, depth_cap=6)
    print(norm.kind.value, "violations", len(rep.violations), "of", rep.checked)

# %% Inflating the heuristic tenfold breaks it, and the audit shows a witness path
graph = BucketGraph(encoder, L1)
h = robustness_heuristic(model, goal, L1, graph.features)
inflated = Heuristic(lambda x: 10 * h(x), suboptimality=1.0)
rep = audit_admissibility(inflated, graph, lambda x: goal.holds(model.discriminant(graph.features(x))),
                          sample_nodes(graph, starts, 60, rng), depth_cap=6)
v = rep.violations[0]
print(f"{len(rep.violations)} violations; e.g. h={v['h']:.2f} > MAC={v['mac']:.0f} "
      f"over {len(v['witness_path']) - 1} steps")

# %% The confidence heuristic is not a cost estimate at all
edges = sample_edges(graph, starts, 2000, rng)
rep = audit_consistency(confidence_heuristic(model, 0, graph.features), graph, edges)
print("confidence heuristic: inconsistent on", len(rep.violations), "of", rep.checked, "edges")
