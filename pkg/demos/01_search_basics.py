"""Best-first search on a four-node graph.

Walks through the scoring rules on the smallest graph where they disagree:
two routes from s to g, one cheap first step that leads to an expensive
second step, and the reverse.
"""
# %%
from advsearch import Algorithm, SearchConfig, search
from advsearch.heuristics import Heuristic
from advsearch.search import ExplicitGraph, exhaustive_mac

graph = ExplicitGraph({
    "s": [("a", 1.0), ("b", 5.0)],
    "a": [("g", 5.0)],
    "b": [("g", 0.5)],
})

def is_goal(x):
    return x == "g"

# %% Uniform-cost search pops nodes in order of path cost, so it finds s,b,g
r = search(graph, is_goal, "s", SearchConfig(Algorithm.UCS))
print("UCS      ", r.path, r.path_cost, r.guarantee)

# %% Greedy search only looks at h.  A misleading h sends it through a.
misleading = Heuristic(lambda x: {"a": 0.1, "b": 10.0}.get(x, 0.0))
r = search(graph, is_goal, "s", SearchConfig(Algorithm.GREEDY), misleading)
print("greedy   ", r.path, r.path_cost, r.guarantee)

# %% A* is only as good as its heuristic: h(b) = 10 overestimates the true
# remaining 0.5, so A* also takes the a route, and the label says NONE
r = search(graph, is_goal, "s", SearchConfig(Algorithm.ASTAR), misleading)
print("A*       ", r.path, r.path_cost, r.guarantee)

# %% An admissible h (never above the true remaining cost) earns the OPTIMAL label,
# and weighting it by eps turns the label into a bound
exact = Heuristic(lambda x: {"s": 5.5, "a": 5.0, "b": 0.5}.get(x, 0.0), suboptimality=1.0)
for eps in (1, 3):
    cfg = SearchConfig(Algorithm.WEIGHTED_ASTAR, eps)
    r = search(graph, is_goal, "s", cfg, exact)
    print(f"eps={eps}    ", r.path, r.path_cost, r.guarantee)

# %% Hill climbing keeps one node in OPEN; beam search keeps B
r = search(graph, is_goal, "s", SearchConfig(Algorithm.GREEDY, queue_capacity=1), misleading)
print("hill     ", r.path, r.path_cost, r.status.value, r.guarantee)

# %% The brute-force oracle agrees with UCS
print("oracle   ", exhaustive_mac(graph, is_goal, "s", depth_cap=3))
