"""Evading a bucketized bot detector with A*.

A synthetic account dataset is cut into 20 quantile buckets per feature and
one-hot encoded; a linear detector is fitted on it.  Each search step moves
one feature by one bucket (cost 2 under L1) or flips one app, and the
dual-norm distance to the decision boundary guides A*.
"""
# %%
import numpy as np

from advsearch import Algorithm, GoalPredicate, SearchConfig, search
from advsearch.fixtures import BOT_APPS, BOT_FEATURES, bot_model, bot_rows
from advsearch.features import fit_encoder
from advsearch.graphs import BucketGraph, DollarGraph, format_edits, path_to_edits
from advsearch.heuristics import L1, robustness_heuristic, zero_heuristic

rng = np.random.default_rng(0)
rows = bot_rows(rng, 440)
train, test = rows[:400], rows[400:]
encoder = fit_encoder(train, BOT_FEATURES, 20, apps=BOT_APPS)
model = bot_model(encoder, train)
graph = BucketGraph(encoder, L1)
print(encoder.width, "one-hot bits,", len(graph.expand(encoder.encode(test[0]))), "children per node")

# %% Accounts the detector flags as bots
def score(x):
    return model.discriminant(graph.features(x))

bots = [(r["id"], encoder.encode(r)) for r in test if score(encoder.encode(r)) > 0]
print(len(bots), "of", len(test), "test accounts are flagged")

# %% Basic goal (flip the decision) vs high confidence (not bot with 75%)
for level in (0.5, 0.75):
    goal = GoalPredicate(0, level)
    h = robustness_heuristic(model, goal, L1, graph.features)

    def is_goal(x):
        return goal.holds(score(x))

    changes = []
    for ex_id, x in bots:
        r = search(graph, is_goal, x, SearchConfig(Algorithm.ASTAR), h)
        changes.append(r.path_cost / 2)
    print(f"l={level}: mean {np.mean(changes):.2f} changes, max {max(changes):.0f}")

# %% What the cheapest evasion of the first account looks like
goal = GoalPredicate(0, 0.5)
h = robustness_heuristic(model, goal, L1, graph.features)
ex_id, x = bots[0]
r = search(graph, lambda v: goal.holds(score(v)), x, SearchConfig(Algorithm.ASTAR), h)
print(ex_id, r.status.value, r.guarantee)
for line in format_edits(path_to_edits(r, graph)):
    print("  ", line)

# %% eps-weighted A* trades the optimality label for fewer expansions; the
# hardest high-confidence account shows the difference best
goal = GoalPredicate(0, 0.75)
h = robustness_heuristic(model, goal, L1, graph.features)

def is_goal(v):
    return goal.holds(score(v))

ex_id, x = max(bots, key=lambda b: score(b[1]))
for eps in (1, 2, 5, 10):
    res = search(graph, is_goal, x, SearchConfig(Algorithm.WEIGHTED_ASTAR, eps), h)
    print(f"eps={eps:<3} cost {res.path_cost:.0f}  expansions {res.expansions:<5} {res.guarantee}")

# %% Pricing the basic attack in dollars: only four features can be bought,
# and only upwards, so some accounts cannot be flipped at all
goal = GoalPredicate(0, 0.5)
dollars = DollarGraph(encoder)
for ex_id, x in bots[:5]:
    res = search(dollars, lambda v: goal.holds(score(v)), x, SearchConfig(Algorithm.UCS),
                 zero_heuristic())
    cost = f"${res.path_cost:.2f}" if res.found else "-"
    print(ex_id, res.status.value, cost)
