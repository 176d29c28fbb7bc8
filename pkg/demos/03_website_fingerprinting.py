"""Padding packet traces against a CUMUL classifier.

Each step inserts one dummy packet anywhere in the trace.  The classifier
sees CUMUL features (packet counts plus 100 samples of the cumulative sum),
so an insertion does not move the feature vector by any fixed norm and no
admissible heuristic is available.  Hill climbing on the classifier's own
confidence is compared with a random walk.
"""
# %%
import numpy as np

from advsearch import Algorithm, SearchConfig, search
from advsearch.fixtures import trace_corpus, trace_model
from advsearch.graphs import TraceGraph
from advsearch.heuristics import confidence_heuristic
from advsearch.search import random_walk

rng = np.random.default_rng(1)
monitored, other = trace_corpus(rng, 200)
model = trace_model(monitored, other)
graph = TraceGraph()

def f(t):
    return model.discriminant(graph.features(t))

acc = np.mean([f(t) > 0 for t in monitored] + [f(t) <= 0 for t in other])
print(f"training accuracy {acc:.3f}")

# %%
targets = [t for t in trace_corpus(rng, 60)[0] if f(t) > 0][:20]
h = confidence_heuristic(model, 0, graph.features)
config = SearchConfig(Algorithm.GREEDY, queue_capacity=1, max_expansions=5000)

hill, walk = [], []
for t in targets:
    r = search(graph, lambda v: f(v) <= 0, t, config, h)
    hill.append(r.path_cost if r.found else np.nan)
    w = random_walk(graph, lambda v: f(v) <= 0, t, rng, 5000)
    walk.append(w.path_cost if w.found else np.nan)
    print(f"len {len(t):3d}  hill climbing +{hill[-1]:.0f}  random walk +{walk[-1]:.0f}")

print(f"mean added packets: hill climbing {np.nanmean(hill):.1f}, random {np.nanmean(walk):.1f}")
