"""Command-line entry point: ``advsearch {attack,compare,audit,encode}``.

Exit codes: 0 on success (whether or not adversarial examples were found),
1 when an audit finds a violated admissibility claim, 2 on invalid input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .audit import audit_admissibility, audit_consistency, sample_edges, sample_nodes
from .classifiers import DecisionRule, GoalPredicate, LinearModel, ModelError, load_model
from .features import CsvError, EncodingError, FeatureEncoder, fit_encoder, infer_schema, load_csv
from .graphs import (DollarGraph, TraceGraph, graph_from_config, load_graph_config,
                     read_traces)
from .heuristics import (Heuristic, confidence_heuristic, random_heuristic, robustness_heuristic,
                         zero_heuristic)
from .reports import attack_record, failed_record, format_table
from .search import Algorithm, SearchConfig, Status, random_walk, search

logger = logging.getLogger("advsearch")

ALGORITHMS = ("ucs", "astar", "wastar", "greedy", "hillclimb", "beam")
HEURISTICS = ("auto", "linear", "taylor", "confidence", "zero")
DEFAULT_MAX_ITERATIONS = 5000


class ConfigError(Exception):
    pass


@dataclass
class Setup:
    graph: object
    model: object
    goal: GoalPredicate
    examples: list
    heuristic: Heuristic

    def goal_fn(self, x) -> bool:
        return self.goal.holds(self.model.discriminant(self.graph.features(x)))


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--data", required=True, help="CSV of examples, or a trace file")
    p.add_argument("--graph", required=True, help="graph config JSON")
    p.add_argument("--encoder", help="fitted encoder JSON (overrides the graph config)")
    p.add_argument("--algorithm", choices=ALGORITHMS, default="astar")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--beam-width", type=int, default=10)
    p.add_argument("--confidence", type=float, default=0.5, help="goal confidence level l")
    p.add_argument("--target-class", type=int, choices=(0, 1), default=0)
    p.add_argument("--max-expansions", type=int)
    p.add_argument("--max-iterations", type=int, help="alias of --max-expansions")
    p.add_argument("--norm", choices=("l1", "l2", "linf"),
                   help="bucket-graph edge cost and heuristic norm (default: graph config)")
    p.add_argument("--heuristic", choices=HEURISTICS, default="auto")
    p.add_argument("--heuristic-scale", type=float, default=1.0,
                   help="multiply the heuristic but keep its admissibility claim (audit testing)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, help="attack at most this many examples")
    p.add_argument("--timing", action="store_true",
                   help="record wall-clock runtime (makes reports non-reproducible)")
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="advsearch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("attack", help="find adversarial examples")
    _common(p)

    p = sub.add_parser("compare", help="compare search algorithms on the same inputs")
    _common(p)
    p.add_argument("--algorithms",
                   help="comma list, e.g. ucs,astar,wastar:2,hillclimb,beam:5 "
                        "(default depends on the graph)")
    p.add_argument("--random-baseline", action="store_true",
                   help="add the seeded random-search baseline")

    p = sub.add_parser("audit", help="check heuristic admissibility and consistency")
    _common(p)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--depth-cap", type=int, default=6)
    p.add_argument("--edges", type=int, default=1000)

    p = sub.add_parser("encode", help="fit or apply a feature encoder")
    esub = p.add_subparsers(dest="encode_command", required=True)
    f = esub.add_parser("fit")
    f.add_argument("--data", required=True)
    f.add_argument("--buckets", type=int, default=20)
    f.add_argument("--app-column", default="apps")
    f.add_argument("--id-column", default="id")
    f.add_argument("--exclude", default="", help="comma list of columns to ignore (e.g. labels)")
    f.add_argument("--out", required=True)
    a = esub.add_parser("apply")
    a.add_argument("--encoder", required=True)
    a.add_argument("--data", required=True)
    a.add_argument("--id-column", default="id")
    a.add_argument("--out")
    return parser


@contextmanager
def _output(path: Optional[str]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _load_setup(args) -> Setup:
    try:
        config = load_graph_config(args.graph)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read graph config: {exc}") from None
    if args.norm is not None and config.get("graph") == "bucket":
        config["cost_norm"] = args.norm
    encoder = None
    enc_path = args.encoder or config.pop("encoder", None)
    config.pop("encoder", None)
    if config.get("graph") in ("bucket", "dollar"):
        if enc_path is None:
            raise ConfigError("bucket and dollar graphs need --encoder or an 'encoder' field")
        encoder = FeatureEncoder.load(enc_path)
    graph = graph_from_config(config, encoder)
    model = load_model(args.model, graph.feature_names())
    goal = GoalPredicate(args.target_class, args.confidence)

    if isinstance(graph, TraceGraph):
        examples = [(f"trace{i}", t) for i, t in enumerate(read_traces(args.data))]
    else:
        schema = infer_schema(args.data, encoder.app_column, "id")
        missing = set(encoder.features) - set(schema.numeric)
        if missing:
            raise ConfigError(f"data is missing encoder features {sorted(missing)}")
        rows = load_csv(args.data, schema)
        examples = [(str(r.get("id", f"row{i}")), encoder.encode(r)) for i, r in enumerate(rows)]

    heuristic = _heuristic(args, graph, model, goal)
    setup = Setup(graph, model, goal, [], heuristic)
    rule = DecisionRule(model.confidence_threshold)
    source = 1 - args.target_class
    for ex_id, x in examples:
        if rule.classify(model.discriminant(graph.features(x))) == source:
            setup.examples.append((ex_id, x))
    if args.limit is not None:
        setup.examples = setup.examples[:args.limit]
    logger.info("%d of %d examples are in the source class", len(setup.examples), len(examples))
    return setup


def _heuristic(args, graph, model, goal) -> Heuristic:
    kind = args.heuristic
    norm = getattr(graph, "cost_norm", None) or "l1"
    if kind == "auto":
        if isinstance(graph, TraceGraph):
            kind = "confidence"
        elif isinstance(graph, DollarGraph):
            kind = "zero"
        else:
            kind = "linear" if isinstance(model, LinearModel) else "taylor"
    if kind == "zero":
        h = zero_heuristic()
    elif kind == "confidence":
        h = confidence_heuristic(model, args.target_class, graph.features)
    else:
        if isinstance(graph, DollarGraph):
            raise ConfigError("dollar costs are not a norm; use --heuristic zero")
        if kind == "linear" and not isinstance(model, LinearModel):
            raise ConfigError("the linear heuristic needs a linear model")
        h = robustness_heuristic(model, goal, norm, graph.features, method=kind)
    if args.heuristic_scale != 1.0:
        scale = args.heuristic_scale
        h = Heuristic(lambda x, base=h: scale * base(x), h.suboptimality,
                      f"{scale:g} x ({h.note})")
    return h


def _config(name: str, args, graph) -> SearchConfig:
    """Map a CLI algorithm name (optionally ``name:param``) to a search config."""
    name, _, param = name.partition(":")
    cap = args.max_expansions or args.max_iterations
    # hill climbing and beam search score like greedy best-first on traces
    # and like A* elsewhere
    bounded = Algorithm.GREEDY if isinstance(graph, TraceGraph) else Algorithm.ASTAR
    if name == "ucs":
        return SearchConfig(Algorithm.UCS, max_expansions=cap)
    if name == "astar":
        return SearchConfig(Algorithm.ASTAR, max_expansions=cap)
    if name == "wastar":
        eps = float(param) if param else args.epsilon
        return SearchConfig(Algorithm.WEIGHTED_ASTAR, eps, max_expansions=cap)
    if name == "greedy":
        return SearchConfig(Algorithm.GREEDY, max_expansions=cap)
    if name == "hillclimb":
        return SearchConfig(bounded, queue_capacity=1,
                            max_expansions=cap or DEFAULT_MAX_ITERATIONS)
    if name == "beam":
        width = int(param) if param else args.beam_width
        return SearchConfig(bounded, queue_capacity=width, max_expansions=cap)
    raise ConfigError(f"unknown algorithm {name!r}")


def cmd_attack(args) -> int:
    setup = _load_setup(args)
    config = _config(args.algorithm, args, setup.graph)
    heuristic = None if config.algorithm is Algorithm.UCS else setup.heuristic
    with _output(args.out) as out:
        for ex_id, x in setup.examples:
            try:
                result = search(setup.graph, setup.goal_fn, x, config, heuristic)
                record = attack_record(ex_id, x, result, setup.graph, setup.model, setup.goal,
                                       timing=args.timing)
            except (ValueError, ArithmeticError) as exc:
                logger.warning("%s: search failed: %s", ex_id, exc)
                record = failed_record(ex_id, x, setup.graph, setup.model, str(exc))
            out.write(record.to_json() + "\n")
    return 0


def _default_algorithms(graph) -> list[str]:
    if isinstance(graph, TraceGraph):
        return ["hillclimb"]
    return ["ucs", "astar", "wastar:2", "wastar:3", "wastar:5", "wastar:10", "hillclimb"]


def cmd_compare(args) -> int:
    setup = _load_setup(args)
    names = args.algorithms.split(",") if args.algorithms else _default_algorithms(setup.graph)
    configs = [(n, _config(n, args, setup.graph)) for n in names]
    rows = []
    for ex_id, x in setup.examples:
        runs = []
        for name, config in configs:
            h = None if config.algorithm is Algorithm.UCS else setup.heuristic
            runs.append((name, search(setup.graph, setup.goal_fn, x, config, h)))
        if args.random_baseline:
            runs += _random_runs(args, setup, x)
        optimal = [r.path_cost for _, r in runs if r.found and str(r.guarantee) == "OPTIMAL"]
        best = min(optimal) if optimal else None
        for name, r in runs:
            ratio = r.path_cost / best if (r.found and best) else None
            rows.append({"example_id": ex_id, "algorithm": name, "status": r.status.value,
                         "path_cost": r.path_cost if r.found else None,
                         "cost_ratio": ratio, "expansions": r.expansions,
                         "runtime_ms": round(r.wall_time * 1000.0, 3) if args.timing else None,
                         "guarantee": str(r.guarantee)})
    with _output(args.out) as out:
        for row in rows:
            out.write(json.dumps(row) + "\n")
    print(format_table(_summarize(rows), ["algorithm", "found", "mean_cost", "max_ratio",
                                          "mean_expansions", "mean_runtime_ms"]),
          file=sys.stderr if args.out is None else sys.stdout)
    return 0


def _random_runs(args, setup, x) -> list:
    runs = []
    if isinstance(setup.graph, TraceGraph):
        cap = args.max_iterations or args.max_expansions or DEFAULT_MAX_ITERATIONS
        for rep in range(3):
            rng = np.random.default_rng([args.seed, rep])
            runs.append(("random", random_walk(setup.graph, setup.goal_fn, x, rng, cap)))
        return runs
    for rep in range(10):
        h = random_heuristic(np.random.default_rng([args.seed, rep]), 0.0, 2.0, setup.graph.key)
        config = SearchConfig(Algorithm.GREEDY, max_expansions=args.max_expansions)
        runs.append(("random", search(setup.graph, setup.goal_fn, x, config, h)))
    return runs


def _summarize(rows: list[dict]) -> list[dict]:
    out = []
    for name in dict.fromkeys(r["algorithm"] for r in rows):
        sel = [r for r in rows if r["algorithm"] == name]
        found = [r for r in sel if r["status"] == Status.FOUND.value]
        ratios = [r["cost_ratio"] for r in found if r["cost_ratio"] is not None]
        times = [r["runtime_ms"] for r in sel if r["runtime_ms"] is not None]
        out.append({
            "algorithm": name,
            "found": f"{len(found)}/{len(sel)}",
            "mean_cost": float(np.mean([r["path_cost"] for r in found])) if found else None,
            "max_ratio": max(ratios) if ratios else None,
            "mean_expansions": float(np.mean([r["expansions"] for r in sel])) if sel else None,
            "mean_runtime_ms": float(np.mean(times)) if times else None,
        })
    return out


def cmd_audit(args) -> int:
    setup = _load_setup(args)
    rng = np.random.default_rng(args.seed)
    starts = [x for _, x in setup.examples]
    nodes = sample_nodes(setup.graph, starts, args.samples, rng, max_depth=args.depth_cap)
    adm = audit_admissibility(setup.heuristic, setup.graph, setup.goal_fn, nodes, args.depth_cap)
    edges = sample_edges(setup.graph, starts, args.edges, rng)
    con = audit_consistency(setup.heuristic, setup.graph, edges)
    claimed = setup.heuristic.admissible
    report = {"heuristic": setup.heuristic.note, "admissible_claim": claimed,
              "admissibility": adm.to_dict(), "consistency": con.to_dict()}
    with _output(args.out) as out:
        out.write(json.dumps(report, sort_keys=True, default=str) + "\n")
    if not claimed:
        print("non-admissible heuristic: violations are reported but not fatal", file=sys.stderr)
        return 0
    if adm.violations:
        print(f"admissibility violated on {len(adm.violations)} of {adm.checked} nodes",
              file=sys.stderr)
        return 1
    return 0


def cmd_encode(args) -> int:
    if args.encode_command == "fit":
        exclude = [c for c in args.exclude.split(",") if c]
        schema = infer_schema(args.data, args.app_column, args.id_column, exclude)
        rows = load_csv(args.data, schema)
        encoder = fit_encoder(rows, schema.numeric, args.buckets, app_column=schema.app_column)
        encoder.save(args.out)
        return 0
    encoder = FeatureEncoder.load(args.encoder)
    schema = infer_schema(args.data, encoder.app_column, args.id_column)
    rows = load_csv(args.data, schema)
    names = encoder.onehot_names()
    with _output(args.out) as out:
        out.write(",".join(["id"] + names) + "\n")
        for i, r in enumerate(rows):
            vec = encoder.onehot(encoder.encode(r))
            out.write(",".join([str(r.get(args.id_column, i))] + [str(int(v)) for v in vec]) + "\n")
    return 0


COMMANDS = {"attack": cmd_attack, "compare": cmd_compare, "audit": cmd_audit,
            "encode": cmd_encode}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ModelError, CsvError, EncodingError, ValueError, OSError) as exc:
        print(f"advsearch: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
