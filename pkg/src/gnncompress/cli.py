"""Command-line surface: refine, compress, verify, stats, bench.

Exit codes: 0 success, 2 parse/format error, 3 invariant violation,
4 verification failure. Every command is deterministic given its flags
and seed.
"""

from __future__ import annotations

import argparse
import math
import statistics
import sys
import time

from .errors import FormatError, ValidationError, VerificationError
from .fileio import (LoadedGraph, load_bundle, load_graph, parse_extent,
                     read_train, save_bundle)
from .gnn import chain_config, one_hot_features
from .graph import graph_size
from .problem import LearningProblem, compress_problem, equivalence_report
from .reduction import choose_substitution, reduce_graph, verify_reduct
from .refine import refine
from .synth import bench_graph


def _fmt_extent(x) -> str:
    return "inf" if math.isinf(x) else str(int(x))


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, help="edge list file (src dst [mult])")
    p.add_argument("--colors", default=None, help="color file (node<TAB>token)")
    p.add_argument("--undirected", action="store_true",
                   help="add the reverse of every edge")


def _refinement_summary(result) -> str:
    counts = "→".join(str(c) for c in result.class_counts)
    if result.stable_round is not None:
        return f"stable at round {result.stable_round}; classes: {counts}"
    return f"reached round {len(result.partitions) - 1}; classes: {counts}"


def cmd_refine(args) -> int:
    loaded = load_graph(args.graph, args.colors, args.undirected)
    depth = parse_extent(args.depth)
    grade = parse_extent(args.grade)
    result = refine(loaded.graph, depth=depth, grade=grade)
    print(_refinement_summary(result))
    if args.out:
        final = result.final
        ids = loaded.original_ids
        with open(args.out, "w", encoding="utf-8") as f:
            for v, cid in enumerate(final.class_of):
                label = ids[v] if ids is not None else v
                f.write(f"{label}\t{cid}\n")
        print(f"wrote {args.out}")
    return 0


def _problem_from_files(args, loaded: LoadedGraph) -> LearningProblem:
    g = loaded.graph
    id_map = None
    if loaded.original_ids is not None:
        id_map = {int(orig): i for i, orig in enumerate(loaded.original_ids)}
    if args.train:
        train = read_train(args.train, g.node_count, args.loss, id_map)
        loss_kind = args.loss
    else:
        train = {}
        loss_kind = args.loss or "xent"
    features, _ = one_hot_features(g)
    return LearningProblem(g, features, train, loss_kind)


def cmd_compress(args) -> int:
    loaded = load_graph(args.graph, args.colors, args.undirected)
    depth = parse_extent(args.depth)
    grade = parse_extent(args.grade)
    if args.train and not args.loss:
        raise ValidationError("--train requires --loss")
    problem = _problem_from_files(args, loaded)
    cp = compress_problem(problem, policy=args.policy, depth=depth, grade=grade)

    g = loaded.graph
    n0, m0 = graph_size(g)
    n1, m1 = graph_size(cp.graph)
    print(f"nodes {100.0 * n1 / n0:.2f}% ({n1}/{n0}), "
          f"edges {100.0 * m1 / m0:.2f}% ({m1}/{m0})")
    save_bundle(cp, args.out, original_node_ids=loaded.original_ids,
                extra_meta={"original_simple_edges": m0})
    print(f"wrote bundle {args.out} (depth={_fmt_extent(depth)}, "
          f"grade={_fmt_extent(grade)}, policy={args.policy}, rounds={cp.rounds})")
    return 0


def cmd_verify(args) -> int:
    loaded = load_graph(args.original, args.colors, args.undirected)
    g = loaded.graph
    cp = load_bundle(args.bundle)
    if len(cp.rep_of_node) != g.node_count:
        raise ValidationError(
            f"bundle maps {len(cp.rep_of_node)} nodes, original has {g.node_count}")

    if cp.train_weighted and not args.train:
        raise ValidationError("bundle carries a training set; pass --train "
                              "to verify it against the original")

    check = verify_reduct(g, cp.graph, cp.rep_of_node, cp.depth, cp.grade)
    if not check.ok:
        print(f"FAIL reduct: node {check.witness_node} disagrees with its "
              f"representative at round {check.witness_round}")
        return 4

    # Weighted training set must be the push-forward of the original one.
    if args.train:
        loss_kind = cp.loss_kind or "xent"
        id_map = None
        if loaded.original_ids is not None:
            id_map = {int(o): i for i, o in enumerate(loaded.original_ids)}
        train = read_train(args.train, g.node_count, loss_kind, id_map)
        expected: dict[int, dict[str, int]] = {}
        for v, target in train.items():
            rep = int(cp.rep_of_node[v])
            key = target if isinstance(target, str) else target.tobytes()
            expected.setdefault(rep, {}).setdefault(key, [target, 0])[1] += 1
        got = {
            rep: sorted((t if isinstance(t, str) else t.tobytes(), w) for t, w in pairs)
            for rep, pairs in cp.train_weighted.items()
        }
        want = {
            rep: sorted((k, tw[1]) for k, tw in bucket.items())
            for rep, bucket in expected.items()
        }
        if got != want:
            bad = sorted(set(got) ^ set(want)
                         or {rep for rep in got if got[rep] != want.get(rep)})
            print(f"FAIL training weights: node {bad[0]} has tampered targets or weights")
            return 4

    # Equivalence over sampled GNNs.
    vocab = sorted(g.color_table.payloads, key=repr)
    features, _ = one_hot_features(g, vocab)
    cp.features = one_hot_features(cp.graph, vocab)[0]
    p_dim = len(vocab)
    depth = int(cp.depth) if not math.isinf(cp.depth) else max(1, cp.rounds)
    depth = max(1, depth)
    width = parse_extent(args.width) if args.width else cp.grade
    loss_kind = cp.loss_kind or "xent"
    if loss_kind == "xent":
        q = max(1, len(cp.label_vocab)) if cp.train_weighted else p_dim
    else:
        q = len(next(iter(cp.train_weighted.values()))[0][0]) if cp.train_weighted else p_dim
    config = chain_config([p_dim] * depth + [q], width=width, agg="sum")

    id_map = None
    if loaded.original_ids is not None:
        id_map = {int(o): i for i, o in enumerate(loaded.original_ids)}
    train = read_train(args.train, g.node_count, loss_kind, id_map) if args.train else {}
    problem = LearningProblem(g, features, train, loss_kind, config)
    report = equivalence_report(problem, cp, n_gnns=args.gnns, seed=args.seed,
                                tolerance=args.tol, config=config)
    status = "pass" if report.passed else "FAIL"
    print(f"{status} equivalence: {report.n_gnns} GNNs, "
          f"max loss discrepancy {report.max_loss_discrepancy:.3e}, "
          f"max output discrepancy {report.max_output_discrepancy:.3e}")
    if report.approximate:
        print(f"WARNING {report.note}")
        return 0
    if not report.passed:
        return 4
    print("verification passed")
    return 0


def cmd_stats(args) -> int:
    loaded = load_graph(args.graph, args.colors, args.undirected)
    g = loaded.graph
    grade = parse_extent(args.grade)
    depths = [parse_extent(tok) for tok in args.depths.split(",")]
    n0, m0 = graph_size(g)
    finite = [int(d) for d in depths if not math.isinf(d)]
    max_depth = math.inf if any(math.isinf(d) for d in depths) else max(finite, default=0)
    result = refine(g, depth=max_depth, grade=grade)
    print("depth\tnodes\tnodes_pct\tedges\tedges_pct")
    for d in depths:
        partition = result.at(d) if not math.isinf(d) else result.final
        sub = choose_substitution(g, partition, "min-incidence", depth=d, grade=grade)
        red = reduce_graph(g, sub)
        n1, m1 = graph_size(red.graph)
        edge_pct = 100.0 * m1 / m0 if m0 else 100.0
        print(f"{_fmt_extent(d)}\t{n1}\t{100.0 * n1 / n0:.2f}\t{m1}\t{edge_pct:.2f}")
    return 0


def cmd_bench(args) -> int:
    sizes = [int(float(tok)) for tok in args.sizes.split(",")]
    print("size\tn\tm\trounds\tmedian_s\tratio")
    prev = None
    for i, size in enumerate(sizes):
        g = bench_graph(size, args.density, seed=args.seed + i)
        times = []
        rounds = 0
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            result = refine(g, depth=math.inf)
            times.append(time.perf_counter() - t0)
            rounds = len(result.partitions) - 1
        med = statistics.median(times)
        ratio = f"{med / prev:.2f}" if prev else "-"
        print(f"{size}\t{g.node_count}\t{g.simple_edge_count}\t{rounds}\t{med:.4f}\t{ratio}")
        prev = med
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gnncompress",
        description="Exact compression of GNN learning problems by color refinement")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("refine", help="compute refinement classes")
    _add_graph_args(p)
    p.add_argument("--depth", required=True, help="rounds to run, or 'inf' for stability")
    p.add_argument("--grade", default="inf", help="multiplicity cap c, or 'inf'")
    p.add_argument("--out", default=None, help="write node<TAB>class_id here")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("compress", help="build a compressed bundle")
    _add_graph_args(p)
    p.add_argument("--depth", required=True)
    p.add_argument("--grade", default="inf")
    p.add_argument("--train", default=None, help="training file (node<TAB>target)")
    p.add_argument("--loss", choices=("xent", "sq"), default=None)
    p.add_argument("--policy", choices=("min-incidence", "first-node"),
                   default="min-incidence")
    p.add_argument("--out", required=True, help="bundle output directory")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("verify", help="check a bundle against its original")
    p.add_argument("--bundle", required=True)
    p.add_argument("--original", required=True, help="original edge list")
    p.add_argument("--colors", default=None)
    p.add_argument("--undirected", action="store_true")
    p.add_argument("--train", default=None)
    p.add_argument("--gnns", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--width", default=None,
                   help="GNN width for the equivalence check (default: bundle grade)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stats", help="compression ratios over several depths")
    _add_graph_args(p)
    p.add_argument("--depths", default="1,2,3,inf", help="comma-separated depths")
    p.add_argument("--grade", default="inf")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bench", help="refinement scaling on random graphs")
    p.add_argument("--sizes", required=True, help="comma-separated n+m targets")
    p.add_argument("--density", type=float, default=2.0, help="edges per node")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except VerificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
