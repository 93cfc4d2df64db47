import math

import numpy as np
import pytest

from gnncompress import (FormatError, LearningProblem, ValidationError,
                         build_graph, compress_problem, graph_size, refine)
from gnncompress.fileio import (load_bundle, load_graph, parse_extent,
                                read_train, save_bundle)
from gnncompress.gnn import chain_config, one_hot_features
from gnncompress.synth import random_graph
from conftest import FIG1_COLORS, FIG1_EDGES, same_partition


def write_fig1(tmp_path, undirected=False):
    lines = [f"{s}\t{d}" for s, d, _ in FIG1_EDGES]
    (tmp_path / "g.tsv").write_text("# comment\n" + "\n".join(lines) + "\n")
    color_lines = [f"{v}\t{c}" for v, c in enumerate(FIG1_COLORS)]
    (tmp_path / "c.tsv").write_text("\n".join(color_lines) + "\n")
    return tmp_path / "g.tsv", tmp_path / "c.tsv"


def test_two_line_file(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("0\t1\n1\t0\n")
    g = load_graph(p).graph
    assert graph_size(g) == (2, 2)


def test_undirected_symmetrizes(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("0 1\n")
    g = load_graph(p, undirected=True).graph
    assert graph_size(g) == (2, 2)
    assert g.transpose() == g


def test_undirected_random_self_transpose(tmp_path):
    g0 = random_graph(20, 60, n_colors=1, max_mult=2, seed=9)
    p = tmp_path / "g.tsv"
    with open(p, "w") as f:
        for s, d, m in zip(g0.out_src_flat, g0.out_dst, g0.out_mult):
            f.write(f"{s}\t{d}\t{m}\n")
    g = load_graph(p, undirected=True).graph
    assert g.transpose() == g


def test_fig1_round_trip_refines_identically(tmp_path):
    gp, cp_ = write_fig1(tmp_path)
    loaded = load_graph(gp, cp_).graph
    mem = build_graph(FIG1_EDGES, FIG1_COLORS)
    for d in range(4):
        a = refine(loaded, depth=d).at(d)
        b = refine(mem, depth=d).at(d)
        assert same_partition(a.class_of, b.class_of)


def test_sparse_ids_remapped(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("10\t400\n400\t7000\n")
    loaded = load_graph(p)
    assert graph_size(loaded.graph) == (3, 2)
    assert list(loaded.original_ids) == [10, 400, 7000]


def test_default_color_for_absent_nodes(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("0\t1\n1\t2\n")
    c = tmp_path / "c.tsv"
    c.write_text("0\tred\n")
    g = load_graph(p, c).graph
    assert g.color_payload(0) == "red"
    assert g.color_payload(1) == g.color_payload(2)


def test_parse_errors_carry_line_numbers(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("0\t1\nnope\n")
    with pytest.raises(FormatError, match=":2"):
        load_graph(p)


def test_zero_multiplicity_rejected(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("0\t1\t0\n")
    with pytest.raises(FormatError):
        load_graph(p)


def test_dangling_color_node_rejected(tmp_path):
    gp = tmp_path / "g.tsv"
    gp.write_text("0\t1\n")
    cp_ = tmp_path / "c.tsv"
    cp_.write_text("5\tred\n")
    with pytest.raises(ValidationError):
        load_graph(gp, cp_)


def test_duplicate_color_lines_rejected(tmp_path):
    gp = tmp_path / "g.tsv"
    gp.write_text("0\t1\n")
    cp_ = tmp_path / "c.tsv"
    cp_.write_text("0\tred\n0\tblue\n")
    with pytest.raises(ValidationError):
        load_graph(gp, cp_)


def test_duplicate_train_node_rejected(tmp_path):
    t = tmp_path / "t.tsv"
    t.write_text("0\ty\n0\tz\n")
    with pytest.raises(ValidationError):
        read_train(t, 2, "xent")


def test_train_dimension_mismatch_rejected(tmp_path):
    t = tmp_path / "t.tsv"
    t.write_text("0\t1.0,2.0\n1\t1.0\n")
    with pytest.raises(ValidationError):
        read_train(t, 2, "sq")


def make_compressed(seed=0, depth=1, loss="xent"):
    g = random_graph(18, 50, n_colors=2, max_mult=2, seed=seed)
    # re-intern colors as string tokens so bundles round-trip payloads
    tokens = [f"c{g.color_payload(v)}" for v in range(g.node_count)]
    g = build_graph(
        [(int(s), int(d), int(m)) for s, d, m in
         zip(g.out_src_flat, g.out_dst, g.out_mult)], tokens)
    feats, _ = one_hot_features(g)
    rng = np.random.default_rng(seed)
    if loss == "xent":
        train = {int(v): f"y{rng.integers(0, 3)}"
                 for v in rng.choice(g.node_count, size=6, replace=False)}
        q = 3
    else:
        train = {int(v): rng.normal(size=2)
                 for v in rng.choice(g.node_count, size=6, replace=False)}
        q = 2
    p = LearningProblem(g, feats, train, loss,
                        chain_config([feats.shape[1]] * depth + [q]))
    return compress_problem(p, depth=depth)


@pytest.mark.parametrize("seed,loss", [(0, "xent"), (1, "xent"), (2, "sq"), (3, "sq")])
def test_bundle_round_trip(tmp_path, seed, loss):
    cp = make_compressed(seed=seed, loss=loss)
    save_bundle(cp, tmp_path / "b")
    back = load_bundle(tmp_path / "b")
    assert back.equivalent_to(cp)
    # second hop is bit-stable too
    save_bundle(back, tmp_path / "b2")
    assert load_bundle(tmp_path / "b2").equivalent_to(cp)


def test_fig1_rho2_bundle_round_trip(tmp_path):
    g = build_graph(FIG1_EDGES, FIG1_COLORS)
    p = LearningProblem(g, np.ones((6, 2)), {3: "y", 4: "y"}, "xent",
                        chain_config([2, 2]))
    cp = compress_problem(p, policy="min-incidence", depth=1)
    save_bundle(cp, tmp_path / "b")
    back = load_bundle(tmp_path / "b")
    assert back.equivalent_to(cp)
    assert back.graph == cp.graph


def test_zero_weight_rejected(tmp_path):
    cp = make_compressed()
    save_bundle(cp, tmp_path / "b")
    train = tmp_path / "b" / "train.tsv"
    lines = train.read_text().splitlines()
    parts = lines[0].split("\t")
    parts[2] = "0"
    lines[0] = "\t".join(parts)
    train.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValidationError):
        load_bundle(tmp_path / "b")


def test_meta_records_extents(tmp_path):
    import json
    g = build_graph(FIG1_EDGES, FIG1_COLORS)
    p = LearningProblem(g, np.ones((6, 1)), {}, "xent", chain_config([1, 1]))
    cp = compress_problem(p, depth=3, grade=math.inf)
    save_bundle(cp, tmp_path / "b")
    meta = json.loads((tmp_path / "b" / "meta.json").read_text())
    assert meta["depth"] == 3
    assert meta["grade"] == "inf"


def test_schema_version_mismatch(tmp_path):
    cp = make_compressed()
    save_bundle(cp, tmp_path / "b")
    meta = tmp_path / "b" / "meta.json"
    meta.write_text(meta.read_text().replace('"schema_version": 1',
                                             '"schema_version": 99'))
    with pytest.raises(FormatError, match="schema"):
        load_bundle(tmp_path / "b")


def test_map_must_cover_all_nodes(tmp_path):
    cp = make_compressed()
    save_bundle(cp, tmp_path / "b")
    m = tmp_path / "b" / "map.tsv"
    lines = m.read_text().splitlines()
    m.write_text("\n".join(lines[1:]) + "\n")
    with pytest.raises(ValidationError):
        load_bundle(tmp_path / "b")


def test_parse_extent():
    assert parse_extent("3") == 3
    assert math.isinf(parse_extent("inf"))
    with pytest.raises(FormatError):
        parse_extent("x")
