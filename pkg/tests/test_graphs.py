from fractions import Fraction

import pytest

from congestcolor import graphs
from congestcolor.graphs import (
    Graph,
    GraphError,
    density_oracle,
    generate,
    greedy_list_coloring,
    load_edge_list,
    local_sparsity,
    make_palettes,
    save_edge_list,
    similarity_oracle,
    verify_coloring,
)


def test_generate_complete():
    g = generate("complete", {"n": 5}, seed=0)
    assert g.n == 5 and g.m == 10 and g.delta == 4


def test_generate_star():
    g = generate("star", {"n": 11}, seed=0)
    assert g.delta == 10 and g.m == 10


def test_generate_clique_union():
    g = generate("clique_union", {"k": 2, "size": 9}, seed=0)
    assert g.n == 18 and g.delta == 8
    assert not g.has_edge(0, 9)


def test_generate_gnp_bounds():
    g = generate("gnp", {"n": 50, "p": 0.1}, seed=3)
    assert g.n == 50
    with pytest.raises(GraphError):
        generate("gnp", {"n": 10, "p": 1.5}, seed=0)


def test_generate_planted_shape():
    g = generate("planted_almost_cliques", {"k": 3, "delta": 16, "removal": 0.05}, seed=1)
    assert g.n == 3 * 17
    # groups stay nearly complete
    internal = sum(1 for v in g.neighbors[0] if v < 17)
    assert internal >= 12


def test_empty_graph_rejected():
    with pytest.raises(GraphError):
        Graph(0, [])


def test_graph_rejects_self_loop_and_duplicates():
    with pytest.raises(GraphError):
        Graph(3, [(0, 0)])
    with pytest.raises(GraphError):
        Graph(3, [(0, 1), (1, 0)])


def test_load_edge_list_k2():
    g = load_edge_list("p edge 2 1\ne 1 2\n")
    assert g.n == 2 and g.m == 1


def test_edge_list_roundtrip():
    g = generate("gnp", {"n": 30, "p": 0.2}, seed=9)
    g2 = load_edge_list(save_edge_list(g))
    assert g2.n == g.n and g2.neighbors == g.neighbors


def test_load_edge_list_errors():
    with pytest.raises(GraphError, match="line 1"):
        load_edge_list("e 1 1")
    with pytest.raises(GraphError):
        load_edge_list("p edge 2 2\ne 1 2\ne 2 1\n")
    with pytest.raises(GraphError):
        load_edge_list("p edge 2 1\ne 1 5\n")


def test_local_sparsity_clique_zero():
    g = generate("complete", {"n": 8}, seed=0)
    for v in range(8):
        assert local_sparsity(g, v) == 0


def test_local_sparsity_star_center():
    g = generate("star", {"n": 11}, seed=0)
    assert local_sparsity(g, 0) == Fraction(9, 2)


def test_local_sparsity_five_cycle():
    g = generate("cycle", {"n": 5}, seed=0)
    for v in range(5):
        assert local_sparsity(g, v) == Fraction(1, 2)


def test_local_sparsity_range():
    g = generate("gnp", {"n": 60, "p": 0.2}, seed=4)
    for v in range(g.n):
        z = local_sparsity(g, v)
        assert 0 <= z < Fraction(g.delta, 2)


def test_similarity_clique():
    g = generate("complete", {"n": 10}, seed=0)  # Delta = 9
    assert similarity_oracle(g, 0, 1, 1.0 / 3.0)


def test_similarity_disjoint():
    g = Graph(6, [(0, 1), (0, 2), (3, 4), (3, 5)])
    assert not similarity_oracle(g, 0, 3, 0.9)


def test_star_leaves_similar():
    g = generate("star", {"n": 11}, seed=0)  # Delta = 10
    assert similarity_oracle(g, 1, 2, 0.9)


def test_density_planted_no_removal():
    g = generate(
        "planted_almost_cliques",
        {"k": 2, "delta": 12, "removal": 0.0, "inter_p": 0.0},
        seed=0,
    )
    for v in range(g.n):
        assert density_oracle(g, v, 1.0 / g.delta)


def test_verify_coloring_cases():
    g = load_edge_list("p edge 2 1\ne 1 2\n")
    pal = graphs.PaletteAssignment(2, {0: frozenset({1, 2}), 1: frozenset({1, 2})})
    assert verify_coloring(g, pal, {0: 1, 1: 2}).ok
    rep = verify_coloring(g, pal, {0: 1, 1: 1})
    assert not rep.ok and rep.monochromatic_edges == [(0, 1)]
    rep = verify_coloring(g, pal, {0: 5, 1: 2})
    assert not rep.ok and rep.off_list_nodes == [0]
    rep = verify_coloring(g, pal, {0: 1}, allow_partial=True)
    assert rep.ok and rep.uncolored_nodes == [1]


@pytest.mark.parametrize("seed", range(5))
def test_greedy_oracle_always_valid(seed):
    g = generate("gnp", {"n": 40, "p": 0.15}, seed=seed)
    pal = make_palettes(g, seed=seed, kind="deg_plus_one")
    coloring = greedy_list_coloring(g, pal)
    assert verify_coloring(g, pal, coloring).ok


def test_palette_roundtrip():
    g = generate("cycle", {"n": 6}, seed=0)
    pal = make_palettes(g, seed=2)
    pal2 = graphs.load_palettes(graphs.save_palettes(pal))
    assert pal2.lists == pal.lists
    assert pal2.colorspace_size == pal.colorspace_size


def test_palette_sizes():
    g = generate("star", {"n": 6}, seed=0)
    pal = make_palettes(g, seed=1)
    assert all(len(pal.lists[v]) == g.delta + 1 for v in range(g.n))
    pal = make_palettes(g, seed=1, kind="deg_plus_one")
    assert all(len(pal.lists[v]) == g.degree(v) + 1 for v in range(g.n))
