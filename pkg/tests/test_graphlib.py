import itertools

import networkx as nx
from networkx.algorithms import isomorphism as iso
import pytest
from hypothesis import given, settings, strategies as st

from permlat.graphlib import (ColoredGraph, GraphError, Unresolved, blocks, first_homomorphism,
                              complete, contains_K4, core, cycle, disjoint_union, embeds,
                              graph, homomorphisms, induced_embeddings, is_2connected, is_core,
                              isomorphic, non_induced_embeddings, path, proper_images, wheel)

W5 = wheel(5)


def _nx(G):
    return G.to_networkx()


def _match(a, b):
    return a.get("color") == b.get("color")


def _vf2_induced(H, G):
    gm = iso.GraphMatcher(_nx(G), _nx(H), node_match=_match)
    return {frozenset((v, k) for k, v in m.items()) for m in gm.subgraph_isomorphisms_iter()}


def _vf2_mono(H, G):
    gm = iso.GraphMatcher(_nx(G), _nx(H), node_match=_match)
    return {frozenset((v, k) for k, v in m.items()) for m in gm.subgraph_monomorphisms_iter()}


def _brute_homs(H, G):
    out = set()
    for img in itertools.product(G.vertices, repeat=len(H)):
        f = dict(zip(H.vertices, img))
        if any(H.color(v) != G.color(f[v]) for v in H.vertices):
            continue
        if all(G.has_edge(*(f[x] for x in e)) for e in H.edges):
            out.add(frozenset(f.items()))
    return out


def _as_set(maps):
    return {frozenset(m.items()) for m in maps}


def _random_graph(rnd, n, p, colors=("G0", "T1", None)):
    edges = [e for e in itertools.combinations(range(n), 2) if rnd.random() < p]
    cols = {str(i): c for i in range(n) if (c := rnd.choice(colors)) is not None}
    return graph(n, edges, cols)


def test_validation():
    with pytest.raises(GraphError):
        graph(2, [(0, 0)])
    with pytest.raises(GraphError):
        graph(2, [(0, 5)])
    with pytest.raises(GraphError):
        ColoredGraph(("a", "a"))
    G = graph(3, [(0, 1)], {"0": "G0"})
    assert ColoredGraph.from_json(G.to_json()) == G
    assert G.to_json() == {"vertices": [{"id": "0", "color": "G0"}, {"id": "1"}, {"id": "2"}],
                           "edges": [["0", "1"]]}
    assert '"0" -- "1"' in G.to_dot()


def test_induced_examples():
    G = graph(4, [(0, 1)], {"3": "G0"})
    one = graph(1)
    assert {m["0"] for m in induced_embeddings(one, G)} == {"0", "1", "2"}
    assert induced_embeddings(complete(3), cycle(5)) == []
    assert len(induced_embeddings(complete(3), W5)) == 5 * 6


def test_w5_facts():
    assert is_2connected(W5)
    assert not contains_K4(W5)
    tri = [set(m.values()) for m in induced_embeddings(complete(3), W5)]
    assert all("h" in t for t in tri)
    assert max(len(c) for c in nx.find_cliques(_nx(W5))) == 3


def test_w5_images_contain_k4():
    """Every proper homomorphic image of W5 contains K4, by exhaustive maps to fewer vertices."""
    verts = W5.vertices
    for k in range(1, 6):
        for img in itertools.product(range(k), repeat=len(verts)):
            if len(set(img)) != k:
                continue
            f = dict(zip(verts, img))
            if any(f[a] == f[b] for a, b in (tuple(e) for e in W5.edges)):
                continue
            H = nx.Graph([(f[a], f[b]) for a, b in (tuple(e) for e in W5.edges)])
            assert max(len(c) for c in nx.find_cliques(H)) >= 4
    imgs = list(proper_images(W5))
    assert imgs and all(contains_K4(q) for q in imgs)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(2, 7), st.randoms(use_true_random=False))
def test_search_against_vf2(h, g, rnd):
    H = _random_graph(rnd, h, 0.5)
    G = _random_graph(rnd, g, 0.5)
    ind = _as_set(induced_embeddings(H, G))
    mono = _as_set(non_induced_embeddings(H, G))
    assert ind == _vf2_induced(H, G)
    assert mono == _vf2_mono(H, G)
    if g <= 5:
        homs = _as_set(homomorphisms(H, G))
        assert homs == _brute_homs(H, G)
        assert ind <= mono <= homs


def test_colors_block_matching():
    H = graph(1, colors={"0": "G0"})
    G = graph(2, colors={"1": "G0"})
    assert [m["0"] for m in induced_embeddings(H, G)] == ["1"]
    assert len(induced_embeddings(H, G, use_colors=False)) == 2


def test_homomorphism_examples():
    G = cycle(5)
    homs = homomorphisms(complete(2), G)
    assert _as_set(homs) == {frozenset({("0", a), ("1", b)}) for a, b in
                            itertools.permutations(G.vertices, 2) if G.has_edge(a, b)}
    assert len(homs) == 2 * len(G.edges)
    K1 = graph(1)
    for G in (graph(3), graph(3, [(0, 1)]), cycle(4)):
        assert bool(homomorphisms(G, K1)) == (not G.edges)


def test_blocks_examples():
    tree = graph(5, [(0, 1), (1, 2), (1, 3), (3, 4)])
    bs = blocks(tree)
    assert sorted(sorted(b) for b in bs) == sorted(sorted(e) for e in tree.edges)
    assert not is_2connected(tree)
    bowtie = graph(5, [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)])
    assert sorted(sorted(b) for b in blocks(bowtie)) == [["0", "1", "2"], ["2", "3", "4"]]
    assert not is_2connected(bowtie)
    assert is_2connected(cycle(3)) and not is_2connected(path(3))


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 8), st.randoms(use_true_random=False))
def test_blocks_partition_edges(n, rnd):
    G = _random_graph(rnd, n, 0.45)
    bs = blocks(G)
    owner = {}
    for i, b in enumerate(bs):
        for e in G.edges:
            if e <= b:
                assert e not in owner
                owner[e] = i
    assert set(owner) == set(G.edges)
    full = any(b == set(G.vertices) for b in bs)
    assert is_2connected(G) == (len(bs) == 1 and full)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 7), st.randoms(use_true_random=False))
def test_contains_k4_against_cliques(n, rnd):
    G = _random_graph(rnd, n, 0.6, colors=(None,))
    best = max((len(c) for c in nx.find_cliques(_nx(G))), default=0)
    assert contains_K4(G) == (best >= 4)


def test_core_examples():
    assert isomorphic(core(complete(3)), complete(3))
    assert isomorphic(core(path(3)), complete(2))
    assert isomorphic(core(cycle(5)), cycle(5))
    assert isomorphic(core(cycle(6)), complete(2))
    assert isomorphic(core(W5), W5)
    assert is_core(W5) and not is_core(cycle(4))


def test_core_budget():
    res = core(disjoint_union(cycle(7), cycle(7), cycle(5)), budget=3)
    assert isinstance(res, Unresolved)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.randoms(use_true_random=False))
def test_core_is_retract_and_idempotent(n, rnd):
    G = _random_graph(rnd, n, 0.5)
    C = core(G)
    assert not isinstance(C, Unresolved)
    assert set(C.vertices) <= set(G.vertices)
    assert homomorphisms(G, C) and is_core(C)
    assert isomorphic(core(C), C)
    # nothing smaller receives a homomorphism from G
    for k in range(1, len(C)):
        for sub in itertools.combinations(G.vertices, k):
            assert not homomorphisms(G, G.induced(sub))


def test_embeds_and_isomorphic():
    assert embeds(path(3), cycle(5))
    assert not embeds(path(3), complete(4))
    assert isomorphic(cycle(4), graph(["a", "b", "c", "d"], [("a", "c"), ("c", "b"), ("b", "d"), ("d", "a")]))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.randoms(use_true_random=False))
def test_first_homomorphism_agrees_with_brute(h, g, rnd):
    H = _random_graph(rnd, h, 0.6)
    G = _random_graph(rnd, g, 0.6)
    f = first_homomorphism(H, G)
    brute = _brute_homs(H, G)
    assert (f is not None) == bool(brute)
    if f is not None:
        assert frozenset(f.items()) in brute
