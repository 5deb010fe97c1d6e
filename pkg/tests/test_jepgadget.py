import itertools
import random

from networkx.algorithms import isomorphism as iso
import pytest
from hypothesis import given, settings, strategies as st

from permlat.graphlib import (PALETTE, ColoredGraph, complete, contains_K4, core, cycle, embeds, graph,
                              is_2connected, isomorphic, path, proper_images)
from permlat.jepgadget import (GadgetClass, GadgetError, TilingError, TilingFn, TilingProblem,
                               canonical_A, canonical_A_plus, canonical_B, canonical_B_plus,
                               certify_no_joint_embedding, check_plus_invariants,
                               compile_pure_graph_class, default_antichain, derived_relations,
                               edge_scope, extract_tiling, h_constraints, has_hom_image,
                               image_conditions, in_C_star, jhp_gadget, joint_embed, n_plus,
                               necklace, search_joint_embedding, vee, verify_membership, w5, wedge)

CHECKER = TilingProblem(2, frozenset({(1, 1), (2, 2)}), frozenset({(1, 1), (2, 2)}))
NO_RIGHT_REPEAT = TilingProblem(1, frozenset({(1, 1)}))


def test_vertex_counts():
    for n in range(1, 5):
        assert len(canonical_A(n)) == n + 2 * (n - 1) + 3 * n * n
        for T in (1, 2, 3):
            assert len(canonical_B(n, T)) == len(canonical_A(n)) + T * n * n
    with pytest.raises(GadgetError):
        canonical_A(0)
    with pytest.raises(GadgetError):
        canonical_B(2, 0)


def test_tiling_problem_validation():
    with pytest.raises(TilingError):
        TilingProblem(0)
    with pytest.raises(TilingError):
        TilingProblem(2, frozenset({(1, 3)}))
    assert TilingProblem.from_json(CHECKER.to_json()) == CHECKER
    assert CHECKER.respects(TilingFn.checkerboard(), 5)
    assert not CHECKER.respects(TilingFn.constant(1), 2)
    assert TilingProblem(1).respects(TilingFn.constant(1), 4)


def test_derived_coordinates():
    for n in (1, 2, 3):
        A = canonical_A(n)
        D = derived_relations(A, 1)
        for i, j in itertools.product(range(n), repeat=2):
            assert D.coordinates(f"g0_{i}_{j}") == (i, j)
        assert D.grid_origins == {"g0_0_0"}
        assert sum(len(v) for v in D.succ.values()) == n - 1
    B = canonical_B(2, 3)
    D = derived_relations(B, 3)
    assert D.full == {f"g1_{i}_{j}" for i in range(2) for j in range(2)}
    assert D.tau["g1_1_0"] == {k: {f"t1_1_0_{k}"} for k in (1, 2, 3)}


@pytest.mark.parametrize("P", [TilingProblem(1), NO_RIGHT_REPEAT, CHECKER])
def test_canonical_models_are_members(P):
    K = GadgetClass(P)
    for n in (1, 2, 3):
        assert verify_membership(canonical_A(n), K) == (True, None)
        assert verify_membership(canonical_B(n, P.T), K) == (True, None)


def test_disjoint_union_breaks_origin_constraint():
    from permlat.jepgadget import _union
    ok, v = verify_membership(_union(canonical_A(2), canonical_B(2, 2)), GadgetClass(CHECKER))
    assert not ok and v.constraint == 8


def test_membership_flags_bad_structures():
    K = GadgetClass(TilingProblem(1))
    A = canonical_A(2)
    two_preds = A.add(["c1x", "c2x", "px"], [("px", "c1x"), ("c1x", "c2x"), ("c2x", "p0_1")],
                      {"c1x": "C1", "c2x": "C2", "px": "P'0"})
    assert verify_membership(two_preds, K)[1].constraint == 2
    into_origin = A.add(["c1x", "c2x"], [("p0_1", "c1x"), ("c1x", "c2x"), ("c2x", "p0_0")],
                        {"c1x": "C1", "c2x": "C2"})
    assert verify_membership(into_origin, K)[1].constraint in (2, 3)
    odd = A.add(["z"], [], {"z": "nonsense"})
    assert verify_membership(odd, K)[1].constraint == 1
    assert verify_membership(A.add(["z"]), GadgetClass(TilingProblem(1), no_plain=True))[0] is False


@pytest.mark.parametrize("P,theta", [(TilingProblem(1), TilingFn.constant(1)),
                                     (CHECKER, TilingFn.checkerboard())])
def test_joint_embed_and_extract(P, theta):
    K = GadgetClass(P)
    n = 2
    C = joint_embed(canonical_A(n), canonical_B(n, P.T), theta, K)
    assert verify_membership(C, K) == (True, None)
    assert extract_tiling(C, n, K) == {(i, j): theta(i, j) for i in range(n) for j in range(n)}
    # both factors sit inside as induced subgraphs
    assert embeds(canonical_A(n), C) and embeds(canonical_B(n, P.T), C)


def test_joint_embed_rejects_bad_tiling():
    with pytest.raises(TilingError):
        joint_embed(canonical_A(2), canonical_B(2, 2), TilingFn.constant(1), GadgetClass(CHECKER))


def test_extract_names_origin_constraint():
    K = GadgetClass(TilingProblem(1))
    C = joint_embed(canonical_A(2), canonical_B(2, 1), TilingFn.constant(1), K)
    cut = frozenset({"a:g0_0_0", "b:t1_0_0_1"})
    stripped = ColoredGraph(C.vertices, frozenset(e for e in C.edges if e != cut), C.colors)
    with pytest.raises(TilingError, match=r"\(8\)"):
        extract_tiling(stripped, 2, K)
    assert verify_membership(stripped, K)[1].constraint == 8


def test_certificate_full_scope():
    K = GadgetClass(NO_RIGHT_REPEAT)
    A, B = canonical_A(2), canonical_B(2, 1)
    res = certify_no_joint_embedding(A, B, K)
    assert len(res.scope) == 16 == len(edge_scope(A, B))
    assert res.certified and len(res.violations) == 2 ** 16
    assert set(res.violations) <= {7, 8, 9}
    assert res.summary()["subsets"] == 2 ** 16


def test_certificate_finds_witness_without_rules():
    K = GadgetClass(TilingProblem(1))
    res = certify_no_joint_embedding(canonical_A(2), canonical_B(2, 1), K)
    assert not res.certified
    assert verify_membership(res.witness, K) == (True, None)


@pytest.mark.parametrize("P", [TilingProblem(1), NO_RIGHT_REPEAT, CHECKER,
                               TilingProblem(2, frozenset({(1, 2), (2, 1)}))])
def test_certify_agrees_with_backtracking(P):
    K = GadgetClass(P)
    for n in (1, 2):
        A, B = canonical_A(n), canonical_B(n, P.T)
        if len(edge_scope(A, B)) > 16:
            continue
        res = certify_no_joint_embedding(A, B, K)
        found = search_joint_embedding(A, B, K)
        assert res.certified == (found is None)
        if found is not None:
            assert verify_membership(found, K)[0]


def test_certify_rejects_oversized_scope():
    with pytest.raises(GadgetError):
        certify_no_joint_embedding(canonical_A(3), canonical_B(3, 1), GadgetClass(TilingProblem(1)))


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_membership_is_hereditary(rnd):
    K = GadgetClass(CHECKER)
    C = joint_embed(canonical_A(2), canonical_B(2, 2), TilingFn.checkerboard(), K)
    keep = [v for v in C.vertices if rnd.random() < 0.7]
    assert verify_membership(C.induced(keep), K)[0]


# ---------------------------------------------------------------------------
# plain graphs


def _nx(G):
    return G.to_networkx()


def test_necklace_shape():
    for i in range(1, 6):
        N = necklace(i)
        assert len(N) == 2 * (i + 2) and len(N.edges) == 3 * (i + 2)
        assert is_2connected(N) and not contains_K4(N)
    with pytest.raises(GadgetError):
        necklace(0)


def test_necklaces_antichain_exhaustive():
    ns = [necklace(i) for i in range(1, 6)]
    for a, b in itertools.permutations(range(5), 2):
        assert not embeds(ns[a], ns[b], use_colors=False)
        gm = iso.GraphMatcher(_nx(ns[b]), _nx(ns[a]))
        assert not gm.subgraph_is_monomorphic()


def _random_colored(rnd, n, p, k=3):
    cols = list(PALETTE)[:k]
    edges = [e for e in itertools.combinations(range(n), 2) if rnd.random() < p]
    return graph(n, edges, {str(i): rnd.choice(cols) for i in range(n)})


def test_vee_wedge_roundtrip_many():
    rnd = random.Random(10)
    ac = default_antichain()
    done = 0
    while done < 150:
        G = _random_colored(rnd, rnd.randint(1, 8), 0.4)
        if not in_C_star(G, ac):
            continue
        W = wedge(G, ac)
        assert not W.colors
        assert vee(W, ac) == G
        assert image_conditions(W, ac) == (True, "")
        done += 1


def test_wedge_rejects_uncolored():
    with pytest.raises(GadgetError):
        wedge(graph(2))


def test_embedding_preserved():
    rnd = random.Random(11)
    ac = default_antichain()
    seen = {True: 0, False: 0}
    tries = 0
    while tries < 80:
        G = _random_colored(rnd, rnd.randint(1, 3), 0.5)
        H = _random_colored(rnd, rnd.randint(2, 5), 0.5)
        if not (in_C_star(G, ac) and in_C_star(H, ac)):
            continue
        tries += 1
        a = embeds(G, H)
        assert embeds(wedge(G, ac), wedge(H, ac), use_colors=False) == a
        seen[a] += 1
    assert seen[True] and seen[False]


def test_image_conditions_detect_faults():
    ac = default_antichain()
    G = graph(2, [(0, 1)], {"0": "O0", "1": "G0"})
    W = wedge(G, ac)
    assert image_conditions(W.add(["z"]), ac)[0] is False
    # an extra edge from inside a coding copy breaks freeness
    inner = next(v for v in W.vertices if v.startswith("0/") and v != "0/s0")
    bad = W.add([], [(inner, "1")])
    ok, msg = image_conditions(bad, ac)
    assert not ok and "free" in msg


def test_h_families():
    for k in (1, 2, 3):
        h1, h2 = h_constraints(k)
        assert len(h2) == k * (k + 1) // 2
        sizes = sorted(len(G) for G in h2)
        want = sorted(len(necklace(i + 1)) + len(necklace(j + 1)) - 1
                      for i, j in itertools.combinations_with_replacement(range(k), 2))
        assert sizes == want
        assert h1 and all(any(len(G) - len(necklace(i + 1)) in (1, 2) for i in range(k))
                          for G in h1)


def test_pure_class_membership_of_wedges():
    pg = compile_pure_graph_class(GadgetClass(TilingProblem(1)))
    A = canonical_A(1)
    assert pg.member(wedge(A, pg.antichain))[0]


# ---------------------------------------------------------------------------
# homomorphism variant


def test_w5_proper_images_contain_k4():
    imgs = list(proper_images(w5(), 5))
    assert imgs and all(contains_K4(q) for q in imgs)


def test_n_plus_invariants():
    for i in (1, 2):
        assert check_plus_invariants(n_plus(i)) == {"two_connected": True, "k4_free": True,
                                                   "edges_in_triangles": True}


def test_small_cores():
    assert isomorphic(core(path(3)), complete(2))
    assert isomorphic(core(cycle(5)), cycle(5))


def test_jhp_gadget_flags():
    g = jhp_gadget(TilingProblem(1), k=2)
    assert len(g.antichain) == 2
    assert g.degraded == [False, True]
    assert len(g.antichain[0]) == 30 and len(g.antichain[1]) == len(n_plus(2))
    for G in g.antichain:
        assert not contains_K4(G)


def test_truncations_avoid_k4_and_gadget_images():
    g = jhp_gadget(TilingProblem(1), k=2)
    for n in (1, 2):
        for X in (canonical_A_plus(n), canonical_B_plus(n, 1)):
            assert not contains_K4(X)
            for G in g.antichain:
                assert not has_hom_image(G, X, budget=2_000_000)
