"""Tiling problems compiled to hereditary colored-graph classes, canonical models and the
joint-embedding procedure, plus the translation to plain graphs and the homomorphism variant."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .graphlib import (DUMMY, PALETTE, ColoredGraph, Unresolved, blocks, contains_K4, core,
                       every_edge_in_triangle, first_homomorphism, first_induced_embedding,
                       free_join, induced_embeddings, is_2connected, isomorphic,
                       proper_images, wheel)


class TilingError(ValueError):
    pass


class GadgetError(ValueError):
    pass


# ---------------------------------------------------------------------------
# tiling problems


@dataclass(frozen=True)
class TilingProblem:
    """Tiles 1..T. (i, j) in h_forbidden: tile j may not sit right of tile i;
    (i, j) in v_forbidden: tile j may not sit above tile i."""
    T: int
    h_forbidden: frozenset = frozenset()
    v_forbidden: frozenset = frozenset()

    def __post_init__(self) -> None:
        if self.T < 1:
            raise TilingError("need at least one tile")
        for name in ("h_forbidden", "v_forbidden"):
            pairs = frozenset(tuple(p) for p in getattr(self, name))
            for i, j in pairs:
                if not (1 <= i <= self.T and 1 <= j <= self.T):
                    raise TilingError(f"{name} pair {(i, j)} is outside 1..{self.T}")
            object.__setattr__(self, name, pairs)

    def to_json(self) -> dict:
        return {"tiles": self.T, "h_forbidden": sorted(map(list, self.h_forbidden)),
                "v_forbidden": sorted(map(list, self.v_forbidden))}

    @classmethod
    def from_json(cls, data: Mapping) -> "TilingProblem":
        return cls(int(data["tiles"]), frozenset(map(tuple, data.get("h_forbidden", []))),
                   frozenset(map(tuple, data.get("v_forbidden", []))))

    def respects(self, theta: Callable[[int, int], int], n: int) -> bool:
        try:
            check_tiling(self, theta, itertools.product(range(n), repeat=2))
        except TilingError:
            return False
        return True


@dataclass(frozen=True)
class TilingFn:
    rule: Callable[[int, int], int]
    name: str = ""

    def __call__(self, n: int, m: int) -> int:
        return self.rule(n, m)

    @classmethod
    def constant(cls, k: int) -> "TilingFn":
        return cls(lambda n, m: k, f"constant {k}")

    @classmethod
    def checkerboard(cls) -> "TilingFn":
        return cls(lambda n, m: 1 + (n + m) % 2, "checkerboard")

    @classmethod
    def from_table(cls, table: Mapping[tuple[int, int], int], period: tuple[int, int] | None = None
                   ) -> "TilingFn":
        """Finite table, optionally repeated with the given (horizontal, vertical) period."""
        table = dict(table)

        def rule(n: int, m: int) -> int:
            key = (n % period[0], m % period[1]) if period else (n, m)
            if key not in table:
                raise TilingError(f"tiling undefined at {(n, m)}")
            return table[key]

        return cls(rule, "table")


def check_tiling(P: TilingProblem, theta: Callable[[int, int], int],
                 cells: Iterable[tuple[int, int]]) -> None:
    cells = set(cells)
    for n, m in sorted(cells):
        k = theta(n, m)
        if not 1 <= k <= P.T:
            raise TilingError(f"tile {k} at {(n, m)} is outside 1..{P.T}")
        if (n + 1, m) in cells and (k, theta(n + 1, m)) in P.h_forbidden:
            raise TilingError(f"horizontal rule broken between {(n, m)} and {(n + 1, m)}")
        if (n, m + 1) in cells and (k, theta(n, m + 1)) in P.v_forbidden:
            raise TilingError(f"vertical rule broken between {(n, m)} and {(n, m + 1)}")


# ---------------------------------------------------------------------------
# gadget class


@dataclass(frozen=True)
class GadgetClass:
    problem: TilingProblem
    no_plain: bool = False          # every vertex must carry a color
    no_grid_edges: bool = False     # no edge joins two grid vertices

    @property
    def T(self) -> int:
        return self.problem.T


def _sup(c: str | None) -> int | None:
    return int(c[-1]) if c and c[-1] in "01" and c[0] in "OPG" else None


def _is(G: ColoredGraph, v: str, kind: str, s: int | None = None) -> bool:
    c = G.color(v)
    if c is None:
        return False
    if kind == "P":
        return c in (f"O{s}", f"P'{s}") if s is not None else c in ("O0", "O1", "P'0", "P'1")
    if s is None:
        return c == kind
    return c == f"{kind}{s}"


@dataclass
class Derived:
    succ: dict[str, set[str]]
    pred: dict[str, set[str]]
    proj1: dict[str, set[str]]
    proj2: dict[str, set[str]]
    grid_origins: set[str]
    coords: dict[str, set[tuple[int, int]]]
    tau: dict[str, dict[int, set[str]]]            # G1 vertex -> type -> tiles
    assoc: dict[str, set[tuple[str, int]]]         # tile -> {(grid, type)}
    full: set[str]
    tiled: dict[str, set[str]]                     # G0 vertex -> adjacent tiles
    h_pairs: dict[int, set[tuple[str, str]]]       # superscript -> horizontal successor pairs
    v_pairs: dict[int, set[tuple[str, str]]]
    colors: Mapping[str, str] = field(default_factory=dict)

    def coordinates(self, g: str) -> tuple[int, int] | None:
        c = self.coords.get(g, set())
        return next(iter(c)) if len(c) == 1 else None


def derived_relations(G: ColoredGraph, T: int) -> Derived:
    succ: dict[str, set[str]] = {}
    pred: dict[str, set[str]] = {}
    for x in G.vertices:
        s = _sup(G.color(x))
        if s is None or not _is(G, x, "P", s):
            continue
        for a in G.adj(x):
            if G.color(a) != "C1":
                continue
            for b in G.adj(a):
                if G.color(b) != "C2":
                    continue
                for y in G.adj(b):
                    if _is(G, y, "P", s):
                        succ.setdefault(x, set()).add(y)
                        pred.setdefault(y, set()).add(x)
    proj1: dict[str, set[str]] = {}
    proj2: dict[str, set[str]] = {}
    for g in G.vertices:
        s = _sup(G.color(g))
        if s is None or not _is(G, g, "G", s):
            continue
        for a in G.adj(g):
            target = {"C3": proj1, "C4": proj2}.get(G.color(a))
            if target is None:
                continue
            for w in G.adj(a):
                if _is(G, w, "P", s):
                    target.setdefault(g, set()).add(w)
    origins = [o for o in G.vertices if G.color(o) in ("O0", "O1")]
    grid_origins = {g for g in set(proj1) & set(proj2)
                    if any(o in proj1[g] and o in proj2[g] for o in origins)}
    # distances from origins along successor edges, capped for junk input with cycles
    dist: dict[str, set[tuple[str, int]]] = {}
    cap = len(G)
    for o in origins:
        layer = {o}
        for n in range(cap + 1):
            for p in layer:
                dist.setdefault(p, set()).add((o, n))
            layer = {y for x in layer for y in succ.get(x, ())}
            if not layer:
                break
    coords: dict[str, set[tuple[int, int]]] = {}
    for g in set(proj1) & set(proj2):
        for x in proj1[g]:
            for y in proj2[g]:
                for o, n in dist.get(x, ()):
                    for o2, m in dist.get(y, ()):
                        if o == o2:
                            coords.setdefault(g, set()).add((n, m))
    tau: dict[str, dict[int, set[str]]] = {}
    assoc: dict[str, set[tuple[str, int]]] = {}
    for h in G.vertices:
        if G.color(h) != "G1":
            continue
        stack = [(h, ())]
        while stack:
            v, seen = stack.pop()
            k = len(seen)
            if k:
                tau.setdefault(h, {}).setdefault(k, set()).add(v)
                assoc.setdefault(v, set()).add((h, k))
            if k == T:
                continue
            for w in G.adj(v):
                if G.color(w) == "T1" and w not in seen:
                    stack.append((w, seen + (w,)))
    full = {h for h, by in tau.items() if all(by.get(k) for k in range(1, T + 1))}
    tiled = {g: {t for t in G.adj(g) if t in assoc} for g in G.vertices if G.color(g) == "G0"}
    h_pairs: dict[int, set[tuple[str, str]]] = {0: set(), 1: set()}
    v_pairs: dict[int, set[tuple[str, str]]] = {0: set(), 1: set()}
    grids = [g for g in G.vertices if G.color(g) in ("G0", "G1")]
    for g, g2 in itertools.permutations(grids, 2):
        if G.color(g) != G.color(g2):
            continue
        s = _sup(G.color(g))
        if proj2.get(g, set()) & proj2.get(g2, set()) and any(
                x2 in succ.get(x, ()) for x in proj1.get(g, ()) for x2 in proj1.get(g2, ())):
            h_pairs[s].add((g, g2))
        if proj1.get(g, set()) & proj1.get(g2, set()) and any(
                y2 in succ.get(y, ()) for y in proj2.get(g, ()) for y2 in proj2.get(g2, ())):
            v_pairs[s].add((g, g2))
    return Derived(succ, pred, proj1, proj2, grid_origins, coords, tau, assoc, full, tiled,
                   h_pairs, v_pairs, G.colors)


@dataclass
class Violation:
    constraint: int | str
    witness: tuple[str, ...]
    message: str

    def to_json(self) -> dict:
        return {"constraint": self.constraint, "witness": list(self.witness),
                "message": self.message}


# constraints whose status can change when edges are added between G0 and T1 vertices
EDGE_SENSITIVE = (7, 8, 9)


def _edge_constraints(D: Derived, K: GadgetClass, tiled: Mapping[str, set[str]],
                      adj: Callable[[str, str], bool]) -> Violation | None:
    P = K.problem
    for direction, pairs, rules in (("horizontal", D.h_pairs, P.h_forbidden),
                                    ("vertical", D.v_pairs, P.v_forbidden)):
        if not rules:
            continue
        g1pairs = pairs[1]
        for g, g2 in sorted(pairs[0]):
            for t in tiled.get(g, ()):
                for h, i in D.assoc[t]:
                    for t2 in tiled.get(g2, ()):
                        for h2, j in D.assoc[t2]:
                            if (i, j) in rules and (h, h2) in g1pairs:
                                return Violation(7, (g, g2, h, h2, t, t2),
                                                 f"{direction} rule ({i}, {j}) broken")
    for g in sorted(D.grid_origins):
        if D.colors.get(g) != "G0":
            continue
        for h in sorted(D.grid_origins & D.full):
            by = D.tau[h]
            if all(any(not adj(g, t) for t in by[k]) for k in range(1, K.T + 1)):
                return Violation(8, (g, h), "grid origin not tiled from a full tileset at the origin")
    for direction, pairs in (("horizontal", D.h_pairs), ("vertical", D.v_pairs)):
        g1pairs = pairs[1]
        for g, g2 in sorted(pairs[0]):
            for t in tiled.get(g, ()):
                for h, _ in D.assoc[t]:
                    for hh, h2 in g1pairs:
                        if hh != h or h2 not in D.full:
                            continue
                        by = D.tau[h2]
                        if all(any(not adj(g2, u) for u in by[k]) for k in range(1, K.T + 1)):
                            return Violation(9, (g, g2, h, h2, t),
                                             f"{direction} successor not tiled from a full tileset")
    return None


def verify_membership(G: ColoredGraph, K: GadgetClass) -> tuple[bool, Violation | None]:
    """All nine constraints (plus the class's optional bans); returns the first violation."""
    for v in G.vertices:
        c = G.color(v)
        if c is not None and c not in PALETTE and c != DUMMY:
            return False, Violation(1, (v,), f"unknown predicate {c!r}")
        if c is None and K.no_plain:
            return False, Violation("plain", (v,), "uncolored vertex")
    D = derived_relations(G, K.T)
    for p in sorted(D.pred):
        if len(D.pred[p]) > 1:
            return False, Violation(2, (p, *sorted(D.pred[p])), "path vertex with two predecessors")
    for p in sorted(D.pred):
        if G.color(p) in ("O0", "O1"):
            return False, Violation(3, (p, *sorted(D.pred[p])), "origin with a predecessor")
    for g in G.vertices:
        if len(D.proj1.get(g, ())) > 1 or len(D.proj2.get(g, ())) > 1:
            return False, Violation(4, (g,), "grid vertex with two projections on one axis")
    for t in sorted(D.assoc):
        grids = {h for h, _ in D.assoc[t]}
        if len(grids) > 1:
            return False, Violation(5, (t, *sorted(grids)), "tile associated to two grid points")
    for t in sorted(D.assoc):
        types = Counter(h for h, _ in D.assoc[t])
        if any(c > 1 for c in types.values()):
            return False, Violation(6, (t,), "tile with two types")
    v = _edge_constraints(D, K, D.tiled, G.has_edge)
    if v is not None:
        return False, v
    if K.no_grid_edges:
        for e in G.edges:
            a, b = tuple(e)
            if G.color(a) in ("G0", "G1") and G.color(b) in ("G0", "G1"):
                return False, Violation("grid-edge", (a, b), "edge between grid vertices")
    return True, None


# ---------------------------------------------------------------------------
# canonical models


def _grid_model(n: int, s: int) -> ColoredGraph:
    if n < 1:
        raise GadgetError("n must be at least 1")
    verts, edges, cols = [], [], {}

    def add(v: str, c: str) -> None:
        verts.append(v)
        cols[v] = c

    for i in range(n):
        add(f"p{s}_{i}", f"O{s}" if i == 0 else f"P'{s}")
    for i in range(n - 1):
        a, b = f"c1{s}_{i}", f"c2{s}_{i}"
        add(a, "C1")
        add(b, "C2")
        edges += [(f"p{s}_{i}", a), (a, b), (b, f"p{s}_{i + 1}")]
    for i in range(n):
        for j in range(n):
            g = f"g{s}_{i}_{j}"
            add(g, f"G{s}")
            add(f"x{s}_{i}_{j}", "C3")
            add(f"y{s}_{i}_{j}", "C4")
            edges += [(g, f"x{s}_{i}_{j}"), (f"x{s}_{i}_{j}", f"p{s}_{i}"),
                      (g, f"y{s}_{i}_{j}"), (f"y{s}_{i}_{j}", f"p{s}_{j}")]
    return ColoredGraph(tuple(verts), frozenset(frozenset(e) for e in edges), cols)


def canonical_A(n: int) -> ColoredGraph:
    """Truncation of the grid-coding model: n path points, n*n grid points."""
    return _grid_model(n, 0)


def canonical_B(n: int, T: int) -> ColoredGraph:
    """Superscript-1 grid with a path of T tile vertices hanging off each grid point."""
    if T < 1:
        raise GadgetError("T must be at least 1")
    G = _grid_model(n, 1)
    verts, edges, cols = [], [], {}
    for i in range(n):
        for j in range(n):
            prev = f"g1_{i}_{j}"
            for k in range(1, T + 1):
                t = f"t1_{i}_{j}_{k}"
                verts.append(t)
                cols[t] = "T1"
                edges.append((prev, t))
                prev = t
    return G.add(verts, edges, cols)


def joint_embed(A: ColoredGraph, B: ColoredGraph, theta: Callable[[int, int], int],
                K: GadgetClass) -> ColoredGraph:
    """Disjoint union plus every edge (g, t) across the factors where g in G0 has
    coordinates (n, m) and t is a tile of type theta(n, m) at a G1 point with the same
    coordinates."""
    C0 = A.prefixed("a:").add(*_parts(B.prefixed("b:")))
    D = derived_relations(C0, K.T)
    g1_at: dict[tuple[int, int], list[str]] = {}
    for h in C0.vertices:
        if C0.color(h) == "G1":
            c = D.coordinates(h)
            if c is not None:
                g1_at.setdefault(c, []).append(h)
    queried = {}
    for g in C0.vertices:
        if C0.color(g) != "G0":
            continue
        if len(D.coords.get(g, ())) > 1:
            raise GadgetError(f"grid vertex {g!r} has several coordinates")
        c = D.coordinates(g)
        if c is not None:
            queried[g] = c
    check_tiling(K.problem, theta, set(queried.values()))
    new = []
    for g, c in sorted(queried.items()):
        k = theta(*c)
        for h in g1_at.get(c, ()):
            if h[:2] == g[:2]:
                continue
            new += [(g, t) for t in sorted(D.tau.get(h, {}).get(k, ()))]
    return C0.add((), new)


def _parts(G: ColoredGraph) -> tuple:
    return G.vertices, [tuple(e) for e in G.edges], G.colors


def extract_tiling(C: ColoredGraph, n: int, K: GadgetClass) -> dict[tuple[int, int], int]:
    D = derived_relations(C, K.T)
    g0 = {}
    g1 = {}
    for v in C.vertices:
        c = D.coordinates(v)
        if c is None:
            continue
        if C.color(v) == "G0":
            g0.setdefault(c, []).append(v)
        elif C.color(v) == "G1":
            g1.setdefault(c, []).append(v)
    out = {}
    for i, j in itertools.product(range(n), repeat=2):
        if (i, j) not in g0 or (i, j) not in g1:
            raise TilingError(f"no grid points with coordinates {(i, j)} in both grids")
        types = sorted({k for g in g0[(i, j)] for h in g1[(i, j)]
                        for k, ts in D.tau.get(h, {}).items() if ts & C.adj(g)})
        if not types:
            which = 8 if (i, j) == (0, 0) else 9
            raise TilingError(f"cell {(i, j)} is untiled, so constraint ({which}) fails")
        out[(i, j)] = types[0]
    return out


# ---------------------------------------------------------------------------
# exhaustive certificates


@dataclass
class JointEmbeddingSearch:
    scope: list[tuple[str, str]]
    witness: ColoredGraph | None
    witness_edges: list[tuple[str, str]] | None
    violations: list[int | str] = field(default_factory=list)   # per subset mask, when certified

    @property
    def certified(self) -> bool:
        return self.witness is None

    def summary(self) -> dict:
        return {"scope_size": len(self.scope), "subsets": 1 << len(self.scope),
                "certified": self.certified,
                "violations": dict(sorted(Counter(map(str, self.violations)).items())),
                "witness_edges": [list(e) for e in self.witness_edges or []]}


MAX_SCOPE = 24


def _union(A: ColoredGraph, B: ColoredGraph) -> ColoredGraph:
    return A.prefixed("a:").add(*_parts(B.prefixed("b:")))


def edge_scope(A: ColoredGraph, B: ColoredGraph) -> list[tuple[str, str]]:
    """G0 vertices of one factor against T1 vertices of the other, in the union's names."""
    out = []
    for X, Y, px, py in ((A, B, "a:", "b:"), (B, A, "b:", "a:")):
        gs = [px + v for v in X.vertices if X.color(v) == "G0"]
        ts = [py + v for v in Y.vertices if Y.color(v) == "T1"]
        out += [(g, t) for g in gs for t in ts]
    return out


def certify_no_joint_embedding(A: ColoredGraph, B: ColoredGraph, K: GadgetClass
                               ) -> JointEmbeddingSearch:
    """Try every edge subset of the G0-T1 scope on the disjoint union.

    Only constraints (7)-(9) look at G0-T1 edges, so they are re-evaluated per subset
    while (1)-(6) are checked once on the union.
    """
    for X, name in ((A, "A"), (B, "B")):
        ok, v = verify_membership(X, K)
        if not ok:
            raise GadgetError(f"{name} is not a member: {v.message}")
    C0 = _union(A, B)
    scope = edge_scope(A, B)
    if len(scope) > MAX_SCOPE:
        raise GadgetError(f"scope of {len(scope)} edges exceeds {MAX_SCOPE}")
    ok, v = verify_membership(C0.add(), GadgetClass(K.problem))
    if not ok and v.constraint not in EDGE_SENSITIVE:
        raise GadgetError(f"union already breaks constraint {v.constraint}")
    D = derived_relations(C0, K.T)
    violations: list[int | str] = []
    for mask in range(1 << len(scope)):
        chosen = [scope[b] for b in range(len(scope)) if mask >> b & 1]
        extra = {}
        for g, t in chosen:
            extra.setdefault(g, set()).add(t)
        tiled = {g: ts | {t for t in extra.get(g, ()) if t in D.assoc} for g, ts in D.tiled.items()}
        adj = lambda g, t, extra=extra: C0.has_edge(g, t) or t in extra.get(g, ())  # noqa: E731
        viol = _edge_constraints(D, K, tiled, adj)
        if viol is None:
            C = C0.add((), chosen)
            return JointEmbeddingSearch(scope, C, chosen, violations)
        violations.append(viol.constraint)
    return JointEmbeddingSearch(scope, None, None, violations)


def search_joint_embedding(A: ColoredGraph, B: ColoredGraph, K: GadgetClass
                           ) -> ColoredGraph | None:
    """Backtracking over the same scope; prunes on (7), which only grows with more edges,
    and checks each leaf with the full membership test."""
    C0 = _union(A, B)
    scope = edge_scope(A, B)
    if len(scope) > MAX_SCOPE:
        raise GadgetError(f"scope of {len(scope)} edges exceeds {MAX_SCOPE}")
    D = derived_relations(C0, K.T)
    only7 = GadgetClass(K.problem)

    def seven_ok(chosen: list[tuple[str, str]]) -> bool:
        extra: dict[str, set[str]] = {}
        for g, t in chosen:
            extra.setdefault(g, set()).add(t)
        tiled = {g: ts | {t for t in extra.get(g, ()) if t in D.assoc} for g, ts in D.tiled.items()}
        P = only7.problem
        for pairs, rules in ((D.h_pairs, P.h_forbidden), (D.v_pairs, P.v_forbidden)):
            for g, g2 in pairs[0]:
                for t in tiled.get(g, ()):
                    for h, i in D.assoc[t]:
                        for t2 in tiled.get(g2, ()):
                            for h2, j in D.assoc[t2]:
                                if (i, j) in rules and (h, h2) in pairs[1]:
                                    return False
        return True

    chosen: list[tuple[str, str]] = []

    def rec(i: int) -> ColoredGraph | None:
        if i == len(scope):
            C = C0.add((), chosen)
            return C if verify_membership(C, K)[0] else None
        for take in (True, False):
            if take:
                chosen.append(scope[i])
                if seven_ok(chosen):
                    r = rec(i + 1)
                    if r is not None:
                        return r
                chosen.pop()
            else:
                r = rec(i + 1)
                if r is not None:
                    return r
        return None

    return rec(0)


# ---------------------------------------------------------------------------
# plain graphs: necklaces, wedge and vee


def necklace(i: int) -> ColoredGraph:
    """Necklace of i + 2 triangles: shared vertices s0.., free vertices f0..; basepoint s0."""
    if i < 1:
        raise GadgetError("necklace index starts at 1")
    n = i + 2
    verts = [f"s{k}" for k in range(n)] + [f"f{k}" for k in range(n)]
    edges = []
    for k in range(n):
        a, b, f = f"s{k}", f"s{(k + 1) % n}", f"f{k}"
        edges += [(a, b), (a, f), (b, f)]
    return ColoredGraph(tuple(verts), frozenset(frozenset(e) for e in edges), {})


Antichain = Mapping[str, tuple[ColoredGraph, str]]


def default_antichain(colors: Iterable[str] | None = None) -> dict[str, tuple[ColoredGraph, str]]:
    """Palette color number k (dummy last) is coded by necklace(k)."""
    pal = list(PALETTE) + [DUMMY]
    if colors is not None:
        extra = sorted(set(colors) - set(pal))
        pal += extra
    return {c: (necklace(k + 1), "s0") for k, c in enumerate(pal)}


def _copies(H: ColoredGraph, N: ColoredGraph) -> list[frozenset[str]]:
    """Vertex sets of induced copies of the 2-connected graph N, searched block by block."""
    out = set()
    for b in blocks(H):
        if len(b) < len(N):
            continue
        sub = H.induced(b).plain()
        for m in induced_embeddings(N, sub, use_colors=False):
            out.add(frozenset(m.values()))
    return sorted(out, key=lambda s: sorted(H._pos[v] for v in s))


def in_C_star(G: ColoredGraph, antichain: Antichain) -> bool:
    if any(G.color(v) is None for v in G.vertices):
        return False
    return not any(first_induced_embedding(N, G.plain(), use_colors=False) is not None
                   for N, _ in _distinct(antichain))


def _distinct(antichain: Antichain) -> list[tuple[ColoredGraph, str]]:
    seen, out = set(), []
    for c in antichain:
        N, b = antichain[c]
        key = (len(N), len(N.edges))
        if key not in seen:
            seen.add(key)
            out.append((N, b))
    return out


def wedge(G: ColoredGraph, antichain: Antichain | None = None) -> ColoredGraph:
    """Plain graph: each vertex of color c becomes the basepoint of a fresh copy of its graph."""
    antichain = antichain or default_antichain(G.colors.values())
    if not in_C_star(G, antichain):
        raise GadgetError("input must color every vertex and contain no copy of a coding graph")
    out = G.plain()
    for v in G.vertices:
        c = G.color(v)
        if c not in antichain:
            raise GadgetError(f"palette exhausted: no coding graph for {c!r}")
        N, base = antichain[c]
        out = free_join(out, N, {base: v}, f"{v}/")
    return out


def vee(H: ColoredGraph, antichain: Antichain | None = None) -> ColoredGraph:
    """Keep the basepoint of every coding copy that is free over it, colored accordingly."""
    antichain = antichain or default_antichain()
    kept: dict[str, str] = {}
    for c, (N, _) in antichain.items():
        if len(N) > len(H):
            continue
        for S in _copies(H, N):
            ext = [x for x in S if not H.adj(x) <= S]
            if len(ext) > 1:
                continue
            base = ext[0] if ext else min(S, key=H._pos.__getitem__)
            kept.setdefault(base, c)
    return H.induced(kept).plain().add(colors=kept)


def h_constraints(k: int, antichain: Antichain | None = None
                  ) -> tuple[list[ColoredGraph], list[ColoredGraph]]:
    """H1: a coding copy with external neighbors at two distinct vertices (one shared
    outside vertex, or two outside vertices, adjacent or not). H2: two coding copies
    glued at their basepoints, for every unordered pair with repetition."""
    antichain = antichain or default_antichain()
    graphs = [antichain[c] for c in list(antichain)[:k]]
    h1: list[ColoredGraph] = []
    for N, _ in graphs:
        seen: list[ColoredGraph] = []
        for a, b in itertools.combinations(N.vertices, 2):
            for shape in ("shared", "apart", "linked"):
                if shape == "shared":
                    G = N.add(["u"], [("u", a), ("u", b)])
                else:
                    G = N.add(["u", "w"], [("u", a), ("w", b)] + ([("u", "w")] if shape == "linked" else []))
                if not any(isomorphic(G, S, use_colors=False) for S in seen):
                    seen.append(G)
        h1 += seen
    h2 = []
    for (i, (Ni, bi)), (j, (Nj, bj)) in itertools.combinations_with_replacement(enumerate(graphs), 2):
        G = Ni.prefixed("L")
        G = free_join(G, Nj, {bj: "L" + bi}, "R")
        h2.append(G)
    return h1, h2


def image_conditions(G: ColoredGraph, antichain: Antichain | None = None) -> tuple[bool, str]:
    """Is G in the image of wedge (free copies, one copy per basepoint, full cover)?"""
    antichain = antichain or default_antichain()
    covered: set[str] = set()
    base_of: dict[str, int] = {}
    for c, (N, _) in antichain.items():
        if len(N) > len(G):
            continue
        for S in _copies(G, N):
            ext = [x for x in S if not G.adj(x) <= S]
            if len(ext) > 1:
                return False, f"copy of the {c} graph is not free over one vertex"
            base = ext[0] if ext else min(S, key=G._pos.__getitem__)
            base_of[base] = base_of.get(base, 0) + 1
            if base_of[base] > 1:
                return False, f"vertex {base} is the basepoint of two copies"
            covered |= S
    missing = [v for v in G.vertices if v not in covered]
    if missing:
        return False, f"vertex {missing[0]} is in no coding copy"
    return True, ""


def complete_to_image(G: ColoredGraph, antichain: Antichain | None = None) -> ColoredGraph:
    """Attach a dummy coding copy over every vertex not yet inside a free coding copy."""
    antichain = antichain or default_antichain()
    covered: set[str] = set()
    for c, (N, _) in antichain.items():
        for S in _copies(G, N):
            if len([x for x in S if not G.adj(x) <= S]) <= 1:
                covered |= S
    N, base = antichain[DUMMY]
    out = G
    for v in G.vertices:
        if v not in covered:
            out = free_join(out, N, {base: v}, f"{v}/d/")
    return out


@dataclass
class PureGraphClass:
    """Plain-graph rendering of a colored class: coding antichain, H1/H2 families and
    the wedge images of the colored forbidden patterns supplied."""
    antichain: dict[str, tuple[ColoredGraph, str]]
    h1: list[ColoredGraph]
    h2: list[ColoredGraph]
    patterns: list[ColoredGraph]
    gadget: GadgetClass | None = None

    @property
    def palette_size(self) -> int:
        return len(self.antichain)

    def member(self, G: ColoredGraph) -> tuple[bool, str]:
        """Membership through vee: free copies only, then the colored class on the preimage."""
        ok, msg = image_conditions(complete_to_image(G, self.antichain), self.antichain)
        if not ok:
            return False, msg
        if self.gadget is not None:
            pre = vee(complete_to_image(G, self.antichain), self.antichain)
            pre = pre.add(colors={})
            ok, v = verify_membership(pre, self.gadget)
            if not ok:
                return False, v.message
        return True, ""


def compile_pure_graph_class(K: GadgetClass | None = None,
                             colored_patterns: Sequence[ColoredGraph] = (),
                             h_limit: int = 2) -> PureGraphClass:
    """h_limit caps how many coding graphs get explicit H1/H2 lists (they grow fast)."""
    antichain = default_antichain()
    used = {c for P in colored_patterns for c in P.colors.values()}
    if DUMMY in used:
        raise GadgetError("the dummy color may not appear in a constraint")
    h1, h2 = h_constraints(h_limit, antichain)
    pats = [wedge(P, antichain) for P in colored_patterns]
    return PureGraphClass(antichain, h1, h2, pats, K)


# ---------------------------------------------------------------------------
# homomorphism variant


def w5() -> ColoredGraph:
    return wheel(5)


def augment(G: ColoredGraph, color: str | None = None, prefix: str = "w") -> ColoredGraph:
    """Freely join a copy of W5 over every non-adjacent pair, glued at rim vertices 0 and 2."""
    W = w5()
    out = G
    for k, (u, v) in enumerate(itertools.combinations(G.vertices, 2)):
        if G.has_edge(u, v):
            continue
        out = free_join(out, W, {"0": u, "2": v}, f"{prefix}{k}.", color)
    return out


def n_plus(i: int) -> ColoredGraph:
    return augment(necklace(i))


def canonical_A_plus(n: int) -> ColoredGraph:
    return augment(canonical_A(n), "C5")


def canonical_B_plus(n: int, T: int) -> ColoredGraph:
    return augment(canonical_B(n, T), "C5")


@dataclass
class JHPGadget:
    problem: TilingProblem
    antichain: list[ColoredGraph]
    degraded: list[bool]

    @property
    def any_degraded(self) -> bool:
        return any(self.degraded)


def jhp_gadget(P: TilingProblem, k: int = 14, core_budget: int = 50_000,
               core_size_limit: int = 40) -> JHPGadget:
    """Coding graphs are cores of the augmented necklaces; when the core search is out of
    budget the augmented necklace itself is used and the slot is flagged."""
    graphs, flags = [], []
    for i in range(1, k + 1):
        N = n_plus(i)
        if len(N) > core_size_limit:
            graphs.append(N)
            flags.append(True)
            continue
        c = core(N, core_budget, use_colors=False)
        if isinstance(c, Unresolved):
            graphs.append(N)
            flags.append(True)
        else:
            graphs.append(c)
            flags.append(False)
    return JHPGadget(P, graphs, flags)


def has_hom_image(H: ColoredGraph, G: ColoredGraph, budget: int | None = None) -> bool:
    """Does G contain a homomorphic image of H (the identity image included)?"""
    return first_homomorphism(H.plain(), G.plain(), use_colors=False, budget=budget) is not None


def check_plus_invariants(G: ColoredGraph) -> dict[str, bool]:
    return {"two_connected": is_2connected(G), "k4_free": not contains_K4(G),
            "edges_in_triangles": every_edge_in_triangle(G)}


def images_contain_K4(G: ColoredGraph, max_vertices: int) -> bool:
    return all(contains_K4(q) for q in proper_images(G, max_vertices))
