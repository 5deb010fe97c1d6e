"""Colored graphs: induced and non-induced embeddings, homomorphisms, blocks and cores."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import networkx as nx

PALETTE = ("O0", "O1", "P'0", "P'1", "G0", "G1", "T1", "C1", "C2", "C3", "C4", "C5")
DUMMY = "D"


class GraphError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class ColoredGraph:
    """Simple graph on ``vertices``; ``colors`` maps a vertex to at most one color tag."""
    vertices: tuple[str, ...]
    edges: frozenset = frozenset()
    colors: Mapping[str, str] = field(default_factory=dict)
    _adj: dict = field(init=False, repr=False, compare=False)
    _pos: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        verts = tuple(str(v) for v in self.vertices)
        if len(set(verts)) != len(verts):
            raise GraphError("duplicate vertex ids")
        pos = {v: i for i, v in enumerate(verts)}
        edges = set()
        for e in self.edges:
            ends = tuple(e)
            if len(ends) == 1:
                raise GraphError(f"loop at {ends[0]!r}")
            if len(ends) != 2:
                raise GraphError(f"edge {ends!r} does not have two endpoints")
            a, b = ends
            if a == b:
                raise GraphError(f"loop at {a!r}")
            if a not in pos or b not in pos:
                raise GraphError(f"edge {a!r}-{b!r} has an unknown endpoint")
            edges.add(frozenset((a, b)))
        colors = {str(v): str(c) for v, c in dict(self.colors).items()
                  if c is not None and c != "plain"}
        for v in colors:
            if v not in pos:
                raise GraphError(f"color given for unknown vertex {v!r}")
        adj = {v: set() for v in verts}
        for e in edges:
            a, b = tuple(e)
            adj[a].add(b)
            adj[b].add(a)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", frozenset(edges))
        object.__setattr__(self, "colors", colors)
        object.__setattr__(self, "_adj", {v: frozenset(n) for v, n in adj.items()})
        object.__setattr__(self, "_pos", pos)

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v: str) -> bool:
        return v in self._pos

    def adj(self, v: str) -> frozenset:
        return self._adj[v]

    def has_edge(self, a: str, b: str) -> bool:
        return b in self._adj[a]

    def color(self, v: str) -> str | None:
        return self.colors.get(v)

    def with_color(self, c: str | None) -> list[str]:
        return [v for v in self.vertices if self.colors.get(v) == c]

    def induced(self, vs: Iterable[str]) -> "ColoredGraph":
        vs = [v for v in self.vertices if v in set(vs)]
        keep = set(vs)
        return ColoredGraph(tuple(vs), frozenset(e for e in self.edges if e <= keep),
                            {v: c for v, c in self.colors.items() if v in keep})

    def plain(self) -> "ColoredGraph":
        return ColoredGraph(self.vertices, self.edges, {})

    def relabel(self, f: Mapping[str, str]) -> "ColoredGraph":
        return ColoredGraph(tuple(f[v] for v in self.vertices),
                            frozenset(frozenset(f[x] for x in e) for e in self.edges),
                            {f[v]: c for v, c in self.colors.items()})

    def prefixed(self, prefix: str) -> "ColoredGraph":
        return self.relabel({v: prefix + v for v in self.vertices})

    def add(self, vertices: Iterable[str] = (), edges: Iterable[tuple[str, str]] = (),
            colors: Mapping[str, str] | None = None) -> "ColoredGraph":
        return ColoredGraph(self.vertices + tuple(vertices),
                            self.edges | {frozenset(e) for e in edges},
                            {**self.colors, **(colors or {})})

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        for v in self.vertices:
            g.add_node(v, color=self.colors.get(v))
        g.add_edges_from(tuple(e) for e in self.edges)
        return g

    def to_json(self) -> dict:
        return {"vertices": [{"id": v, "color": self.colors[v]} if v in self.colors else {"id": v}
                             for v in self.vertices],
                "edges": sorted(sorted(e) for e in self.edges)}

    @classmethod
    def from_json(cls, data: Mapping) -> "ColoredGraph":
        verts, colors = [], {}
        for item in data["vertices"]:
            if isinstance(item, str):
                verts.append(item)
                continue
            verts.append(str(item["id"]))
            if item.get("color") not in (None, "plain"):
                colors[str(item["id"])] = item["color"]
        return cls(tuple(verts), frozenset(frozenset(map(str, e)) for e in data.get("edges", [])),
                   colors)

    def to_dot(self, name: str = "G") -> str:
        lines = [f"graph {name} {{"]
        for v in self.vertices:
            c = self.colors.get(v)
            label = f'{v}\\n{c}' if c else v
            lines.append(f'  "{v}" [label="{label}"];')
        for a, b in sorted(sorted(e) for e in self.edges):
            lines.append(f'  "{a}" -- "{b}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def graph(n_or_vertices, edges: Iterable = (), colors: Mapping | None = None) -> ColoredGraph:
    verts = tuple(str(v) for v in (range(n_or_vertices) if isinstance(n_or_vertices, int)
                                   else n_or_vertices))
    return ColoredGraph(verts, frozenset(frozenset(map(str, e)) for e in edges), colors or {})


def complete(n: int) -> ColoredGraph:
    return graph(n, itertools.combinations(range(n), 2))


def cycle(n: int) -> ColoredGraph:
    return graph(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> ColoredGraph:
    """Path on n vertices."""
    return graph(n, [(i, i + 1) for i in range(n - 1)])


def wheel(n: int) -> ColoredGraph:
    """n-cycle on 0..n-1 plus hub 'h' adjacent to all of them."""
    c = cycle(n)
    return c.add(["h"], [("h", str(i)) for i in range(n)])


def disjoint_union(*gs: ColoredGraph, prefixes: Sequence[str] | None = None) -> ColoredGraph:
    prefixes = prefixes or [f"{i}:" for i in range(len(gs))]
    out = ColoredGraph((), frozenset(), {})
    for g, p in zip(gs, prefixes):
        h = g.prefixed(p)
        out = out.add(h.vertices, [tuple(e) for e in h.edges], h.colors)
    return out


# ---------------------------------------------------------------------------
# search


def _order(H: ColoredGraph) -> list[str]:
    """Degree-descending, then always the vertex with most already-placed neighbors."""
    left = set(H.vertices)
    order: list[str] = []
    placed: set[str] = set()
    while left:
        v = max(sorted(left), key=lambda u: (len(H.adj(u) & placed), len(H.adj(u))))
        order.append(v)
        placed.add(v)
        left.remove(v)
    return order


def _search(H: ColoredGraph, G: ColoredGraph, mode: str, budget: int | None = None,
            use_colors: bool = True) -> Iterator[dict[str, str]]:
    """mode: 'induced', 'subgraph' (injective, edges kept) or 'hom'."""
    order = _order(H)
    m: dict[str, str] = {}
    used: set[str] = set()
    steps = [0]
    gverts = G.vertices

    def candidates(v: str) -> Iterable[str]:
        placed_nb = [m[u] for u in H.adj(v) if u in m]
        if placed_nb:
            cand = set(G.adj(placed_nb[0]))
            for w in placed_nb[1:]:
                cand &= G.adj(w)
            return sorted(cand, key=G._pos.__getitem__)
        return gverts

    def ok(v: str, w: str) -> bool:
        if use_colors and H.color(v) != G.color(w):
            return False
        if mode != "hom":
            if w in used:
                return False
            if mode == "induced":
                for u, x in m.items():
                    if (u in H.adj(v)) != (x in G.adj(w)):
                        return False
                return True
        for u in H.adj(v):
            if u in m and m[u] not in G.adj(w):
                return False
        return True

    def rec(i: int) -> Iterator[dict[str, str]]:
        if i == len(order):
            yield dict(m)
            return
        v = order[i]
        for w in candidates(v):
            steps[0] += 1
            if budget is not None and steps[0] > budget:
                raise BudgetExceeded(f"search exceeded {budget} steps")
            if ok(v, w):
                m[v] = w
                if mode != "hom":
                    used.add(w)
                yield from rec(i + 1)
                del m[v]
                used.discard(w)

    if mode != "hom" and len(H) > len(G):
        return iter(())
    return rec(0)


def induced_embeddings(H: ColoredGraph, G: ColoredGraph, use_colors: bool = True) -> list[dict]:
    return list(_search(H, G, "induced", use_colors=use_colors))


def non_induced_embeddings(H: ColoredGraph, G: ColoredGraph, use_colors: bool = True) -> list[dict]:
    return list(_search(H, G, "subgraph", use_colors=use_colors))


def homomorphisms(H: ColoredGraph, G: ColoredGraph, use_colors: bool = True) -> list[dict]:
    return list(_search(H, G, "hom", use_colors=use_colors))


def first_induced_embedding(H, G, use_colors: bool = True, budget: int | None = None):
    return next(_search(H, G, "induced", budget, use_colors), None)


def _hom_domains(H: ColoredGraph, G: ColoredGraph, use_colors: bool,
                 link_budget: int = 20_000) -> dict[str, set[str]] | None:
    """Candidate images per vertex of H, pruned by neighbourhoods and arc consistency.

    A homomorphism maps the neighbourhood of v into that of its image, so the graph
    induced on N(v) must map into the graph induced on N(w). Checks that run out of
    budget keep the candidate.
    """
    dom = {v: {w for w in G.vertices if not use_colors or H.color(v) == G.color(w)}
           for v in H.vertices}
    links: dict[str, ColoredGraph] = {}
    for v in H.vertices:
        LH = H.induced(H.adj(v))
        if not LH.edges:
            continue
        keep = set()
        for w in dom[v]:
            LG = links.get(w)
            if LG is None:
                LG = links[w] = G.induced(G.adj(w))
            try:
                if next(_search(LH, LG, "hom", link_budget, use_colors), None) is not None:
                    keep.add(w)
            except BudgetExceeded:
                keep.add(w)
        dom[v] = keep
    queue = [(u, v) for e in H.edges for u, v in (tuple(e), tuple(e)[::-1])]
    while queue:
        u, v = queue.pop()
        revised = {a for a in dom[u] if G.adj(a) & dom[v]}
        if revised != dom[u]:
            dom[u] = revised
            if not revised:
                return None
            queue += [(x, u) for x in H.adj(u) if x != v]
    if any(not d for d in dom.values()):
        return None
    return dom


def first_homomorphism(H, G, use_colors: bool = True, budget: int | None = None):
    """One homomorphism or None; backtracking over pruned domains with forward checking."""
    return _first_hom(H, G, use_colors, budget)[0]


def _first_hom(H, G, use_colors: bool, budget: int | None) -> tuple[dict[str, str] | None, int]:
    """As first_homomorphism, also returning the number of search steps taken."""
    dom = _hom_domains(H, G, use_colors)
    if dom is None:
        return None, 1
    order = _order(H)
    m: dict[str, str] = {}
    steps = [0]

    def rec(i: int, dom: dict[str, set[str]]) -> dict[str, str] | None:
        if i == len(order):
            return dict(m)
        v = order[i]
        for w in sorted(dom[v], key=G._pos.__getitem__):
            steps[0] += 1
            if budget is not None and steps[0] > budget:
                raise BudgetExceeded(f"search exceeded {budget} steps")
            nd = dict(dom)
            dead = False
            for u in H.adj(v):
                if u in m:
                    if m[u] not in G.adj(w):
                        dead = True
                        break
                else:
                    nd[u] = dom[u] & G.adj(w)
                    if not nd[u]:
                        dead = True
                        break
            if dead:
                continue
            m[v] = w
            r = rec(i + 1, nd)
            if r is not None:
                return r
            del m[v]
        return None

    return rec(0, dom), steps[0] + 1


def embeds(H: ColoredGraph, G: ColoredGraph, use_colors: bool = True) -> bool:
    return first_induced_embedding(H, G, use_colors) is not None


def isomorphic(H: ColoredGraph, G: ColoredGraph, use_colors: bool = True) -> bool:
    return len(H) == len(G) and len(H.edges) == len(G.edges) and embeds(H, G, use_colors)


# ---------------------------------------------------------------------------
# structure


def blocks(G: ColoredGraph) -> list[frozenset[str]]:
    """Vertex sets of the biconnected components (bridges included, isolated vertices excluded)."""
    return sorted((frozenset(b) for b in nx.biconnected_components(G.to_networkx())),
                  key=lambda b: sorted(G._pos[v] for v in b))


def is_2connected(G: ColoredGraph) -> bool:
    return len(G) >= 3 and nx.is_connected(G.to_networkx()) and nx.is_biconnected(G.to_networkx())


def contains_K4(G: ColoredGraph) -> bool:
    for a in G.vertices:
        for b in G.adj(a):
            if b <= a:
                continue
            common = G.adj(a) & G.adj(b)
            for c, d in itertools.combinations(sorted(common), 2):
                if G.has_edge(c, d):
                    return True
    return False


def every_edge_in_triangle(G: ColoredGraph) -> bool:
    return all(G.adj(a) & G.adj(b) for a, b in (tuple(e) for e in G.edges))


@dataclass
class Unresolved:
    reason: str
    partial: ColoredGraph | None = None


def core(G: ColoredGraph, budget: int = 200_000, use_colors: bool = True) -> ColoredGraph | Unresolved:
    """Minimal retract, by repeatedly mapping G into G minus one vertex."""
    cur = G
    spent = 0
    while True:
        shrunk = False
        for v in cur.vertices:
            target = cur.induced([u for u in cur.vertices if u != v])
            try:
                h, used = _first_hom(cur, target, use_colors, budget - spent)
            except BudgetExceeded:
                return Unresolved(f"budget of {budget} steps exceeded", cur)
            spent += used
            if spent > budget:
                return Unresolved(f"budget of {budget} steps exceeded", cur)
            if h is not None:
                cur = cur.induced(set(h.values()))
                shrunk = True
                break
        if not shrunk:
            return cur


def is_core(G: ColoredGraph, use_colors: bool = True) -> bool:
    """Every endomorphism is an automorphism (checked by enumeration)."""
    n = len(G)
    return all(len(set(h.values())) == n for h in homomorphisms(G, G, use_colors))


def quotient(G: ColoredGraph, blocks_: Sequence[Sequence[str]]) -> ColoredGraph | None:
    """Image of G under identifying each block; None if a block spans an edge."""
    rep = {}
    for i, b in enumerate(blocks_):
        for v in b:
            rep[v] = f"q{i}"
    edges = set()
    for e in G.edges:
        a, b = (rep[x] for x in e)
        if a == b:
            return None
        edges.add(frozenset((a, b)))
    return ColoredGraph(tuple(f"q{i}" for i in range(len(blocks_))), frozenset(edges), {})


def set_partitions(items: Sequence[str]) -> Iterator[list[list[str]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for p in set_partitions(rest):
        yield [[first]] + p
        for i in range(len(p)):
            yield p[:i] + [[first] + p[i]] + p[i + 1:]


def proper_images(G: ColoredGraph, max_vertices: int | None = None) -> Iterator[ColoredGraph]:
    """Quotients of G by non-trivial partitions into independent sets.

    Every proper surjective homomorphic image contains one of these as a spanning subgraph.
    """
    for p in set_partitions(list(G.vertices)):
        if len(p) == len(G) or (max_vertices is not None and len(p) > max_vertices):
            continue
        q = quotient(G, p)
        if q is not None:
            yield q


def free_join(G: ColoredGraph, H: ColoredGraph, glue: Mapping[str, str], prefix: str,
              color: str | None = None) -> ColoredGraph:
    """Attach a fresh copy of H to G, identifying H-vertex k with G-vertex glue[k]."""
    f = {v: glue.get(v, prefix + v) for v in H.vertices}
    new = [f[v] for v in H.vertices if v not in glue]
    cols = {f[v]: c for v, c in H.colors.items() if v not in glue}
    if color is not None:
        cols.update({v: color for v in new})
    return G.add(new, [tuple(f[x] for x in e) for e in H.edges], cols)
