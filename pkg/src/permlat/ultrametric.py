"""Lattice-valued ultrametric spaces.

A space stores its distances as lattice element *indices*; names are only used
at the JSON boundary and in error messages.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .lattice import Lattice, LatticeError, is_distributive


class SpaceError(ValueError):
    """Malformed distance matrix or point list."""


class AmalgamationError(ValueError):
    """An amalgamation problem cannot be completed canonically."""


class NonDistributiveFailure(AmalgamationError):
    def __init__(self, message: str, triple: tuple[str, str, str]):
        super().__init__(message)
        self.triple = triple


@dataclass(frozen=True)
class Violation:
    kind: str                 # "diagonal", "zero", "triangle"
    points: tuple[str, ...]

    def to_json(self) -> dict:
        return {"kind": self.kind, "points": list(self.points)}


@dataclass(frozen=True)
class UltraSpace:
    lattice: Lattice
    points: tuple[str, ...]
    dist: tuple[tuple[int, ...], ...]
    _pos: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        L = self.lattice
        pts = tuple(str(p) for p in self.points)
        n = len(pts)
        if len(set(pts)) != n:
            raise SpaceError("duplicate point ids")
        if len(self.dist) != n or any(len(r) != n for r in self.dist):
            raise SpaceError(f"dist must be a {n}x{n} matrix")
        try:
            d = tuple(tuple(v if isinstance(v, int) else L.index(v) for v in row)
                      for row in self.dist)
        except LatticeError as exc:
            raise SpaceError(str(exc)) from None
        for i in range(n):
            for j in range(i + 1, n):
                if d[i][j] != d[j][i]:
                    raise SpaceError(f"dist is not symmetric at {pts[i]!r}, {pts[j]!r}")
            if any(not 0 <= v < L.size for v in d[i]):
                raise SpaceError("distance index out of range")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "_pos", {p: i for i, p in enumerate(pts)})

    def __len__(self) -> int:
        return len(self.points)

    def pos(self, p: str) -> int:
        try:
            return self._pos[p]
        except KeyError:
            raise SpaceError(f"unknown point {p!r}") from None

    def d(self, x: str, y: str) -> str:
        return self.lattice.elements[self.dist[self.pos(x)][self.pos(y)]]

    def restrict(self, pts: Sequence[str]) -> "UltraSpace":
        idx = [self.pos(p) for p in pts]
        return UltraSpace(self.lattice, tuple(pts),
                          tuple(tuple(self.dist[i][j] for j in idx) for i in idx))

    def isometric_to(self, other: "UltraSpace") -> bool:
        """Same point ids with the same distances (ignoring point order)."""
        if set(self.points) != set(other.points) or self.lattice != other.lattice:
            return False
        return all(self.d(x, y) == other.d(x, y) for x in self.points for y in self.points)

    def to_json(self) -> dict:
        names = self.lattice.elements
        return {"lattice": self.lattice.to_json(), "points": list(self.points),
                "dist": [[names[v] for v in row] for row in self.dist]}

    @classmethod
    def from_json(cls, data: Mapping) -> "UltraSpace":
        try:
            L = Lattice.from_json(data["lattice"])
            return cls(L, tuple(data["points"]), tuple(tuple(r) for r in data["dist"]))
        except (KeyError, TypeError) as exc:
            raise SpaceError(f"malformed space JSON: {exc}") from None

    @classmethod
    def single(cls, L: Lattice, name: str = "x") -> "UltraSpace":
        return cls(L, (name,), ((L.bottom,),))


def first_violation(L: Lattice, d: Sequence[Sequence[int]], allow_zero: bool = False
                    ) -> tuple[str, tuple[int, ...]] | None:
    """Index-level check; triangle scan is pairs a<b, then the third point ascending."""
    n = len(d)
    bot = L.bottom
    for a in range(n):
        if d[a][a] != bot:
            return "diagonal", (a,)
    if not allow_zero:
        for a in range(n):
            for b in range(a + 1, n):
                if d[a][b] == bot:
                    return "zero", (a, b)
    leq, join = L.leq, L._join
    for a in range(n):
        da = d[a]
        for b in range(a + 1, n):
            ab = da[b]
            for c in range(n):
                if c == a or c == b:
                    continue
                if not leq[ab][join[da[c]][d[c][b]]]:
                    return "triangle", (a, b, c)
    return None


def validate_space(S: UltraSpace) -> tuple[bool, Violation | None]:
    v = first_violation(S.lattice, S.dist)
    if v is None:
        return True, None
    kind, idx = v
    return False, Violation(kind, tuple(S.points[i] for i in idx))


# ---------------------------------------------------------------------------
# equivalence-structure view


@dataclass(frozen=True)
class EquivStructure:
    """``relations[name]`` is a class label per point (label = first point index in the class)."""
    lattice: Lattice
    points: tuple[str, ...]
    relations: Mapping[str, tuple[int, ...]]

    def __post_init__(self) -> None:
        rel = {}
        for lam, labels in self.relations.items():
            self.lattice.index(lam)
            rel[lam] = _normalize_labels(labels)
        missing = set(self.lattice.elements) - set(rel)
        if missing:
            raise SpaceError(f"relations missing for {sorted(missing)}")
        object.__setattr__(self, "relations", dict(sorted(rel.items(),
                                                         key=lambda kv: self.lattice.index(kv[0]))))

    def related(self, lam: str, x: int, y: int) -> bool:
        lab = self.relations[lam]
        return lab[x] == lab[y]

    def classes(self, lam: str) -> list[list[str]]:
        out: dict[int, list[str]] = {}
        for i, lab in enumerate(self.relations[lam]):
            out.setdefault(lab, []).append(self.points[i])
        return list(out.values())

    def to_json(self) -> dict:
        return {"lattice": self.lattice.to_json(), "points": list(self.points),
                "relations": {k: self.classes(k) for k in self.relations}}

    @classmethod
    def from_json(cls, data: Mapping) -> "EquivStructure":
        L = Lattice.from_json(data["lattice"])
        pts = tuple(data["points"])
        pos = {p: i for i, p in enumerate(pts)}
        rel = {}
        for lam, classes in data["relations"].items():
            labels = [-1] * len(pts)
            for k, cls_ in enumerate(classes):
                for p in cls_:
                    labels[pos[p]] = k
            if -1 in labels:
                raise SpaceError(f"relation {lam!r} does not partition the points")
            rel[lam] = tuple(labels)
        return cls(L, pts, rel)


def _normalize_labels(labels: Sequence) -> tuple[int, ...]:
    first: dict = {}
    out = []
    for i, lab in enumerate(labels):
        out.append(first.setdefault(lab, i))
    return tuple(out)


def to_equiv(S: UltraSpace) -> EquivStructure:
    L = S.lattice
    n = len(S)
    rel = {}
    for lam in range(L.size):
        labels = []
        for x in range(n):
            labels.append(next(y for y in range(n) if L.leq[S.dist[x][y]][lam]))
        rel[L.elements[lam]] = tuple(labels)
    return EquivStructure(L, S.points, rel)


def from_equiv(Q: EquivStructure) -> UltraSpace:
    L = Q.lattice
    n = len(Q.points)
    names = L.elements
    for x in range(n):
        for y in range(n):
            if Q.related(names[L.bottom], x, y) != (x == y):
                raise SpaceError("the relation at the bottom must be equality")
            if not Q.related(names[L.top], x, y):
                raise SpaceError("the relation at the top must be total")
    for a in range(L.size):
        for b in range(a + 1, L.size):
            m = L.meet_i(a, b)
            for x in range(n):
                for y in range(x + 1, n):
                    both = Q.related(names[a], x, y) and Q.related(names[b], x, y)
                    if both != Q.related(names[m], x, y):
                        raise SpaceError(f"relations are not meet-preserving at "
                                         f"{names[a]!r}, {names[b]!r}")
    dist = [[L.bottom] * n for _ in range(n)]
    for x in range(n):
        for y in range(n):
            if x != y:
                dist[x][y] = L.meet_all(lam for lam in range(L.size)
                                        if Q.related(names[lam], x, y))
    return UltraSpace(L, Q.points, tuple(tuple(r) for r in dist))


# ---------------------------------------------------------------------------
# amalgamation


def precanonical_i(L: Lattice, e: Sequence[int], e2: Sequence[int]) -> int:
    if len(e) != len(e2):
        raise AmalgamationError("distance rows have different lengths")
    if not e:
        raise AmalgamationError("empty base: use joint embedding (all cross distances top)")
    out = L.top
    join, meet = L._join, L._meet
    for a, b in zip(e, e2):
        out = meet[out][join[a][b]]
    return out


def precanonical(L: Lattice, e: Sequence[str], e2: Sequence[str]) -> str:
    return L.elements[precanonical_i(L, [L.index(x) for x in e], [L.index(x) for x in e2])]


@dataclass(frozen=True)
class AmalgamProblem:
    base: UltraSpace
    factor1: UltraSpace
    factor2: UltraSpace

    def __post_init__(self) -> None:
        b = set(self.base.points)
        p1, p2 = set(self.factor1.points), set(self.factor2.points)
        if not (self.base.lattice == self.factor1.lattice == self.factor2.lattice):
            raise AmalgamationError("all three spaces must share one lattice")
        if p1 & p2 != b:
            raise AmalgamationError("factor point sets must intersect exactly in the base")
        for f in (self.factor1, self.factor2):
            for x in self.base.points:
                for y in self.base.points:
                    if f.d(x, y) != self.base.d(x, y):
                        raise AmalgamationError(f"base distance {x!r},{y!r} differs in a factor")

    def to_json(self) -> dict:
        return {"base": self.base.to_json(), "factor1": self.factor1.to_json(),
                "factor2": self.factor2.to_json()}

    @classmethod
    def from_json(cls, data: Mapping) -> "AmalgamProblem":
        return cls(UltraSpace.from_json(data["base"]), UltraSpace.from_json(data["factor1"]),
                   UltraSpace.from_json(data["factor2"]))


def _amalgam_matrix(P: AmalgamProblem) -> tuple[list[str], list[list[int]], list[str], list[str]]:
    L = P.base.lattice
    base = list(P.base.points)
    f1, f2 = P.factor1, P.factor2
    extra1 = [p for p in f1.points if p not in P.base._pos]
    extra2 = [p for p in f2.points if p not in P.base._pos]
    pts = list(f1.points) + extra2
    n = len(pts)
    d = [[L.bottom] * n for _ in range(n)]
    for i, x in enumerate(f1.points):
        for j, y in enumerate(f1.points):
            d[i][j] = f1.dist[i][j]
    off = len(f1.points)
    for i, x in enumerate(extra2):
        for j, y in enumerate(extra2):
            d[off + i][off + j] = f2.dist[f2.pos(x)][f2.pos(y)]
        for b in base:
            v = f2.dist[f2.pos(x)][f2.pos(b)]
            d[off + i][f1.pos(b)] = d[f1.pos(b)][off + i] = v
    for x in extra1:
        row1 = [f1.dist[f1.pos(x)][f1.pos(b)] for b in base]
        for i, y in enumerate(extra2):
            row2 = [f2.dist[f2.pos(y)][f2.pos(b)] for b in base]
            v = precanonical_i(L, row1, row2) if base else L.top
            d[f1.pos(x)][off + i] = d[off + i][f1.pos(x)] = v
    return pts, d, extra1, extra2


def canonical_amalgam(P: AmalgamProblem) -> UltraSpace:
    L = P.base.lattice
    if set(P.factor1.points) == set(P.base.points):
        return P.factor2
    if set(P.factor2.points) == set(P.base.points):
        return P.factor1
    pts, d, extra1, extra2 = _amalgam_matrix(P)
    pos = {p: i for i, p in enumerate(pts)}
    base_idx = [pos[b] for b in P.base.points]
    merge: dict[int, int] = {}
    for x in extra1:
        for y in extra2:
            i, j = pos[x], pos[y]
            if d[i][j] == L.bottom:
                bb = next((b for b in base_idx if d[i][b] != d[j][b]), None)
                if bb is not None:
                    # with d(x, y) bottom, one of the triangles through bb breaks
                    a, c = (i, j) if not L.leq[d[i][bb]][d[j][bb]] else (j, i)
                    msg = f"{x!r} and {y!r} are at distance bottom but differ over the base"
                    if not is_distributive(L):
                        raise NonDistributiveFailure(msg, (pts[a], pts[bb], pts[c]))
                    raise AmalgamationError(msg)
                merge[j] = i
    bad = first_violation(L, d, allow_zero=True)
    if bad is not None:
        a, b, c = (pts[t] for t in bad[1])
        raise NonDistributiveFailure(f"triangle {a!r},{b!r} via {c!r} fails", (a, b, c))
    keep = [i for i in range(len(pts)) if i not in merge]
    return UltraSpace(L, tuple(pts[i] for i in keep),
                      tuple(tuple(d[i][j] for j in keep) for i in keep))


def joint_embedding(A: UltraSpace, B: UltraSpace) -> UltraSpace:
    """Disjoint union with every cross distance at the top."""
    if set(A.points) & set(B.points):
        raise SpaceError("joint embedding needs disjoint point ids")
    L = A.lattice
    base = UltraSpace(L, (), ())
    return canonical_amalgam(AmalgamProblem(base, A, B))


def _fresh(points: Iterable[str], stem: str = "y") -> str:
    taken = set(points)
    if stem not in taken:
        return stem
    return next(f"{stem}{k}" for k in itertools.count(1) if f"{stem}{k}" not in taken)


def one_point_extension(S: UltraSpace, b: str, e: str, new: str | None = None) -> UltraSpace:
    L = S.lattice
    ei = L.index(e)
    if ei == L.bottom:
        raise SpaceError("extension distance must not be the bottom element")
    bi = S.pos(b)
    name = new if new is not None else _fresh(S.points)
    if name in S._pos:
        raise SpaceError(f"point {name!r} already exists")
    row = [L.join_i(ei, S.dist[i][bi]) for i in range(len(S))]
    dist = [list(r) + [row[i]] for i, r in enumerate(S.dist)]
    dist.append(row + [L.bottom])
    return UltraSpace(L, S.points + (name,), tuple(tuple(r) for r in dist))


# ---------------------------------------------------------------------------
# distributivity failure


@dataclass(frozen=True)
class AmalgamationFailure:
    problem: AmalgamProblem
    witness: tuple[str, str, str]               # (e, f, g)
    certificate: tuple[tuple[str, tuple[str, ...]], ...]   # (h, violated triangle) per h

    def to_json(self) -> dict:
        return {"problem": self.problem.to_json(), "witness": list(self.witness),
                "certificate": [{"h": h, "violation": list(t)} for h, t in self.certificate]}


def _witness_triples(L: Lattice) -> Iterator[tuple[int, int, int]]:
    for e in range(L.size):
        for f in range(L.size):
            for g in range(L.size):
                k = L.meet_i(L.join_i(e, g), L.join_i(f, g))
                if not L.leq[k][L.join_i(L.meet_i(e, f), g)]:
                    yield e, f, g


def failure_diagram(L: Lattice, e: int, f: int, g: int) -> AmalgamProblem:
    """Two one-point extensions of {v, w, u} built by iterated one-point extensions."""
    k = L.meet_i(L.join_i(e, g), L.join_i(f, g))
    name = L.elements
    f2 = UltraSpace.single(L, "y")
    f2 = one_point_extension(f2, "y", name[e], "v")
    f2 = one_point_extension(f2, "y", name[f], "w")
    f2 = one_point_extension(f2, "y", name[g], "u")
    f1 = UltraSpace.single(L, "x")
    f1 = one_point_extension(f1, "x", name[e], "v")
    f1 = one_point_extension(f1, "x", name[f], "w")
    f1 = one_point_extension(f1, "x", name[k], "u")
    base = f2.restrict(["v", "w", "u"])
    return AmalgamProblem(base, f1.restrict(["v", "w", "u", "x"]), f2.restrict(["v", "w", "u", "y"]))


def completion_certificate(P: AmalgamProblem
                           ) -> list[tuple[str, tuple[str, ...]]] | None:
    """For a problem with one new point per factor, try every cross distance.

    Returns one violation per candidate, or ``None`` as soon as some candidate
    gives a valid space (distance bottom counts only when the base rows agree).
    """
    L = P.base.lattice
    pts, d, extra1, extra2 = _amalgam_matrix(P)
    if len(extra1) != 1 or len(extra2) != 1:
        raise AmalgamationError("certificate search needs exactly one new point per factor")
    i, j = pts.index(extra1[0]), pts.index(extra2[0])
    base_idx = [pts.index(b) for b in P.base.points]
    cert = []
    for h in range(L.size):
        d[i][j] = d[j][i] = h
        if h == L.bottom and any(d[i][b] != d[j][b] for b in base_idx):
            bb = next(b for b in base_idx if d[i][b] != d[j][b])
            cert.append((L.elements[h], ("rows-differ", pts[i], pts[j], pts[bb])))
            continue
        bad = first_violation(L, d, allow_zero=True)
        if bad is None:
            return None
        cert.append((L.elements[h], tuple(pts[t] for t in bad[1])))
    return cert


def find_amalgamation_failure(L: Lattice) -> AmalgamationFailure | None:
    for e, f, g in _witness_triples(L):
        P = failure_diagram(L, e, f, g)
        cert = completion_certificate(P)
        if cert is None:          # cannot happen for a genuine witness triple
            raise AssertionError("witness triple produced a completable diagram")
        return AmalgamationFailure(P, tuple(L.elements[t] for t in (e, f, g)), tuple(cert))
    return None


# ---------------------------------------------------------------------------
# small-space enumeration used by exhaustive checks


def enumerate_spaces(L: Lattice, n: int, up_to_iso: bool = True) -> Iterator[UltraSpace]:
    """All valid spaces on points ``p0..p{n-1}``, optionally one per isomorphism class."""
    pts = tuple(f"p{i}" for i in range(n))
    pairs = list(itertools.combinations(range(n), 2))
    nonzero = [v for v in range(L.size) if v != L.bottom]
    seen: set = set()
    for vals in itertools.product(nonzero, repeat=len(pairs)):
        d = [[L.bottom] * n for _ in range(n)]
        for (a, b), v in zip(pairs, vals):
            d[a][b] = d[b][a] = v
        if first_violation(L, d) is not None:
            continue
        if up_to_iso:
            key = min(tuple(d[p[a]][p[b]] for a, b in pairs)
                      for p in itertools.permutations(range(n)))
            if key in seen:
                continue
            seen.add(key)
        yield UltraSpace(L, pts, tuple(tuple(r) for r in d))


def extension_rows(L: Lattice, S: UltraSpace) -> Iterator[tuple[int, ...]]:
    """Every distance row that adds one valid new point to ``S``."""
    n = len(S)
    nonzero = [v for v in range(L.size) if v != L.bottom]
    leq, join = L.leq, L._join
    d = S.dist
    for row in itertools.product(nonzero, repeat=n):
        ok = True
        for a in range(n):
            for b in range(n):
                if a != b and not (leq[row[a]][join[d[a][b]][row[b]]]
                                   and leq[d[a][b]][join[row[a]][row[b]]]):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            yield row


def two_point_problems(L: Lattice, max_base: int) -> Iterator[AmalgamProblem]:
    """Amalgamation problems adding one point to each factor, bases up to isomorphism."""
    for k in range(1, max_base + 1):
        for base in enumerate_spaces(L, k):
            rows = list(extension_rows(L, base))
            for r1, r2 in itertools.combinations_with_replacement(rows, 2):
                yield AmalgamProblem(base, _attach(base, r1, "x"), _attach(base, r2, "y"))


def _attach(S: UltraSpace, row: Sequence[int], name: str) -> UltraSpace:
    L = S.lattice
    dist = [list(r) + [row[i]] for i, r in enumerate(S.dist)]
    dist.append(list(row) + [L.bottom])
    return UltraSpace(L, S.points + (name,), tuple(tuple(r) for r in dist))
