"""Finite lattices: order algebra, distributivity, meet-irreducibles and chain covers.

Elements are opaque strings. Internally every operation works on element
indices; the public helpers translate names at the boundary.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence


class LatticeError(ValueError):
    """Raised for malformed lattices or unknown element ids."""


@dataclass(frozen=True)
class Lattice:
    elements: tuple[str, ...]
    leq: tuple[tuple[bool, ...], ...]
    _index: dict = field(init=False, repr=False, compare=False)
    _meet: tuple = field(init=False, repr=False, compare=False)
    _join: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        elements = tuple(str(e) for e in self.elements)
        leq = tuple(tuple(bool(v) for v in row) for row in self.leq)
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "leq", leq)
        n = len(elements)
        if n == 0:
            raise LatticeError("a lattice needs at least one element")
        if len(set(elements)) != n:
            raise LatticeError("duplicate element ids")
        if len(leq) != n or any(len(row) != n for row in leq):
            raise LatticeError(f"leq must be a {n}x{n} matrix")
        for i in range(n):
            if not leq[i][i]:
                raise LatticeError(f"leq is not reflexive at {elements[i]!r}")
            for j in range(n):
                if i != j and leq[i][j] and leq[j][i]:
                    raise LatticeError(
                        f"leq is not antisymmetric: {elements[i]!r}, {elements[j]!r}")
                if leq[i][j]:
                    for k in range(n):
                        if leq[j][k] and not leq[i][k]:
                            raise LatticeError("leq is not transitive: "
                                               f"{elements[i]!r} <= {elements[j]!r} <= {elements[k]!r}")
        meet = [[0] * n for _ in range(n)]
        join = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                lower = [k for k in range(n) if leq[k][i] and leq[k][j]]
                upper = [k for k in range(n) if leq[i][k] and leq[j][k]]
                glb = [m for m in lower if all(leq[k][m] for k in lower)]
                lub = [m for m in upper if all(leq[m][k] for k in upper)]
                if len(glb) != 1:
                    raise LatticeError(f"no meet for {elements[i]!r}, {elements[j]!r}")
                if len(lub) != 1:
                    raise LatticeError(f"no join for {elements[i]!r}, {elements[j]!r}")
                meet[i][j] = meet[j][i] = glb[0]
                join[i][j] = join[j][i] = lub[0]
        object.__setattr__(self, "_index", {e: i for i, e in enumerate(elements)})
        object.__setattr__(self, "_meet", tuple(tuple(r) for r in meet))
        object.__setattr__(self, "_join", tuple(tuple(r) for r in join))

    # -- index level -------------------------------------------------------

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def size(self) -> int:
        return len(self.elements)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise LatticeError(f"unknown element {name!r}") from None

    @property
    def bottom(self) -> int:
        return next(i for i in range(self.size) if all(self.leq[i]))

    @property
    def top(self) -> int:
        return next(i for i in range(self.size) if all(r[i] for r in self.leq))

    def meet_i(self, a: int, b: int) -> int:
        return self._meet[a][b]

    def join_i(self, a: int, b: int) -> int:
        return self._join[a][b]

    def leq_i(self, a: int, b: int) -> bool:
        return self.leq[a][b]

    def meet_all(self, items: Iterable[int]) -> int:
        out = self.top
        for x in items:
            out = self._meet[out][x]
        return out

    def join_all(self, items: Iterable[int]) -> int:
        out = self.bottom
        for x in items:
            out = self._join[out][x]
        return out

    def upper_covers(self, a: int) -> list[int]:
        above = [b for b in range(self.size) if b != a and self.leq[a][b]]
        return [b for b in above
                if not any(c != b and self.leq[c][b] for c in above)]

    def lower_covers(self, a: int) -> list[int]:
        below = [b for b in range(self.size) if b != a and self.leq[b][a]]
        return [b for b in below
                if not any(c != b and self.leq[b][c] for c in below)]

    # -- name level --------------------------------------------------------

    def meet(self, a: str, b: str) -> str:
        return self.elements[self._meet[self.index(a)][self.index(b)]]

    def join(self, a: str, b: str) -> str:
        return self.elements[self._join[self.index(a)][self.index(b)]]

    def le(self, a: str, b: str) -> bool:
        return self.leq[self.index(a)][self.index(b)]

    @property
    def bottom_name(self) -> str:
        return self.elements[self.bottom]

    @property
    def top_name(self) -> str:
        return self.elements[self.top]

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {"elements": list(self.elements),
                "leq": [[bool(v) for v in row] for row in self.leq]}

    @classmethod
    def from_json(cls, data: dict) -> "Lattice":
        try:
            return cls(tuple(data["elements"]), tuple(tuple(r) for r in data["leq"]))
        except (KeyError, TypeError) as exc:
            raise LatticeError(f"malformed lattice JSON: {exc}") from None

    @classmethod
    def from_covers(cls, elements: Sequence[str],
                    covers: Iterable[tuple[str, str]]) -> "Lattice":
        """Build a lattice from its cover pairs ``(lower, upper)``."""
        idx = {e: i for i, e in enumerate(elements)}
        n = len(elements)
        rel = [[i == j for j in range(n)] for i in range(n)]
        for lo, hi in covers:
            rel[idx[lo]][idx[hi]] = True
        for k in range(n):
            for i in range(n):
                if rel[i][k]:
                    for j in range(n):
                        if rel[k][j]:
                            rel[i][j] = True
        return cls(tuple(elements), tuple(tuple(r) for r in rel))

    def canonical_key(self) -> tuple:
        """Isomorphism invariant: smallest leq bit-string over linear extensions."""
        best = None
        for perm in linear_extensions(self.leq):
            key = tuple(self.leq[perm[i]][perm[j]]
                        for i in range(self.size) for j in range(i + 1, self.size))
            if best is None or key < best:
                best = key
        return (self.size, best)


def linear_extensions(leq: Sequence[Sequence[bool]]) -> Iterator[tuple[int, ...]]:
    n = len(leq)
    placed: list[int] = []
    used = [False] * n

    def rec() -> Iterator[tuple[int, ...]]:
        if len(placed) == n:
            yield tuple(placed)
            return
        for v in range(n):
            if used[v]:
                continue
            if any(not used[u] and u != v and leq[u][v] for u in range(n)):
                continue
            used[v] = True
            placed.append(v)
            yield from rec()
            placed.pop()
            used[v] = False

    return rec()


# ---------------------------------------------------------------------------
# operations


def lattice_algebra(L: Lattice, a: str, b: str) -> tuple[str, str, bool]:
    return L.meet(a, b), L.join(a, b), L.le(a, b)


def is_distributive(L: Lattice) -> bool:
    n = L.size
    m, j = L._meet, L._join
    for a in range(n):
        for b in range(n):
            for c in range(n):
                if m[a][j[b][c]] != j[m[a][b]][m[a][c]]:
                    return False
    return True


def find_forbidden_sublattice(L: Lattice) -> tuple[str, tuple[str, ...]] | None:
    """Return ``("M3"|"N5", (bottom, x, y, z, top))`` for a 5-element bad sublattice."""
    n = L.size
    m, j, le = L._meet, L._join, L.leq
    for lo in range(n):
        for hi in range(n):
            if lo == hi or not le[lo][hi]:
                continue
            mid = [x for x in range(n) if x not in (lo, hi) and le[lo][x] and le[x][hi]]
            for x, y, z in itertools.combinations(mid, 3):
                # M3: three pairwise incomparable with all meets lo, joins hi
                trio = (x, y, z)
                if all(m[p][q] == lo and j[p][q] == hi
                       for p, q in itertools.combinations(trio, 2)):
                    return "M3", tuple(L.elements[t] for t in (lo, x, y, z, hi))
            for a, c in itertools.permutations(mid, 2):
                if not le[a][c]:
                    continue
                for b in mid:
                    if b in (a, c):
                        continue
                    if (m[a][b] == lo and m[c][b] == lo
                            and j[a][b] == hi and j[c][b] == hi):
                        return "N5", tuple(L.elements[t] for t in (lo, a, c, b, hi))
    return None


def meet_irreducibles(L: Lattice) -> tuple[str, ...]:
    """Elements with exactly one upper cover, in element order. The top is never included."""
    return tuple(L.elements[a] for a in range(L.size)
                 if a != L.top and len(L.upper_covers(a)) == 1)


def meet_irreducible_indices(L: Lattice) -> tuple[int, ...]:
    return tuple(a for a in range(L.size) if a != L.top and len(L.upper_covers(a)) == 1)


@dataclass(frozen=True)
class ChainCover:
    chains: tuple[tuple[str, ...], ...]

    def __len__(self) -> int:
        return len(self.chains)

    def to_json(self) -> list:
        return [list(c) for c in self.chains]


def _cover_poset(L: Lattice) -> list[int]:
    return [a for a in meet_irreducible_indices(L) if a not in (L.bottom, L.top)]


def check_chain_cover(L: Lattice, chains: Sequence[Sequence[str]]) -> ChainCover:
    """Validate a user-supplied cover and return it normalized (chains sorted upward)."""
    target = {L.elements[a] for a in _cover_poset(L)}
    seen: set[str] = set()
    out = []
    for chain in chains:
        idx = sorted((L.index(x) for x in chain),
                     key=lambda a: sum(L.leq[b][a] for b in range(L.size)))
        for p, q in itertools.combinations(idx, 2):
            if not (L.leq[p][q] or L.leq[q][p]):
                raise LatticeError(f"{L.elements[p]!r} and {L.elements[q]!r} are incomparable")
        for a in idx:
            if L.elements[a] in seen:
                raise LatticeError(f"{L.elements[a]!r} appears in two chains")
            seen.add(L.elements[a])
        out.append(tuple(L.elements[a] for a in idx))
    if seen != target:
        raise LatticeError(f"cover must be exactly {sorted(target)}, got {sorted(seen)}")
    return ChainCover(tuple(out))


def chain_cover(L: Lattice) -> ChainCover:
    """Minimum chain cover of the meet-irreducibles strictly between bottom and top."""
    pts = _cover_poset(L)
    lt = {(p, q) for p in pts for q in pts if p != q and L.leq[p][q]}
    match_right: dict[int, int] = {}   # q -> p means q directly follows p in a chain

    def augment(p: int, seen: set[int]) -> bool:
        for q in pts:
            if (p, q) in lt and q not in seen:
                seen.add(q)
                if q not in match_right or augment(match_right[q], seen):
                    match_right[q] = p
                    return True
        return False

    for p in pts:
        augment(p, set())
    succ = {p: q for q, p in match_right.items()}
    chains = []
    for p in pts:
        if p in match_right:
            continue
        chain = [p]
        while chain[-1] in succ:
            chain.append(succ[chain[-1]])
        chains.append(tuple(L.elements[a] for a in chain))
    return ChainCover(tuple(chains))


def max_antichain_size(L: Lattice) -> int:
    pts = _cover_poset(L)
    best = 0
    for r in range(len(pts), 0, -1):
        for sub in itertools.combinations(pts, r):
            if all(not L.leq[a][b] and not L.leq[b][a]
                   for a, b in itertools.combinations(sub, 2)):
                return r
    return best


# ---------------------------------------------------------------------------
# enumeration and named lattices


MAX_ENUM_SIZE = 8


def _ideals(rel: list[list[bool]], k: int) -> Iterator[frozenset[int]]:
    """All down-closed subsets of the poset on range(k)."""
    for mask in range(1 << k):
        members = [i for i in range(k) if mask >> i & 1]
        if all(mask >> j & 1 for i in members for j in range(k) if rel[j][i]):
            yield frozenset(members)


def _naturally_labeled_posets(k: int) -> Iterator[list[list[bool]]]:
    def grow(rel: list[list[bool]], size: int) -> Iterator[list[list[bool]]]:
        if size == k:
            yield rel
            return
        for ideal in _ideals(rel, size):
            new = [row[:] + [i in ideal] for i, row in enumerate(rel)]
            new.append([False] * size + [True])
            yield from grow(new, size + 1)

    return grow([], 0)


def _bounded(rel: list[list[bool]]) -> tuple[tuple[str, ...], tuple[tuple[bool, ...], ...]]:
    k = len(rel)
    n = k + 2
    names = ("0",) + tuple(_inner_name(i) for i in range(k)) + ("1",)
    leq = [[False] * n for _ in range(n)]
    for i in range(n):
        leq[0][i] = True
        leq[i][n - 1] = True
    for i in range(k):
        for j in range(k):
            leq[i + 1][j + 1] = rel[i][j]
    return names, tuple(tuple(r) for r in leq)


def _inner_name(i: int) -> str:
    return "abcdefghijklmnopqrstuvwxyz"[i]


def _has_bounds_meets(leq: tuple[tuple[bool, ...], ...]) -> bool:
    n = len(leq)
    for i in range(n):
        for j in range(i + 1, n):
            lower = [k for k in range(n) if leq[k][i] and leq[k][j]]
            if sum(all(leq[k][m] for k in lower) for m in lower) != 1:
                return False
    return True


def enumerate_lattices(max_size: int) -> list[Lattice]:
    """All lattices with at most ``max_size`` elements, one per isomorphism class.

    Ordered by size, then by canonical key.
    """
    if max_size > MAX_ENUM_SIZE:
        raise LatticeError(f"max_size {max_size} exceeds the enumeration bound {MAX_ENUM_SIZE}")
    out: list[Lattice] = []
    if max_size >= 1:
        out.append(Lattice(("0",), ((True,),)))
    for n in range(2, max_size + 1):
        found: dict[tuple, Lattice] = {}
        for rel in _naturally_labeled_posets(n - 2):
            names, leq = _bounded(rel)
            # a finite bounded poset with all pairwise meets is a lattice
            if not _has_bounds_meets(leq):
                continue
            L = Lattice(names, leq)
            key = L.canonical_key()
            if key not in found:
                found[key] = L
        out.extend(found[k] for k in sorted(found))
    return out


def chain(height: int, names: Sequence[str] | None = None) -> Lattice:
    """Chain with ``height + 1`` elements."""
    if names is None:
        inner = [f"E{i}" for i in range(1, height)] if height > 2 else (["E"] if height == 2 else [])
        names = ["0", *inner, "1"]
    n = len(names)
    return Lattice(tuple(names), tuple(tuple(i <= j for j in range(n)) for i in range(n)))


def product(A: Lattice, B: Lattice, sep: str = ",") -> Lattice:
    pairs = [(a, b) for a in range(A.size) for b in range(B.size)]
    names = tuple(f"{A.elements[a]}{sep}{B.elements[b]}" for a, b in pairs)
    leq = tuple(tuple(A.leq[a][c] and B.leq[b][d] for c, d in pairs) for a, b in pairs)
    return Lattice(names, leq)


def boolean_square() -> Lattice:
    return Lattice.from_covers(("0", "a", "b", "1"),
                               [("0", "a"), ("0", "b"), ("a", "1"), ("b", "1")])


def m3() -> Lattice:
    return Lattice.from_covers(("0", "e", "f", "g", "1"),
                               [("0", x) for x in "efg"] + [(x, "1") for x in "efg"])


def n5() -> Lattice:
    return Lattice.from_covers(("0", "a", "b", "c", "1"),
                               [("0", "a"), ("a", "c"), ("c", "1"), ("0", "b"), ("b", "1")])


def diamond_over_chain() -> Lattice:
    """0 < E, F < G < 1: a Boolean square with a new top stacked above it."""
    return Lattice.from_covers(("0", "E", "F", "G", "1"),
                               [("0", "E"), ("0", "F"), ("E", "G"), ("F", "G"), ("G", "1")])


NAMED = {
    "chain2": lambda: chain(2),
    "chain3": lambda: chain(3),
    "chain4": lambda: chain(4),
    "boolean2": boolean_square,
    "m3": m3,
    "n5": n5,
    "diamond": diamond_over_chain,
}


def named_lattice(name: str) -> Lattice:
    try:
        return NAMED[name]()
    except KeyError:
        raise LatticeError(f"unknown lattice name {name!r}; known: {sorted(NAMED)}") from None
