"""Class descriptors, finite approximants of generic structures and small brute-force oracles."""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .amalgam import APReport, _base_orders, _eq, check_AP_lift
from .lattice import Lattice, chain
from .subquotient import LiftedStructure, SubquotientOrder, validate_lift
from .ultrametric import UltraSpace, enumerate_spaces


class DescriptorError(ValueError):
    pass


# ---------------------------------------------------------------------------
# relational structures for forbidden-substructure classes


@dataclass(frozen=True)
class RelStructure:
    """Points 0..n-1 with named unary or binary relations (sets of tuples)."""
    n: int
    rels: Mapping[str, frozenset]

    def __post_init__(self) -> None:
        object.__setattr__(self, "rels", {k: frozenset(tuple(t) for t in v)
                                          for k, v in sorted(self.rels.items())})

    def __hash__(self) -> int:
        return hash((self.n, tuple((k, v) for k, v in self.rels.items())))

    def restrict(self, pts: Sequence[int]) -> "RelStructure":
        idx = {p: i for i, p in enumerate(pts)}
        return RelStructure(len(pts), {k: frozenset(tuple(idx[x] for x in t) for t in v
                                                    if all(x in idx for x in t))
                                       for k, v in self.rels.items()})

    def relabel(self, perm: Sequence[int]) -> "RelStructure":
        """perm[i] is the new name of point i."""
        return RelStructure(self.n, {k: frozenset(tuple(perm[x] for x in t) for t in v)
                                     for k, v in self.rels.items()})

    def key(self) -> tuple:
        return tuple((k, tuple(sorted(v))) for k, v in self.rels.items())

    def to_json(self) -> dict:
        return {"n": self.n, "rels": {k: sorted(list(t) for t in v) for k, v in self.rels.items()}}


def rel_canonical(A: RelStructure) -> tuple:
    return min(A.relabel(p).key() for p in itertools.permutations(range(A.n))) if A.n else ()


def rel_embeds(A: RelStructure, B: RelStructure, language: Mapping[str, int]) -> bool:
    """Is there an induced embedding of A into B?"""
    return next(_rel_embeddings(A, B, language), None) is not None


def _rel_embeddings(A: RelStructure, B: RelStructure, language: Mapping[str, int]
                    ) -> Iterator[tuple[int, ...]]:
    m: list[int] = []

    def consistent(i: int, b: int) -> bool:
        for r, ar in language.items():
            ra, rb = A.rels.get(r, frozenset()), B.rels.get(r, frozenset())
            if ar == 1:
                if ((i,) in ra) != ((b,) in rb):
                    return False
            else:
                if ((i, i) in ra) != ((b, b) in rb):
                    return False
                for j, c in enumerate(m):
                    if ((i, j) in ra) != ((b, c) in rb) or ((j, i) in ra) != ((c, b) in rb):
                        return False
        return True

    def rec() -> Iterator[tuple[int, ...]]:
        i = len(m)
        if i == A.n:
            yield tuple(m)
            return
        for b in range(B.n):
            if b not in m and consistent(i, b):
                m.append(b)
                yield from rec()
                m.pop()

    return rec()


# ---------------------------------------------------------------------------
# descriptors


@dataclass(frozen=True)
class LatticeLiftDescriptor:
    lattice: Lattice
    pairs: tuple[tuple[str, str], ...]                 # (bottom, top) per subquotient order
    identifications: tuple[tuple[int, int, int], ...] = ()   # (i, j, sign): order j = order i or its reverse
    name: str = ""

    def __post_init__(self) -> None:
        L = self.lattice
        for e, f in self.pairs:
            if not L.le(e, f):
                raise DescriptorError(f"order {e!r}->{f!r} has bottom above top")
        for i, j, s in self.identifications:
            if not (0 <= i < j < len(self.pairs)) or s not in (1, -1):
                raise DescriptorError(f"bad identification {(i, j, s)}")
            if self.pairs[i] != self.pairs[j]:
                raise DescriptorError("identified orders must share bottom and top")

    def effective_pairs(self) -> list[tuple[str, str]]:
        """Orders that are not copies (up to reversal) of an earlier one."""
        dropped = {j for _, j, _ in self.identifications}
        return [p for k, p in enumerate(self.pairs) if k not in dropped]

    def signature(self) -> dict[str, Counter]:
        sig: dict[str, Counter] = {}
        for e, f in self.effective_pairs():
            if e != f:
                sig.setdefault(e, Counter())[f] += 1
        return sig

    def to_json(self) -> dict:
        return {"kind": "lattice-lift", "name": self.name, "lattice": self.lattice.to_json(),
                "orders": [list(p) for p in self.pairs],
                "identifications": [list(t) for t in self.identifications]}


@dataclass(frozen=True)
class ForbiddenListDescriptor:
    language: Mapping[str, int]
    forbidden: tuple[RelStructure, ...]
    name: str = ""

    def __post_init__(self) -> None:
        for r, ar in self.language.items():
            if ar not in (1, 2):
                raise DescriptorError(f"relation {r!r} has unsupported arity {ar}")
        for F in self.forbidden:
            for r, ts in F.rels.items():
                if r not in self.language:
                    raise DescriptorError(f"forbidden structure uses unknown relation {r!r}")
                if any(len(t) != self.language[r] for t in ts):
                    raise DescriptorError(f"arity mismatch for {r!r}")
        keys = {rel_canonical(F) + (F.n,) for F in self.forbidden}
        object.__setattr__(self, "_keys", keys)

    def member(self, A: RelStructure) -> bool:
        return not any(rel_embeds(F, A, self.language) for F in self.forbidden)

    def to_json(self) -> dict:
        return {"kind": "forbidden-list", "name": self.name, "language": dict(self.language),
                "forbidden": [F.to_json() for F in self.forbidden]}


Descriptor = LatticeLiftDescriptor | ForbiddenListDescriptor


def linear_order_descriptor() -> ForbiddenListDescriptor:
    lang = {"<": 2}
    forb = [RelStructure(1, {"<": {(0, 0)}}),
            RelStructure(2, {"<": set()}),
            RelStructure(2, {"<": {(0, 1), (1, 0)}}),
            RelStructure(3, {"<": {(0, 1), (1, 2), (2, 0)}})]
    forb += [RelStructure(2, {"<": {(0, 0), (0, 1)}}), RelStructure(2, {"<": {(0, 0), (1, 1)}})]
    return ForbiddenListDescriptor(lang, tuple(forb), "linear orders")


def lift_descriptor(L: Lattice, pairs: Iterable[tuple[str, str]], name: str = ""
                    ) -> LatticeLiftDescriptor:
    return LatticeLiftDescriptor(L, tuple(tuple(p) for p in pairs), (), name)


# ---------------------------------------------------------------------------
# members and canonical forms


def lift_canonical(A: LiftedStructure) -> tuple:
    n = len(A.space)
    d = A.space.dist
    lts = A._lt
    best = None
    for p in itertools.permutations(range(n)):
        key = (tuple(d[p[i]][p[j]] for i in range(n) for j in range(i + 1, n)),
               tuple(tuple(lt[p[i]][p[j]] for i in range(n) for j in range(n) if i != j)
                     for lt in lts))
        if best is None or key < best:
            best = key
    return (n, best)


def sqo_choices(S: UltraSpace, E: str, F: str) -> list[SubquotientOrder]:
    L = S.lattice
    k = len(S)
    eqE, eqF = _eq(L, S.dist, L.index(E)), _eq(L, S.dist, L.index(F))
    out = []
    for rank in _base_orders(eqE, eqF, k):
        pairs = frozenset((S.points[x], S.points[y]) for x in range(k) for y in range(k)
                          if x != y and eqF[x][y] and not eqE[x][y] and rank[x] < rank[y])
        out.append(SubquotientOrder(E, F, pairs))
    return out


def _lift_members(desc: LatticeLiftDescriptor, n: int) -> list[LiftedStructure]:
    L = desc.lattice
    pairs = desc.effective_pairs()
    seen: dict[tuple, LiftedStructure] = {}
    spaces = [UltraSpace(L, (), ())] if n == 0 else enumerate_spaces(L, n)
    for S in spaces:
        choices = [sqo_choices(S, e, f) for e, f in pairs]
        for combo in itertools.product(*choices):
            A = LiftedStructure(S, tuple(combo))
            key = lift_canonical(A)
            if key not in seen:
                seen[key] = A
    return [seen[k] for k in sorted(seen)]


def _rel_members(desc: ForbiddenListDescriptor, n: int, _cache: dict = {}) -> list[RelStructure]:
    ck = (id(desc), n)
    if ck in _cache:
        return _cache[ck]
    if n == 0:
        out = [RelStructure(0, {r: frozenset() for r in desc.language})]
    else:
        out_d: dict[tuple, RelStructure] = {}
        for A in _rel_members(desc, n - 1):
            new = n - 1
            slots: list[tuple[str, tuple]] = []
            for r, ar in desc.language.items():
                if ar == 1:
                    slots.append((r, (new,)))
                else:
                    slots.append((r, (new, new)))
                    for j in range(new):
                        slots.append((r, (new, j)))
                        slots.append((r, (j, new)))
            for mask in range(1 << len(slots)):
                rels = {r: set(v) for r, v in A.rels.items()}
                for b, (r, t) in enumerate(slots):
                    if mask >> b & 1:
                        rels[r].add(t)
                B = RelStructure(n, rels)
                if not desc.member(B):
                    continue
                key = rel_canonical(B)
                if key not in out_d:
                    out_d[key] = B
        out = [out_d[k] for k in sorted(out_d)]
    _cache[ck] = out
    return out


def members(desc: Descriptor, n: int) -> list:
    """Class members with exactly n points, one per isomorphism type."""
    if isinstance(desc, LatticeLiftDescriptor):
        return _lift_members(desc, n)
    return _rel_members(desc, n)


def canonical(desc: Descriptor, A) -> tuple:
    return lift_canonical(A) if isinstance(desc, LatticeLiftDescriptor) else rel_canonical(A)


def size_of(A) -> int:
    if isinstance(A, LiftedStructure):
        return len(A.space)
    return len(A) if isinstance(A, ArrayLift) else A.n


def restrict_to(A, pts: Sequence[int]):
    if isinstance(A, LiftedStructure):
        return A.restrict([A.space.points[i] for i in pts])
    return A.restrict(pts)


def lift_embeds(A: LiftedStructure, B: LiftedStructure) -> bool:
    """Is there an embedding of A into B (distances and every order preserved)?"""
    if len(A.sqos) != len(B.sqos) or A.lattice != B.lattice:
        return False
    n, N = len(A.space), len(B.space)
    da, db = A.space.dist, B.space.dist
    la, lb = A._lt, B._lt
    m: list[int] = []

    def ok(i: int, b: int) -> bool:
        for j, c in enumerate(m):
            if c == b or da[i][j] != db[b][c]:
                return False
            for q in range(len(la)):
                if la[q][i][j] != lb[q][b][c] or la[q][j][i] != lb[q][c][b]:
                    return False
        return True

    def rec() -> bool:
        i = len(m)
        if i == n:
            return True
        for b in range(N):
            if ok(i, b):
                m.append(b)
                if rec():
                    return True
                m.pop()
        return False

    return rec()


def embeds(desc: Descriptor, A, B) -> bool:
    if isinstance(desc, LatticeLiftDescriptor):
        return lift_embeds(A, B)
    return rel_embeds(A, B, desc.language)


def is_member(desc: Descriptor, A) -> bool:
    if isinstance(desc, LatticeLiftDescriptor):
        if [(q.bottom, q.top) for q in A.sqos] != desc.effective_pairs():
            return False
        return validate_lift(A)[0]
    return desc.member(A)


# ---------------------------------------------------------------------------
# approximants


@dataclass
class Approximant:
    structure: object
    log: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"structure": self.structure.to_json(), "log": list(self.log)}


class BuildError(RuntimeError):
    def __init__(self, message: str, diagram: dict | None = None):
        super().__init__(message)
        self.diagram = diagram


@dataclass
class ArrayLift:
    """Array form of a lifted structure, for approximants with thousands of points.

    ``pos[q][x]`` ranks the E-class of x inside its F-class for order q; only
    comparisons between points at a distance where q applies are meaningful.
    """
    lattice: Lattice
    pairs: tuple[tuple[str, str], ...]
    dist: np.ndarray
    pos: list[np.ndarray]

    def __len__(self) -> int:
        return int(self.dist.shape[0])

    def _tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        L = self.lattice
        return (np.array(L.leq, dtype=bool), np.array(L._meet, dtype=np.int64),
                np.array(L._join, dtype=np.int64))

    def applies(self, q: int) -> np.ndarray:
        leq = np.array(self.lattice.leq, dtype=bool)
        e, f = (self.lattice.index(x) for x in self.pairs[q])
        return ~leq[self.dist, e] & leq[self.dist, f]

    def lt(self, q: int) -> np.ndarray:
        p = self.pos[q]
        return self.applies(q) & (p[:, None] < p[None, :])

    def lts(self) -> list[np.ndarray]:
        return [self.lt(q) for q in range(len(self.pairs))]

    def type_codes(self) -> np.ndarray:
        code = self.dist.astype(np.int64)
        for q in range(len(self.pairs)):
            code = code * 2 + self.lt(q)
        return code

    def validate(self) -> tuple[bool, str]:
        L = self.lattice
        leq = np.array(L.leq, dtype=bool)
        d = self.dist
        N = len(self)
        if not (d == d.T).all():
            return False, "distance is not symmetric"
        if N and (np.diagonal(d) != L.bottom).any():
            return False, "nonzero self-distance"
        off = ~np.eye(N, dtype=bool)
        if (d[off] == L.bottom).any():
            return False, "zero distance between distinct points"
        for lam in range(L.size):
            ball = leq[d, lam]
            if N <= 200:
                # small: a reflexive symmetric relation is transitive iff R.R is inside R
                bi = ball.astype(np.int64)
                bad = ((bi @ bi) > 0) & ~ball
            else:
                _, lab = connected_components(coo_matrix(ball), directed=False)
                bad = ball != (lab[:, None] == lab[None, :])
            if bad.any():
                return False, f"relation d <= {L.elements[lam]} is not transitive"
        for q, (e, f) in enumerate(self.pairs):
            p = self.pos[q]
            same = p[:, None] == p[None, :]
            if (leq[d, L.index(e)] & ~same).any():
                return False, f"order {q} splits an {e}-class"
            if (self.applies(q) & same).any():
                return False, f"order {q} leaves two {e}-classes of one {f}-class incomparable"
        return True, ""

    @classmethod
    def from_lift(cls, A: LiftedStructure) -> "ArrayLift":
        d = np.array(A.space.dist, dtype=np.int64)
        pos = [np.array(lt, dtype=np.int64).sum(axis=0).astype(float) for lt in A._lt]
        return cls(A.lattice, tuple((q.bottom, q.top) for q in A.sqos), d, pos)

    def to_lift(self, prefix: str = "v") -> LiftedStructure:
        L = self.lattice
        pts = tuple(f"{prefix}{i}" for i in range(len(self)))
        space = UltraSpace(L, pts, tuple(tuple(int(v) for v in row) for row in self.dist))
        sqos = []
        for q, (e, f) in enumerate(self.pairs):
            xs, ys = np.nonzero(self.lt(q))
            sqos.append(SubquotientOrder(e, f, frozenset((pts[x], pts[y]) for x, y in zip(xs, ys))))
        return LiftedStructure(space, tuple(sqos))

    def to_json(self) -> dict:
        L = self.lattice
        pts = [f"v{i}" for i in range(len(self))]
        return {"lattice": L.to_json(), "points": pts,
                "dist": [[L.elements[v] for v in row] for row in self.dist.tolist()],
                "sqos": [{"bottom": e, "top": f,
                          "pairs": [[pts[x], pts[y]] for x, y in zip(*np.nonzero(self.lt(q)))]}
                         for q, (e, f) in enumerate(self.pairs)]}


def _dense(p: np.ndarray) -> np.ndarray:
    return np.unique(p, return_inverse=True)[1].astype(float)


def array_union(parts: Sequence[ArrayLift], seed: int = 0) -> ArrayLift:
    """Disjoint union at the top distance.

    Orders whose top is the lattice top list the parts in a per-order sequence:
    the first such order uses the given sequence, the others seeded shuffles, so
    that cross-part pairs realize many types.
    """
    import random
    L = parts[0].lattice
    sizes = [len(P) for P in parts]
    N = sum(sizes)
    owner = np.repeat(np.arange(len(parts)), sizes)
    d = np.full((N, N), L.top, dtype=np.int64)
    off = 0
    for P in parts:
        d[off:off + len(P), off:off + len(P)] = P.dist
        off += len(P)
    rng = random.Random(seed)
    pos = []
    first = True
    for q, (e, f) in enumerate(parts[0].pairs):
        local = np.concatenate([P.pos[q] for P in parts]) if parts else np.zeros(0)
        if f == L.top_name:
            seq = list(range(len(parts)))
            if not first:
                rng.shuffle(seq)
            first = False
            rank = np.empty(len(parts))
            rank[seq] = np.arange(len(parts))
            pos.append(_dense(rank[owner] * (N + 1) + local))
        else:
            pos.append(_dense(owner * (N + 1) + local))
    return ArrayLift(L, parts[0].pairs, d, pos)


def _add_witness(S: ArrayLift, x: int, y: int, lam: int, bits_xz: int | None,
                 bits_yz: int | None, lam_y: int | None = None) -> ArrayLift | None:
    """S plus a point z with d(x,z) = lam, d(y,z) = lam_y (default lam) and the given
    order bits for (x,z), (y,z); None leaves the orders free."""
    leq, meet, join = S._tables()
    L = S.lattice
    lam_y = lam if lam_y is None else lam_y
    dz = meet[join[lam, S.dist[x]], join[lam_y, S.dist[y]]]
    if (dz == L.bottom).any() or dz[x] != lam or dz[y] != lam_y:
        return None
    nq = len(S.pairs)
    newpos = []
    for q, (e, f) in enumerate(S.pairs):
        ei, fi = L.index(e), L.index(f)
        p = S.pos[q]
        sameE = leq[dz, ei]
        if sameE.any():
            v = p[np.argmax(sameE)]
            if (p[sameE] != v).any():
                return None
        else:
            sameF = leq[dz, fi]
            lo, hi = -np.inf, np.inf
            for a, bits in ((x, bits_xz), (y, bits_yz)):
                if sameF[a] and bits is not None:
                    if bits >> (nq - 1 - q) & 1:
                        lo = max(lo, p[a])
                    else:
                        hi = min(hi, p[a])
            if not lo < hi:
                return None
            above = p[sameF & (p > lo)]
            nxt = above.min() if above.size else np.inf
            if np.isinf(lo):
                v = nxt - 1 if np.isfinite(nxt) else 0.0
            else:
                v = (lo + nxt) / 2 if np.isfinite(nxt) else lo + 1
        newpos.append(_dense(np.append(p, v)))
    N = len(S)
    d = np.empty((N + 1, N + 1), dtype=np.int64)
    d[:N, :N] = S.dist
    d[N, :N] = d[:N, N] = dz
    d[N, N] = L.bottom
    return ArrayLift(L, S.pairs, d, newpos)


def _applicable_mask(S: ArrayLift, lam: int) -> int:
    L = S.lattice
    m = 0
    nq = len(S.pairs)
    for q, (e, f) in enumerate(S.pairs):
        if not L.leq[lam][L.index(e)] and L.leq[lam][L.index(f)]:
            m |= 1 << (nq - 1 - q)
    return m


def _saturate_joins(box: list) -> int:
    """Make the join of the balls of radius mu and nu fill the balls of radius mu v nu."""
    S = box[0]
    L = S.lattice
    leq = np.array(L.leq, dtype=bool)
    added = 0
    for mu, nu in itertools.combinations(range(L.size), 2):
        if L.leq[mu][nu] or L.leq[nu][mu]:
            continue
        lam = L._join[mu][nu]
        near = leq[S.dist, mu] | leq[S.dist, nu]
        _, comp = connected_components(coo_matrix(near), directed=False)
        _, ball = connected_components(coo_matrix(leq[S.dist, lam]), directed=False)
        for b in np.unique(ball):
            members_b = np.nonzero(ball == b)[0]
            comps = list(dict.fromkeys(comp[members_b].tolist()))
            x = int(members_b[comp[members_b] == comps[0]][0])
            for other in comps[1:]:
                y = int(members_b[comp[members_b] == other][0])
                T = _add_witness(S, x, y, mu, None, None, nu)
                if T is not None:
                    S = T
                    added += 1
    box[0] = S
    return added


def saturate(S: ArrayLift, max_rounds: int = 20, log: list[str] | None = None) -> ArrayLift:
    """Add witness points until, for every realized type p at distance lam, the
    closure of p and its opposite fills each ball of radius lam."""
    L = S.lattice
    nq = len(S.pairs)
    leq = np.array(L.leq, dtype=bool)
    for rnd in range(max_rounds):
        codes = S.type_codes()
        N = len(S)
        off = ~np.eye(N, dtype=bool)
        added = 0
        for c in np.unique(codes[off]):
            lam, bits = int(c) >> nq, int(c) & ((1 << nq) - 1)
            mask = _applicable_mask(S, lam)
            opp = bits ^ mask
            if opp < bits:
                continue
            codes = S.type_codes()
            N = len(S)
            edge = (codes == c) | (codes == ((lam << nq) | opp))
            np.fill_diagonal(edge, False)
            _, comp = connected_components(coo_matrix(edge), directed=False)
            _, ball = connected_components(coo_matrix(leq[S.dist, lam]), directed=False)
            for b in np.unique(ball):
                members_b = np.nonzero(ball == b)[0]
                comps = list(dict.fromkeys(comp[members_b].tolist()))
                if len(comps) < 2:
                    continue
                x = int(members_b[comp[members_b] == comps[0]][0])
                for other in comps[1:]:
                    y = int(members_b[comp[members_b] == other][0])
                    for bx, by in ((bits, opp), (bits, bits), (opp, opp), (opp, bits)):
                        T = _add_witness(S, x, y, lam, bx, by)
                        if T is not None:
                            S = T
                            added += 1
                            break
        box = [S]
        added += _saturate_joins(box)
        S = box[0]
        if log is not None:
            log.append(f"round {rnd}: added {added} witness points ({len(S)} total)")
        if not added:
            break
    return S


def _rel_join(desc: ForbiddenListDescriptor, A: RelStructure, B: RelStructure,
              budget: int = 200_000) -> tuple[str, RelStructure | None]:
    """Search for C containing A and B, overlapping or disjoint. Returns (verdict, C)."""
    lang = desc.language
    steps = 0
    for overlap in range(min(A.n, B.n), -1, -1):
        for a_pts in itertools.combinations(range(A.n), overlap):
            for b_pts in itertools.permutations(range(B.n), overlap):
                if A.restrict(a_pts).key() != B.restrict(b_pts).key():
                    continue
                # C: A's points, then B's points not glued
                b_new = [b for b in range(B.n) if b not in b_pts]
                bmap = {b: a for a, b in zip(a_pts, b_pts)}
                for k, b in enumerate(b_new):
                    bmap[b] = A.n + k
                n = A.n + len(b_new)
                rels = {r: set(v) for r, v in A.rels.items()}
                for r, v in B.rels.items():
                    rels.setdefault(r, set()).update(tuple(bmap[x] for x in t) for t in v)
                free = [(r, (x, y)) for r, ar in lang.items() if ar == 2
                        for x in range(A.n) if x not in a_pts for y in range(A.n, n)]
                free += [(r, (y, x)) for r, (x, y) in list(free)]
                for mask in range(1 << len(free)):
                    steps += 1
                    if steps > budget:
                        return "unresolved", None
                    rr = {r: set(v) for r, v in rels.items()}
                    for bit, (r, t) in enumerate(free):
                        if mask >> bit & 1:
                            rr[r].add(t)
                    C = RelStructure(n, rr)
                    if desc.member(C):
                        return "yes", C
    return "no", None


def build_universal(desc: Descriptor, n: int, check_ap: bool = True, seed: int = 0) -> Approximant:
    """A structure embedding every class member with at most n points."""
    if n > 7:
        raise DescriptorError("build_universal is limited to n <= 7")
    if check_ap and isinstance(desc, LatticeLiftDescriptor):
        rep = check_AP_lift(desc.lattice, desc.effective_pairs(), min(n, 5))
        if not rep.holds:
            raise BuildError("amalgamation fails", rep.counterexample)
    log: list[str] = []
    # members of size m < n that extend are covered by some member of size n
    maximal = list(members(desc, n))
    for m in range(n - 1, -1, -1):
        for A in members(desc, m):
            if not any(embeds(desc, A, B) for B in maximal):
                maximal.append(A)
    maximal = [A for A in maximal if size_of(A) > 0] or maximal[:1]
    if isinstance(desc, LatticeLiftDescriptor):
        log.append(f"join {len(maximal)} parts at the top distance")
        S = array_union([ArrayLift.from_lift(A) for A in maximal], seed)
        S = saturate(S, log=log)
        ok, msg = S.validate()
        if not ok:
            raise BuildError(f"approximant failed validation: {msg}")
        return Approximant(S, log)
    cur = maximal[0]
    log.append(f"start with part 0 ({cur.n} points)")
    for i, A in enumerate(maximal[1:], start=1):
        if rel_embeds(A, cur, desc.language):
            log.append(f"part {i} already embeds")
            continue
        verdict, C = _rel_join(desc, cur, A)
        if verdict != "yes":
            raise BuildError(f"no joint embedding found for part {i} ({verdict})")
        cur = C
        log.append(f"join part {i} -> {cur.n} points")
    return Approximant(cur, log)


@dataclass
class JEPReport:
    verdict: str                     # "yes", "no" or "unresolved"
    pairs_checked: int
    counterexample: tuple | None = None


def check_JEP(desc: Descriptor, n: int, budget: int = 200_000) -> JEPReport:
    if n > 6:
        raise DescriptorError("check_JEP is limited to n <= 6")
    pool = [A for m in range(1, n + 1) for A in members(desc, m)]
    checked = 0
    unresolved = None
    arrays = ([ArrayLift.from_lift(A) for A in pool]
              if isinstance(desc, LatticeLiftDescriptor) else None)
    for (i, A), (j, B) in itertools.combinations_with_replacement(enumerate(pool), 2):
        checked += 1
        if arrays is not None:
            C = array_union([arrays[i], arrays[j]])
            if not C.validate()[0]:
                return JEPReport("no", checked, (A, B))
            continue
        verdict, _ = _rel_join(desc, A, B, budget)
        if verdict == "no":
            return JEPReport("no", checked, (A, B))
        if verdict == "unresolved" and unresolved is None:
            unresolved = (A, B)
    if unresolved is not None:
        return JEPReport("unresolved", checked, unresolved)
    return JEPReport("yes", checked)


def check_AP_forbidden(desc: ForbiddenListDescriptor, n: int) -> APReport:
    """2-point amalgamation over every base with at most n - 2 points, by exhaustive search."""
    lang = desc.language
    report = APReport(True, n)
    for k in range(0, max(n - 1, 0)):
        for base in members(desc, k):
            exts = []
            for E in members(desc, k + 1):
                for emb in _rel_embeddings(base, E, lang):
                    new = next(x for x in range(k + 1) if x not in emb)
                    order = list(emb) + [new]
                    exts.append(E.relabel([order.index(i) for i in range(k + 1)]))
            exts = list({e.key(): e for e in exts}.values())
            for e1, e2 in itertools.combinations_with_replacement(exts, 2):
                report.metric_problems += 1
                report.problems += 1
                if not _rel_amalgam_exists(desc, k, e1, e2):
                    report.failures.append({"base": base.to_json(), "a1": e1.to_json(),
                                            "a2": e2.to_json()})
                    if report.holds:
                        report.holds = False
                        report.counterexample = report.failures[-1]
    return report


def _rel_amalgam_exists(desc: ForbiddenListDescriptor, k: int, e1: RelStructure,
                        e2: RelStructure) -> bool:
    lang = desc.language
    # identify the two new points
    if e1.key() == e2.key():
        return True
    rels = {r: set(v) for r, v in e1.rels.items()}
    for r, v in e2.rels.items():
        rels.setdefault(r, set()).update(tuple(k + 1 if x == k else x for x in t) for t in v)
    free = [(r, t) for r, ar in lang.items() if ar == 2 for t in ((k, k + 1), (k + 1, k))]
    for mask in range(1 << len(free)):
        rr = {r: set(v) for r, v in rels.items()}
        for b, (r, t) in enumerate(free):
            if mask >> b & 1:
                rr[r].add(t)
        if desc.member(RelStructure(k + 2, rr)):
            return True
    return False


# ---------------------------------------------------------------------------
# definable equivalences


def definable_equivalences(A) -> list[tuple[int, ...]]:
    """Join-closure of the relations generated by each realized 2-type and its opposite.

    Each relation is a tuple of class labels. Equality (the empty join) is included.
    """
    S = A.structure if isinstance(A, Approximant) else A
    if isinstance(S, LiftedStructure):
        S = ArrayLift.from_lift(S)
    if isinstance(S, ArrayLift):
        codes = S.type_codes()
    else:
        codes = _rel_type_codes(S)
    N = codes.shape[0]
    sym = np.minimum(codes, codes.T)
    gens = []
    off = ~np.eye(N, dtype=bool)
    for c in np.unique(sym[off]):
        r, s = np.nonzero((sym == c) & off)
        g = coo_matrix((np.ones(len(r)), (r, s)), shape=(N, N))
        _, labels = connected_components(g, directed=False)
        gens.append(_norm(labels))
    rels = {tuple(range(N))}
    frontier = set(gens)
    rels |= frontier
    while frontier:
        new = set()
        for a in frontier:
            for b in list(rels):
                j = _join(a, b)
                if j not in rels:
                    new.add(j)
        rels |= new
        frontier = new
    return sorted(rels, key=lambda p: (len(set(p)) * -1, p))


def _rel_type_codes(S: RelStructure) -> np.ndarray:
    N = S.n
    code = np.zeros((N, N), dtype=np.int64)
    for r in sorted(S.rels):
        m = np.zeros((N, N), dtype=np.int64)
        for t in S.rels[r]:
            if len(t) == 2:
                m[t[0], t[1]] = 1
        code = code * 2 + m
    return code


def _norm(labels: Sequence[int]) -> tuple[int, ...]:
    first: dict = {}
    return tuple(first.setdefault(int(v), i) for i, v in enumerate(labels))


def _join(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    parent = list(range(len(a)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for lab in (a, b):
        for i, l in enumerate(lab):
            ri, rl = find(i), find(l)
            if ri != rl:
                parent[max(ri, rl)] = min(ri, rl)
    return _norm([find(i) for i in range(len(a))])


def refines(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    return all(b[i] == b[a[i]] for i in range(len(a)))


def relation_lattice(rels: Sequence[tuple[int, ...]]) -> Lattice:
    names = tuple(f"R{i}" for i in range(len(rels)))
    leq = tuple(tuple(refines(a, b) for b in rels) for a in rels)
    return Lattice(names, leq)


def lattices_isomorphic(A: Lattice, B: Lattice) -> bool:
    if A.size != B.size:
        return False
    for perm in itertools.permutations(range(B.size)):
        if all(A.leq[i][j] == B.leq[perm[i]][perm[j]] for i in range(A.size)
               for j in range(A.size)):
            return True
    return False


# ---------------------------------------------------------------------------
# Ramsey oracle


@dataclass
class RamseyResult:
    verdict: str                 # "witness" or "unresolved"
    witness: object | None = None
    size: int | None = None


def _copies(desc: Descriptor, C, A) -> list[tuple[int, ...]]:
    key = canonical(desc, A)
    m = size_of(A)
    return [s for s in itertools.combinations(range(size_of(C)), m)
            if canonical(desc, restrict_to(C, s)) == key]


def arrows(desc: Descriptor, C, B, A, colors: int) -> bool:
    """C -> (B)^A_colors, checked over every coloring of the copies of A in C."""
    a_copies = _copies(desc, C, A)
    b_copies = _copies(desc, C, B)
    if not b_copies:
        return False
    index = {s: i for i, s in enumerate(a_copies)}
    inside = [[index[s] for s in itertools.combinations(t, size_of(A)) if s in index]
              for t in b_copies]
    for coloring in itertools.product(range(colors), repeat=len(a_copies)):
        if coloring and coloring[0] != 0:
            break                      # colour permutations: fix the first copy's colour
        if not any(len({coloring[i] for i in ins}) <= 1 for ins in inside):
            return False
    return True


def ramsey_check_small(desc: Descriptor, A, B, colors: int = 2, cap: int = 7) -> RamseyResult:
    if size_of(A) > 2 or size_of(B) > 3 or colors != 2 or cap > 7:
        raise DescriptorError("oracle limited to |A| <= 2, |B| <= 3, 2 colours, cap <= 7")
    for m in range(size_of(B), cap + 1):
        for C in members(desc, m):
            if arrows(desc, C, B, A, colors):
                return RamseyResult("witness", C, m)
    return RamseyResult("unresolved")


def linear_order(n: int) -> RelStructure:
    return RelStructure(n, {"<": {(i, j) for i in range(n) for j in range(i + 1, n)}})


# ---------------------------------------------------------------------------
# catalog of 3-order structures


def _compose_pairs(parts: Sequence[Sequence[tuple[int, int]]]) -> tuple[Lattice, list]:
    """Stack factor signatures (outermost first) over a chain lattice.

    Each factor is a list of (bottom level, top level) pairs relative to its own
    chain, where level 0 is its bottom and its height is its top.
    """
    heights = [max(t for _, t in p) if p else 1 for p in parts]
    total = sum(heights)
    L = chain(total)
    names = L.elements
    pairs = []
    offset = total
    for p, h in zip(parts, heights):
        offset -= h
        for b, t in p:
            pairs.append((names[offset + b], names[offset + t]))
    return L, pairs


GENERIC = {1: [(0, 1)], 2: [(0, 1), (0, 1)], 3: [(0, 1), (0, 1), (0, 1)]}
LEX_PLUS = [(0, 2), (0, 1), (1, 2)]       # generic order, then E-classes ordered inside and across
STAR = [(0, 2), (1, 2)]                    # generic order plus an order of the E-classes


def catalog_3dim() -> list[LatticeLiftDescriptor]:
    out = []

    def add(name: str, parts: Sequence[Sequence[tuple[int, int]]]) -> None:
        L, pairs = _compose_pairs(parts)
        out.append(LatticeLiftDescriptor(L, tuple(pairs), (), name))

    for i in (1, 2, 3):
        add(f"G{i}", [GENERIC[i]])
    add("G1[G0]+order", [STAR])
    add("G1[G1]+order", [LEX_PLUS])
    seen = set()
    for ms in ([1, 1], [1, 2], [2, 2], [1, 1, 1], [1, 1, 2], [1, 1, 1, 1]):
        for perm in sorted(set(itertools.permutations(ms))):
            if perm in seen:
                continue
            seen.add(perm)
            add("[".join(f"G{i}" for i in perm) + "]" * (len(perm) - 1),
                [GENERIC[i] for i in perm])
    add("G*[G1]", [STAR, GENERIC[1]])
    add("G1[G*]", [GENERIC[1], STAR])
    return out


def realized_type_count(desc: LatticeLiftDescriptor) -> int:
    """Number of non-trivial 2-types in the generic structure: pair types up to swapping x, y.

    Counted as ordered pair types at each nonzero distance, i.e. 2^(orders defined there).
    """
    L = desc.lattice
    total = 0
    for lam in range(L.size):
        if lam == L.bottom:
            continue
        k = sum(1 for e, f in desc.effective_pairs()
                if not L.leq[lam][L.index(e)] and L.leq[lam][L.index(f)])
        total += 2 ** k
    return total
