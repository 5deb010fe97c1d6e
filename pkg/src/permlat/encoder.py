"""Encoding a convex chain of equivalence relations by a few extra linear orders.

With n extra orders a chain of height up to 2^n - 1 is coded: a pair x < y at
level i (the least i with x E_i y) is given the sign pattern of i - 1 in binary.
"""

from __future__ import annotations

import functools
import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .lattice import ChainCover, Lattice, check_chain_cover, meet_irreducibles
from .permtypes import TwoType
from .subquotient import (LiftedStructure, NotWellEquipped, SqoError, compose, derive_sqo,
                          class_labels, _as_sequence)


class EncodingError(ValueError):
    pass


def _labels(labels: Sequence) -> tuple[int, ...]:
    first: dict = {}
    return tuple(first.setdefault(v, i) for i, v in enumerate(labels))


@dataclass(frozen=True)
class ChainStructure:
    points: tuple[str, ...]
    chain: tuple[tuple[int, ...], ...]     # class label per point, one tuple per level
    order: tuple[str, ...]                 # the convex linear order, least first
    allow_trivial: bool = field(default=False, compare=False)   # samples may collapse levels

    def __post_init__(self) -> None:
        pts = tuple(self.points)
        n = len(pts)
        chain = tuple(_labels(c) for c in self.chain)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "chain", chain)
        object.__setattr__(self, "order", tuple(self.order))
        if sorted(self.order) != sorted(pts):
            raise EncodingError("order must list every point exactly once")
        for c in chain:
            if len(c) != n:
                raise EncodingError("each relation needs one label per point")
        for lo, hi in zip(chain, chain[1:]):
            for x in range(n):
                for y in range(n):
                    if lo[x] == lo[y] and hi[x] != hi[y]:
                        raise EncodingError("chain is not increasing")
        if n > 1 and not self.allow_trivial:
            for c in chain:
                if len(set(c)) == n:
                    raise EncodingError("a chain member equals equality")
                if len(set(c)) == 1:
                    raise EncodingError("a chain member is the total relation")
        pos = {p: i for i, p in enumerate(pts)}
        for c in chain:
            seen_closed: set[int] = set()
            prev = None
            for p in self.order:
                lab = c[pos[p]]
                if lab != prev:
                    if lab in seen_closed:
                        raise EncodingError("a chain member is not convex for the order")
                    if prev is not None:
                        seen_closed.add(prev)
                    prev = lab
        object.__setattr__(self, "_pos", pos)

    @property
    def height(self) -> int:
        return len(self.chain)

    def level(self, x: str, y: str) -> int:
        """Least i with x E_i y; 0 for x = y and height + 1 when no member relates them."""
        if x == y:
            return 0
        i, j = self._pos[x], self._pos[y]
        for lvl, c in enumerate(self.chain, start=1):
            if c[i] == c[j]:
                return lvl
        return self.height + 1

    def classes(self, level: int) -> list[list[str]]:
        out: dict[int, list[str]] = {}
        for i, lab in enumerate(self.chain[level - 1]):
            out.setdefault(lab, []).append(self.points[i])
        return list(out.values())

    def to_json(self) -> dict:
        return {"points": list(self.points), "order": list(self.order),
                "chain": [self.classes(i) for i in range(1, self.height + 1)]}

    @classmethod
    def from_json(cls, data: Mapping) -> "ChainStructure":
        pts = tuple(data["points"])
        pos = {p: i for i, p in enumerate(pts)}
        chain = []
        for classes in data["chain"]:
            lab = [-1] * len(pts)
            for k, cl in enumerate(classes):
                for p in cl:
                    lab[pos[p]] = k
            if -1 in lab:
                raise EncodingError("a chain member does not partition the points")
            chain.append(tuple(lab))
        return cls(pts, tuple(chain), tuple(data["order"]))


@dataclass(frozen=True)
class Encoding:
    height: int
    n: int
    orders: tuple[tuple[str, ...], ...]
    typebook: Mapping[int, TwoType]

    def to_json(self) -> dict:
        return {"height": self.height, "n": self.n, "orders": [list(o) for o in self.orders],
                "typebook": {str(i): t.signs for i, t in self.typebook.items()}}


def orders_needed(height: int) -> int:
    return math.ceil(math.log2(height + 1)) if height > 0 else 0


def typebook(n: int) -> dict[int, TwoType]:
    return {i: TwoType(n, i - 1) for i in range(1, 2 ** n + 1)}


def _is_strict_total(order: Sequence[str], less) -> bool:
    """The relation ``less`` is exactly the order listed by ``order``."""
    for i, x in enumerate(order):
        for j, y in enumerate(order):
            if less(x, y) != (i < j):
                return False
    return True


def encode_chain(C: ChainStructure, n: int | None = None) -> Encoding:
    m = C.height
    need = orders_needed(m)
    n = need if n is None else n
    if m > 2 ** n - 1:
        raise EncodingError(f"height {m} exceeds {2 ** n - 1} for {n} orders")
    top = 2 ** n
    rank = {p: i for i, p in enumerate(C.order)}

    def lvl(x: str, y: str) -> int:
        v = C.level(x, y)
        return top if v == m + 1 else v

    orders = []
    for j in range(n):
        def R(x: str, y: str, j=j) -> bool:
            return bool((lvl(x, y) - 1) >> j & 1)

        def less(x: str, y: str, R=R) -> bool:
            if x == y:
                return False
            if rank[x] < rank[y]:
                return R(x, y)
            return not R(y, x)

        seq = sorted(C.points, key=functools.cmp_to_key(
            lambda a, b, less=less: -1 if less(a, b) else (1 if less(b, a) else 0)))
        if not _is_strict_total(seq, less):
            raise EncodingError(f"order {j} is not a strict total order")
        orders.append(tuple(seq))
    return Encoding(m, n, tuple(orders), typebook(n))


def decode_chain(enc: Encoding, base_order: Sequence[str], allow_trivial: bool = False
                 ) -> ChainStructure:
    pts = tuple(base_order)
    ranks = [{p: i for i, p in enumerate(o)} for o in enc.orders]
    top = 2 ** enc.n
    by_bits = {t.bits: i for i, t in enc.typebook.items()}
    N = len(pts)
    level = [[0] * N for _ in range(N)]
    for a in range(N):
        for b in range(a + 1, N):
            x, y = pts[a], pts[b]          # rank[x] < rank[y]
            bits = sum(1 << j for j, r in enumerate(ranks) if r[x] < r[y])
            if bits not in by_bits:
                raise EncodingError(f"type pattern {bits} is not in the typebook")
            lv = by_bits[bits]
            if enc.height < lv < top:
                raise EncodingError(f"pair {x!r},{y!r} decodes to unused level {lv}")
            level[a][b] = level[b][a] = lv
    chain = []
    for i in range(1, enc.height + 1):
        lab = []
        for a in range(N):
            lab.append(next(b for b in range(N) if level[a][b] <= i))
        chain.append(tuple(lab))
    return ChainStructure(pts, tuple(chain), pts, allow_trivial)


def same_chain_structure(A: ChainStructure, B: ChainStructure) -> bool:
    """Equal up to the order in which points are listed."""
    if set(A.points) != set(B.points) or A.height != B.height or A.order != B.order:
        return False
    return all(A.level(x, y) == B.level(x, y) for x in A.points for y in A.points)


def random_chain_structure(rng: random.Random, n_points: int, height: int) -> ChainStructure:
    """Random convex chain: classes are intervals of a shuffled point order."""
    if n_points < 3 and height > 0:
        raise EncodingError("need at least 3 points for a proper nontrivial chain")
    gaps = list(range(1, n_points))
    cuts_top = set(rng.sample(gaps, rng.randint(1, len(gaps) - 1))) if height else set()
    levels = [cuts_top]
    for _ in range(height - 1):
        extra = [g for g in gaps if g not in levels[-1]]
        add = set(rng.sample(extra, rng.randint(0, max(0, len(extra) - 1))))
        levels.append(levels[-1] | add)
    levels.reverse()                      # finest first
    names = [f"v{i}" for i in range(n_points)]
    rng.shuffle(names)
    chain = []
    for cuts in levels:
        lab, cur = [], 0
        for i in range(n_points):
            if i in cuts:
                cur += 1
            lab.append(cur)
        chain.append(lab)
    pts = tuple(sorted(names))
    pos = {p: i for i, p in enumerate(names)}
    chain_by_name = tuple(tuple(c[pos[p]] for p in pts) for c in chain)
    return ChainStructure(pts, chain_by_name, tuple(names))


# ---------------------------------------------------------------------------
# lattice representations


def representation_bound(L: Lattice, cover: ChainCover | Sequence[Sequence[str]]) -> int:
    """|cover| + sum of ceil(log2(|chain|+1)), and at least 1 when L has two or more elements."""
    chains = cover.chains if isinstance(cover, ChainCover) else cover
    checked = check_chain_cover(L, chains)
    bound = len(checked.chains) + sum(orders_needed(len(c)) for c in checked.chains)
    if L.size >= 2:
        bound = max(bound, 1)
    return bound


def representation_signature(L: Lattice, cover: ChainCover) -> list[tuple[str, str]]:
    """The (bottom, top) pairs the per-chain construction expands by."""
    pairs = []
    zero_irr = L.bottom_name in meet_irreducibles(L)
    for ch in cover.chains:
        for lo, hi in zip(ch, ch[1:]):
            pairs.append((lo, hi))
        pairs.append((ch[-1], L.top_name))
        if zero_irr:
            pairs.append((L.bottom_name, ch[0]))
    if not cover.chains and L.size >= 2:
        pairs.append((L.bottom_name, L.top_name))
    return pairs


@dataclass(frozen=True)
class Representation:
    orders: tuple[tuple[str, ...], ...]
    labels: tuple[str, ...]
    encodings: tuple[tuple[tuple[str, ...], ChainStructure, Encoding], ...]


def build_representation(L: Lattice, sample: LiftedStructure,
                         cover: ChainCover | None = None) -> Representation:
    from .lattice import chain_cover
    cover = chain_cover(L) if cover is None else check_chain_cover(L, cover.chains)
    S = sample.space
    want = representation_signature(L, cover)
    have = [(q.bottom, q.top) for q in sample.sqos]
    for p in want:
        if p not in have:
            raise SqoError(f"sample lacks a subquotient order {p[0]!r} -> {p[1]!r}")

    def sqo(lo: str, hi: str):
        return sample.sqos[have.index((lo, hi))]

    if not cover.chains:
        if L.size < 2:
            return Representation((), (), ())
        seq = _as_sequence(S, sqo(L.bottom_name, L.top_name))
        return Representation((seq,), ("sqo:0->1",), ())
    orders, labels, encs = [], [], []
    for ch in cover.chains:
        if (L.bottom_name, ch[0]) in have:
            low = sqo(L.bottom_name, ch[0])
        else:
            try:
                low, _ = derive_sqo(sample, L.bottom_name, ch[0])
            except NotWellEquipped as exc:
                raise SqoError(f"cannot derive an order below {ch[0]!r}: {exc}") from None
        cur = low
        for lo, hi in zip(ch, ch[1:]):
            cur = compose(S, sqo(lo, hi), cur)
        cur = compose(S, sqo(ch[-1], L.top_name), cur)
        conv = _as_sequence(S, cur)
        orders.append(conv)
        labels.append("convex:" + "<".join(ch))
        cs = ChainStructure(S.points, tuple(tuple(class_labels(S, L.index(e))) for e in ch),
                            conv, allow_trivial=True)
        enc = encode_chain(cs)
        for j, o in enumerate(enc.orders):
            orders.append(o)
            labels.append(f"code:{'<'.join(ch)}:{j}")
        encs.append((tuple(ch), cs, enc))
    return Representation(tuple(orders), tuple(labels), tuple(encs))


def recover_from_representation(L: Lattice, rep: Representation, points: Sequence[str]
                                 ) -> dict[str, set[tuple[str, str]]]:
    """Rebuild every equivalence relation of the lattice from the representation's orders."""
    pts = list(points)
    rel: dict[str, set] = {}
    for ch, cs, enc in rep.encodings:
        conv = rep.orders[rep.labels.index("convex:" + "<".join(ch))]
        codes = [rep.orders[rep.labels.index(f"code:{'<'.join(ch)}:{j}")] for j in range(enc.n)]
        dec = decode_chain(Encoding(len(ch), enc.n, tuple(codes), typebook(enc.n)), conv, True)
        for i, e in enumerate(ch, start=1):
            rel[e] = {(x, y) for x in pts for y in pts if dec.level(x, y) <= i}
    irr = [e for e in meet_irreducibles(L) if e in rel]
    for e in L.elements:
        if e in rel:
            continue
        if e == L.bottom_name:
            rel[e] = {(x, x) for x in pts}
            continue
        above = [f for f in irr if L.le(e, f)]
        rel[e] = {(x, y) for x in pts for y in pts if all((x, y) in rel[f] for f in above)}
    return rel
