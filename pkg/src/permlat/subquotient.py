"""Subquotient orders on lattice-valued ultrametric spaces.

A subquotient order with bottom ``E`` and top ``F`` is a strict order on
E-classes in which two classes are comparable exactly when they lie in the same
F-class. Orders are stored as pairs of class representatives, normalized to the
first point of each class (in the space's point order).
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .lattice import Lattice, meet_irreducibles
from .ultrametric import SpaceError, UltraSpace


class SqoError(ValueError):
    pass


class NotWellEquipped(SqoError):
    pass


@dataclass(frozen=True)
class SubquotientOrder:
    bottom: str
    top: str
    pairs: frozenset = frozenset()

    def to_json(self) -> dict:
        return {"bottom": self.bottom, "top": self.top,
                "pairs": [list(p) for p in sorted(self.pairs)]}

    @classmethod
    def from_json(cls, data: Mapping) -> "SubquotientOrder":
        return cls(data["bottom"], data["top"], frozenset(tuple(p) for p in data["pairs"]))


def class_rep(S: UltraSpace, lam: str, x: str) -> str:
    """First point (in point order) of the lam-class of x."""
    L = S.lattice
    li = L.index(lam)
    xi = S.pos(x)
    return next(S.points[y] for y in range(len(S)) if L.leq[S.dist[xi][y]][li])


def class_labels(S: UltraSpace, lam: int) -> list[int]:
    L = S.lattice
    return [next(y for y in range(len(S)) if L.leq[S.dist[x][y]][lam]) for x in range(len(S))]


def classes(S: UltraSpace, lam: str) -> list[str]:
    """Representatives of the lam-classes, in point order."""
    labels = class_labels(S, S.lattice.index(lam))
    return [S.points[i] for i in sorted(set(labels))]


def normalize(S: UltraSpace, q: SubquotientOrder) -> SubquotientOrder:
    pairs = frozenset((class_rep(S, q.bottom, a), class_rep(S, q.bottom, b)) for a, b in q.pairs)
    return SubquotientOrder(q.bottom, q.top, pairs)


def _check_interval(S: UltraSpace, E: str, F: str) -> None:
    if not S.lattice.le(E, F):
        raise SqoError(f"bottom {E!r} is not below top {F!r}")


@dataclass(frozen=True)
class SqoViolation:
    kind: str
    classes: tuple[str, ...]

    def to_json(self) -> dict:
        return {"kind": self.kind, "classes": list(self.classes)}


def validate_sqo(S: UltraSpace, q: SubquotientOrder) -> tuple[bool, SqoViolation | None]:
    _check_interval(S, q.bottom, q.top)
    L = S.lattice
    try:
        q = normalize(S, q)
    except SpaceError as exc:
        return False, SqoViolation("unknown-point", (str(exc),))
    reps = classes(S, q.bottom)
    lt = q.pairs
    fi = L.index(q.top)
    for a in reps:
        if (a, a) in lt:
            return False, SqoViolation("reflexive", (a,))
    for a in reps:
        for b in reps:
            if a == b:
                continue
            same_f = L.leq[S.dist[S.pos(a)][S.pos(b)]][fi]
            ab, ba = (a, b) in lt, (b, a) in lt
            if ab and ba:
                return False, SqoViolation("symmetric", (a, b))
            if same_f and not (ab or ba):
                return False, SqoViolation("incomparable", (a, b))
            if not same_f and (ab or ba):
                return False, SqoViolation("across-top", (a, b) if ab else (b, a))
    for a, b in lt:
        for c, d in lt:
            if b == c and (a, d) not in lt:
                return False, SqoViolation("intransitive", (a, b, d))
    return True, None


def sqo_from_key(S: UltraSpace, E: str, F: str, key) -> SubquotientOrder:
    """Order E-classes inside each F-class by ``key(rep)``; keys must differ within an F-class."""
    _check_interval(S, E, F)
    L = S.lattice
    fi = L.index(F)
    reps = classes(S, E)
    pairs = set()
    for a in reps:
        for b in reps:
            if a != b and L.leq[S.dist[S.pos(a)][S.pos(b)]][fi] and key(a) < key(b):
                pairs.add((a, b))
    return SubquotientOrder(E, F, frozenset(pairs))


def random_sqo(S: UltraSpace, E: str, F: str, rng: random.Random) -> SubquotientOrder:
    reps = classes(S, E)
    rank = {r: i for i, r in enumerate(rng.sample(reps, len(reps)))}
    return sqo_from_key(S, E, F, rank.__getitem__)


def linear_order_sqo(S: UltraSpace, order: Sequence[str]) -> SubquotientOrder:
    """The bottom-to-top subquotient order given by a sequence of all points."""
    L = S.lattice
    rank = {p: i for i, p in enumerate(order)}
    return sqo_from_key(S, L.bottom_name, L.top_name, rank.__getitem__)


def _less(S: UltraSpace, q: SubquotientOrder, x: str, y: str) -> bool:
    return (class_rep(S, q.bottom, x), class_rep(S, q.bottom, y)) in q.pairs


def compose(S: UltraSpace, outer: SubquotientOrder, inner: SubquotientOrder) -> SubquotientOrder:
    if outer.bottom != inner.top:
        raise SqoError(f"cannot compose: outer bottom {outer.bottom!r} != inner top {inner.top!r}")
    L = S.lattice
    inner, outer = normalize(S, inner), normalize(S, outer)
    E, F, G = inner.bottom, inner.top, outer.top
    fi, gi = L.index(F), L.index(G)
    reps = classes(S, E)
    pairs = set()
    for a in reps:
        for b in reps:
            if a == b:
                continue
            dab = S.dist[S.pos(a)][S.pos(b)]
            if L.leq[dab][fi]:
                if (a, b) in inner.pairs:
                    pairs.add((a, b))
            elif L.leq[dab][gi] and _less(S, outer, a, b):
                pairs.add((a, b))
    return SubquotientOrder(E, G, frozenset(pairs))


def restrict(S: UltraSpace, q: SubquotientOrder, G: str) -> SubquotientOrder:
    L = S.lattice
    if not (L.le(q.bottom, G) and L.le(G, q.top)):
        raise SqoError(f"{G!r} is not between {q.bottom!r} and {q.top!r}")
    q = normalize(S, q)
    gi = L.index(G)
    pairs = frozenset((a, b) for a, b in q.pairs if L.leq[S.dist[S.pos(a)][S.pos(b)]][gi])
    return SubquotientOrder(q.bottom, G, pairs)


def induce_across_meet(S: UltraSpace, q: SubquotientOrder, E: str, F2: str) -> SubquotientOrder:
    L = S.lattice
    F1 = q.bottom
    if L.meet(F1, F2) != E:
        raise SqoError(f"{E!r} is not the meet of {F1!r} and {F2!r}")
    if q.top != L.join(F1, F2):
        raise SqoError(f"order must have top {L.join(F1, F2)!r}, has {q.top!r}")
    q = normalize(S, q)
    f2 = L.index(F2)
    reps = classes(S, E)
    pairs = set()
    for a in reps:
        for b in reps:
            if a != b and L.leq[S.dist[S.pos(a)][S.pos(b)]][f2] and _less(S, q, a, b):
                pairs.add((a, b))
    return SubquotientOrder(E, F2, frozenset(pairs))


# ---------------------------------------------------------------------------
# lifted structures


@dataclass(frozen=True)
class LiftedStructure:
    space: UltraSpace
    sqos: tuple[SubquotientOrder, ...]
    _lt: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        S = self.space
        sqos = tuple(normalize(S, q) for q in self.sqos)
        object.__setattr__(self, "sqos", sqos)
        n = len(S)
        mats = []
        for q in sqos:
            labels = class_labels(S, S.lattice.index(q.bottom))
            reps = [S.points[i] for i in labels]
            mats.append(tuple(tuple((reps[x], reps[y]) in q.pairs for y in range(n))
                              for x in range(n)))
        object.__setattr__(self, "_lt", tuple(mats))

    @property
    def lattice(self) -> Lattice:
        return self.space.lattice

    def lt(self, i: int, x: str, y: str) -> bool:
        """Point-level pullback of sqo ``i``."""
        if not 0 <= i < len(self.sqos):
            raise SqoError(f"no subquotient order with index {i}")
        return self._lt[i][self.space.pos(x)][self.space.pos(y)]

    def lt_i(self, i: int, x: int, y: int) -> bool:
        return self._lt[i][x][y]

    def restrict(self, pts: Sequence[str]) -> "LiftedStructure":
        sub = self.space.restrict(pts)
        sqos = []
        for i, q in enumerate(self.sqos):
            pairs = set()
            for a in pts:
                for b in pts:
                    if self.lt(i, a, b):
                        pairs.add((a, b))
            sqos.append(normalize(sub, SubquotientOrder(q.bottom, q.top, frozenset(pairs))))
        return LiftedStructure(sub, tuple(sqos))

    def to_json(self) -> dict:
        return {"space": self.space.to_json(), "sqos": [q.to_json() for q in self.sqos]}

    @classmethod
    def from_json(cls, data: Mapping) -> "LiftedStructure":
        space_data = data["space"] if "space" in data else data
        return cls(UltraSpace.from_json(space_data),
                   tuple(SubquotientOrder.from_json(q) for q in data["sqos"]))


def validate_lift(Ls: LiftedStructure) -> tuple[bool, tuple[int, SqoViolation] | None]:
    from .ultrametric import validate_space
    ok, v = validate_space(Ls.space)
    if not ok:
        return False, (-1, SqoViolation("space-" + v.kind, v.points))
    for i, q in enumerate(Ls.sqos):
        ok, v = validate_sqo(Ls.space, q)
        if not ok:
            return False, (i, v)
    return True, None


# ---------------------------------------------------------------------------
# signatures


LiftSignature = Mapping[str, Counter]


def signature(Ls_or_sqos) -> dict[str, Counter]:
    sqos = Ls_or_sqos.sqos if isinstance(Ls_or_sqos, LiftedStructure) else Ls_or_sqos
    sig: dict[str, Counter] = {}
    for q in sqos:
        if q.bottom != q.top:
            sig.setdefault(q.bottom, Counter())[q.top] += 1
    return sig


def signature_from_pairs(pairs: Iterable[tuple[str, str]]) -> dict[str, Counter]:
    return signature([SubquotientOrder(e, f) for e, f in pairs])


def is_well_equipped(sig: Mapping[str, Mapping[str, int]], L: Lattice) -> bool:
    bottoms = set()
    for E, tops in sig.items():
        for F, mult in tops.items():
            if mult > 0 and L.le(E, F) and E != F:
                bottoms.add(E)
    return bottoms == set(meet_irreducibles(L))


def signature_sqo_pairs(sig: Mapping[str, Mapping[str, int]], L: Lattice) -> list[tuple[str, str]]:
    """Flatten a signature into (bottom, top) pairs in canonical element order."""
    out = []
    for E in sorted(sig, key=L.index):
        for F in sorted(sig[E], key=L.index):
            out.extend([(E, F)] * sig[E][F])
    return out


# ---------------------------------------------------------------------------
# derived orders


def _derive(Ls: LiftedStructure, E: str, F: str, memo: dict) -> tuple[SubquotientOrder, dict]:
    key = (E, F)
    if key in memo:
        return memo[key]
    S, L = Ls.space, Ls.lattice
    ei = L.index(E)
    exact = [i for i, q in enumerate(Ls.sqos) if q.bottom == E and q.top == F]
    if exact:
        out = (Ls.sqos[exact[0]], {"op": "sqo", "index": exact[0], "bottom": E, "top": F})
        memo[key] = out
        return out
    covers = [L.elements[c] for c in L.upper_covers(ei)]
    if len(covers) == 1:
        cover = covers[0]
        own = [i for i, q in enumerate(Ls.sqos) if q.bottom == E and q.top != E]
        if not own:
            raise NotWellEquipped(f"meet-irreducible {E!r} has no subquotient order")
        to_top = [i for i in own if Ls.sqos[i].top == L.top_name]
        pick = (to_top or own)[0]
        base = restrict(S, Ls.sqos[pick], cover)
        trace = {"op": "restrict", "to": cover,
                 "of": {"op": "sqo", "index": pick, "bottom": E, "top": Ls.sqos[pick].top}}
    else:
        cover = next(c for c in covers if L.le(c, F))
        ci = L.index(cover)
        comp = next(L.elements[g] for g in range(L.size)
                    if L.leq[ei][g] and g != ei and L.meet_i(g, ci) == ei)
        up = L.join(cover, comp)
        inner, inner_trace = _derive(Ls, comp, up, memo)
        base = induce_across_meet(S, inner, E, cover)
        trace = {"op": "induce", "bottom": E, "top": cover, "via": comp, "of": inner_trace}
    if cover != F:
        outer, outer_trace = _derive(Ls, cover, F, memo)
        base = compose(S, outer, base)
        trace = {"op": "compose", "outer": outer_trace, "inner": trace}
    memo[key] = (base, trace)
    return memo[key]


def derive_sqo(Ls: LiftedStructure, E: str, F: str, memo: dict | None = None
               ) -> tuple[SubquotientOrder, dict]:
    L = Ls.lattice
    if not (L.le(E, F) and E != F):
        raise SqoError(f"need {E!r} < {F!r}")
    if not is_well_equipped(signature(Ls), L):
        raise NotWellEquipped("the lift's signature is not well-equipped")
    return _derive(Ls, E, F, {} if memo is None else memo)


def extend_to_top(Ls: LiftedStructure, q: SubquotientOrder, memo: dict | None = None
                  ) -> SubquotientOrder:
    L = Ls.lattice
    if q.top == L.top_name:
        return q
    outer, _ = derive_sqo(Ls, q.top, L.top_name, memo)
    return compose(Ls.space, outer, q)


# ---------------------------------------------------------------------------
# linear orders


@dataclass(frozen=True)
class LinearOrder:
    label: str
    order: tuple[str, ...]      # points listed from least to greatest

    def rank(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.order)}


def _as_sequence(S: UltraSpace, q: SubquotientOrder) -> tuple[str, ...]:
    if q.bottom != S.lattice.bottom_name or q.top != S.lattice.top_name:
        raise SqoError("only a bottom-to-top order is linear")
    q = normalize(S, q)
    below = {p: sum((o, p) in q.pairs for o in S.points) for p in S.points}
    return tuple(sorted(S.points, key=below.__getitem__))


def is_strict_total(S: UltraSpace, q: SubquotientOrder) -> bool:
    return validate_sqo(S, SubquotientOrder(S.lattice.bottom_name, S.lattice.top_name,
                                            q.pairs))[0]


def convex_order(Ls: LiftedStructure, E: str, memo: dict | None = None) -> SubquotientOrder:
    """A linear order in which the E-classes are intervals."""
    L = Ls.lattice
    memo = {} if memo is None else memo
    S = Ls.space
    up = derive_sqo(Ls, E, L.top_name, memo)[0] if E != L.top_name else None
    down = derive_sqo(Ls, L.bottom_name, E, memo)[0] if E != L.bottom_name else None
    if up is None:
        return down
    if down is None:
        return up
    return compose(S, up, down)


def to_linear_orders(Ls: LiftedStructure) -> list[LinearOrder]:
    """Linear orders interdefinable with the lift, identical orders listed once.

    Labels: ``sqo:<i>`` for the order obtained from sqo i, ``star:<E>`` for the
    order that agrees with an E-convex order inside E-classes and reverses it
    between them.
    """
    L, S = Ls.lattice, Ls.space
    if not is_well_equipped(signature(Ls), L):
        raise NotWellEquipped("the lift's signature is not well-equipped")
    memo: dict = {}
    raw: list[LinearOrder] = []
    for i, q in enumerate(Ls.sqos):
        ext = extend_to_top(Ls, q, memo)
        if q.bottom != L.bottom_name:
            ext = compose(S, ext, derive_sqo(Ls, L.bottom_name, q.bottom, memo)[0])
        raw.append(LinearOrder(f"sqo:{i}", _as_sequence(S, ext)))
    for E in L.elements:
        if E in (L.bottom_name, L.top_name):
            continue
        conv = _as_sequence(S, convex_order_for_star(Ls, E, memo))
        raw.append(LinearOrder(f"star:{E}", _star(S, E, conv)))
    out: list[LinearOrder] = []
    seen: dict[tuple, int] = {}
    for lo in raw:
        if lo.order in seen:
            k = seen[lo.order]
            out[k] = LinearOrder(out[k].label + "|" + lo.label, lo.order)
        else:
            seen[lo.order] = len(out)
            out.append(lo)
    return out


def convex_order_for_star(Ls: LiftedStructure, E: str, memo: dict) -> SubquotientOrder:
    """The E-convex order paired with the star order: the first sqo order with bottom E if any."""
    L, S = Ls.lattice, Ls.space
    own = [q for q in Ls.sqos if q.bottom == E and q.top != E]
    if own:
        ext = extend_to_top(Ls, own[0], memo)
        return compose(S, ext, derive_sqo(Ls, L.bottom_name, E, memo)[0])
    return convex_order(Ls, E, memo)


def _star(S: UltraSpace, E: str, conv: Sequence[str]) -> tuple[str, ...]:
    L = S.lattice
    ei = L.index(E)
    blocks: list[list[str]] = []
    for p in conv:
        if blocks and L.leq[S.dist[S.pos(blocks[-1][0])][S.pos(p)]][ei]:
            blocks[-1].append(p)
        else:
            blocks.append([p])
    return tuple(p for blk in reversed(blocks) for p in blk)


def recover_relations(Ls: LiftedStructure, orders: Sequence[LinearOrder]) -> dict[str, set]:
    """Rebuild each equivalence relation from the output orders alone.

    For E with its own sqo, x E y iff the E-convex order and the star order
    agree on (x, y). Every other E is the meet of the meet-irreducibles above it.
    """
    L, S = Ls.lattice, Ls.space
    by_label = {}
    for lo in orders:
        for lab in lo.label.split("|"):
            by_label[lab] = lo.rank()
    pts = S.points
    rel: dict[str, set] = {}
    irr = set(meet_irreducibles(L))
    for E in L.elements:
        if E == L.top_name:
            rel[E] = {(x, y) for x in pts for y in pts}
        elif E in irr and E != L.bottom_name:
            i = next(k for k, q in enumerate(Ls.sqos) if q.bottom == E and q.top != E)
            conv, star = by_label[f"sqo:{i}"], by_label[f"star:{E}"]
            rel[E] = {(x, y) for x in pts for y in pts
                      if (conv[x] < conv[y]) == (star[x] < star[y])}
    for E in L.elements:
        if E in rel:
            continue
        if E == L.bottom_name and E not in irr:
            above = [F for F in irr if F != E]
        elif E == L.bottom_name:
            rel[E] = {(x, x) for x in pts}
            continue
        else:
            above = [F for F in irr if F != E and L.le(E, F)]
        rel[E] = {(x, y) for x in pts for y in pts if all((x, y) in rel[F] for F in above)}
    return rel
