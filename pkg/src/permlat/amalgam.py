"""Two-point amalgamation for lifted ultrametric spaces and an exhaustive AP checker.

The checker reduces to amalgamation problems in which each factor adds one
point to the base. In a lift, the validity of a completed 2-point problem
splits into the metric part and one independent condition per subquotient
order (each order's conditions mention only the metric and that order). So the
set of all problems over a fixed metric problem is a product, and it is
enough to collect, per order, the distinct sets of admissible cross distances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .lattice import Lattice, is_distributive
from .subquotient import LiftedStructure, SubquotientOrder, SqoError, validate_lift
from .ultrametric import (AmalgamationError, UltraSpace, enumerate_spaces, extension_rows,
                          first_violation, precanonical_i)


# ---------------------------------------------------------------------------
# point-level primitives shared by the amalgamation strategy and the checker


def _preceq(eqE, lt, a: int, b: int) -> bool:
    return eqE[a][b] or lt[a][b]


def _arrow(eqE, lt, base: Iterable[int], a: int, b: int) -> bool:
    if eqE[a][b]:
        return False
    return any(_preceq(eqE, lt, a, x) and _preceq(eqE, lt, x, b) for x in base)


def _rule(eqE, eqF, lt, base: Sequence[int], a1: int, a2: int) -> tuple[bool, bool]:
    """Relation between a1 and a2 chosen by the two-point strategy: (a1<a2, a2<a1)."""
    if eqE[a1][a2] or not eqF[a1][a2]:
        return False, False
    fwd, back = _arrow(eqE, lt, base, a1, a2), _arrow(eqE, lt, base, a2, a1)
    if fwd and back:
        raise AmalgamationError("both arrow directions are forced")
    if back:
        return False, True
    return True, False        # forced forward, or free choice resolved as a1 < a2


def _sqo_ok(eqE, eqF, lt, n: int) -> bool:
    for x in range(n):
        if lt[x][x]:
            return False
        for y in range(x + 1, n):
            if eqE[x][y]:
                if lt[x][y] or lt[y][x]:
                    return False
                for z in range(n):
                    if lt[x][z] != lt[y][z] or lt[z][x] != lt[z][y]:
                        return False
            elif eqF[x][y]:
                if lt[x][y] == lt[y][x]:
                    return False
            elif lt[x][y] or lt[y][x]:
                return False
    for x in range(n):
        for y in range(n):
            if lt[x][y]:
                for z in range(n):
                    if lt[y][z] and not lt[x][z]:
                        return False
    return True


# ---------------------------------------------------------------------------
# lifted problems


@dataclass(frozen=True)
class LiftAmalgamProblem:
    base: LiftedStructure
    a1: LiftedStructure
    a2: LiftedStructure

    def __post_init__(self) -> None:
        bp = set(self.base.space.points)
        for f in (self.a1, self.a2):
            extra = set(f.space.points) - bp
            if len(extra) != 1 or not bp <= set(f.space.points):
                raise AmalgamationError("each factor must add exactly one point to the base")
            if len(f.sqos) != len(self.base.sqos) or any(
                    (p.bottom, p.top) != (q.bottom, q.top) for p, q in zip(f.sqos, self.base.sqos)):
                raise AmalgamationError("factor and base signatures differ")
            if f.restrict(self.base.space.points) != self.base:
                raise AmalgamationError("factor does not restrict to the base")
        if self.point1 == self.point2:
            raise AmalgamationError("the two new points must have different ids")

    @property
    def point1(self) -> str:
        return next(p for p in self.a1.space.points if p not in self.base.space._pos)

    @property
    def point2(self) -> str:
        return next(p for p in self.a2.space.points if p not in self.base.space._pos)

    def to_json(self) -> dict:
        return {"base": self.base.to_json(), "a1": self.a1.to_json(), "a2": self.a2.to_json()}

    @classmethod
    def from_json(cls, data: Mapping) -> "LiftAmalgamProblem":
        return cls(LiftedStructure.from_json(data["base"]), LiftedStructure.from_json(data["a1"]),
                   LiftedStructure.from_json(data["a2"]))


def preceq(Ls: LiftedStructure, q: int, a: str, b: str) -> bool:
    S = Ls.space
    if not 0 <= q < len(Ls.sqos):
        raise SqoError(f"no subquotient order with index {q}")
    E = S.lattice.index(Ls.sqos[q].bottom)
    return S.lattice.leq[S.dist[S.pos(a)][S.pos(b)]][E] or Ls.lt(q, a, b)


@dataclass
class _Frame:
    """Point-level view of a 2-point problem: base points, then a1, then a2."""
    points: list[str]
    dist: list[list[int]]
    lts: list[list[list[bool]]]


def _frame(P: LiftAmalgamProblem, h: int) -> _Frame:
    L = P.base.lattice
    base = list(P.base.space.points)
    p1, p2 = P.point1, P.point2
    pts = base + [p1, p2]
    n = len(pts)
    S1, S2 = P.a1.space, P.a2.space

    def src(x: str, y: str):
        if x == p2 or y == p2:
            return P.a2, S2
        return P.a1, S1

    dist = [[L.bottom] * n for _ in range(n)]
    for i, x in enumerate(pts):
        for j, y in enumerate(pts):
            if {x, y} == {p1, p2}:
                dist[i][j] = h
            elif i != j:
                _, S = src(x, y)
                dist[i][j] = S.dist[S.pos(x)][S.pos(y)]
    lts = []
    for q in range(len(P.base.sqos)):
        lt = [[False] * n for _ in range(n)]
        for i, x in enumerate(pts):
            for j, y in enumerate(pts):
                if {x, y} != {p1, p2} and i != j:
                    F, _ = src(x, y)
                    lt[i][j] = F.lt(q, x, y)
        lts.append(lt)
    return _Frame(pts, dist, lts)


def _eq(L: Lattice, dist, lam: int) -> list[list[bool]]:
    return [[L.leq[v][lam] for v in row] for row in dist]


def arr(P: LiftAmalgamProblem, q: int) -> tuple[bool, bool]:
    """(a1 -> a2, a2 -> a1) for sqo q, with witnesses taken from the base."""
    L = P.base.lattice
    h = _cross_distance(P)
    fr = _frame(P, h)
    E = L.index(P.base.sqos[q].bottom)
    eqE = _eq(L, fr.dist, E)
    k = len(P.base.space)
    return (_arrow(eqE, fr.lts[q], range(k), k, k + 1),
            _arrow(eqE, fr.lts[q], range(k), k + 1, k))


def _rows(P: LiftAmalgamProblem) -> tuple[list[int], list[int]]:
    base = P.base.space.points
    S1, S2 = P.a1.space, P.a2.space
    r1 = [S1.dist[S1.pos(P.point1)][S1.pos(b)] for b in base]
    r2 = [S2.dist[S2.pos(P.point2)][S2.pos(b)] for b in base]
    return r1, r2


def _cross_distance(P: LiftAmalgamProblem) -> int:
    L = P.base.lattice
    r1, r2 = _rows(P)
    return precanonical_i(L, r1, r2) if r1 else L.top


def two_point_amalgam(P: LiftAmalgamProblem) -> LiftedStructure:
    L = P.base.lattice
    if not is_distributive(L):
        raise AmalgamationError("two-point amalgamation needs a distributive lattice")
    h = _cross_distance(P)
    fr = _frame(P, h)
    k = len(P.base.space)
    a1, a2 = k, k + 1
    n = k + 2
    if h == L.bottom:
        same = all(fr.lts[q][a1][z] == fr.lts[q][a2][z] and fr.lts[q][z][a1] == fr.lts[q][z][a2]
                   for q in range(len(fr.lts)) for z in range(k))
        if not same:
            raise AmalgamationError("cross distance is bottom but the orders separate the points")
        return P.a1
    sqos = []
    for q, sq in enumerate(P.base.sqos):
        E, F = L.index(sq.bottom), L.index(sq.top)
        eqE, eqF = _eq(L, fr.dist, E), _eq(L, fr.dist, F)
        lt = fr.lts[q]
        fwd, back = _rule(eqE, eqF, lt, range(k), a1, a2)
        if eqE[a1][a2]:
            # a2 joins a1's class; its relations already agree with a1's
            pass
        lt[a1][a2], lt[a2][a1] = fwd, back
        pairs = frozenset((fr.points[x], fr.points[y]) for x in range(n) for y in range(n)
                          if lt[x][y])
        sqos.append(SubquotientOrder(sq.bottom, sq.top, pairs))
    space = UltraSpace(L, tuple(fr.points), tuple(tuple(r) for r in fr.dist))
    out = LiftedStructure(space, tuple(sqos))
    ok, why = validate_lift(out)
    if not ok:
        raise AmalgamationError(f"two-point amalgam failed validation: {why}")
    return out


def _factor_key(base: LiftedStructure, f: LiftedStructure) -> tuple:
    """Name-free description of ``f`` over ``base``, minimised over orderings of its new points."""
    bpts = list(base.space.points)
    new = [p for p in f.space.points if p not in base.space._pos]
    best = None
    for perm in itertools.permutations(new):
        order = bpts + list(perm)
        idx = [f.space.pos(p) for p in order]
        key = (tuple(f.space.dist[i][j] for i in idx for j in idx),
               tuple(f.lt_i(q, i, j) for q in range(len(f.sqos)) for i in idx for j in idx))
        if best is None or key < best:
            best = key
    return (len(new), best)


def amalgamate_diagram(base: LiftedStructure, factors: Sequence[LiftedStructure]
                       ) -> LiftedStructure:
    """Amalgamate several extensions of ``base``; every cross pair is resolved from base + pair."""
    L = base.lattice
    if not is_distributive(L):
        raise AmalgamationError("diagram amalgamation needs a distributive lattice")
    bpts = list(base.space.points)
    extras: list[tuple[int, str]] = []
    for fi, f in enumerate(factors):
        if f.restrict(bpts) != base:
            raise AmalgamationError(f"factor {fi} does not restrict to the base")
    # pair resolution breaks ties by position, so fix an order that ignores listing
    factors = sorted(factors, key=lambda f: _factor_key(base, f))
    for fi, f in enumerate(factors):
        extras.extend((fi, p) for p in f.space.points if p not in base.space._pos)
    if len({p for _, p in extras}) != len(extras):
        raise AmalgamationError("factors share non-base point ids")
    pts = bpts + [p for _, p in extras]
    owner = {p: fi for fi, p in extras}
    n = len(pts)
    nq = len(base.sqos)
    dist = [[L.bottom] * n for _ in range(n)]
    lts = [[[False] * n for _ in range(n)] for _ in range(nq)]
    merged: dict[int, int] = {}

    def home(x: str, y: str) -> LiftedStructure:
        fx, fy = owner.get(x), owner.get(y)
        return factors[fx if fx is not None else (fy if fy is not None else 0)] if factors else base

    for i, x in enumerate(pts):
        for j, y in enumerate(pts):
            if i == j:
                continue
            fx, fy = owner.get(x), owner.get(y)
            if fx is not None and fy is not None and fx != fy:
                continue
            H = home(x, y)
            dist[i][j] = H.space.dist[H.space.pos(x)][H.space.pos(y)]
            for q in range(nq):
                lts[q][i][j] = H.lt(q, x, y)
    for (i, (fx, x)), (j, (fy, y)) in itertools.combinations(enumerate(extras), 2):
        if fx == fy:
            continue
        P = LiftAmalgamProblem(base, factors[fx].restrict(bpts + [x]),
                               factors[fy].restrict(bpts + [y]))
        res = two_point_amalgam(P)
        xi, yi = len(bpts) + i, len(bpts) + j
        if len(res.space) == len(bpts) + 1:
            merged[yi] = merged.get(xi, xi)
            dist[xi][yi] = dist[yi][xi] = L.bottom
            continue
        dist[xi][yi] = dist[yi][xi] = res.space.dist[res.space.pos(x)][res.space.pos(y)]
        for q in range(nq):
            lts[q][xi][yi] = res.lt(q, x, y)
            lts[q][yi][xi] = res.lt(q, y, x)
    keep = [i for i in range(n) if i not in merged]
    space = UltraSpace(L, tuple(pts[i] for i in keep),
                       tuple(tuple(dist[i][j] for j in keep) for i in keep))
    sqos = []
    for q, sq in enumerate(base.sqos):
        pairs = frozenset((pts[x], pts[y]) for x in keep for y in keep if lts[q][x][y])
        sqos.append(SubquotientOrder(sq.bottom, sq.top, pairs))
    out = LiftedStructure(space, tuple(sqos))
    ok, why = validate_lift(out)
    if not ok:
        raise AmalgamationError(f"diagram amalgam failed validation: {why}")
    return out


# ---------------------------------------------------------------------------
# exhaustive AP check for lattice lifts


@dataclass
class APReport:
    holds: bool
    n: int
    metric_problems: int = 0
    problems: int = 0                  # number of lifted 2-point problems covered
    strategy_failures: int = 0         # metric problems over which the strategy failed somewhere
    counterexample: dict | None = None
    failures: list = field(default_factory=list)   # every failing problem, first one first

    def to_json(self) -> dict:
        return {"holds": self.holds, "n": self.n, "metric_problems": self.metric_problems,
                "problems": self.problems, "strategy_failures": self.strategy_failures,
                "failure_count": len(self.failures), "counterexample": self.counterexample}


def _base_orders(eqE_base, eqF_base, k: int) -> Iterator[list[int]]:
    """Every valid sqo on the base, given as a rank per point (position of its E-class)."""
    reps = sorted({next(y for y in range(k) if eqE_base[x][y]) for x in range(k)})
    groups: dict[int, list[int]] = {}
    for r in reps:
        f = next(y for y in range(k) if eqF_base[r][y])
        groups.setdefault(f, []).append(r)
    glist = list(groups.values())
    for perms in itertools.product(*(itertools.permutations(g) for g in glist)):
        rank_of_rep = {}
        for perm in perms:
            for pos, r in enumerate(perm):
                rank_of_rep[r] = 2 * pos + 1
        yield [rank_of_rep[next(y for y in range(k) if eqE_base[x][y])] for x in range(k)]


def _placements(eqE, eqF, rank: list[int], k: int, a: int) -> list[int | None]:
    """Possible ranks of a new point: fixed when it joins a base class, a gap otherwise."""
    for b in range(k):
        if eqE[a][b]:
            return [rank[b]]
    fmates = [b for b in range(k) if eqF[a][b]]
    if not fmates:
        return [None]
    m = len({rank[b] for b in fmates})
    return [2 * s for s in range(m + 1)]


def _order_matrix(eqE, eqF, ranks: list, n: int) -> list[list[bool]]:
    lt = [[False] * n for _ in range(n)]
    for x in range(n):
        for y in range(n):
            if x != y and eqF[x][y] and not eqE[x][y] and ranks[x] is not None \
                    and ranks[y] is not None:
                lt[x][y] = ranks[x] < ranks[y]
    return lt


# Cross-distance categories for one order with bottom E and top F.
CAT_E, CAT_F, CAT_TOP = 0, 1, 2


def _category(L: Lattice, h: int, E: int, F: int) -> int:
    if L.leq[h][E]:
        return CAT_E
    if L.leq[h][F]:
        return CAT_F
    return CAT_TOP


def _order_families(L: Lattice, d: list[list[int]], k: int, E: int, F: int,
                    cats: frozenset[int], star_cat: int
                    ) -> tuple[set[frozenset[int]], int, int, dict]:
    """For one order over a fixed metric problem, scan every choice of base order and placements.

    Returns the distinct sets of admissible categories, the number of choices,
    the number of choices where the strategy fails, and one failing choice.
    """
    n = k + 2
    a1, a2 = k, k + 1
    eqE = _eq(L, d, E)
    eqF = _eq(L, d, F)
    fams: set[frozenset[int]] = set()
    count = 0
    strat_fail = 0
    example: dict = {}
    for rank in _base_orders(eqE, eqF, k):
        for r1 in _placements(eqE, eqF, rank, k, a1):
            for r2 in _placements(eqE, eqF, rank, k, a2):
                count += 1
                ranks = list(rank) + [r1, r2]
                ok_cats = set()
                strat_ok = None
                for c in cats:
                    eE = [row[:] for row in eqE]
                    eF = [row[:] for row in eqF]
                    eE[a1][a2] = eE[a2][a1] = c == CAT_E
                    eF[a1][a2] = eF[a2][a1] = c != CAT_TOP
                    base_lt = _order_matrix(eE, eF, ranks, n)
                    base_lt[a1][a2] = base_lt[a2][a1] = False
                    choices = [(False, False)] if c != CAT_F else [(True, False), (False, True)]
                    for fwd, back in choices:
                        lt = [row[:] for row in base_lt]
                        lt[a1][a2], lt[a2][a1] = fwd, back
                        if _sqo_ok(eE, eF, lt, n):
                            ok_cats.add(c)
                            break
                    if c == star_cat:
                        try:
                            fwd, back = _rule(eE, eF, base_lt, range(k), a1, a2)
                            lt = [row[:] for row in base_lt]
                            lt[a1][a2], lt[a2][a1] = fwd, back
                            strat_ok = _sqo_ok(eE, eF, lt, n)
                        except AmalgamationError:
                            strat_ok = False
                if not strat_ok:
                    strat_fail += 1
                    example = {"ranks": ranks}
                fams.add(frozenset(ok_cats))
    return fams, count, strat_fail, example


def check_AP_lift(L: Lattice, sqo_pairs: Sequence[tuple[str, str]], n: int) -> APReport:
    """Exhaustive 2-point amalgamation check for the lift of all L-ultrametric spaces.

    Covers every problem whose amalgam has at most ``n`` points: bases with up to
    ``n - 2`` points (one per isomorphism class of the metric part, with all
    base orders) and every pair of one-point extensions.
    """
    if n > 6:
        raise AmalgamationError("check_AP is limited to n <= 6")
    pairs = [(L.index(e), L.index(f)) for e, f in sqo_pairs]
    for e, f in pairs:
        if not L.leq[e][f]:
            raise AmalgamationError("descriptor has an order whose bottom is not below its top")
    distinct = sorted(set(pairs))
    mult = {p: pairs.count(p) for p in distinct}
    report = APReport(True, n)
    cache: dict = {}
    empty = UltraSpace(L, (), ())
    for k in range(0, max(n - 1, 0)):
        bases = [empty] if k == 0 else list(enumerate_spaces(L, k))
        for base in bases:
            rows = [()] if k == 0 else list(extension_rows(L, base))
            for r1, r2 in itertools.combinations_with_replacement(rows, 2):
                report.metric_problems += 1
                d = [list(r) + [0, 0] for r in base.dist] + [list(r1) + [0, 0], list(r2) + [0, 0]]
                for i in range(k):
                    d[i][k], d[i][k + 1] = r1[i], r2[i]
                d[k][k] = d[k + 1][k + 1] = L.bottom
                star = precanonical_i(L, r1, r2) if k else L.top
                valid_h = []
                for h in range(L.size):
                    if h == L.bottom and r1 != r2:
                        continue
                    d[k][k + 1] = d[k + 1][k] = h
                    if first_violation(L, d, allow_zero=True) is None:
                        valid_h.append(h)
                d[k][k + 1] = d[k + 1][k] = star
                star_ok = star in valid_h
                per_pair = {}
                n_problems = 1
                strat_fail = 0 if star_ok else 1
                for (E, F) in distinct:
                    cats = frozenset(_category(L, h, E, F) for h in valid_h)
                    sc = _category(L, star, E, F)
                    key = (E, F, k, _projection(L, d, k, E, F), cats, sc)
                    if key not in cache:
                        cache[key] = _order_families(L, [r[:] for r in d], k, E, F,
                                                     cats | {sc}, sc)
                    fams, cnt, sfail, ex = cache[key]
                    per_pair[(E, F)] = fams
                    n_problems *= cnt ** mult[(E, F)]
                    if sfail:
                        strat_fail = max(strat_fail, 1)
                report.problems += n_problems
                if strat_fail:
                    report.strategy_failures += 1
                bad = _find_unsolvable(L, valid_h, distinct, mult, per_pair)
                if bad is not None:
                    names = L.elements
                    cx = {
                        "base": base.to_json(),
                        "row1": [names[v] for v in r1], "row2": [names[v] for v in r2],
                        "admissible_by_order": [
                            {"bottom": names[E], "top": names[F],
                             "categories": sorted(s)} for (E, F), s in bad],
                    }
                    report.failures.append(cx)
                    if report.holds:
                        report.holds = False
                        report.counterexample = cx
    return report


def _projection(L: Lattice, d, k: int, E: int, F: int) -> tuple:
    """What one order can see of a metric problem: E- and F-relatedness off the new pair."""
    n = k + 2
    return tuple((L.leq[d[x][y]][E], L.leq[d[x][y]][F])
                 for x in range(n) for y in range(x + 1, n) if not (x == k and y == k + 1))


def _find_unsolvable(L: Lattice, valid_h: list[int], distinct, mult, per_pair):
    """A choice of admissible-category sets (one per order) leaving no cross distance."""
    slots = []
    for p in distinct:
        slots.extend([p] * mult[p])
    for combo in itertools.product(*(sorted(per_pair[p], key=sorted) for p in slots)):
        if not any(all(_category(L, h, E, F) in s for (E, F), s in zip(slots, combo))
                   for h in valid_h):
            return list(zip(slots, combo))
    return None


def check_AP(desc, n: int):
    """Dispatch on the descriptor kind; see the generator module for descriptor types."""
    from .generator import ForbiddenListDescriptor, LatticeLiftDescriptor, check_AP_forbidden
    if isinstance(desc, LatticeLiftDescriptor):
        return check_AP_lift(desc.lattice, desc.effective_pairs(), n)
    if isinstance(desc, ForbiddenListDescriptor):
        return check_AP_forbidden(desc, n)
    if isinstance(desc, tuple) and len(desc) == 2 and isinstance(desc[0], Lattice):
        from .subquotient import signature_sqo_pairs
        L, sig = desc
        return check_AP_lift(L, signature_sqo_pairs(sig, L), n)
    raise AmalgamationError(f"unsupported descriptor {type(desc).__name__}")
