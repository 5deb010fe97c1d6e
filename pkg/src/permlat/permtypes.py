"""2-types of k linear orders, triangle completion, majority diagrams and pairing bounds.

A 2-type of a pair (x, y) records, for each order i, whether x <_i y. It is
stored as a bit vector: bit i set means x <_i y (written ``+``).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence


class TypeSetError(ValueError):
    """Length mismatch or an invalid type set."""


@dataclass(frozen=True, order=True)
class TwoType:
    k: int
    bits: int

    def __post_init__(self) -> None:
        if self.k < 0 or not 0 <= self.bits < (1 << self.k):
            raise TypeSetError(f"bits {self.bits} do not fit {self.k} orders")

    @classmethod
    def from_signs(cls, signs: str | Sequence[str | bool]) -> "TwoType":
        bits = 0
        for i, s in enumerate(signs):
            if s in ("+", True, 1):
                bits |= 1 << i
            elif s not in ("-", "−", False, 0):
                raise TypeSetError(f"bad sign {s!r}")
        return cls(len(signs), bits)

    def sign(self, i: int) -> bool:
        return bool(self.bits >> i & 1)

    @property
    def signs(self) -> str:
        return "".join("+" if self.sign(i) else "-" for i in range(self.k))

    def __str__(self) -> str:
        return "(" + ",".join(self.signs) + ")"


# named 3-order types: 0 = all reversed, then one order reversed relative to the other two
NAMED3 = {0: "---", 1: "-++", 2: "+-+", 3: "++-"}


def named(i: int, opp: bool = False) -> TwoType:
    t = TwoType.from_signs(NAMED3[i])
    return opposite(t) if opp else t


def _check(p: TwoType, q: TwoType) -> None:
    if p.k != q.k:
        raise TypeSetError(f"type lengths differ: {p.k} vs {q.k}")


def opposite(p: TwoType) -> TwoType:
    return TwoType(p.k, ~p.bits & ((1 << p.k) - 1))


def hamming(p: TwoType, q: TwoType) -> int:
    _check(p, q)
    return bin(p.bits ^ q.bits).count("1")


def all_types(k: int) -> list[TwoType]:
    return [TwoType(k, b) for b in range(1 << k)]


def complete_triangle(p: TwoType, q: TwoType) -> set[TwoType]:
    """Possible tp(x, y) given tp(x, b) = p and tp(b, y) = q."""
    _check(p, q)
    agree = ~(p.bits ^ q.bits) & ((1 << p.k) - 1)
    forced = p.bits & agree
    return {TwoType(p.k, b) for b in range(1 << p.k) if b & agree == forced}


def majority(p: TwoType, q: TwoType, r: TwoType) -> TwoType:
    _check(p, q)
    _check(q, r)
    return TwoType(p.k, (p.bits & q.bits) | (p.bits & r.bits) | (q.bits & r.bits))


# the diagram: points a1, x1, x2, x3, a2 and the type of each drawn edge (from, to)
def majority_diagram(p: TwoType, q: TwoType, r: TwoType) -> dict[tuple[str, str], TwoType]:
    return {("a1", "x1"): p, ("a1", "x2"): p, ("a1", "x3"): q,
            ("x1", "x2"): q, ("x2", "x3"): q, ("x1", "x3"): q,
            ("x1", "a2"): q, ("x2", "a2"): r, ("x3", "a2"): r}


def _orders_consistent(points: Sequence[str], edges: dict[tuple[str, str], TwoType], k: int) -> bool:
    """Every pair typed and each order transitive on ``points``."""
    def less(i: int, x: str, y: str) -> bool:
        if (x, y) in edges:
            return edges[(x, y)].sign(i)
        return not edges[(y, x)].sign(i)

    for x, y in itertools.permutations(points, 2):
        if (x, y) not in edges and (y, x) not in edges:
            return False
    for i in range(k):
        for x, y, z in itertools.permutations(points, 3):
            if less(i, x, y) and less(i, y, z) and not less(i, x, z):
                return False
    return True


def diagram_solutions(p: TwoType, q: TwoType, r: TwoType) -> set[TwoType]:
    """All types for (a1, a2) completing the majority diagram, by direct transitivity check."""
    edges = majority_diagram(p, q, r)
    out = set()
    for t in all_types(p.k):
        full = dict(edges)
        full[("a1", "a2")] = t
        if _orders_consistent(["a1", "x1", "x2", "x3", "a2"], full, p.k):
            out.add(t)
    return out


def majority_solve(p: TwoType, q: TwoType, r: TwoType) -> TwoType:
    _check(p, q)
    _check(q, r)
    edges = majority_diagram(p, q, r)
    for factor in (["a1", "x1", "x2", "x3"], ["x1", "x2", "x3", "a2"]):
        sub = {e: t for e, t in edges.items() if e[0] in factor and e[1] in factor}
        if not _orders_consistent(factor, sub, p.k):
            raise TypeSetError("inconsistent majority diagram")
    sols = diagram_solutions(p, q, r)
    m = majority(p, q, r)
    if sols != {m}:
        raise TypeSetError(f"majority diagram does not have the unique solution {m}: {sols}")
    return m


def path_solutions(p: TwoType, q: TwoType, r: TwoType) -> set[TwoType]:
    """Intersection of the triangle completions along the three 2-paths from a1 to a2."""
    return complete_triangle(p, q) & complete_triangle(p, r) & complete_triangle(q, r)


def is_opposite_closed(S: Iterable[TwoType]) -> bool:
    S = set(S)
    return all(opposite(p) in S for p in S)


def closure_under_majority(S: Iterable[TwoType]) -> frozenset[TwoType]:
    cur = set(S)
    if not cur:
        raise TypeSetError("type set must be nonempty")
    if not is_opposite_closed(cur):
        raise TypeSetError("type set must be closed under opposites")
    while True:
        new = {majority(a, b, c) for a, b, c in itertools.product(cur, repeat=3)} - cur
        if not new:
            return frozenset(cur)
        cur |= new


def is_majority_closed(S: Iterable[TwoType]) -> bool:
    S = set(S)
    return all(majority(a, b, c) in S for a, b, c in itertools.product(S, repeat=3))


Identification = tuple[int, int, int]      # (i, j, sigma) with i < j, sigma in {+1, -1}


def identifications_of(S: Iterable[TwoType]) -> frozenset[Identification]:
    S = set(S)
    if not S:
        raise TypeSetError("type set must be nonempty")
    if not is_majority_closed(S):
        raise TypeSetError("type set is not closed under majority")
    k = next(iter(S)).k
    out = set()
    for i, j in itertools.combinations(range(k), 2):
        for sigma in (1, -1):
            if all(p.sign(i) == (p.sign(j) if sigma == 1 else not p.sign(j)) for p in S):
                out.add((i, j, sigma))
    return frozenset(out)


def types_satisfying(k: int, idents: Iterable[Identification]) -> frozenset[TwoType]:
    idents = list(idents)
    return frozenset(p for p in all_types(k)
                     if all(p.sign(i) == (p.sign(j) if s == 1 else not p.sign(j))
                            for i, j, s in idents))


def opposite_closed_subsets(k: int) -> Iterator[frozenset[TwoType]]:
    """Every nonempty opposite-closed set of k-order types."""
    reps = [t for t in all_types(k) if t.bits < opposite(t).bits or k == 0]
    for mask in range(1, 1 << len(reps)):
        chosen = [reps[i] for i in range(len(reps)) if mask >> i & 1]
        yield frozenset(chosen + [opposite(t) for t in chosen])


# ---------------------------------------------------------------------------
# pairing bound


def lemma4gen_threshold(k: int) -> int:
    """Least n with n!/(n-l)! > 2^l * k where l = floor(n/2)."""
    if k < 1:
        raise TypeSetError("k must be at least 1")
    n = 1
    while True:
        ell = n // 2
        if math.perm(n, ell) > (2 ** ell) * k:
            return n
        n += 1


def pairing_count(n: int) -> int:
    ell = n // 2
    return math.factorial(n) // (2 ** ell * math.factorial(ell) * math.factorial(n - 2 * ell))


def pairings(n: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """All sets of floor(n/2) disjoint pairs of range(n)."""
    def rec(free: list[int], need: int) -> Iterator[list[tuple[int, int]]]:
        if need == 0:
            yield []
            return
        if len(free) < 2 * need:
            return
        first, rest = free[0], free[1:]
        for j, other in enumerate(rest):
            for tail in rec(rest[:j] + rest[j + 1:], need - 1):
                yield [(first, other)] + tail
        if len(free) > 2 * need:       # first point left unpaired
            yield from rec(rest, need)

    for p in rec(list(range(n)), n // 2):
        yield tuple(p)


@dataclass(frozen=True)
class PermStructure:
    """k linear orders on points 0..n-1, each listed from least to greatest."""
    n: int
    orders: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        for o in self.orders:
            if sorted(o) != list(range(self.n)):
                raise TypeSetError("each order must list every point once")

    def type_of(self, x: int, y: int) -> TwoType:
        bits = 0
        for i, o in enumerate(self.orders):
            if o.index(x) < o.index(y):
                bits |= 1 << i
        return TwoType(len(self.orders), bits)

    @classmethod
    def random(cls, n: int, k: int, rng: random.Random) -> "PermStructure":
        return cls(n, tuple(tuple(rng.sample(range(n), n)) for _ in range(k)))


def is_separated(ps: PermStructure, pairing: Sequence[tuple[int, int]]) -> bool:
    for o in ps.orders:
        pos = {p: i for i, p in enumerate(o)}
        if all(abs(pos[a] - pos[b]) == 1 for a, b in pairing):
            return False
    return True


def separated_pairing(ps: PermStructure) -> tuple[tuple[int, int], ...] | None:
    for p in pairings(ps.n):
        if p and is_separated(ps, p):
            return p
    return None
