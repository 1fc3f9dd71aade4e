"""Ideal and computable measures, exact W1 transport, instance oracles.

W1 between ideal measures is solved as an exact min-cost transportation
problem over rationals (successive shortest augmenting paths with node
potentials); no floating point.  Lebesgue on the circle and Bernoulli(p) on
Cantor space get exact measure oracles for finite unions of balls.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .arith import fmt_rat, parse_rat, pow2
from .errors import UnsupportedInstanceError
from .regions import ArcSet, CylSet, cylinder_mass
from .spaces import (CANTOR, CIRCLE, EffectiveOpen, IdealBall, Space,
                     SpaceKind, ball_arc)


@dataclass(frozen=True)
class IdealMeasure:
    """Finite rational convex combination of Dirac measures on ideal points."""

    space: Space
    atoms: tuple  # ((point, weight), ...)

    def __post_init__(self):
        pts = [p for p, _ in self.atoms]
        if len(set(map(str, pts))) != len(pts):
            raise ValueError("atom points must be pairwise distinct")
        ws = [Fraction(w) for _, w in self.atoms]
        if any(w <= 0 for w in ws):
            raise ValueError("weights must be positive")
        if sum(ws) != 1:
            raise ValueError("weights must sum to 1")
        object.__setattr__(
            self, "atoms",
            tuple((p if self.space.kind is SpaceKind.CANTOR else Fraction(p), w)
                  for (p, _), w in zip(self.atoms, ws)))

    @staticmethod
    def dirac(space: Space, point) -> "IdealMeasure":
        return IdealMeasure(space, ((point, Fraction(1)),))

    def to_json(self) -> list:
        return [[p if isinstance(p, str) else fmt_rat(p), fmt_rat(w)] for p, w in self.atoms]

    @staticmethod
    def from_json(space: Space, data: list) -> "IdealMeasure":
        atoms = []
        for p, w in data:
            pt = p if space.kind is SpaceKind.CANTOR else parse_rat(p)
            atoms.append((pt, parse_rat(w)))
        return IdealMeasure(space, tuple(atoms))


@dataclass(frozen=True)
class TransportPlan:
    """Nonnegative flow matrix with marginals equal to the two atom lists."""

    flows: tuple  # ((i, j, amount), ...) sparse

    def flow_matrix(self, n: int, m: int) -> list[list[Fraction]]:
        mat = [[Fraction(0)] * m for _ in range(n)]
        for i, j, a in self.flows:
            mat[i][j] += a
        return mat

    def check_marginals(self, mu1: IdealMeasure, mu2: IdealMeasure) -> bool:
        n, m = len(mu1.atoms), len(mu2.atoms)
        mat = self.flow_matrix(n, m)
        rows = [sum(mat[i]) for i in range(n)]
        cols = [sum(mat[i][j] for i in range(n)) for j in range(m)]
        return (all(a >= 0 for row in mat for a in row)
                and rows == [w for _, w in mu1.atoms]
                and cols == [w for _, w in mu2.atoms])

    def to_json(self) -> list:
        return [[i, j, fmt_rat(a)] for i, j, a in self.flows]


def w1_ideal(space: Space, mu1: IdealMeasure, mu2: IdealMeasure):
    """Exact W1 distance and an optimal transport plan.

    Successive shortest augmenting paths on the bipartite residual graph
    (Bellman-Ford, exact rationals).  Shortest-path augmentation keeps the
    flow extreme at every step, so the final flow is optimal; every
    augmentation exhausts a source or a sink, so at most n+m rounds."""
    if mu1.space.kind is not space.kind or mu2.space.kind is not space.kind:
        raise ValueError("measures must live on the given space")
    src = list(mu1.atoms)
    snk = list(mu2.atoms)
    n, m = len(src), len(snk)
    cost = [[space.dist(src[i][0], snk[j][0]) for j in range(m)] for i in range(n)]
    supply = [w for _, w in src]
    demand = [w for _, w in snk]
    flow = [[Fraction(0)] * m for _ in range(n)]

    while any(s > 0 for s in supply):
        # Bellman-Ford from all sources with remaining supply.
        dist_s: list = [Fraction(0) if supply[i] > 0 else None for i in range(n)]
        dist_t: list = [None] * m
        prev_t = [None] * m  # source used to reach sink j
        prev_s = [None] * n  # sink used to reach source i (via residual arc)
        for _ in range(n + m + 1):
            changed = False
            for i in range(n):
                if dist_s[i] is None:
                    continue
                for j in range(m):
                    nd = dist_s[i] + cost[i][j]
                    if dist_t[j] is None or nd < dist_t[j]:
                        dist_t[j], prev_t[j] = nd, i
                        changed = True
            for j in range(m):
                if dist_t[j] is None:
                    continue
                for i in range(n):
                    if flow[i][j] > 0:
                        nd = dist_t[j] - cost[i][j]
                        if dist_s[i] is None or nd < dist_s[i]:
                            dist_s[i], prev_s[i] = nd, j
                            changed = True
            if not changed:
                break
        tgt = None
        for j in range(m):
            if demand[j] > 0 and dist_t[j] is not None:
                if tgt is None or dist_t[j] < dist_t[tgt]:
                    tgt = j
        assert tgt is not None, "transportation problem must be feasible"
        # Trace the path back to a free source, collecting the bottleneck.
        path = []  # (i, j, forward)
        amount = demand[tgt]
        j = tgt
        while True:
            i = prev_t[j]
            path.append((i, j, True))
            if supply[i] > 0 and (prev_s[i] is None or dist_s[i] == 0):
                amount = min(amount, supply[i])
                root = i
                break
            j2 = prev_s[i]
            path.append((i, j2, False))
            amount = min(amount, flow[i][j2])
            j = j2
        for i, jj, fwd in path:
            if fwd:
                flow[i][jj] += amount
            else:
                flow[i][jj] -= amount
        supply[root] -= amount
        demand[tgt] -= amount

    value = Fraction(0)
    sparse = []
    for i in range(n):
        for j in range(m):
            if flow[i][j] > 0:
                value += flow[i][j] * cost[i][j]
                sparse.append((i, j, flow[i][j]))
    return value, TransportPlan(tuple(sparse))


# ---------------------------------------------------------------------------
# Computable measures with exact instance oracles


class TagKind(enum.Enum):
    LEBESGUE = "lebesgue"
    BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class MeasureTag:
    kind: TagKind
    p: Optional[Fraction] = None  # Bernoulli parameter (prob of symbol 1)

    @staticmethod
    def lebesgue() -> "MeasureTag":
        return MeasureTag(TagKind.LEBESGUE)

    @staticmethod
    def bernoulli(p) -> "MeasureTag":
        p = Fraction(p)
        if not 0 <= p <= 1:
            raise ValueError("p must lie in [0,1]")
        return MeasureTag(TagKind.BERNOULLI, p)


@dataclass
class ComputableMeasure:
    """Fast-Cauchy sequence of ideal measures under W1, plus an optional
    instance tag enabling exact oracles."""

    space: Space
    oracle: Callable[[int], IdealMeasure]
    tag: Optional[MeasureTag] = None

    def ideal_approx(self, m: int) -> IdealMeasure:
        return self.oracle(m)


def lebesgue_measure() -> ComputableMeasure:
    def oracle(m: int) -> IdealMeasure:
        n = 1 << m
        w = Fraction(1, n)
        atoms = tuple((Fraction(2 * j + 1, 2 * n), w) for j in range(n))
        return IdealMeasure(CIRCLE, atoms)

    return ComputableMeasure(CIRCLE, oracle, MeasureTag.lebesgue())


def bernoulli_measure(p) -> ComputableMeasure:
    p = Fraction(p)
    tag = MeasureTag.bernoulli(p)

    def oracle(m: int) -> IdealMeasure:
        atoms = {}
        for bits in range(1 << m):
            w = format(bits, f"0{m}b") if m else ""
            mass = cylinder_mass(w, p)
            if mass > 0:
                key = w.rstrip("0")
                atoms[key] = atoms.get(key, Fraction(0)) + mass
        return IdealMeasure(CANTOR, tuple(atoms.items()))

    return ComputableMeasure(CANTOR, oracle, tag)


def balls_to_region(tag: MeasureTag, balls: list[IdealBall]):
    if tag.kind is TagKind.LEBESGUE:
        return ArcSet.from_raw([ball_arc(b) for b in balls])
    return CylSet([b.cylinder_prefix for b in balls])


def region_measure(tag: MeasureTag, region) -> Fraction:
    if tag.kind is TagKind.LEBESGUE:
        return region.measure()
    return region.measure(tag.p)


def measure_of_finite_union(tag: Optional[MeasureTag], balls: list[IdealBall]) -> Fraction:
    """Exact measure of a finite union of ideal balls."""
    if tag is None:
        raise UnsupportedInstanceError("no exact measure oracle for this instance")
    if not balls:
        return Fraction(0)
    return region_measure(tag, balls_to_region(tag, balls))


def open_measure_lower(mu: ComputableMeasure, u: EffectiveOpen, prefix_len: int) -> Fraction:
    """Exact measure of the union of the first `prefix_len` enumerated balls;
    a nondecreasing lower bound for the measure of the whole open set."""
    if mu.tag is None:
        raise UnsupportedInstanceError("no exact measure oracle for this instance")
    balls = [b for b in (u.ball(k) for k in range(prefix_len)) if b is not None]
    return measure_of_finite_union(mu.tag, balls)


def support_hit(mu: ComputableMeasure, ball: IdealBall) -> bool:
    """Decide exactly whether the ball carries positive mass."""
    if mu.tag is None:
        raise UnsupportedInstanceError("no exact measure oracle for this instance")
    return measure_of_finite_union(mu.tag, [ball]) > 0
