"""Exact region algebra: finite unions of circle arcs and of cylinders.

These are the normal forms behind the exact measure oracles: every
finite union of ideal balls in the built-in instances reduces to one of
them, so measures, intersections and complements are exact rational (or
Q[sqrt2]) computations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .arith import Quad


def _mod1(x):
    return x % 1 if isinstance(x, (Fraction, int)) else x.mod1()


class ArcSet:
    """Finite union of open arcs on the circle, kept sorted and disjoint.

    Arcs are stored as (a, b) with 0 <= a < b <= 1; an input arc crossing 0
    is split.  Endpoints may be Fraction or Quad.  Measure-theoretic
    operations ignore endpoints (all sets here are finite unions of arcs up
    to finitely many points)."""

    def __init__(self, arcs: Iterable[tuple] = ()):
        cleaned = []
        for a, b in arcs:
            if b <= a:
                continue
            cleaned.append((a, b))
        cleaned.sort(key=lambda ab: (ab[0], ab[1]))
        merged: list[tuple] = []
        for a, b in cleaned:
            if merged and a <= merged[-1][1]:
                la, lb = merged[-1]
                merged[-1] = (la, max(lb, b))
            else:
                merged.append((a, b))
        self.arcs = merged

    @staticmethod
    def from_raw(arcs: Iterable[tuple]) -> "ArcSet":
        """Build from arcs given on the real line (reduced mod 1, split at 0)."""
        out = []
        for a, b in arcs:
            if b <= a:
                continue
            if b - a >= 1:
                return ArcSet.full()
            a0 = _mod1(a)
            b0 = a0 + (b - a)
            if b0 <= 1:
                out.append((a0, b0))
            else:
                out.append((a0, _one_like(a0)))
                out.append((_zero_like(a0), b0 - 1))
        return ArcSet(out)

    @staticmethod
    def full() -> "ArcSet":
        return ArcSet([(Fraction(0), Fraction(1))])

    @staticmethod
    def empty() -> "ArcSet":
        return ArcSet([])

    def is_empty(self) -> bool:
        return not self.arcs

    def measure(self):
        tot = Fraction(0)
        for a, b in self.arcs:
            tot = tot + (b - a)
        return tot

    def intersect(self, other: "ArcSet") -> "ArcSet":
        out = []
        i = j = 0
        a1, a2 = self.arcs, other.arcs
        while i < len(a1) and j < len(a2):
            lo = max(a1[i][0], a2[j][0])
            hi = min(a1[i][1], a2[j][1])
            if lo < hi:
                out.append((lo, hi))
            if a1[i][1] <= a2[j][1]:
                i += 1
            else:
                j += 1
        return ArcSet(out)

    def union(self, other: "ArcSet") -> "ArcSet":
        return ArcSet(self.arcs + other.arcs)

    def complement(self) -> "ArcSet":
        out = []
        prev = Fraction(0)
        for a, b in self.arcs:
            if a > prev:
                out.append((prev, a))
            prev = b
        if prev < 1:
            out.append((prev, Fraction(1)))
        return ArcSet(out)

    def components(self) -> list[tuple]:
        """Arcs with the wrap across 0 glued (returned arc may end > 1)."""
        arcs = list(self.arcs)
        if len(arcs) >= 2 and arcs[0][0] == 0 and arcs[-1][1] == 1:
            first = arcs.pop(0)
            last = arcs.pop()
            arcs.append((last[0], first[1] + 1))
        return arcs

    def to_rational_inner(self, grain: Fraction) -> tuple["ArcSet", Fraction]:
        """Shrink each arc to rational endpoints on the grid of step `grain`.

        Returns (inner set, exact bound on the measure lost)."""
        out = []
        lost = Fraction(0)
        for a, b in self.arcs:
            a2 = _ceil_to_grid(a, grain)
            b2 = _floor_to_grid(b, grain)
            if a2 < b2:
                out.append((a2, b2))
                lost += (b - a) - (b2 - a2)
            else:
                lost += b - a
        return ArcSet(out), lost

    def __repr__(self):
        return f"ArcSet({self.arcs!r})"


def _zero_like(x):
    return Fraction(0)


def _one_like(x):
    return Fraction(1)


def _ceil_to_grid(x, grain: Fraction) -> Fraction:
    if isinstance(x, Fraction):
        return x
    n = (x / Quad.of(grain)).floor()
    g = grain * n
    if Quad.of(g) < x:
        g = grain * (n + 1)
    return g


def _floor_to_grid(x, grain: Fraction) -> Fraction:
    if isinstance(x, Fraction):
        return x
    n = (x / Quad.of(grain)).floor()
    return grain * n


# ---------------------------------------------------------------------------
# Cylinder sets


class CylSet:
    """Finite union of cylinders of Cantor space, as an antichain of prefixes."""

    def __init__(self, prefixes: Iterable[str] = ()):
        all_ps = set(prefixes)
        kept = {w for w in all_ps
                if not any(w[:i] in all_ps for i in range(len(w)))}
        # merge sibling pairs bottom-up
        for length in range(max(map(len, kept), default=0), 0, -1):
            for w in [w for w in kept if len(w) == length and w[-1] == "0"]:
                sib = w[:-1] + "1"
                if sib in kept:
                    kept.discard(w)
                    kept.discard(sib)
                    kept.add(w[:-1])
        self.prefixes = sorted(kept, key=lambda w: (len(w), w))

    @staticmethod
    def full() -> "CylSet":
        return CylSet([""])

    @staticmethod
    def empty() -> "CylSet":
        return CylSet([])

    def is_empty(self) -> bool:
        return not self.prefixes

    def measure(self, p: Fraction) -> Fraction:
        p = Fraction(p)
        tot = Fraction(0)
        for w in self.prefixes:
            tot += cylinder_mass(w, p)
        return tot

    def intersect(self, other: "CylSet") -> "CylSet":
        out = []
        for u in self.prefixes:
            for v in other.prefixes:
                if u.startswith(v):
                    out.append(u)
                elif v.startswith(u):
                    out.append(v)
        return CylSet(out)

    def union(self, other: "CylSet") -> "CylSet":
        return CylSet(self.prefixes + other.prefixes)

    def complement(self) -> "CylSet":
        out = CylSet.full()
        result = [""]
        for w in self.prefixes:
            new_result = []
            for v in result:
                new_result.extend(_cyl_minus(v, w))
            result = new_result
        return CylSet(result)

    def contains_word_prefix(self, word: str) -> bool:
        return any(word.startswith(w) for w in self.prefixes)

    def __repr__(self):
        return f"CylSet({self.prefixes!r})"


def cylinder_mass(w: str, p: Fraction) -> Fraction:
    """Bernoulli(p) mass of the cylinder fixing prefix w (p = prob of 1)."""
    m = Fraction(1)
    for c in w:
        m *= p if c == "1" else (1 - p)
    return m


def _cyl_minus(v: str, w: str) -> list[str]:
    """Cylinder v minus cylinder w, as a prefix list."""
    if v.startswith(w):
        return []
    if not w.startswith(v):
        return [v]
    # w strictly extends v: peel off siblings along the path
    out = []
    cur = v
    for c in w[len(v):]:
        out.append(cur + ("1" if c == "0" else "0"))
        cur += c
    return out
