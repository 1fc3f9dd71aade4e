"""The built-in ergodic systems and their exact Birkhoff machinery.

Three systems: the doubling map on the circle with Lebesgue measure, the
one-sided Bernoulli shift on Cantor space, and the rigid rotation by an
exact quadratic irrational (default sqrt(2)-1).  Birkhoff averages are
evaluated either as certified interval enclosures along an orbit, or as
whole exact objects (piecewise-linear / cylinder functions) supporting
exact norms and sublevel sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .arith import (DEFAULT_STEP_BUDGET, SQRT2_MINUS_1, CReal, Interval, Quad,
                    parse_rat, pow2)
from .errors import (BudgetExceededError, InputError, PrecisionStallError,
                     UnsupportedPairError)
from .measures import (ComputableMeasure, bernoulli_measure, lebesgue_measure)
from .observables import (CylinderFn, FTerm, PiecewiseLinear, pl_sum)
from .regions import ArcSet, CylSet, cylinder_mass
from .spaces import (CANTOR, CIRCLE, CantorPoint, CirclePoint, EffectiveOpen,
                     IdealBall, Space, SpaceKind, ball_arc)

#: hard cap on exact cylinder enumeration (2^(p+k) cylinders)
CYLINDER_BUDGET_LOG2 = 24
#: hard cap on piecewise-linear segment counts in exact constructions
SEGMENT_BUDGET = 1 << 21
#: correlation terms computed exactly before the geometric tail bound kicks in
CORRELATION_CUTOFF = 120

Observable = Union[PiecewiseLinear, CylinderFn, FTerm]


@dataclass
class System:
    name: str  # "doubling" | "shift" | "rotation"
    space: Space
    measure: ComputableMeasure
    p: Optional[Fraction] = None  # shift symbol probability (of "1")
    alpha: Optional[Quad] = None  # rotation angle, exact quadratic
    alpha_real: Optional[CReal] = None  # rotation angle, oracle form

    def selector(self) -> str:
        if self.name == "shift":
            return f"shift:p={self.p.numerator}/{self.p.denominator}"
        return self.name


def doubling_system() -> System:
    return System("doubling", CIRCLE, lebesgue_measure())


def shift_system(p) -> System:
    p = Fraction(p)
    if not 0 < p < 1:
        raise InputError("shift parameter must lie in (0,1)")
    return System("shift", CANTOR, bernoulli_measure(p), p=p)


def rotation_system(alpha: Optional[Quad] = None,
                    alpha_real: Optional[CReal] = None) -> System:
    """Rotation by alpha (default sqrt(2)-1).  An exact Quad angle enables
    all exact oracles; a bare CReal angle supports interval evaluation only."""
    if alpha is None and alpha_real is None:
        alpha = SQRT2_MINUS_1
    return System("rotation", CIRCLE, lebesgue_measure(), alpha=alpha,
                  alpha_real=alpha_real)


def parse_system(selector: str) -> System:
    s = selector.strip()
    if s == "doubling":
        return doubling_system()
    if s == "rotation":
        return rotation_system()
    if s.startswith("shift:p="):
        try:
            return shift_system(parse_rat(s[len("shift:p="):]))
        except (ValueError, ZeroDivisionError) as e:
            raise InputError(f"bad shift parameter in {selector!r}: {e}")
    raise InputError(f"unknown system selector {selector!r} "
                     "(expected doubling | shift:p=num/den | rotation)")


def builtin_systems() -> list[System]:
    return [doubling_system(), shift_system(Fraction(1, 2)), rotation_system()]


# ---------------------------------------------------------------------------
# Observables vs systems


def as_concrete(system: System, f: Observable):
    """Resolve an observable to the system's concrete class (PL on the
    circle, cylinder function on Cantor space)."""
    if isinstance(f, FTerm):
        if system.space.kind is SpaceKind.CIRCLE:
            return f.to_piecewise_linear()
        return f.to_cylinder()
    if system.space.kind is SpaceKind.CIRCLE:
        if not isinstance(f, PiecewiseLinear):
            raise UnsupportedPairError(
                f"{type(f).__name__} observable on a circle system")
        return f
    if not isinstance(f, CylinderFn):
        raise UnsupportedPairError(
            f"{type(f).__name__} observable on the shift")
    return f


def integral(system: System, f: Observable) -> Fraction:
    """Exact integral of f against the invariant measure."""
    g = as_concrete(system, f)
    if isinstance(g, PiecewiseLinear):
        return g.integral()
    return g.integral(system.p)


def centered(system: System, f: Observable):
    """f - integral(f), in concrete form."""
    g = as_concrete(system, f)
    return g.add_const(-integral(system, f))


def sup_norm_bound(f: Observable) -> Fraction:
    """Exact sup norm for concrete observables; a valid upper bound for
    expression trees."""
    if isinstance(f, FTerm):
        return f.sup_norm_bound()
    return f.sup_norm()


def truncate(f: Observable, M) -> Observable:
    M = Fraction(M)
    if M <= 0:
        raise InputError("truncation level must be positive")
    if isinstance(f, FTerm):
        raise UnsupportedPairError("truncate needs a concrete observable; "
                                   "convert the expression tree first")
    return f.clamp(M)


# ---------------------------------------------------------------------------
# Orbit evaluation with certified enclosures


def apply_map(system: System, x, m: int):
    """One map step, to output precision 2^-m.

    Circle systems return an Interval enclosing a representative of T(x);
    the shift returns the m-symbol prefix of the shifted sequence."""
    if system.space.kind is SpaceKind.CANTOR:
        return x.prefix(m + 1)[1:]
    if system.name == "doubling":
        box = x.enclosure(m + 1)
        box = Interval(2 * box.lo, 2 * box.hi)
    else:
        a = _rotation_alpha_box(system, m + 1)
        box = x.enclosure(m + 1) + a
    shiftn = math.floor(box.mid) if isinstance(box.mid, Fraction) else 0
    return Interval(box.lo - shiftn, box.hi - shiftn)


def _rotation_alpha_box(system: System, m: int) -> Interval:
    if system.alpha is not None:
        a = system.alpha.approx(m + 1)
        return Interval(a - pow2(m + 1), a + pow2(m + 1))
    return system.alpha_real.enclosure(m)


def birkhoff_enclosure(system: System, f: Observable, x, n: int,
                       m_in: int) -> Interval:
    """Enclosure of A_n f(x) from input precision m_in (no refinement)."""
    g = as_concrete(system, f)
    if system.space.kind is SpaceKind.CANTOR:
        w = x.prefix(n + g.depth - 1 if g.depth else n)
        tot = Fraction(0)
        for i in range(n):
            tot += g.value_on_word(w[i:])
        return Interval.point(tot / n)
    box = x.enclosure(m_in)
    total = Interval.point(0)
    if system.name == "doubling":
        for i in range(n):
            sc = 1 << i
            total = total + g.range_on(sc * box.lo, sc * box.hi)
    else:
        if system.alpha is not None:
            for i in range(n):
                sh = system.alpha * i
                total = total + g.range_on(box.lo + sh, box.hi + sh)
        else:
            for i in range(n):
                a = system.alpha_real.enclosure(m_in)
                sh_lo, sh_hi = i * a.lo, i * a.hi
                total = total + g.range_on(box.lo + sh_lo, box.hi + sh_hi)
    return Interval(total.lo / n, total.hi / n)


def birkhoff_eval(system: System, f: Observable, x, n: int, m: int,
                  budget: int = DEFAULT_STEP_BUDGET) -> Interval:
    """Certified enclosure of A_n f(x) of width <= 2^-m.

    Input precision starts at the structural requirement (n + m plus slope
    overhead for the doubling map) and doubles until the width target is
    met; a persistent straddle of a discontinuity raises PRECISION_STALL."""
    if n < 1:
        raise InputError("n must be >= 1")
    if system.space.kind is SpaceKind.CANTOR:
        return birkhoff_enclosure(system, f, x, n, 0)
    target = pow2(m)
    m_in = m + 2 + (n + _slope_bits(as_concrete(system, f)) if system.name == "doubling"
                    else _slope_bits(as_concrete(system, f)))
    best = None
    for _ in range(budget):
        out = birkhoff_enclosure(system, f, x, n, m_in)
        if best is None:
            best = out
        else:
            hit = best.intersect(out)
            best = hit if hit is not None else out
        if best.width <= target:
            return best
        m_in += 32
    raise PrecisionStallError(
        f"A_{n} enclosure stuck at width {best.width} (target 2^-{m})")


def _slope_bits(g: PiecewiseLinear) -> int:
    s = g.max_slope()
    if isinstance(s, Quad):
        s = s.approx(8) + pow2(8)
    return max(0, math.ceil(s).bit_length()) + 2


# ---------------------------------------------------------------------------
# Exact Birkhoff averages as whole objects


def birkhoff_observable(system: System, f: Observable, n: int):
    """A_n f as an exact concrete observable (budget-capped)."""
    if n < 1:
        raise InputError("n must be >= 1")
    g = as_concrete(system, f)
    if system.space.kind is SpaceKind.CANTOR:
        return _shift_average(g, n)
    if system.name == "doubling":
        per = max(len(g.segments), 1)
        if per << n > SEGMENT_BUDGET:
            raise BudgetExceededError(
                f"A_{n} on the doubling map needs ~{per << n} segments")
        terms = [g]
        for _ in range(n - 1):
            terms.append(terms[-1].pullback_doubling())
        return pl_sum(terms).scale(Fraction(1, n))
    if system.alpha is None:
        raise UnsupportedPairError("exact averages need an exact Quad angle")
    if max(len(g.segments), 1) * n > SEGMENT_BUDGET:
        raise BudgetExceededError(f"A_{n} rotation average too large")
    terms = [g] + [g.shift(system.alpha * i) for i in range(1, n)]
    return pl_sum(terms).scale(Fraction(1, n))


def _shift_average(g: CylinderFn, n: int) -> CylinderFn:
    k = g.depth
    d = n + k - 1 if k else 0
    if d == 0:
        return g
    if d > CYLINDER_BUDGET_LOG2:
        raise BudgetExceededError(f"A_{n} needs 2^{d} cylinders")
    den = math.lcm(*[v.denominator for v in g.table])
    nums = [int(v * den) for v in g.table]
    mask = (1 << k) - 1
    table = []
    for w in range(1 << d):
        s = 0
        for i in range(n):
            s += nums[(w >> (d - i - k)) & mask]
        table.append(Fraction(s, den * n))
    return CylinderFn(d, table)


# ---------------------------------------------------------------------------
# Exact norms of centered Birkhoff averages


def pl_inner(f: PiecewiseLinear, g: PiecewiseLinear):
    """Exact integral of the product f*g over the circle."""
    cuts = sorted(set([s[0] for s in f.segments] + [s[0] for s in g.segments]
                      + [Fraction(1)]))
    tot = 0
    for a, b in zip(cuts, cuts[1:]):
        fa, fb = _pl_pair(f, a, b)
        ga, gb = _pl_pair(g, a, b)
        tot = tot + (b - a) * (2 * fa * ga + fa * gb + fb * ga + 2 * fb * gb) / 6
    return tot


def _pl_pair(f: PiecewiseLinear, a, b):
    seg = f._segment_at(a)
    sa, sb, va, vb = seg

    def at(x):
        if x == sa:
            return va
        if x == sb:
            return vb
        return va + (vb - va) * (x - sa) / (sb - sa)

    return at(a), at(b)


def doubling_correlations(fbar: PiecewiseLinear, count: int) -> list[Fraction]:
    """C(m) = integral of fbar * (fbar composed with T^m) d Leb, for
    m < count, via the transfer operator (exact; the iterate keeps a
    bounded number of segments)."""
    out = []
    g = fbar
    for _ in range(count):
        out.append(pl_inner(fbar, g))
        g = g.transfer_doubling()
    return out


def l2_sq_enclosure(system: System, f: Observable, p: int) -> Interval:
    """Enclosure of ||A_p(f - integral f)||_2^2, exact (width 0) whenever
    all correlations are computed, tail-bounded otherwise.

    Uses ||A_p fbar||_2^2 = (1/p^2)[p C(0) + 2 sum_{m=1}^{p-1} (p-m) C(m)].
    Doubling-map tail: |C(m)| <= ||fbar||_1 Var(fbar) 2^-m since the
    transfer operator halves variation and a zero-mean function is bounded
    by its variation.  Shift: C(m) = 0 for m >= depth (independence)."""
    fbar = centered(system, f)
    if system.space.kind is SpaceKind.CANTOR:
        k = fbar.depth
        c = [_shift_correlation(fbar, m, system.p) for m in range(min(k, p) or 1)]
        val = _corr_combination(c, p)
        return Interval(val, val)
    if system.name == "doubling":
        cutoff = min(p, CORRELATION_CUTOFF)
        c = doubling_correlations(fbar, cutoff)
        val = _corr_combination(c, p)
        if cutoff == p:
            return Interval(val, val)
        tail = Fraction(2, p) * fbar.abs_integral() * fbar.total_variation() \
            * pow2(cutoff - 1)
        return Interval(val - tail, val + tail)
    # rotation: no decay of correlations; fall back to the exact average
    a = birkhoff_observable(system, f, p)
    abar = a.add_const(-integral(system, f))
    sq = abar.square_integral()
    if isinstance(sq, Quad):
        lo = sq.approx(60)
        return Interval(lo - pow2(60), lo + pow2(60))
    return Interval(sq, sq)


def _corr_combination(c: list, p: int) -> Fraction:
    tot = p * c[0]
    for m in range(1, min(len(c), p)):
        tot += 2 * (p - m) * c[m]
    return tot / Fraction(p * p)


def _shift_correlation(fbar: CylinderFn, m: int, prob: Fraction) -> Fraction:
    k = fbar.depth
    d = k + m
    tot = Fraction(0)
    maskk = (1 << k) - 1
    for w in range(1 << d):
        word = format(w, f"0{d}b")
        tot += cylinder_mass(word, prob) * fbar.table[w >> m] \
            * fbar.table[w & maskk]
    return tot


def l_norm_birkhoff(system: System, f: Observable, p: int, norm: str = "L1"):
    """Exact norm of A_p(f - integral f).

    L1 returns the exact value.  L2 returns the exact *squared* value (the
    true norm is generally irrational; callers compare against squared
    thresholds, which is lossless)."""
    if norm not in ("L1", "L2"):
        raise InputError("norm must be L1 or L2")
    fbar = centered(system, f)
    if norm == "L2":
        box = l2_sq_enclosure(system, f, p)
        if box.width == 0:
            return box.lo
        raise BudgetExceededError("exact L2 norm out of range; "
                                  "use l2_sq_enclosure for a certified bound")
    a = _average_of_centered(system, fbar, p)
    if isinstance(a, CylinderFn):
        tot = Fraction(0)
        for w in range(1 << a.depth):
            word = format(w, f"0{a.depth}b") if a.depth else ""
            tot += cylinder_mass(word, system.p) * abs(a.table[w])
        return tot
    val = a.abs_integral()
    if isinstance(val, Quad):
        raise BudgetExceededError("rotation L1 norm is irrational; "
                                  "use rotation_sup_bound for a certificate")
    return val


def _average_of_centered(system: System, fbar, p: int):
    if isinstance(fbar, CylinderFn):
        return _shift_average(fbar, p)
    if system.name == "doubling":
        per = max(len(fbar.segments), 1)
        if per << p > SEGMENT_BUDGET:
            raise BudgetExceededError(f"A_{p} on the doubling map too large")
        terms = [fbar]
        for _ in range(p - 1):
            terms.append(terms[-1].pullback_doubling())
        return pl_sum(terms).scale(Fraction(1, p))
    return birkhoff_observable(system, fbar, p)


def rotation_sup_bound(system: System, f: Observable, p: int) -> Fraction:
    """Certified rational upper bound on ||A_p(f - integral f)||_infty for
    the rotation (hence on the L1 and L2 norms as well)."""
    fbar = centered(system, f)
    a = birkhoff_observable(system, fbar, p)
    s = a.sup_norm()
    if isinstance(s, Quad):
        return s.approx(60) + pow2(60)
    return s


PELL_DENOMINATORS = [1, 2, 5, 12, 29, 70, 169, 408, 985, 2378, 5741, 13860,
                     33461, 80782, 195025]


# ---------------------------------------------------------------------------
# Deviation sets


def deviation_region(system: System, f: Observable, n: int, delta: Fraction):
    """Exact region {x : |A_n(f - integral f)(x)| < delta} as an ArcSet or
    CylSet (rotation regions may have Quad endpoints)."""
    delta = Fraction(delta)
    if delta <= 0:
        raise InputError("delta must be positive")
    fbar = centered(system, f)
    a = _average_of_centered(system, fbar, n)
    if isinstance(a, CylinderFn):
        cyls = []
        for w in range(1 << a.depth):
            if abs(a.table[w]) < delta:
                cyls.append(format(w, f"0{a.depth}b") if a.depth else "")
        return CylSet(cyls)
    return a.arcs_below_abs(delta)


def region_to_balls(space: Space, region) -> list[IdealBall]:
    """Represent an exact region as a finite union of ideal balls (arcs are
    split below the half-circle scale; cylinders map to canonical balls)."""
    if isinstance(region, CylSet):
        return [IdealBall(space, w, Fraction(3, 1 << (len(w) + 1)))
                for w in region.prefixes]
    balls = []
    for a, b in region.components():
        balls.extend(_arc_to_balls(space, a, b))
    return balls


def _arc_to_balls(space: Space, a, b) -> list[IdealBall]:
    # split so every piece is shorter than 1/2 (a circle ball of radius
    # >= 1/2 is the whole space, not an arc)
    pieces = []
    width = b - a
    parts = 1
    while width / parts >= Fraction(1, 2):
        parts += 1
    step = width / parts
    for i in range(parts):
        lo, hi = a + step * i, a + step * (i + 1)
        c = ((lo + hi) / 2) % 1 if isinstance(lo, Fraction) else ((lo + hi) / 2).mod1()
        r = (hi - lo) / 2
        if not isinstance(c, Fraction):
            raise UnsupportedPairError("ball conversion needs rational arcs")
        pieces.append(IdealBall(space, c, r))
    return pieces


def deviation_open(system: System, f: Observable, n: int,
                   delta: Fraction) -> EffectiveOpen:
    """{x : |A_n(f - integral f)(x)| < delta} as an effective open with
    exact_prefix.  Rotation regions are shrunk to rational endpoints; the
    lost mass is recorded in measure_defect."""
    region = deviation_region(system, f, n, delta)
    defect = Fraction(0)
    if isinstance(region, ArcSet) and any(
            not isinstance(e, Fraction) for arc in region.arcs for e in arc):
        region, defect = region.to_rational_inner(pow2(48))
    balls = region_to_balls(system.space, region)
    return EffectiveOpen(system.space, exact_prefix=balls,
                         measure_defect=defect)


# ---------------------------------------------------------------------------
# Exact measure preservation (test oracle)


def preimage_region(system: System, ball: IdealBall):
    """T^{-1}(ball) as an exact region."""
    if system.space.kind is SpaceKind.CANTOR:
        w = ball.cylinder_prefix
        return CylSet(["0" + w, "1" + w])
    a, b = ball_arc(ball)
    if system.name == "doubling":
        half = Fraction(1, 2)
        return ArcSet.from_raw([(a * half, b * half),
                                (a * half + half, b * half + half)])
    if system.alpha is None:
        raise UnsupportedPairError("exact preimages need an exact Quad angle")
    return ArcSet.from_raw([(a - system.alpha, b - system.alpha)])
