"""Exact region algebra oracles: arc unions and cylinder unions."""

import random
from fractions import Fraction as F

from ergocert.arith import Quad, pow2
from ergocert.regions import ArcSet, CylSet, cylinder_mass


def rand_arcset(rng, n=3):
    arcs = []
    for _ in range(n):
        a = F(rng.randint(0, 63), 64)
        b = a + F(rng.randint(1, 16), 64)
        arcs.append((a, b))
    return ArcSet.from_raw(arcs)


def arc_indicator(s: ArcSet, grid=256):
    """Membership of midpoints of a fine grid: a measure-exact proxy."""
    out = []
    for i in range(grid):
        x = F(2 * i + 1, 2 * grid)
        out.append(any(a < x < b for a, b in s.arcs))
    return out


class TestArcSet:
    def test_normalization(self):
        # [TRIVIAL] overlapping and wrapped arcs merge, sorted output
        s = ArcSet.from_raw([(F(7, 8), F(9, 8)), (F(1, 8), F(1, 4))])
        assert s.arcs == [(F(0), F(1, 4)), (F(7, 8), F(1))]
        assert s.measure() == F(3, 8)

    def test_boolean_algebra_oracle(self):
        # [DERIVED: oracle = pointwise membership on a fine dyadic grid,
        # valid because all endpoints lie on a coarser grid]
        rng = random.Random(5)
        for _ in range(300):
            s, t = rand_arcset(rng), rand_arcset(rng)
            si, ti = arc_indicator(s), arc_indicator(t)
            assert arc_indicator(s.intersect(t)) == [a and b
                                                     for a, b in zip(si, ti)]
            assert arc_indicator(s.union(t)) == [a or b
                                                 for a, b in zip(si, ti)]
            assert arc_indicator(s.complement()) == [not a for a in si]
            assert s.measure() + s.complement().measure() == 1
            assert s.intersect(t).measure() + s.union(t).measure() \
                == s.measure() + t.measure()

    def test_components_glue_wrap(self):
        # [TRIVIAL]
        s = ArcSet.from_raw([(F(7, 8), F(9, 8))])
        comps = s.components()
        assert len(comps) == 1 and comps[0][1] - comps[0][0] == F(1, 4)

    def test_rational_inner_defect(self):
        # [DERIVED: shrinking to the grid loses exactly the cut-off mass]
        a = Quad(0, F(1, 4))  # sqrt2/4, irrational
        s = ArcSet([(a, F(1, 2))])
        inner, lost = s.to_rational_inner(pow2(20))
        assert all(isinstance(e, F) for arc in inner.arcs for e in arc)
        assert inner.measure() + lost == s.measure()
        assert 0 <= lost <= pow2(19)


def cyl_indicator(s: CylSet, depth=8):
    return [s.contains_word_prefix(format(w, f"0{depth}b"))
            for w in range(1 << depth)]


class TestCylSet:
    def test_antichain_and_sibling_merge(self):
        # [TRIVIAL] {0,1} merges to everything; child of kept prefix drops
        assert CylSet(["0", "1"]).prefixes == [""]
        assert CylSet(["0", "01"]).prefixes == ["0"]
        assert CylSet(["00", "01", "10"]).prefixes == ["0", "10"]

    def test_boolean_algebra_oracle(self):
        # [DERIVED: oracle = membership table at depth 8]
        rng = random.Random(9)
        for _ in range(200):
            s = CylSet(["".join(rng.choice("01")
                                for _ in range(rng.randint(1, 6)))
                        for _ in range(4)])
            t = CylSet(["".join(rng.choice("01")
                                for _ in range(rng.randint(1, 6)))
                        for _ in range(4)])
            si, ti = cyl_indicator(s), cyl_indicator(t)
            assert cyl_indicator(s.intersect(t)) == [a and b
                                                     for a, b in zip(si, ti)]
            assert cyl_indicator(s.union(t)) == [a or b
                                                 for a, b in zip(si, ti)]
            assert cyl_indicator(s.complement()) == [not a for a in si]
            p = F(1, 2)
            assert s.measure(p) == F(sum(si), 256)

    def test_bernoulli_measure_additive(self):
        # [DERIVED: complement masses sum to 1 for a biased parameter]
        s = CylSet(["01", "1"])
        for p in (F(1, 2), F(1, 3), F(4, 5)):
            assert s.measure(p) + s.complement().measure(p) == 1

    def test_cylinder_mass(self):
        # [PAPER: Bernoulli(p) gives each fixed symbol its own factor]
        assert cylinder_mass("01", F(1, 3)) == F(2, 9)
        assert cylinder_mass("", F(1, 3)) == 1

    def test_large_same_depth_union_fast(self):
        # [DERIVED: construction must stay near-linear in the input size]
        words = [format(w, "016b") for w in range(0, 1 << 16, 3)]
        s = CylSet(words)
        assert s.measure(F(1, 2)) == F(len(words), 1 << 16)
