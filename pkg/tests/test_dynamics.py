"""Dynamics: exact Birkhoff averages, norms, deviation regions, measure
preservation, certified orbit evaluation."""

import random
from fractions import Fraction as F

import pytest

from ergocert.dynamics import (apply_map, birkhoff_eval, birkhoff_observable,
                               builtin_systems, centered, deviation_open,
                               deviation_region, doubling_system, integral,
                               l2_sq_enclosure, l_norm_birkhoff, parse_system,
                               preimage_region, region_to_balls,
                               rotation_system, shift_system)
from ergocert.errors import BudgetExceededError
from ergocert.observables import CylinderFn, PiecewiseLinear
from ergocert.regions import ArcSet, CylSet, cylinder_mass
from ergocert.spaces import CANTOR, CIRCLE, CantorPoint, CirclePoint, IdealBall

FIRSTBIT = CylinderFn.coordinate(0)
SHIFT = shift_system(F(1, 2))
DBL = doubling_system()
ROT = rotation_system()


def shift_l1_oracle(system, f, p):
    """Independent exact L1 norm of A_p(f - mean) by enumerating every
    word that the average can read."""
    mean = integral(system, f)
    d = p + f.depth - 1 if f.depth else p
    tot = F(0)
    for w in range(1 << d):
        word = format(w, f"0{d}b")
        a = sum(f.value_on_word(word[i:]) for i in range(p)) / F(p)
        tot += cylinder_mass(word, system.p) * abs(a - mean)
    return tot


class TestNorms:
    def test_shift_firstbit_examples(self):
        # [PAPER: ||A_2(f - 1/2)||_1 = 1/4 for the first-bit observable]
        assert l_norm_birkhoff(SHIFT, FIRSTBIT, 2, "L1") == F(1, 4)
        assert l_norm_birkhoff(SHIFT, FIRSTBIT, 1, "L1") == F(1, 2)

    def test_shift_norm_oracle(self):
        # [DERIVED: full-word enumeration oracle]
        for f in (FIRSTBIT, CylinderFn.word_indicator("01")):
            for p in range(1, 7):
                assert l_norm_birkhoff(SHIFT, f, p, "L1") == \
                    shift_l1_oracle(SHIFT, f, p)
        biased = shift_system(F(1, 3))
        for p in range(1, 5):
            assert l_norm_birkhoff(biased, FIRSTBIT, p, "L1") == \
                shift_l1_oracle(biased, FIRSTBIT, p)

    def test_doubling_identity_example(self):
        # [PAPER: ||x - 1/2||_1 = 1/4]
        assert l_norm_birkhoff(DBL, PiecewiseLinear.identity(), 1, "L1") \
            == F(1, 4)

    def test_shift_l2_iid_closed_form(self):
        # [DERIVED: iid variance scaling Var(A_p) = Var(f)/p, here 1/(4p)]
        for p in range(1, 8):
            box = l2_sq_enclosure(SHIFT, FIRSTBIT, p)
            assert box.lo == box.hi == F(1, 4 * p)

    def test_doubling_l2_direct(self):
        # [DERIVED: oracle = exact square integral of the explicit average]
        f = PiecewiseLinear.hat(F(1, 2), F(1, 8), F(1, 8))
        for p in (1, 2, 3, 5):
            a = birkhoff_observable(DBL, centered(DBL, f), p)
            box = l2_sq_enclosure(DBL, f, p)
            assert box.contains(a.square_integral())

    def test_budget_guard(self):
        # [DERIVED: segment count doubles per step and must be capped]
        with pytest.raises(BudgetExceededError):
            birkhoff_observable(DBL, PiecewiseLinear.identity(), 40)

    def test_subadditive_chain_small(self):
        # [DERIVED: ||A_{np+k}||_1 <= ||A_p||_1 + ||f||_1 / n, small cases]
        fbar_l1 = l_norm_birkhoff(SHIFT, FIRSTBIT, 1, "L1")
        for p in (1, 2, 3):
            base = l_norm_birkhoff(SHIFT, FIRSTBIT, p, "L1")
            for n in (1, 2, 3):
                for k in range(p):
                    if n * p + k < 1:
                        continue
                    lhs = l_norm_birkhoff(SHIFT, FIRSTBIT, n * p + k, "L1")
                    assert lhs <= base + fbar_l1 / n


class TestDeviationRegions:
    def test_shift_example(self):
        # [PAPER: |A_2(firstbit - 1/2)| < 1/4 exactly on words 01, 10]
        r = deviation_region(SHIFT, FIRSTBIT, 2, F(1, 4))
        assert sorted(r.prefixes) == ["01", "10"]
        assert r.measure(F(1, 2)) == F(1, 2)

    def test_doubling_example(self):
        # [PAPER: |x - 1/2| < 1/8 is the arc (3/8, 5/8)]
        r = deviation_region(DBL, PiecewiseLinear.identity(), 1, F(1, 8))
        assert r.arcs == [(F(3, 8), F(5, 8))]

    def test_region_measure_matches_pointwise(self):
        # [DERIVED: oracle = pointwise |A_n fbar| on a fine grid]
        f = PiecewiseLinear.hat(F(1, 4), F(1, 8), F(1, 8))
        for n in (1, 2, 3):
            a = birkhoff_observable(DBL, centered(DBL, f), n)
            r = deviation_region(DBL, f, n, F(1, 8))
            for i in range(256):
                x = F(2 * i + 1, 512)
                inside = any(lo < x < hi for lo, hi in r.arcs)
                v = abs(a.eval_right(x))
                if v < F(1, 8):
                    assert inside
                if inside:
                    assert v <= F(1, 8)

    def test_deviation_open_balls_cover_inner(self):
        # [DERIVED: ball decomposition reproduces the region measure]
        f = PiecewiseLinear.hat(F(1, 2), F(1, 8), F(1, 8))
        u = deviation_open(DBL, f, 2, F(1, 4))
        balls = u.exact_prefix
        total = sum(2 * b.radius for b in balls)
        r = deviation_region(DBL, f, 2, F(1, 4))
        assert total == r.measure()

    def test_rotation_rationalized(self):
        # [DERIVED: irrational endpoints shrink inward with recorded defect]
        f = PiecewiseLinear.hat(F(1, 2), F(1, 4), F(1, 8))
        u = deviation_open(ROT, f, 3, F(1, 4))
        assert u.measure_defect >= 0
        assert all(isinstance(b.center, F) for b in u.exact_prefix)


class TestMeasurePreservation:
    def test_preimage_measure_random_balls(self):
        # [DERIVED: mu(T^{-1} B) = mu(B) for >= 100 random balls/system]
        rng = random.Random(17)
        for _ in range(120):
            w = "".join(rng.choice("01") for _ in range(rng.randint(1, 8)))
            b = IdealBall(CANTOR, w, F(3, 1 << (len(w) + 1)))
            for p in (F(1, 2), F(1, 3)):
                sysb = shift_system(p)
                assert preimage_region(sysb, b).measure(p) \
                    == cylinder_mass(w, p)
        for _ in range(120):
            c = F(rng.randint(0, 255), 256)
            r = F(rng.randint(1, 63), 256)
            b = IdealBall(CIRCLE, c, r)
            for system in (DBL, ROT):
                assert preimage_region(system, b).measure() == 2 * r

    def test_rotation_preimage_is_translate(self):
        # [TRIVIAL] translation preimages keep arc length exactly
        b = IdealBall(CIRCLE, F(1, 2), F(1, 16))
        r = preimage_region(ROT, b)
        assert r.measure() == F(1, 8)


class TestOrbitEvaluation:
    def test_shift_apply_map(self):
        # [TRIVIAL]
        x = CantorPoint.from_word("0110")
        assert apply_map(SHIFT, x, 3) == "110"

    def test_doubling_rational_orbit_average(self):
        # [DERIVED: orbit of 1/3 is 2-periodic: 1/3 <-> 2/3]
        f = PiecewiseLinear.identity()
        x = CirclePoint.from_rational(F(1, 3))
        box = birkhoff_eval(DBL, f, x, 4, 20)
        assert box.width <= F(1, 1 << 20)
        assert box.contains(F(1, 2))  # (1/3 + 2/3 + 1/3 + 2/3)/4

    def test_rotation_eval_consistent(self):
        # [DERIVED: enclosures at different precisions must intersect and
        # meet the width contract]
        f = PiecewiseLinear.hat(F(1, 2), F(1, 4), F(1, 8))
        x = CirclePoint.from_rational(F(0))
        a = birkhoff_eval(ROT, f, x, 16, 8)
        b = birkhoff_eval(ROT, f, x, 16, 16)
        assert a.width <= F(1, 256) and b.width <= F(1, 1 << 16)
        assert a.intersect(b) is not None

    def test_shift_eval_exact(self):
        # [DERIVED: symbolic orbit makes the average a point interval]
        x = CantorPoint.from_word("0110" * 4)
        box = birkhoff_eval(SHIFT, FIRSTBIT, x, 8, 0)
        assert box.width == 0 and box.lo == F(1, 2)


class TestSystems:
    def test_selectors_roundtrip(self):
        # [TRIVIAL]
        for s in builtin_systems():
            assert parse_system(s.selector()).selector() == s.selector()

    def test_integrals(self):
        # [PAPER: coordinate integrates to p; identity to 1/2]
        assert integral(shift_system(F(1, 3)), FIRSTBIT) == F(1, 3)
        assert integral(DBL, PiecewiseLinear.identity()) == F(1, 2)
        assert integral(ROT, PiecewiseLinear.hat(F(1, 2), F(1, 4), F(1, 8))) \
            == F(5, 8)
