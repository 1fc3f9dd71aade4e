"""Certified window sequences, their intersections, and point synthesis."""

from fractions import Fraction as F

import pytest

from ergocert.arith import pow2
from ergocert.bc import (BCSequence, bc_exact_windows, bc_from_rate,
                         bc_intersect, dense_sequence, horizon_tolerance,
                         replay_synth, SynthPoint, synthesize_point,
                         typical_point, window_sup_bound)
from ergocert.dynamics import (centered, doubling_system, rotation_system,
                               shift_system)
from ergocert.errors import InputError
from ergocert.measures import open_measure_lower
from ergocert.observables import CylinderFn, PiecewiseLinear
from ergocert.rates import SummableSchedule
from ergocert.spaces import CANTOR, EffectiveOpen, IdealBall

SHIFT = shift_system(F(1, 2))
DBL = doubling_system()
ROT = rotation_system()
FIRSTBIT = CylinderFn.coordinate(0)
HAT = PiecewiseLinear.hat(F(1, 2), F(1, 8), F(1, 8))


class TestExactWindows:
    def test_shift_window_errors(self):
        # [DERIVED: frozen exact complement masses for geometric caps]
        bc = bc_exact_windows(SHIFT, FIRSTBIT, caps=lambda j: pow2(j),
                              count=4)
        got = [(bc.info(j)["n"], bc.err(j)) for j in range(1, 5)]
        assert got == [(2, F(1, 2)), (3, F(1, 4)), (7, F(1, 8)),
                       (14, F(235, 4096))]
        for j in range(1, 5):
            assert bc.err(j) <= pow2(j)
        assert bc.err(9) == 0  # beyond count: vacuous whole-space window

    def test_doubling_first_window(self):
        # [DERIVED: frozen exact arc mass of the first deviation window]
        bc = bc_exact_windows(DBL, HAT, caps=lambda j: pow2(j), count=3)
        assert bc.info(1)["n"] == 1 and bc.err(1) == F(9, 32)
        for j in range(1, 4):
            assert bc.err(j) <= pow2(j)

    def test_rotation_caps_met(self):
        # [DERIVED: rationalized rotation windows still meet their caps]
        bc = bc_exact_windows(ROT, PiecewiseLinear.hat(F(1, 2), F(1, 4),
                                                       F(1, 8)),
                              caps=lambda j: pow2(j), count=3)
        for j in range(1, 4):
            assert bc.err(j) <= pow2(j)

    def test_tail_dominates_errs(self):
        # [DERIVED: tail(u) >= sum of remaining certified errors]
        bc = bc_exact_windows(SHIFT, FIRSTBIT, caps=lambda j: pow2(j),
                              count=4)
        for u in range(1, 6):
            assert sum(bc.err(j) for j in range(u, 12)) <= bc.tail(u)

    def test_opens_have_certified_mass(self):
        # [DERIVED: mu(U_j) >= 1 - err(j), measured from the exact prefix]
        bc = bc_exact_windows(SHIFT, FIRSTBIT, caps=lambda j: pow2(j),
                              count=3)
        for j in range(1, 4):
            u = bc.opens(j)
            k = len(u.exact_prefix)
            assert open_measure_lower(SHIFT.measure, u, k) >= 1 - bc.err(j)


class TestIntersect:
    def test_cap_violation_rejected(self):
        # [DERIVED: a member whose error misses its dovetail cap must raise]
        fat = BCSequence(space=CANTOR,
                         opens=lambda j: EffectiveOpen.whole(CANTOR),
                         err=lambda j: F(1, 2),
                         tail=lambda u: F(1))
        inter = bc_intersect([fat, fat])
        with pytest.raises(InputError):
            inter.err(5)

    def test_intersection_tail_sound(self):
        # [DERIVED: reported errors never exceed the dovetail caps and the
        # tail dominates their sum]
        bcs = [bc_exact_windows(SHIFT, f,
                                caps=lambda j, i=i: pow2(i + 1 + j), count=4)
               for i, f in enumerate([FIRSTBIT, CylinderFn.coordinate(1)])]
        inter = bc_intersect(bcs)
        errs = [inter.err(t) for t in range(1, 9)]
        assert all(e >= 0 for e in errs)
        for u in range(1, 6):
            assert sum(inter.err(t)
                       for t in range(u, inter.support_end + 1)) \
                <= inter.tail(u)


class TestSynthesis:
    def test_shift_synthesize_and_replay(self):
        # [DERIVED: every certified window replays; serialization
        # round-trips to an identical artifact and identical point]
        bc = bc_exact_windows(SHIFT, FIRSTBIT, caps=lambda j: pow2(j),
                              count=6)
        target = IdealBall(CANTOR, "1", F(3, 4))
        sp = synthesize_point(SHIFT, bc, target, windows=4, track=[FIRSTBIT])
        rep = replay_synth(SHIFT, sp, check_eval=True)
        assert rep["ok"], rep
        d = sp.to_json()
        sp2 = SynthPoint.from_json(d)
        assert sp2.to_json() == d
        assert sp2.point.prefix(20) == sp.point.prefix(20)
        assert horizon_tolerance(sp) is not None

    def test_doubling_synthesize_and_replay(self):
        bc = bc_exact_windows(DBL, HAT, caps=lambda j: pow2(j), count=5)
        target = IdealBall.from_index(DBL.space, 3)
        sp = synthesize_point(DBL, bc, target, windows=4, track=[HAT])
        rep = replay_synth(DBL, sp, check_eval=True)
        assert rep["ok"], rep
        # the decimal rendering is certified to the printed digits
        assert len(sp.decimal(10).split(".")[1]) == 10

    def test_replay_detects_tampering(self):
        # [DERIVED: moving the final ball off the certified chain fails]
        bc = bc_exact_windows(SHIFT, FIRSTBIT, caps=lambda j: pow2(j),
                              count=4)
        sp = synthesize_point(SHIFT, bc, IdealBall(CANTOR, "1", F(3, 4)),
                              windows=3)
        d = sp.to_json()
        d["balls"][-1]["center"] = d["balls"][-1]["center"][:-1] + (
            "0" if d["balls"][-1]["center"].endswith("1") else "1")
        bad = SynthPoint.from_json(d)
        rep = replay_synth(SHIFT, bad)
        assert not rep["ok"]

    def test_dense_sequence(self):
        # [DERIVED: one member per positive-mass canonical ball, nested in
        # its own target]
        bc = bc_exact_windows(SHIFT, FIRSTBIT, caps=lambda j: pow2(j),
                              count=4)
        pts = dense_sequence(SHIFT, bc, count=2, windows=2)
        assert len(pts) == 2
        for sp in pts:
            assert replay_synth(SHIFT, sp)["ok"]


class TestFromRate:
    def test_lazy_opens_sound(self):
        # [DERIVED: every ball the lazy enumerator emits is certified
        # inside its window by interval arithmetic]
        # constant observable: certification is immediate, so the
        # effort-capped enumerator must emit witnesses quickly
        const = CylinderFn.constant(F(1, 2))
        bc = bc_from_rate(SHIFT, const, SummableSchedule.geometric())
        u = bc.opens(1)
        fbar = centered(SHIFT, const)
        s = SummableSchedule.geometric()
        found = 0
        for t in range(400):
            b = u.ball(t)
            if b is None:
                continue
            found += 1
            for n in (1, 2, 5):
                assert window_sup_bound(SHIFT, fbar, n, b) < s.delta(1)
            if found >= 3:
                break
        assert found >= 1

    def test_errors_follow_schedule(self):
        # [TRIVIAL]
        s = SummableSchedule.geometric()
        bc = bc_from_rate(SHIFT, FIRSTBIT, s)
        for j in range(1, 4):
            assert bc.err(j) <= s.eps(j)


class TestTypical:
    def test_typical_point_shift_quick(self):
        # [DERIVED: small multi-observable synthesis replays end to end]
        sp = typical_point(SHIFT, members=2, windows=3)
        assert replay_synth(SHIFT, sp, check_eval=True)["ok"]
        d = sp.to_json()
        assert SynthPoint.from_json(d).to_json() == d
