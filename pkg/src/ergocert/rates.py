"""Effective-convergence certifier.

Computes m(eps) for L1/L2 norm convergence of Birkhoff averages and
n0(eps, delta) for almost-sure convergence, and emits machine-checkable
certificates: every recorded bound re-verifies from the certificate's own
witnesses by pure exact arithmetic (`check_certificate`), and the a.s.
guarantees can be measured exactly at desk scale (`validate_as`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .arith import fmt_rat, parse_rat, pow2
from .errors import BudgetExceededError, InputError, UnsupportedPairError
from .dynamics import (CYLINDER_BUDGET_LOG2, PELL_DENOMINATORS, Observable,
                       System, as_concrete, birkhoff_observable, centered,
                       doubling_correlations, integral, l2_sq_enclosure,
                       l_norm_birkhoff, parse_system, rotation_sup_bound,
                       sup_norm_bound, truncate)
from .observables import (CylinderFn, PiecewiseLinear, observable_from_json,
                          observable_to_json)
from .regions import cylinder_mass
from .spaces import SpaceKind

#: largest octave that is searched linearly for the minimal p
SCAN_CAP = 2048
#: default cap on the doubling p-search
DEFAULT_P_BUDGET = 1 << 34


def sqrt_upper(q: Fraction, bits: int = 48) -> Fraction:
    """Rational u with u >= sqrt(q) and u - sqrt(q) <= 2^-bits."""
    q = Fraction(q)
    if q < 0:
        raise InputError("negative radicand")
    if q == 0:
        return Fraction(0)
    n = (q.numerator << (2 * bits)) // q.denominator
    return Fraction(math.isqrt(n) + 1, 1 << bits)


# ---------------------------------------------------------------------------
# Certified norm upper bounds (deterministic method choice per (system, p))


class NormOracle:
    """Caches exact norm data for one (system, observable) pair and serves
    certified upper bounds on ||A_p(f - integral f)|| for any p."""

    def __init__(self, system: System, f: Observable):
        self.system = system
        self.f = f
        self.fbar = centered(system, f)
        self._cache: dict = {}
        self._corr = None  # (c, prefix_c, prefix_mc) for the doubling map

    def l1_exact_feasible(self, p: int) -> bool:
        g = self.fbar
        if isinstance(g, CylinderFn):
            return (p + g.depth - 1 if g.depth else 0) <= 16
        if self.system.name == "doubling":
            return max(len(g.segments), 1) << p <= (1 << 12)
        return False

    def bound(self, p: int, norm: str) -> tuple[Fraction, str]:
        """(w, method) with w a certified upper bound on ||A_p fbar||_norm."""
        key = (p, norm)
        if key not in self._cache:
            self._cache[key] = self._compute(p, norm)
        return self._cache[key]

    def _compute(self, p: int, norm: str):
        if self.system.name == "rotation":
            return rotation_sup_bound(self.system, self.f, p), "sup-exact"
        if norm == "L1" and self.l1_exact_feasible(p):
            return l_norm_birkhoff(self.system, self.f, p, "L1"), "l1-exact"
        sq = self._l2_sq(p)
        return sqrt_upper(sq.hi), "l2-upper"

    def _l2_sq(self, p: int):
        if self.system.name == "doubling":
            return self._doubling_l2_sq(p)
        return l2_sq_enclosure(self.system, self.f, p)

    def _doubling_l2_sq(self, p: int):
        from .arith import Interval
        from .dynamics import CORRELATION_CUTOFF
        if self._corr is None:
            c = doubling_correlations(self.fbar, CORRELATION_CUTOFF)
            ps = [Fraction(0)]
            pms = [Fraction(0)]
            for m in range(1, len(c)):
                ps.append(ps[-1] + c[m])
                pms.append(pms[-1] + m * c[m])
            self._corr = (c, ps, pms)
        c, ps, pms = self._corr
        cut = min(p, len(c))
        tot = p * c[0] + 2 * (p * ps[cut - 1] - pms[cut - 1])
        val = tot / Fraction(p * p)
        if cut == p:
            return Interval(val, val)
        tail = Fraction(2, p) * self.fbar.abs_integral() \
            * self.fbar.total_variation() * pow2(cut - 1)
        return Interval(val - tail, val + tail)

    def fbar_norm_upper(self, norm: str) -> Fraction:
        """Certified upper bound on ||fbar||_norm (p = 1)."""
        w, _ = self.bound(1, norm)
        return w


def find_p(oracle: NormOracle, threshold: Fraction, norm: str,
           p_budget: int = DEFAULT_P_BUDGET) -> tuple[int, Fraction, str]:
    """Deterministic p-search: doubling schedule, then a linear scan of the
    winning octave when it is small enough to examine exhaustively.  The
    rotation searches denominators of the continued-fraction convergents
    of its angle instead (intermediate p are not competitive and each
    evaluation costs a full exact average)."""
    if oracle.system.name == "rotation":
        for p in PELL_DENOMINATORS:
            w, method = oracle.bound(p, norm)
            if w < threshold:
                return p, w, method
        raise BudgetExceededError(
            f"no convergent denominator attains norm < {threshold}")
    p = 1
    while True:
        w, method = oracle.bound(p, norm)
        if w < threshold:
            break
        p *= 2
        if p > p_budget:
            raise BudgetExceededError(f"p-search exceeded {p_budget}")
    if p > 1 and (p - p // 2) <= SCAN_CAP:
        for q in range(p // 2 + 1, p):
            wq, mq = oracle.bound(q, norm)
            if wq < threshold:
                return q, wq, mq
    return p, w, method


# ---------------------------------------------------------------------------
# Certificates


@dataclass
class RateCertificate:
    kind: str  # NORM_L1 | NORM_L2 | AS_BOUNDED | AS_L1
    system_sel: str
    observable: dict  # serialized; certificates are standalone
    epsilon: Fraction
    delta: Optional[Fraction]  # None for NORM kinds
    p: int
    norm_bound: Fraction  # certified upper bound on ||A_p fbar||
    norm_method: str
    n0_or_m: int
    n_factor: Optional[int] = None  # NORM kinds: m = n_factor * p
    fbar_norm: Optional[Fraction] = None  # NORM kinds: bound on ||fbar||
    sup_bound: Optional[Fraction] = None  # AS kinds: bound on ||fbar||_inf
    M: Optional[Fraction] = None  # AS_L1: truncation level
    rho: Optional[Fraction] = None  # AS_L1: exact ||fbar - fbar'_M||_1
    tail_level: Optional[Fraction] = None  # AS_L1: level a for the tail part
    delta_sub: Optional[Fraction] = None  # AS_L1: level of the bounded part
    guarantee: str = ""

    def to_json(self) -> dict:
        d = {"kind": self.kind, "system": self.system_sel,
             "observable": self.observable,
             "epsilon": fmt_rat(self.epsilon),
             "p": self.p, "norm_bound": fmt_rat(self.norm_bound),
             "norm_method": self.norm_method, "n0_or_m": self.n0_or_m,
             "guarantee": self.guarantee}
        if self.delta is not None:
            d["delta"] = fmt_rat(self.delta)
        for name in ("n_factor",):
            if getattr(self, name) is not None:
                d[name] = getattr(self, name)
        for name in ("fbar_norm", "sup_bound", "M", "rho", "tail_level",
                     "delta_sub"):
            if getattr(self, name) is not None:
                d[name] = fmt_rat(getattr(self, name))
        return d

    @staticmethod
    def from_json(d: dict) -> "RateCertificate":
        def opt(name):
            return parse_rat(d[name]) if name in d else None

        return RateCertificate(
            kind=d["kind"], system_sel=d["system"], observable=d["observable"],
            epsilon=parse_rat(d["epsilon"]), delta=opt("delta"),
            p=int(d["p"]), norm_bound=parse_rat(d["norm_bound"]),
            norm_method=d["norm_method"], n0_or_m=int(d["n0_or_m"]),
            n_factor=int(d["n_factor"]) if "n_factor" in d else None,
            fbar_norm=opt("fbar_norm"), sup_bound=opt("sup_bound"),
            M=opt("M"), rho=opt("rho"), tail_level=opt("tail_level"),
            delta_sub=opt("delta_sub"), guarantee=d.get("guarantee", ""))


def _ceil_frac(q: Fraction) -> int:
    return -((-q.numerator) // q.denominator)


def l_rate(system: System, f: Observable, epsilon: Fraction, norm: str = "L1",
           p_budget: int = DEFAULT_P_BUDGET) -> RateCertificate:
    """Certificate that ||A_m'(f - integral f)||_norm <= eps for all
    m' >= m, with m = n * p: p attains ||A_p|| < eps/2, and any m' >= m
    splits as m' = n'p + k with n' >= n >= 2||fbar||/eps, so the averaging
    identity gives ||A_{m'}|| <= ||A_p|| + ||fbar||/n' <= eps."""
    epsilon = Fraction(epsilon)
    if epsilon <= 0 or norm not in ("L1", "L2"):
        raise InputError("need eps > 0 and norm in {L1, L2}")
    oracle = NormOracle(system, f)
    p, w, method = find_p(oracle, epsilon / 2, norm, p_budget)
    nf = oracle.fbar_norm_upper(norm)
    n = max(1, _ceil_frac(2 * nf / epsilon))
    m = n * p
    return RateCertificate(
        kind=f"NORM_{norm}", system_sel=system.selector(),
        observable=observable_to_json(_serializable(system, f)),
        epsilon=epsilon, delta=None, p=p, norm_bound=w, norm_method=method,
        n0_or_m=m, n_factor=n, fbar_norm=nf,
        guarantee=(f"||A_m'(f-int f)||_{norm} <= {fmt_rat(epsilon)} "
                   f"for all m' >= {m}"))


def _serializable(system: System, f: Observable):
    return as_concrete(system, f)


def as_rate_bounded(system: System, f: Observable, epsilon: Fraction,
                    delta: Fraction,
                    p_budget: int = DEFAULT_P_BUDGET) -> RateCertificate:
    """Certificate that mu(sup_{n>=n0} |A_n(f - integral f)| > delta) <= eps.

    Chain: pick p with ||A_p fbar||_1 <= delta*eps/2; for n >= n0 the
    average A_n fbar differs from A_n(A_p fbar) by the boundary correction
    u/(np) with ||u||_inf <= p(p-1)||fbar||_inf, so n0 >=
    4(p-1)||fbar||_inf/delta makes the correction <= delta/2; the maximal
    ergodic theorem applied to A_p fbar at level delta/2 gives mass
    <= ||A_p fbar||_1/(delta/2) <= eps."""
    epsilon, delta = Fraction(epsilon), Fraction(delta)
    if epsilon <= 0 or delta <= 0:
        raise InputError("need eps, delta > 0")
    oracle = NormOracle(system, f)
    p, w, method = find_p(oracle, delta * epsilon / 2, "L1", p_budget)
    sup = sup_norm_bound(oracle.fbar)
    n0 = max(1, _ceil_frac(Fraction(4 * (p - 1)) * sup / delta))
    return RateCertificate(
        kind="AS_BOUNDED", system_sel=system.selector(),
        observable=observable_to_json(_serializable(system, f)),
        epsilon=epsilon, delta=delta, p=p, norm_bound=w, norm_method=method,
        n0_or_m=n0, sup_bound=sup,
        guarantee=(f"mu(sup_(n>={n0}) |A_n(f-int f)| > {fmt_rat(delta)}) "
                   f"<= {fmt_rat(epsilon)}"))


def _tail_l1(system: System, g, M: Fraction) -> Fraction:
    """Exact ||g - clamp(g, M)||_1."""
    gm = g.clamp(M)
    if isinstance(g, CylinderFn):
        diff = g._zip(gm, lambda x, y: x - y)
        tot = Fraction(0)
        for w in range(1 << diff.depth):
            word = format(w, f"0{diff.depth}b") if diff.depth else ""
            tot += cylinder_mass(word, system.p) * abs(diff.table[w])
        return tot
    return g.add(gm.scale(-1)).abs_integral()


def as_rate_l1(system: System, f: Observable, epsilon: Fraction,
               delta: Fraction,
               p_budget: int = DEFAULT_P_BUDGET) -> RateCertificate:
    """Almost-sure rate via truncation, for observables known only in L1.

    Internally works at (eps/2, delta/2) so the emitted guarantee reads in
    the caller's parameters.  fbar splits as clamp(fbar, M) + r with
    ||r||_1 <= delta*eps/8; the bounded part gets an AS_BOUNDED certificate
    at level delta_sub, the tail r is controlled by the maximal ergodic
    theorem at level a = ||r||_1/(eps/2), and delta_sub + ||r||_1 + a <= delta
    (the middle term absorbs the integral shift of the truncation)."""
    epsilon, delta = Fraction(epsilon), Fraction(delta)
    if epsilon <= 0 or delta <= 0:
        raise InputError("need eps, delta > 0")
    g = centered(system, f)
    target = delta * epsilon / 8
    M = Fraction(1)
    while _tail_l1(system, g, M) > target:
        M *= 2
        if M > sup_norm_bound(g) * 4 + 4:
            raise BudgetExceededError("truncation scan failed to converge")
    rho = _tail_l1(system, g, M)
    a = rho / (epsilon / 2) if rho > 0 else Fraction(0)
    delta_sub = delta - rho - a
    assert delta_sub > 0
    gm = g.clamp(M)
    sub = as_rate_bounded(system, gm, epsilon / 2, delta_sub, p_budget)
    return RateCertificate(
        kind="AS_L1", system_sel=system.selector(),
        observable=observable_to_json(_serializable(system, f)),
        epsilon=epsilon, delta=delta, p=sub.p, norm_bound=sub.norm_bound,
        norm_method=sub.norm_method, n0_or_m=sub.n0_or_m,
        sup_bound=sub.sup_bound, M=M, rho=rho, tail_level=a,
        delta_sub=delta_sub,
        guarantee=(f"mu(sup_(n>={sub.n0_or_m}) |A_n(f-int f)| > "
                   f"{fmt_rat(delta)}) <= {fmt_rat(epsilon)}"))


# ---------------------------------------------------------------------------
# Standalone certificate checker (replays witnesses, no re-search)


def check_certificate(cert: RateCertificate) -> tuple[bool, str]:
    """Re-verify a certificate by exact arithmetic at the recorded p only."""
    try:
        system = parse_system(cert.system_sel)
        f = observable_from_json(cert.observable)
        oracle = NormOracle(system, f)
    except Exception as e:  # malformed payloads are verification failures
        return False, f"payload: {e}"
    if cert.kind in ("NORM_L1", "NORM_L2"):
        norm = cert.kind[-2:]
        w, method = oracle.bound(cert.p, norm)
        if w > cert.norm_bound:
            return False, f"recomputed ||A_p|| bound {w} > recorded {cert.norm_bound}"
        if not cert.norm_bound < cert.epsilon / 2:
            return False, "recorded bound does not clear eps/2"
        nf = oracle.fbar_norm_upper(norm)
        if nf > cert.fbar_norm:
            return False, "recomputed ||fbar|| exceeds recorded value"
        if cert.n_factor < 2 * cert.fbar_norm / cert.epsilon:
            return False, "n does not satisfy n >= 2||fbar||/eps"
        if cert.n0_or_m != cert.n_factor * cert.p:
            return False, "m != n*p"
        return True, "ok"
    if cert.kind == "AS_BOUNDED":
        return _check_as_bounded(oracle, cert, cert.delta, cert.epsilon)
    if cert.kind == "AS_L1":
        g = oracle.fbar
        rho = _tail_l1(oracle.system, g, cert.M)
        if rho != cert.rho:
            return False, "recomputed truncation tail differs"
        if rho > cert.delta * cert.epsilon / 8:
            return False, "truncation tail too large"
        a = rho / (cert.epsilon / 2) if rho > 0 else Fraction(0)
        if a != cert.tail_level:
            return False, "tail level mismatch"
        if cert.delta_sub + rho + a > cert.delta or cert.delta_sub <= 0:
            return False, "level budget does not add up"
        gm = g.clamp(cert.M)
        sub_oracle = NormOracle(oracle.system, gm)
        return _check_as_bounded(sub_oracle, cert, cert.delta_sub,
                                 cert.epsilon / 2)
    return False, f"unknown kind {cert.kind}"


def _check_as_bounded(oracle: NormOracle, cert: RateCertificate,
                      delta: Fraction, epsilon: Fraction) -> tuple[bool, str]:
    w, method = oracle.bound(cert.p, "L1")
    if w > cert.norm_bound:
        return False, f"recomputed ||A_p||_1 bound {w} > recorded"
    if not cert.norm_bound < delta * epsilon / 2:
        return False, "recorded bound does not clear delta*eps/2"
    sup = sup_norm_bound(oracle.fbar)
    if sup > cert.sup_bound:
        return False, "recomputed sup bound exceeds recorded value"
    need = max(1, _ceil_frac(Fraction(4 * (cert.p - 1)) * cert.sup_bound / delta))
    if cert.n0_or_m < need:
        return False, f"n0 {cert.n0_or_m} below required {need}"
    return True, "ok"


# ---------------------------------------------------------------------------
# Exact / sampled validation of a.s. certificates


@dataclass
class ValidationReport:
    mode: str
    horizon: int
    n_start: int
    measured_mass: Fraction  # exact in EXACT modes, an estimate in SAMPLED
    epsilon: Fraction
    delta: Fraction
    passed: Optional[bool]  # None in SAMPLED mode (estimate only)
    window_empty: bool = False
    samples: Optional[int] = None

    def to_json(self) -> dict:
        d = {"mode": self.mode, "horizon": self.horizon,
             "n_start": self.n_start,
             "measured_mass": fmt_rat(self.measured_mass),
             "epsilon": fmt_rat(self.epsilon), "delta": fmt_rat(self.delta),
             "passed": self.passed, "window_empty": self.window_empty}
        if self.samples is not None:
            d["samples"] = self.samples
        return d


def validate_as(system: System, f: Observable, cert: RateCertificate,
                horizon: int, mode: str = "EXACT_CYLINDER") -> ValidationReport:
    """Measure mu{x : max_{n_start <= n <= horizon} |A_n(f-int f)(x)| > delta}
    and compare against the certified eps.

    n_start is max(1, n0); when n0 exceeds the horizon the certified event
    does not restrict the window at all, so the window is empty and the
    measured mass is 0 (reported with window_empty set, instead of
    rejecting the call: desk-scale horizons are routinely far below the
    pessimistic n0 of the maximal-ergodic route)."""
    if cert.delta is None:
        raise InputError("only a.s. certificates validate against a horizon")
    n0 = cert.n0_or_m
    if n0 > horizon:
        return ValidationReport(mode, horizon, n0, Fraction(0), cert.epsilon,
                                cert.delta, True, window_empty=True)
    window = range(max(1, n0), horizon + 1)
    g = centered(system, f)
    if mode == "EXACT_CYLINDER":
        if system.space.kind is not SpaceKind.CANTOR:
            raise UnsupportedPairError("EXACT_CYLINDER needs the shift")
        mass = _exact_cylinder_mass(system, g, window, cert.delta)
        return ValidationReport(mode, horizon, window.start, mass,
                                cert.epsilon, cert.delta, mass <= cert.epsilon)
    if mode == "EXACT_ARC":
        if system.space.kind is not SpaceKind.CIRCLE:
            raise UnsupportedPairError("EXACT_ARC needs a circle system")
        env = _max_envelope(system, g, window)
        exceed = env.arcs_above(cert.delta)
        mass = exceed.measure()
        if not isinstance(mass, Fraction):
            mass = mass.approx(60) + pow2(60)
        return ValidationReport(mode, horizon, window.start, mass,
                                cert.epsilon, cert.delta, mass <= cert.epsilon)
    if mode == "SAMPLED":
        count = 256
        hits = 0
        for t in range(count):
            x = Fraction(_bit_reverse(t, 16), 1 << 16)
            if _sample_exceeds(system, g, window, cert.delta, x):
                hits += 1
        return ValidationReport(mode, horizon, window.start,
                                Fraction(hits, count), cert.epsilon,
                                cert.delta, None, samples=count)
    raise InputError(f"unknown validation mode {mode!r}")


def _exact_cylinder_mass(system: System, g: CylinderFn, window: range,
                         delta: Fraction) -> Fraction:
    k = g.depth
    horizon = window.stop - 1
    d = horizon + k - 1 if k else 1
    if d > CYLINDER_BUDGET_LOG2:
        raise BudgetExceededError(f"validation needs 2^{d} cylinders")
    den = math.lcm(*[v.denominator for v in g.table])
    nums = [int(v * den) for v in g.table]
    mask = (1 << k) - 1 if k else 0
    dn, dd = delta.numerator, delta.denominator
    mass = Fraction(0)
    prob = system.p
    for w in range(1 << d):
        s = 0
        exceeded = False
        for n in range(1, horizon + 1):
            s += nums[(w >> (d - n - k + 1)) & mask] if k else nums[0]
            if n in window and abs(s) * dd > dn * den * n:
                exceeded = True
                break
        if exceeded:
            mass += cylinder_mass(format(w, f"0{d}b"), prob)
    return mass


def _max_envelope(system: System, g, window: range):
    env = None
    for n in window:
        a = birkhoff_observable(system, g, n).abs()
        env = a if env is None else env.max_with(a)
    return env


def _sample_exceeds(system: System, g, window: range, delta, x: Fraction) -> bool:
    total = 0
    vals = []
    if system.space.kind is SpaceKind.CANTOR:
        # the sample's binary expansion is the symbol sequence
        need = window.stop + g.depth
        word = "".join(str((x * (1 << (i + 1))).__floor__() % 2)
                       for i in range(need))
        for n in range(1, window.stop):
            total = total + g.value_on_word(word[n - 1:])
            if n in window and abs(total) > delta * n:
                return True
        return False
    if system.name == "doubling":
        pts = [(x * (1 << i)) % 1 for i in range(window.stop)]
    else:
        pts = [(x + system.alpha * i).mod1() for i in range(window.stop)]
    for n in range(1, window.stop):
        total = total + g.eval_right(pts[n - 1])
        if n in window and abs(total) > delta * n:
            return True
    return False


def _bit_reverse(t: int, bits: int) -> int:
    out = 0
    for _ in range(bits):
        out = (out << 1) | (t & 1)
        t >>= 1
    return out


# ---------------------------------------------------------------------------
# Summable schedules (drive the Borel-Cantelli constructions)


@dataclass
class SummableSchedule:
    """eps_j, delta_j for j >= 1, with an explicit summability modulus:
    sum_{j >= modulus(e)} eps_j < e, and an exact tail bound."""

    eps: Callable[[int], Fraction]
    delta: Callable[[int], Fraction]
    modulus: Callable[[Fraction], int]
    tail: Callable[[int], Fraction]  # upper bound on sum_{j>=u} eps_j

    @staticmethod
    def geometric(shift: int = 0,
                  delta: Optional[Callable[[int], Fraction]] = None
                  ) -> "SummableSchedule":
        """eps_j = 2^-(j+shift); default delta_j = 2^-j."""

        def eps(j: int) -> Fraction:
            return pow2(j + shift)

        def tail(u: int) -> Fraction:
            return pow2(max(u, 1) + shift - 1)

        def modulus(e: Fraction) -> int:
            u = 1
            while tail(u) >= e:
                u += 1
            return u

        return SummableSchedule(eps, delta or (lambda j: pow2(j)), modulus,
                                tail)
