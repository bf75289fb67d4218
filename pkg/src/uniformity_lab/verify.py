"""Lemma-suite runner.

Each registered suite builds seeded instances, hands them to the module that
owns the inequality, and returns one CheckReport per measured bound. The
bilinear-rank bounds (L8.16, L9.x) are evaluated here directly.

Instance seeds come from a splitmix64 stream started at the suite seed, so a
report's seed alone reproduces its instance.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Sequence

import numpy as np

from . import bohr as _bohr
from . import bourgain as _bg
from . import decomp as _dc
from . import gap as _gap
from . import linsys as _ls
from . import quad as _qd
from .generators import SplitMix64, rand_complex_disc, rand_interval, rand_unimodular
from .parallel import map_ordered
from .reports import CheckReport
from .unorms import u2_dual_norm
from .zn_core import GroupFn, SubsetZN

__all__ = [
    "CONSTANTS",
    "Suite",
    "SUITES",
    "ALIASES",
    "UnknownLemma",
    "run_suite",
    "registered",
    "report",
    "Summary",
    "bilinear_alpha",
    "rank_restriction_check",
    "subadditivity_check",
    "multi_subadditivity_check",
    "square_independent_combination_check",
    "bilinear_quasirandom_check",
]

# constants that appear in right-hand sides, with what they control
CONSTANTS = MappingProxyType(
    {
        "C0": (2**24, "base exponent of the decomposition budgets"),
        "regularity": (_bohr.REGULARITY_CONSTANT, "size change factor 1 +- 100 d eps of a regular Bohr set"),
        "central_lo": (_bohr.CENTRAL_LO, "central width lower end eps rho / 400 d"),
        "central_hi": (_bohr.CENTRAL_HI, "central width upper end eps rho / 200 d"),
        "cover_bohr": ("5^d / density", "number of Bohr translates covering Z_N"),
        "cover_gap": ("3^d / density", "number of progression translates covering Z_N"),
        "shrink": (4, "base shrinking error factor on eps"),
        "product": (18, "product error factor on eps"),
        "high_rank": (11, "eps factor in the high-rank average bounds"),
        "u2_small": (12, "alpha factor in (12 alpha)^(1/8)"),
    }
)


class UnknownLemma(KeyError):
    pass


@dataclass(frozen=True)
class Suite:
    lemma_id: str
    ids: tuple  # report ids (prefixes) belonging to the suite
    build: Callable[[SplitMix64, int], list[CheckReport]]
    default_N: int
    description: str = ""


# --------------------------------------------------------------------------
# random instance helpers


def _choice(rng: SplitMix64, seq):
    return seq[rng.below(len(seq))]


def _rand_range(rng: SplitMix64, lo: float, hi: float) -> float:
    return lo + (hi - lo) * rng.uniform()


def _rand_bohr(rng: SplitMix64, N: int, kmax: int = 2) -> _bohr.BohrSet:
    k = 1 + rng.below(kmax)
    K = [1 + v for v in rng.sample(10, k)]
    return _bohr.find_regular(N, K, _choice(rng, (0.3, 0.6)))


def _rand_gap(rng: SplitMix64, N: int, dmax: int = 2, max_size: int | None = None) -> _gap.Gap:
    max_size = max_size or max(2, N // 4)
    for _ in range(100):
        if dmax == 1 or rng.below(2) == 0:
            m = 2 + rng.below(max(1, max_size - 1))
            P = _gap.build_gap(N, rng.below(N), (1 + rng.below(N - 1),), (m,))
        else:
            m1 = 2 + rng.below(6)
            m2 = 2 + rng.below(6)
            P = _gap.build_gap(N, rng.below(N), (1 + rng.below(N - 1), 1 + rng.below(N - 1)), (m1, m2))
        if P.proper and P.size <= max_size:
            return P
    return _gap.interval(N, 0, 2)


def _rand_form(rng: SplitMix64, N: int, quadratic: bool = True) -> _qd.QuadForm:
    a = (1 + rng.below(N - 1)) if quadratic else 0
    return _qd.QuadForm.global_form(N, a, rng.below(N), rng.below(N))


def _full_average(rng: SplitMix64, N: int, q: _qd.QuadForm, offsets: bool) -> _qd.QuadAverage:
    B = _bohr.full_bohr(N)
    if not offsets:
        return _qd.global_phase_average(B, q)
    u = [rng.below(N) for _ in range(N)]
    v = [rng.below(N) for _ in range(N)]
    return _qd.average_from_offsets(B, q, u, v)


def _offsets_average(rng: SplitMix64, B: _bohr.BohrSet, q: _qd.QuadForm) -> _qd.QuadAverage:
    N = B.modulus
    u = [rng.below(N) for _ in range(N)]
    v = [rng.below(N) for _ in range(N)]
    return _qd.average_from_offsets(B, q, u, v)


def _bohr_with_width(rng: SplitMix64, N: int, rho: float) -> _bohr.BohrSet:
    K = [1 + v for v in rng.sample(10, 1 + rng.below(2))]
    return _bohr.build_bohr(N, K, rho)


# --------------------------------------------------------------------------
# bilinear exponential sums, computed independently of the quad module


def bilinear_alpha(c: int, S, N: int) -> float:
    """alpha_S(beta) for beta(x, y) = 2 c x y:
    E_{b, b' in S} |E_{a in S} omega^{beta(a, b - b')}|^2 (the form is bilinear,
    so the four-fold average factors this way)."""
    pts = S.members if isinstance(S, SubsetZN) else np.asarray(S, dtype=np.int64)
    pts = np.asarray(pts, dtype=np.int64)
    t = np.mod(pts[:, None] - pts[None, :], N).ravel()
    ex = np.mod(2 * c * np.mod(pts[:, None] * t[None, :], N), N)
    inner_avg = np.exp(2j * np.pi * ex / N).mean(axis=0)
    return float(np.mean(np.abs(inner_avg) ** 2))


def rank_restriction_check(c: int, P: SubsetZN, B2: SubsetZN, N: int, inst: dict | None = None) -> CheckReport:
    """alpha_P >= (|P cap B''| / |P|)^4 alpha_{P cap B''}."""
    inst = dict(inst or {}, c=c)
    S = P & B2
    if S.size == 0:
        return CheckReport.skip("L8.16", "P and B'' are disjoint", inst)
    lhs = (S.size / P.size) ** 4 * bilinear_alpha(c, S, N)
    return CheckReport("L8.16", lhs, bilinear_alpha(c, P, N), inst | {"|P|": P.size, "|P cap B''|": S.size})


def subadditivity_check(c1: int, c2: int, sys: _bg.BourgainSystem, eps: float, inst: dict | None = None) -> CheckReport:
    N = sys.modulus
    B1 = sys(1.0)
    gamma = B1.size / N
    d = sys.d
    inst = dict(inst or {}, c1=c1, c2=c2, gamma=gamma, d=d, eps=eps)
    if gamma >= 0.5:
        return CheckReport.skip("L9.5", "density of B_1 must be below 1/2", inst)
    lhs = (bilinear_alpha(c1, B1, N) * bilinear_alpha(c2, B1, N)) ** 4
    rhs = gamma**-6 * (800 * d / eps) ** (4 * d) * bilinear_alpha(c1 + c2, B1, N) + 9 * eps * gamma**-7
    return CheckReport("L9.5", lhs, rhs, inst)


def multi_subadditivity_check(cs: Sequence[int], sys: _bg.BourgainSystem, B: SubsetZN, eps: float, inst: dict | None = None) -> CheckReport:
    N = sys.modulus
    gamma = sys(1.0).size / N
    d = sys.d
    m = len(cs)
    inst = dict(inst or {}, cs=list(cs), gamma=gamma, d=d, eps=eps)
    if gamma >= 1 / 8:
        return CheckReport.skip("L9.6", "density of B_1 must be below 1/8", inst)
    lhs = math.prod(bilinear_alpha(c, B, N) for c in cs)
    tot = bilinear_alpha(sum(cs), B, N)
    rhs = gamma ** (-2 * m * m) * (800 * d / eps) ** (d * math.log(m) / m**2) * tot ** (1 / m**2)
    rhs += 8 * gamma ** (-2 * m * m) * (eps**0.25 / gamma**2) ** (1 / m**2)
    return CheckReport("L9.6", lhs, rhs, inst)


def square_independent_combination_check(system: _ls.LinearSystem, cs: Sequence[int], sys: _bg.BourgainSystem, eps: float, inst: dict | None = None) -> CheckReport:
    """Some (u, v) makes beta_uv = sum_i c_iu c_iv beta_i satisfy the bound for every i.

    Reported as lhs = min over (u, v) of max over i of (alpha(beta_uv) - bound_i), rhs = 0.
    """
    N = sys.modulus
    B1 = sys(1.0)
    gamma = B1.size / N
    d = sys.d
    m = system.r
    inst = dict(inst or {}, cs=list(cs), gamma=gamma, d=d, eps=eps, system=[list(r) for r in system.coeffs])
    if not _ls.square_independent(system).independent:
        return CheckReport.skip("L9.7", "system is not square-independent", inst)
    C = system.matrix()
    bounds = []
    for c in cs:
        a_i = bilinear_alpha(c, B1, N)
        b = gamma ** (-2 * m) * (800 * d / eps) ** (d * math.log(m) / m**3) * a_i ** (1 / m**3)
        b += 4 * gamma ** (-2 * m) * (eps**0.25 / gamma**2) ** (1 / m**3)
        bounds.append(b)
    best = math.inf
    best_uv = None
    for u in range(system.s):
        for v in range(system.s):
            cuv = int(sum(int(C[i, u]) * int(C[i, v]) * cs[i] for i in range(m)))
            a = bilinear_alpha(cuv, B1, N)
            worst = max(a - b for b in bounds)
            if worst < best:
                best, best_uv = worst, (u, v)
    return CheckReport("L9.7", best, 0.0, inst | {"uv": best_uv})


def bilinear_quasirandom_check(c: int, B: SubsetZN, P: SubsetZN, g: np.ndarray, h: np.ndarray, eps: float, inst: dict | None = None) -> CheckReport:
    """|E_{x, y in B} omega^{beta(x, y)} g(x) h(y)| <= (alpha_P(beta) + 6 eps)^{1/4}."""
    N = B.modulus
    xs = B.members
    ex = np.mod(2 * c * np.mod(xs[:, None] * xs[None, :], N), N)
    lhs = abs(g[xs] @ np.exp(2j * np.pi * ex / N) @ h[xs]) / xs.size**2
    rhs = (bilinear_alpha(c, P, N) + 6 * eps) ** 0.25
    return CheckReport("L9.8", float(lhs), rhs, dict(inst or {}, c=c, eps=eps, P_size=P.size))


# --------------------------------------------------------------------------
# suite builders: (rng, N) -> reports for one instance


def _s_boundary(rng, N):
    B = _rand_bohr(rng, N)
    pair = _bohr.central_subset(B, _rand_range(rng, 0.05, 0.5))
    return [_bohr.boundary_lemma_check(pair, _bohr.bohr_cover(B).translates)]


def _s_averaging(rng, N):
    B = _rand_bohr(rng, N)
    pair = _bohr.central_subset(B, _rand_range(rng, 0.05, 0.5))
    return _bohr.averaging_checks(pair, rand_complex_disc(N, rng.next_u64()))


def _s_shrink(rng, N):
    B = _rand_bohr(rng, N)
    eps = _rand_range(rng, 0.02, 0.5)
    Q = _offsets_average(rng, B, _rand_form(rng, N))
    _, rep = _qd.shrink_base(Q, _bohr.central_subset(B, eps), check=False)
    return [rep]


def _s_product(rng, N):
    B1 = _rand_bohr(rng, N, kmax=1)
    B2 = _bohr_with_width(rng, N, B1.rho)
    eps = _rand_range(rng, 0.02, 0.5)
    Q1 = _offsets_average(rng, B1, _rand_form(rng, N))
    Q2 = _offsets_average(rng, B2, _rand_form(rng, N))
    inter = _qd.intersect_bohr(B1, B2)
    if not _bohr.is_regular(inter):
        inter = _bohr.find_regular(N, inter.K, inter.rho)
        Q1 = _offsets_average(rng, inter, Q1.q)
        Q2 = _offsets_average(rng, inter, Q2.q)
        B1 = B2 = inter
    chain = _qd.make_chain(B1, B2, eps, depth=2)
    _, reps = _qd.product_average(Q1, Q2, chain, check=False)
    return reps


def _high_rank_instance(rng, N):
    q = _rand_form(rng, N, quadratic=rng.below(5) != 0)
    Q = _full_average(rng, N, q, offsets=rng.below(2) == 0)
    eps = _rand_range(rng, 0.001, 0.049)
    pair = _bohr.central_subset(_bohr.full_bohr(N), eps)
    P = _rand_gap(rng, N)
    return Q, P, pair


def _s_high_rank(rng, N):
    Q, P, pair = _high_rank_instance(rng, N)
    return _qd.high_rank_checks(Q, P.members, pair)


def _s_high_rank_linear(rng, N):
    q = _rand_form(rng, N, quadratic=False)
    Q = _full_average(rng, N, q, offsets=False)
    pair = _bohr.central_subset(_bohr.full_bohr(N), _rand_range(rng, 0.001, 0.049))
    return _qd.high_rank_checks(Q, _rand_gap(rng, N).members, pair)


def _s_cor53(rng, N):
    Q, P, pair = _high_rank_instance(rng, N)
    Qo = _full_average(rng, N, _rand_form(rng, N, quadratic=rng.below(3) != 0), offsets=rng.below(2) == 0)
    chain = _qd.make_chain(_bohr.full_bohr(N), _bohr.full_bohr(N), pair.eps, depth=3)
    return _qd.high_rank_checks(Q, P.members, pair, Qother=Qo, chain=chain)


def _s_dichotomy_1d(rng, N):
    den = 2 + rng.below(2000)
    alpha = (rng.below(den), den) if rng.below(2) else rng.uniform()
    m1 = 5 + rng.below(40)
    m2 = 5 + rng.below(40)
    c = _rand_range(rng, 0.05, 0.5)
    lam, mu = rng.uniform(), rng.uniform()
    from fractions import Fraction

    a = Fraction(*alpha) if isinstance(alpha, tuple) else alpha
    res = _qd.rational_dichotomy_1d(a, m1, m2, c, lam, mu)
    inst = {"alpha": str(a), "m1": m1, "m2": m2, "c": c, "branch": res.branch}
    out = [CheckReport("L6.1", 0.0 if res.valid else 1.0, 0.0, inst)]
    if res.branch == "rational":
        out.append(CheckReport("L6.1(q)", res.q, 2 / c, inst))
        out.append(CheckReport("L6.1(approx)", res.approx_err, res.approx_bound, inst))
        out.append(CheckReport("L6.1(consequence)", res.consequence_max, res.consequence_bound, inst))
    return out


def _s_dichotomy_dd(rng, N):
    from fractions import Fraction

    d = 1 + rng.below(2)
    lens = [4 + rng.below(12) for _ in range(d)]
    c = _rand_range(rng, 0.05, 0.4)
    alphas = [[Fraction(rng.below(60), 60) if rng.below(2) else Fraction(rng.below(1000), 997) for _ in range(d)] for _ in range(d)]
    for r in range(d):
        for s in range(r):
            alphas[r][s] = alphas[s][r]
    res = _qd.rational_dichotomy_dd(alphas, lens, c)
    inst = {"d": d, "lens": lens, "c": c, "branch": res.branch}
    return [CheckReport("C6.2", 0.0 if res.valid else 1.0, 0.0, inst)]


def _linear_phase_table(P: _gap.Gap, rng, N: int) -> np.ndarray:
    """phi(x) = r x + c0, a Freiman homomorphism on every set."""
    r, c0 = rng.below(N), rng.below(N)
    return (r * np.arange(N, dtype=np.int64) + c0) % N


def _s_smoothing(rng, N):
    P = _rand_gap(rng, N, max_size=N // 3)
    eps = _rand_range(rng, 0.05, 0.5)
    sm = _qd.smooth_linear_phase(P, _linear_phase_table(P, rng, N), eps, check=False)
    return sm.reports


def _s_dual_convolution(rng, N):
    """|f| <= 1_A / gamma and |g| <= 1_B / theta give ||f * g||* <= gamma^{-1/2} theta^{-1/4}."""
    A = SubsetZN(N, np.array([rng.uniform() < _rand_range(rng, 0.05, 0.9) for _ in range(N)]))
    Bs = SubsetZN(N, np.array([rng.uniform() < _rand_range(rng, 0.05, 0.9) for _ in range(N)]))
    if A.size == 0 or Bs.size == 0:
        A = A | SubsetZN.from_members(N, [0])
        Bs = Bs | SubsetZN.from_members(N, [0])
    gamma, theta = A.size / N, Bs.size / N
    f = rand_complex_disc(N, rng.next_u64()).values * A.mask / gamma
    g = rand_complex_disc(N, rng.next_u64()).values * Bs.mask / theta
    conv = np.array([np.mean(f * g[(x - np.arange(N)) % N]) for x in range(N)])
    dual = u2_dual_norm(GroupFn(N, conv))
    return [CheckReport("L6.5", dual, gamma**-0.5 * theta**-0.25, {"N": N, "gamma": gamma, "theta": theta})]


def _rank_dichotomy_instance(rng, N, want_high: bool):
    # redraw until the wanted branch is hit
    for _ in range(30):
        q = _rand_form(rng, N, quadratic=want_high or rng.below(4) != 0)
        Q = _qd.global_phase_average(_bohr.full_bohr(N), q)
        P = _rand_gap(rng, N, dmax=1 if want_high else 2, max_size=40)
        if want_high and P.size < 25:
            continue
        alpha = 0.05 if want_high else _choice(rng, (0.05, 0.02, 0.01))
        res = _qd.rank_dichotomy(Q, P, alpha, check=False)
        if (res.branch == "u2_small") == want_high:
            return res
    return res


def _s_rank_dichotomy(rng, N):
    """One instance of each branch per trial."""
    out = []
    for want_high in (True, False):
        res = _rank_dichotomy_instance(rng, N, want_high)
        out.extend(res.reports)
        if res.branch == "unavailable":
            out.append(CheckReport.skip("T6.11", res.reason, {"N": N}))
    return out


def _s_close_in_dual(rng, N):
    B = _bohr.full_bohr(N)
    q = _rand_form(rng, N, quadratic=rng.below(3) != 0)
    Q = _full_average(rng, N, q, offsets=False)
    Qp = _qd.global_phase_average(B, q)
    Q0 = _full_average(rng, N, _rand_form(rng, N, quadratic=rng.below(2) == 0), offsets=False)
    zeta = _rand_range(rng, 0.2, 1.0)
    P = _rand_gap(rng, N, dmax=1, max_size=30)
    return [_qd.close_in_dual_check(Q, Qp, Q0, P=P, zeta=zeta)]


def _s_covers(rng, N):
    B = _rand_bohr(rng, N)
    out = [_bohr.cover_report(B)]
    P = _rand_gap(rng, N)
    cov = _gap.gap_cover(P)
    inst = {"N": N, "gens": list(P.gens), "lens": list(P.lens), "covered": cov.covered}
    out.append(CheckReport("L8.9", cov.m if cov.covered else math.inf, cov.bound, inst))
    return out


def _s_cluster(rng, N):
    n = 10 + rng.below(31)
    us = [GroupFn.quadratic_phase(N, rng.below(N), rng.below(N)).values for _ in range(n)]
    if rng.below(2):  # force some exact repeats
        for i in range(1, n, 3):
            us[i] = us[i - 1]
    lam = np.array([(rng.uniform() - 0.5) + 1j * (rng.uniform() - 0.5) for _ in range(n)])
    lam *= _rand_range(rng, 0.5, 3.0) / np.sum(np.abs(lam))
    delta = _rand_range(rng, 0.15, 0.8)
    res = _dc.greedy_cluster(us, lam, delta, check=False)
    return res.reports


def _s_regular_index(rng, N):
    if rng.below(2):
        sys = _bg.bohr_family(N, [1 + v for v in rng.sample(10, 1 + rng.below(2))], _rand_range(rng, 0.2, 0.6))
    else:
        sys = _bg.gap_scaled(_rand_gap(rng, N, max_size=N // 8))
    tau = _rand_range(rng, 0.2, 1.0)
    inst = {"N": N, "kind": sys.kind, "d": sys.d, "tau": tau}
    try:
        ri = _bg.find_regular_index(sys, tau)
    except _bg.NoRegularIndex as exc:
        return [CheckReport.skip("L8.6", str(exc), inst)]
    if sys.d == 0:
        return [CheckReport("L8.6", 0.0, 0.0, inst)]
    slack = _bg.regular_index_slack(sys, ri.rho, ri.kappas)
    out = [CheckReport("L8.6", 0.0, slack, inst | {"rho": ri.rho})]
    out.append(CheckReport("L8.6(range)", tau / 2, ri.rho, inst))
    return out


def _s_kernel(rng, N):
    P = _gap.build_gap(N, 0, (1,), (2 + rng.below(N // 3),)) if rng.below(2) else _gap.symmetric_box(N, (1, 1 + rng.below(N - 1)), (1 + rng.below(3), 1 + rng.below(3)))
    if not P.proper or not P.members.mask[0]:
        P = _gap.build_gap(N, 0, (1,), (5,))
    M = 1 + rng.below(3)
    homs = [GroupFn.character(N, rng.below(N)) for _ in range(M)]
    sys = _bg.freiman_kernel_system(P, homs)
    return _bg.kernel_density_reports(sys, P.d)


def _s_bogolyubov(rng, N):
    kind = rng.below(3)
    if kind == 0:
        f = GroupFn.character(N, rng.below(N))
    elif kind == 1:
        f = rand_complex_disc(N, rng.next_u64())
    else:
        f = GroupFn(N, sum(_rand_range(rng, 0.1, 0.5) * GroupFn.character(N, rng.below(N)).values for _ in range(3)))
    _, _, rep = _dc.bogolyubov_bohr(f, _rand_range(rng, 0.2, 0.6))
    return [rep]


def _rand_system(rng, N):
    if rng.below(2):
        return _bg.bohr_family(N, [1 + v for v in rng.sample(10, 1 + rng.below(2))], _rand_range(rng, 0.2, 1.0))
    return _bg.gap_scaled(_rand_gap(rng, N, max_size=N // 6))


def _s_intersection(rng, N):
    s = 2 + rng.below(2)
    return _bg.intersection_density_reports([_rand_system(rng, N) for _ in range(s)])


def _s_rank_restriction(rng, N):
    c = rng.below(N)
    P = _rand_gap(rng, N, max_size=60).members
    B2 = _bohr_with_width(rng, N, _rand_range(rng, 0.3, 2.0)).members
    if P.isdisjoint(B2):
        P = P.translate(-int(P.members[0]))  # 0 lies in every Bohr set
    return [rank_restriction_check(c, P, B2, N, {"N": N})]


def _s_rank_gap(rng, N):
    k = 1 + rng.below(8)
    ranks = [math.inf if rng.below(10) == 0 else _rand_range(rng, 0, 200) for _ in range(k)]
    R0 = _rand_range(rng, 0.1, 5)
    b = _choice(rng, (2.0, 3.0))
    t = _rand_range(rng, 1.01, 4)
    return _dc.rank_gap_partition(ranks, R0, b, t, check=False).reports


def _s_high_rank_corr(rng, N):
    q = _rand_form(rng, N)
    P = _rand_gap(rng, N, dmax=1, max_size=N // 2).members
    kind = rng.below(3)
    if kind == 0:
        Qp = GroupFn.character(N, rng.below(N)).values
    elif kind == 1:
        Qp = GroupFn.quadratic_phase(N, rng.below(N), rng.below(N)).values
    else:
        Qp = rand_unimodular(N, rng.next_u64()).values
    alpha = _rand_range(rng, 1e-4, 1 / 12)
    return [_dc.high_rank_correlation_check(q, Qp, P, alpha, 0.0, 1, 2.0)]


def _small_system(rng, N):
    P = _gap.build_gap(N, 0, (1,), (max(2, N // 20 + rng.below(max(1, N // 20))),)) if rng.below(2) else _gap.build_gap(N, 0, (1, 1 + rng.below(N - 1)), (2 + rng.below(3), 2 + rng.below(3)))
    if not P.proper:
        P = _gap.build_gap(N, 0, (1,), (3,))
    return _bg.gap_scaled(P)


def _s_subadd(rng, N):
    sys = _small_system(rng, N)
    if 2 * sys(1.0).size >= N:
        sys = _tiny_system(rng, N)
    return [subadditivity_check(rng.below(N), rng.below(N), sys, _rand_range(rng, 0.01, 0.9), {"N": N})]


def _tiny_system(rng, N):
    """gap_scaled system whose B_1 has density below 1/8."""
    cap = max(1, (N // 8 - 1) // 2)
    if rng.below(2) or cap < 4:
        P = _gap.build_gap(N, 0, (1 + rng.below(N - 1),), (1 + rng.below(cap),))
    else:
        P = _gap.build_gap(N, 0, (1, 2 + rng.below(N - 2)), (1, 1))
    return _bg.gap_scaled(P)


def _s_multi_subadd(rng, N):
    sys = _tiny_system(rng, N)
    m = 2 + rng.below(3)
    cs = [rng.below(N) for _ in range(m)]
    return [multi_subadditivity_check(cs, sys, sys(4.0), _rand_range(rng, 0.01, 0.9), {"N": N})]


def _s_square_combo(rng, N):
    sys = _small_system(rng, N)
    system = _choice(rng, (_ls.three_ap(), _ls.pairwise_sums()))
    cs = [rng.below(N) for _ in range(system.r)]
    return [square_independent_combination_check(system, cs, sys, _rand_range(rng, 0.01, 0.9), {"N": N})]


def _s_bilinear_qr(rng, N):
    eps = _rand_range(rng, 0.001, 0.5)
    if rng.below(3):
        B = _bohr.full_bohr(N)
    else:
        B = _rand_bohr(rng, N)
    pair = _bohr.central_subset(B, eps)
    inner = pair.inner.members
    if inner.size == N:
        P = _rand_gap(rng, N, dmax=1, max_size=N // 2).members
    else:
        P = SubsetZN.from_members(N, [0])
    g = rand_unimodular(N, rng.next_u64()).values
    h = rand_unimodular(N, rng.next_u64()).values
    return [bilinear_quasirandom_check(rng.below(N), B.members, P, g, h, eps, {"N": N, "K": list(B.K)})]


def _s_von_neumann(rng, N):
    k = 2 if rng.below(2) else 3
    system = _ls.three_ap() if k == 2 else _choice(rng, (_ls.three_ap(), _ls.four_ap()))
    fs = [rand_interval(N, rng.next_u64()) for _ in range(system.r)]
    return [_ls.von_neumann_check(system, fs, k)]


SUITES: dict[str, Suite] = {
    s.lemma_id: s
    for s in [
        Suite("L2.3", ("L2.3",), _s_boundary, 401, "boundary straddling count"),
        Suite("L2.4", ("L2.4",), _s_averaging, 401, "averaging approximations (i)-(v)"),
        Suite("L4.1", ("L4.1",), _s_shrink, 101, "base shrinking, 4 eps"),
        Suite("L4.2", ("L4.2",), _s_product, 101, "products of averages, 18 eps"),
        Suite("L5.1", ("L5.1",), _s_high_rank, 101, "mean of a high-rank average"),
        Suite("L5.2", ("L5.2",), _s_high_rank, 101, "U2 of a high-rank average"),
        Suite("C5.3", ("C5.3",), _s_cor53, 101, "correlation of two averages"),
        Suite("L6.1", ("L6.1",), _s_dichotomy_1d, 101, "one-dimensional rational dichotomy"),
        Suite("C6.2", ("C6.2",), _s_dichotomy_dd, 101, "multi-dimensional rational dichotomy"),
        Suite("L6.4", ("L6.4", "L6.3"), _s_smoothing, 101, "smoothing a linear phase"),
        Suite("L6.5", ("L6.5",), _s_dual_convolution, 64, "dual norm of a convolution"),
        Suite("L6.8", ("L6.8",), _s_smoothing, 101, "dual norm of the smoothed phase"),
        Suite("T6.11", ("T6.11", "C6.9", "C6.2", "L5.2"), _s_rank_dichotomy, 101, "rank dichotomy, both branches"),
        Suite("L7.1", ("L7.1",), _s_close_in_dual, 101, "correlating averages are close in the dual norm"),
        Suite("L7.2", ("L7.2", "L8.9"), _s_covers, 101, "cover cardinalities"),
        Suite("L7.8", ("L7.8",), _s_cluster, 101, "clustering certificate"),
        Suite("L8.6", ("L8.6",), _s_regular_index, 101, "regular index search"),
        Suite("L8.8", ("L8.8",), _s_kernel, 101, "kernel system density"),
        Suite("L8.11", ("L8.11",), _s_bogolyubov, 101, "Bogolyubov shift bound"),
        Suite("L8.13", ("L8.13", "C8.14"), _s_intersection, 101, "intersection density"),
        Suite("L8.16", ("L8.16",), _s_rank_restriction, 101, "rank under restriction"),
        Suite("L8.17", ("L8.17",), _s_rank_gap, 101, "rank-gap partition certificate"),
        Suite("L8.18", ("L8.18",), _s_high_rank_corr, 101, "high rank forces small U2 of a correlating average"),
        Suite("L9.5", ("L9.5",), _s_subadd, 101, "subadditivity of bilinear rank"),
        Suite("L9.6", ("L9.6",), _s_multi_subadd, 101, "multi-subadditivity of bilinear rank"),
        Suite("L9.7", ("L9.7",), _s_square_combo, 101, "square-independent combination"),
        Suite("L9.8", ("L9.8",), _s_bilinear_qr, 101, "bilinear quasirandomness"),
        Suite("EQ1", ("EQ1", "T11.2"), _s_von_neumann, 31, "generalized von Neumann"),
    ]
}

ALIASES = {
    "L6.1/C6.2": ("L6.1", "C6.2"),
    "L7.2/L8.9": ("L7.2",),
    "L8.9": ("L7.2",),
    "L8.13/C8.14": ("L8.13",),
    "C8.14": ("L8.13",),
    "T11.2": ("EQ1",),
    "EQ1/T11.2": ("EQ1",),
}

# extra fixed-parameter variants
_VARIANTS = {"L5.1:linear": Suite("L5.1:linear", ("L5.1", "L5.2"), _s_high_rank_linear, 101, "high-rank bounds for a linear phase")}

DEFAULT_TRIALS = 50


def _resolve(lemma_id: str) -> list[Suite]:
    if lemma_id in SUITES:
        return [SUITES[lemma_id]]
    if lemma_id in _VARIANTS:
        return [_VARIANTS[lemma_id]]
    if lemma_id in ALIASES:
        return [SUITES[k] for k in ALIASES[lemma_id]]
    raise UnknownLemma(lemma_id)


def registered() -> list[str]:
    return sorted(SUITES) + sorted(ALIASES) + sorted(_VARIANTS)


def _understate(r: CheckReport) -> CheckReport:
    """Negative control: the bound pulled 90% of the way from lhs towards 0, less 1e-6 (always below lhs)."""
    if r.skipped:
        return r
    lhs = float(r.lhs)
    bad = (lhs - 0.9 * abs(lhs) if math.isfinite(lhs) else 0.0) - 1e-6
    return CheckReport(r.lemma_id, r.lhs, bad, dict(r.instance, control="understated"), tol=r.tol)


def run_suite(
    lemma_id: str,
    trials: int | None = None,
    seed: int = 0,
    N: int | None = None,
    negative: bool = False,
    threads: int | None = None,
) -> list[CheckReport]:
    suites = _resolve(lemma_id)
    trials = DEFAULT_TRIALS if trials is None else int(trials)
    out: list[CheckReport] = []
    for suite in suites:
        stream = SplitMix64(seed)
        seeds = [stream.next_u64() for _ in range(trials)]
        n = suite.default_N if N is None else int(N)

        def one(args):
            i, s = args
            rng = SplitMix64(s)
            try:
                reps = suite.build(rng, n)
            except Exception as exc:  # an instance that cannot be built is reported, never dropped
                reps = [CheckReport.skip(suite.lemma_id, f"instance construction failed: {exc}")]
            keep = []
            for r in reps:
                if any(r.lemma_id.startswith(p) for p in suite.ids):
                    r.instance = dict(r.instance, seed=s, trial=i, suite=suite.lemma_id, N=n)
                    keep.append(_understate(r) if negative else r)
            return keep

        for reps in map_ordered(one, list(enumerate(seeds)), threads):
            out.extend(reps)
    return out


@dataclass
class Summary:
    rows: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r["failed"] == 0 for r in self.rows.values())

    def to_json(self) -> dict:
        return {"lemmas": self.rows, "ok": self.ok}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["lemma_id", "count", "passed", "failed", "skipped", "pass_rate", "min_margin", "worst_seed"])
        for k, r in sorted(self.rows.items()):
            w.writerow([k, r["count"], r["passed"], r["failed"], r["skipped"], r["pass_rate"], r["min_margin"], r["worst_seed"]])
        return buf.getvalue()

    def lines(self) -> list[str]:
        out = []
        for k, r in sorted(self.rows.items()):
            tag = "ok" if r["failed"] == 0 else "FAIL"
            out.append(
                f"{k:<22} {tag:<4} passed {r['passed']}/{r['count'] - r['skipped']}  skipped {r['skipped']}  "
                f"min margin {r['min_margin']:.3g}  worst seed {r['worst_seed']}"
            )
        return out


def report(reports: Sequence[CheckReport]) -> Summary:
    rows: dict = {}
    for r in reports:
        row = rows.setdefault(
            r.lemma_id,
            {"count": 0, "passed": 0, "failed": 0, "skipped": 0, "min_margin": math.inf, "worst_seed": None, "worst": None},
        )
        row["count"] += 1
        if r.skipped:
            row["skipped"] += 1
            continue
        if r.passed:
            row["passed"] += 1
        else:
            row["failed"] += 1
        m = r.margin
        if not math.isnan(m) and m < row["min_margin"]:
            row["min_margin"] = m
            row["worst_seed"] = r.instance.get("seed")
            row["worst"] = r.to_json()
    for row in rows.values():
        evaluated = row["count"] - row["skipped"]
        row["pass_rate"] = row["passed"] / evaluated if evaluated else None
        if math.isinf(row["min_margin"]):
            row["min_margin"] = math.inf if row["passed"] else math.nan
    return Summary(rows)
