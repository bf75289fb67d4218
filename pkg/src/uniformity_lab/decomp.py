"""Constructive decompositions f = sum lambda_i Q_i (+ sum Q_i U_i) + g + h.

The existential steps are replaced by explicit searches: an exhaustive
argmax over global quadratic phases, a greedy clustering certificate, and a
measured smoothing step for the low-rank part. Every constructive output
carries the inequalities it is supposed to satisfy as CheckReports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bohr import BohrSet, bohr_cover, build_bohr, full_bohr
from .quad import QuadAverage, QuadForm, global_phase_average, rank
from .reports import CheckReport, assert_report
from .unorms import _argmax_lex, quadratic_correlation_table, u2_dual_norm, u2_norm, u3_norm
from .zn_core import GroupFn, SubsetZN, characteristic_measure, dft

__all__ = [
    "CONSTANTS",
    "PhaseTerm",
    "StructuredTerm",
    "Decomposition",
    "ClusterResult",
    "RankGapPartition",
    "PurgeReport",
    "bogolyubov_bohr",
    "greedy_cluster",
    "rank_gap_partition",
    "matching_pursuit",
    "structured_decomposition",
    "high_rank_purge",
    "high_rank_correlation_check",
    "second_derivative_profile",
]

# documentation constants; acceptance never depends on them
CONSTANTS = {
    "C0": 2**24,
    "d(delta)": "(2/delta)^C0",
    "rho(delta)": "(delta/2)^C0",
    "C(delta)": "4 (2/delta^2)^C0",
    "T(eps, d, rho, C)": "(8/eps^8)^(4 d^2) (2^20 d^3 5^d / (eps rho))^d C",
    "k cap": "2 C / delta^2",
    "m cap": "(5/rho)^d",
    "g budget": "10 delta",
    "h budget": "2 delta",
}


def _vals(f) -> np.ndarray:
    return f.values if isinstance(f, GroupFn) else np.asarray(f, dtype=complex)


def _l2(v: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(v) ** 2)))


def _ip(u: np.ndarray, v: np.ndarray) -> complex:
    return complex(np.mean(u * np.conj(v)))


# --------------------------------------------------------------------------
# Bogolyubov spectrum


def bogolyubov_bohr(f: GroupFn, rho: float, C: float | None = None):
    """K = large spectrum of f at level rho, B = B(K, rho), with the shift bound
    E_x |f(x + d) - f(x)|^2 <= rho^2 C^2 + 4 T^{4/3} rho^{2/3} checked for all d in B."""
    N = f.modulus
    v = f.values
    C = float(np.max(np.abs(v))) if C is None else float(C)
    if np.max(np.abs(v)) > C + 1e-12:
        raise ValueError("sup norm exceeds the supplied C")
    T = u2_dual_norm(f)
    spec = dft(f).abs()
    K = tuple(int(r) for r in np.flatnonzero(spec >= rho - 1e-12))
    B = build_bohr(N, K, rho) if K else full_bohr(N)
    worst = 0.0
    worst_d = 0
    for d in B.members.members:
        s = float(np.mean(np.abs(np.roll(v, -int(d)) - v) ** 2))
        if s > worst:
            worst, worst_d = s, int(d)
    rhs = rho**2 * C**2 + 4 * T ** (4 / 3) * rho ** (2 / 3)
    rep = CheckReport("L8.11", worst, rhs, {"N": N, "rho": rho, "C": C, "T": T, "K": list(K), "|B|": B.size, "worst_d": worst_d})
    return K, B, rep


# --------------------------------------------------------------------------
# clustering certificate


@dataclass
class ClusterResult:
    representatives: list[int]
    assignment: dict[int, int]  # index -> representative
    residual: list[int]  # the set A
    residual_l2: float
    delta: float
    C: float
    reports: list[CheckReport] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.representatives)

    def members(self, rep: int) -> list[int]:
        return sorted(i for i, r in self.assignment.items() if r == rep)

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.reports)

    def to_json(self) -> dict:
        return {
            "representatives": self.representatives,
            "assignment": {str(i): r for i, r in sorted(self.assignment.items())},
            "residual": self.residual,
            "residual_l2": self.residual_l2,
            "delta": self.delta,
            "C": self.C,
            "reports": [r.to_json() for r in self.reports],
        }


def _gram(us: Sequence[np.ndarray]) -> np.ndarray:
    U = np.array([np.asarray(u, dtype=complex).ravel() for u in us])
    return (U @ U.conj().T) / U.shape[1]  # G[i, j] = <u_i, u_j>


def greedy_cluster(us, lambdas, delta: float, C: float | None = None, gram: np.ndarray | None = None, check: bool = True) -> ClusterResult:
    """Greedy correlation clustering.

    us are vectors (GroupFn or arrays; inner product E u conj v) with norm at
    most 1; gram may be passed instead when the vectors are large.
    """
    lam = np.asarray(lambdas, dtype=complex)
    n = lam.size
    C = float(np.sum(np.abs(lam))) if C is None else float(C)
    if np.sum(np.abs(lam)) > C + 1e-12:
        raise ValueError("sum |lambda_i| exceeds C")
    G = _gram([_vals(u) for u in us]) if gram is None else np.asarray(gram, dtype=complex)
    if G.shape != (n, n):
        raise ValueError("gram matrix has the wrong shape")
    if n and np.max(np.real(np.diag(G))) > 1 + 1e-9:
        raise ValueError("vectors must have norm at most 1")
    thr = delta**2 / (2 * C) if C > 0 else math.inf
    cap = math.ceil(2 * C**2 / delta**2) if C > 0 else 0
    near = np.abs(G) >= thr - 1e-12

    def resid(idx):
        if not idx:
            return 0.0
        a = lam[idx]
        return float(np.sqrt(max((a @ G[np.ix_(idx, idx)] @ a.conj()).real, 0.0)))

    free = list(range(n))
    reps: list[int] = []
    assign: dict[int, int] = {}
    while free and resid(free) > delta and len(reps) < cap:
        fr = np.array(free)
        mass = (near[np.ix_(fr, fr)] * np.abs(lam[fr])[None, :]).sum(axis=1)
        best = int(np.argmax(mass))
        if mass[best] <= 0:
            break
        i = free[best]
        grab = [j for j in free if near[i, j]]
        reps.append(i)
        for j in grab:
            assign[j] = i
        free = [j for j in free if j not in assign]
    r_l2 = resid(free)
    inst = {"n": n, "delta": delta, "C": C}
    worst = min((abs(G[j, r]) for j, r in assign.items()), default=math.inf)
    reports = [
        CheckReport("L7.8", len(reps), 2 * C**2 / delta**2 if C > 0 else 0.0, dict(inst, part="k")),
        CheckReport("L7.8", thr, worst, dict(inst, part="correlation")),
        CheckReport("L7.8", r_l2, delta, dict(inst, part="residual")),
    ]
    res = ClusterResult(reps, assign, free, r_l2, delta, C, reports)
    if check:
        for r in reports:
            assert_report(r)
    return res


# --------------------------------------------------------------------------
# rank gap


@dataclass
class RankGapPartition:
    L: list[int]
    H: list[int]
    R: float
    R0: float
    b: float
    t: float
    index: int | None  # minimal index of the rule, 1-based in sorted order
    reports: list[CheckReport] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"L": self.L, "H": self.H, "R": self.R, "params": {"R0": self.R0, "b": self.b, "t": self.t}, "index": self.index}


def rank_gap_partition(ranks: Sequence[float], R0: float, b: float = 2.0, t: float = 2.0, check: bool = True) -> RankGapPartition:
    """Split indices into low (rank <= R) and high (rank >= bR + t) groups.

    Ranks are sorted increasingly and i is the least index with
    rank_i >= b^i R0 + (1 + b + ... + b^{i-1}) t; then R = b^{i-1} R0 +
    (1 + ... + b^{i-2}) t. With no such i every index is low and R = b^k (R0 + t).
    """
    if b < 2 or t <= 1:
        raise ValueError("need b >= 2 and t > 1")
    ranks = [float(r) for r in ranks]
    k = len(ranks)
    order = sorted(range(k), key=lambda j: (ranks[j], j))

    def level(i):  # b^i R0 + (1 + ... + b^{i-1}) t
        return b**i * R0 + sum(b**j for j in range(i)) * t

    hit = None
    for pos, j in enumerate(order, start=1):
        if ranks[j] >= level(pos):
            hit = pos
            break
    if hit is None:
        L, H, R = sorted(range(k)), [], b**k * (R0 + t)
    else:
        R = level(hit - 1)
        L = sorted(order[: hit - 1])
        H = sorted(order[hit - 1 :])
    inst = {"ranks": ranks, "R0": R0, "b": b, "t": t}
    reps = [
        CheckReport("L8.17", R0, R, dict(inst, part="R >= R0")),
        CheckReport("L8.17", R, b**k * (R0 + t), dict(inst, part="R <= b^k(R0+t)")),
        # ranks are nonnegative, so an empty L reports 0 (vacuous, and R >= R0 > 0)
        CheckReport("L8.17", max((ranks[i] for i in L), default=0.0), R, dict(inst, part="low")),
        CheckReport("L8.17", b * R + t, min((ranks[i] for i in H), default=math.inf), dict(inst, part="high")),
    ]
    out = RankGapPartition(L, H, R, R0, b, t, hit, reps)
    if check:
        for r in reps:
            assert_report(r)
    return out


# --------------------------------------------------------------------------
# decompositions


@dataclass
class PhaseTerm:
    """lam * atom, where the atom is omega^{a x^2 + b x} (times a normalized
    window indicator when the family is local)."""

    lam: complex
    a: int
    b: int
    modulus: int
    shift: int = 0
    window: SubsetZN | None = None

    @property
    def q(self) -> QuadForm:
        return QuadForm.global_form(self.modulus, self.a, self.b)

    def atom(self) -> np.ndarray:
        N = self.modulus
        v = GroupFn.quadratic_phase(N, self.a, self.b).values
        if self.window is None:
            return v.copy()
        S = self.window.translate(self.shift)
        return v * S.mask / math.sqrt(S.size / N)

    def average(self) -> QuadAverage:
        if self.window is not None:
            raise ValueError("local atoms are not global quadratic averages")
        return global_phase_average(full_bohr(self.modulus), self.q)

    def to_json(self) -> dict:
        out = {"lambda": [self.lam.real, self.lam.imag], "a": self.a, "b": self.b}
        if self.window is not None:
            out["shift"] = self.shift
        return out


@dataclass
class StructuredTerm:
    rep: int  # index into the pursuit terms
    members: list[int]
    Q: np.ndarray  # the unimodular representative
    U: np.ndarray

    def to_json(self) -> dict:
        return {
            "rep": self.rep,
            "members": self.members,
            "U_sup": float(np.max(np.abs(self.U))),
            "U_dual": u2_dual_norm(GroupFn(self.U.size, self.U)),
        }


@dataclass
class Decomposition:
    modulus: int
    f: np.ndarray
    terms: list[PhaseTerm]
    g: np.ndarray
    h: np.ndarray
    delta: float
    iterations: int
    converged: bool
    family: str = "global"
    U_terms: list[StructuredTerm] | None = None
    residual_terms: list[int] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    reports: list[CheckReport] = field(default_factory=list)

    def main_part(self) -> np.ndarray:
        N = self.modulus
        if self.U_terms is not None:
            out = np.zeros(N, dtype=complex)
            for st in self.U_terms:
                out += st.Q * st.U
            return out
        out = np.zeros(N, dtype=complex)
        for t in self.terms:
            out += t.lam * t.atom()
        return out

    def reconstruction(self) -> np.ndarray:
        return self.main_part() + self.g + self.h

    def reconstruction_error(self) -> float:
        return float(np.max(np.abs(self.reconstruction() - self.f)))

    @property
    def diagnostics(self) -> dict:
        N = self.modulus
        out = {
            "g_l1": float(np.mean(np.abs(self.g))),
            "h_u3": u3_norm(GroupFn(N, self.h)),
            "h_l2": _l2(self.h),
            "lambda_l1": float(sum(abs(t.lam) for t in self.terms)),
            "iterations": self.iterations,
            "converged": self.converged,
            "reconstruction_error": self.reconstruction_error(),
        }
        if self.U_terms is not None:
            out["U_dual_sum"] = float(sum(u2_dual_norm(GroupFn(N, s.U)) for s in self.U_terms))
            out["U_sup_sum"] = float(sum(np.max(np.abs(s.U)) for s in self.U_terms))
            out["k"] = len(self.U_terms)
        return out

    def to_json(self) -> dict:
        return {
            "modulus": self.modulus,
            "family": self.family,
            "delta": self.delta,
            "terms": [t.to_json() for t in self.terms],
            "structured": None if self.U_terms is None else [s.to_json() for s in self.U_terms],
            "diagnostics": self.diagnostics,
            "reports": [r.to_json() for r in self.reports],
        }


def _local_candidates(h: np.ndarray, N: int, bases: Sequence[BohrSet]):
    """Best local atom over every base and every cover translate."""
    best = (-1.0, 0, 0, 0, None)
    f = GroupFn(N, h)
    for B in bases:
        for y in bohr_cover(B).translates:
            S = B.members.translate(y)
            T = quadratic_correlation_table(f, S) * math.sqrt(S.size / N)
            a, b = _argmax_lex(T)
            if T[a, b] > best[0] + 1e-12:
                best = (float(T[a, b]), a, b, int(y), B.members)
    return best


def matching_pursuit(
    f,
    delta: float,
    family: str = "global",
    budget: int = 200,
    bases: Sequence[BohrSet] | None = None,
    refit: bool = True,
    merge: float | None = None,
) -> Decomposition:
    """Greedy pursuit over quadratic phases until ||h||_{U^3} <= delta.

    Each step takes the atom Q of largest |<h, Q>| (lexicographic (a, b) on
    ties) and subtracts <h, Q> Q. With refit the coefficients of all chosen
    atoms are then re-solved by least squares, so h stays orthogonal to the
    chosen span. Terms with |lambda| < merge (default delta / 4k) move to g.
    """
    fv = _vals(f).astype(complex)
    N = fv.size
    if _l2(fv) > 1 + 1e-9:
        raise ValueError("pursuit expects ||f||_2 <= 1")
    if family not in ("global", "bohr"):
        raise ValueError(f"unknown family {family!r}")
    if family == "bohr" and not bases:
        raise ValueError("the bohr family needs at least one base")
    full = SubsetZN.full(N)
    h = fv.copy()
    chosen: list[PhaseTerm] = []
    keys: dict[tuple, int] = {}
    energy = [_l2(h) ** 2]
    reports: list[CheckReport] = []
    it = 0
    converged = u3_norm(GroupFn(N, h)) <= delta
    while not converged and it < budget:
        if family == "global":
            T = quadratic_correlation_table(GroupFn(N, h), full)
            a, b = _argmax_lex(T)
            term = PhaseTerm(0j, a, b, N)
        else:
            _, a, b, y, W = _local_candidates(h, N, bases)
            term = PhaseTerm(0j, a, b, N, y, W)
        atom = term.atom()
        lam = _ip(h, atom)
        if abs(lam) < 1e-14:
            break
        key = (term.a, term.b, term.shift, id(term.window) if term.window is not None else None)
        if key in keys:
            chosen[keys[key]].lam += lam
        else:
            term.lam = lam
            keys[key] = len(chosen)
            chosen.append(term)
        before = _l2(h) ** 2
        h = h - lam * atom
        if refit:
            A = np.array([t.atom() for t in chosen]).T
            coef, *_ = np.linalg.lstsq(A, fv, rcond=None)
            for t, c in zip(chosen, coef):
                t.lam = complex(c)
            h = fv - A @ coef
        after = _l2(h) ** 2
        it += 1
        energy.append(after)
        # one atom step removes exactly |lambda|^2; the refit can only remove more
        reports.append(CheckReport("pursuit-energy", after, before - abs(lam) ** 2, {"iteration": it, "a": a, "b": b}, tol=1e-9))
        converged = u3_norm(GroupFn(N, h)) <= delta
    k = max(len(chosen), 1)
    thr = delta / (4 * k) if merge is None else merge
    kept = [t for t in chosen if abs(t.lam) >= thr]
    g = np.zeros(N, dtype=complex)
    for t in chosen:
        if abs(t.lam) < thr:
            g += t.lam * t.atom()
    dec = Decomposition(N, fv, kept, g, h, delta, it, bool(converged), family, energy=energy, reports=reports)
    err = dec.reconstruction_error()
    dec.reports.append(CheckReport("reconstruction", err, 1e-9, {"N": N}, tol=0.0))
    return dec


def second_derivative_profile(v: np.ndarray) -> np.ndarray:
    """G[h1, h2] = E_x v(x + h1 + h2) conj v(x + h1) conj v(x + h2) v(x).

    Invariant under multiplying v by a linear phase, so two quadratic phases
    with the same quadratic part have identical profiles.
    """
    v = np.asarray(v, dtype=complex)
    N = v.size
    idx = (np.arange(N)[:, None] + np.arange(N)[None, :]) % N
    D = v[idx] * np.conj(v)[None, :]  # D[h2, x] = v(x + h2) conj v(x)
    F = np.fft.fft(D, axis=1)
    # E_x D(x + h1) conj D(x), over h1 for each h2
    auto = np.fft.ifft(np.abs(F) ** 2, axis=1) / N
    return auto.T  # [h1, h2]


def structured_decomposition(f, delta: float, eps: float | None = None, budget: int = 200, check: bool = True) -> Decomposition:
    """Pursuit, then clustering by quadratic part, then
    U_i = sum_{j in A_i} lambda_j conj(Q_i) Q_j.

    The unclustered remainder sum_{j in A} lambda_j Q_j joins g.
    """
    dec = matching_pursuit(f, delta, budget=budget)
    if not dec.converged:
        raise RuntimeError("pursuit did not converge within the budget")
    N = dec.modulus
    terms = dec.terms
    lam = np.array([t.lam for t in terms], dtype=complex)
    if terms:
        profs = [second_derivative_profile(t.atom()).ravel() for t in terms]
        G = _gram(profs)
        cl = greedy_cluster(profs, lam, delta, gram=G, check=check)
    else:
        cl = ClusterResult([], {}, [], 0.0, delta, 0.0, [])
    U_terms = []
    reports = list(dec.reports) + list(cl.reports)
    for i in cl.representatives:
        mem = cl.members(i)
        Qi = terms[i].atom()
        U = np.zeros(N, dtype=complex)
        for j in mem:
            U += terms[j].lam * np.conj(Qi) * terms[j].atom()
        # Q_i is exactly unimodular, so the specialness defect is zero
        bound = float(sum(abs(terms[j].lam) for j in mem))
        reports.append(CheckReport("U-sup", float(np.max(np.abs(U))), bound, {"rep": i, "members": mem}))
        U_terms.append(StructuredTerm(i, mem, Qi, U))
    g = dec.g.copy()
    for j in cl.residual:
        g += terms[j].lam * terms[j].atom()
    out = Decomposition(N, dec.f, terms, g, dec.h, delta, dec.iterations, dec.converged, "global", U_terms, list(cl.residual), dec.energy, reports)
    err = out.reconstruction_error()
    out.reports.append(CheckReport("reconstruction", err, 1e-9, {"N": N, "structured": True}, tol=0.0))
    if check:
        for r in out.reports:
            assert_report(r)
    return out


# --------------------------------------------------------------------------
# high-rank purge


def high_rank_correlation_check(Q, Qp, P, alpha: float, eta: float, d: int, rho: float) -> CheckReport:
    """If ||Q'||_{U^2} > (12 alpha)^{1/8} then |<Q, Q'>| stays below
    16 d^2 alpha + (11 eta + e^{-r})^{1/8} (4/alpha)^{4d^2} (800 d^2/rho)^d.

    Q is a global quadratic phase (or a QuadForm) whose rank r is taken
    relative to P; Q' is any function bounded by 1.
    """
    q = Q.q if isinstance(Q, (PhaseTerm, QuadAverage)) else Q
    N = q.modulus
    qv = GroupFn.quadratic_phase(N, *q.coeffs[:2]).values if q.is_global else None
    if qv is None:
        raise ValueError("expected a global quadratic form")
    qp = _vals(Qp.fn if isinstance(Qp, QuadAverage) else Qp)
    r = rank(q, P).rank
    thr = (12 * alpha) ** 0.125
    u2p = u2_norm(GroupFn(N, qp))
    inst = {"N": N, "alpha": alpha, "eta": eta, "d": d, "rho": rho, "rank": r, "u2_Qp": u2p}
    if u2p <= thr:
        return CheckReport("L8.18", u2p, thr, dict(inst, branch="small U2"))
    er = 0.0 if math.isinf(r) else math.exp(-r)
    rhs = 16 * d * d * alpha + (11 * eta + er) ** 0.125 * (4 / alpha) ** (4 * d * d) * (800 * d * d / rho) ** d
    return CheckReport("L8.18", abs(_ip(qv, qp)), rhs, dict(inst, branch="correlation"))


@dataclass
class PurgeReport:
    partition: RankGapPartition | None
    ranks: list[float]
    system: SubsetZN | None
    system_freqs: list[int]
    system_width: float | None
    reports: list[CheckReport]
    budget: dict
    absorbed: bool
    reason: str = ""

    @property
    def ok(self) -> bool:
        return all(not r.failed for r in self.reports)

    def to_json(self) -> dict:
        return {
            "partition": None if self.partition is None else self.partition.to_json(),
            "ranks": ["inf" if math.isinf(r) else r for r in self.ranks],
            "system_size": None if self.system is None else self.system.size,
            "system_freqs": self.system_freqs,
            "system_width": self.system_width,
            "reports": [r.to_json() for r in self.reports],
            "budget": self.budget,
            "absorbed": self.absorbed,
            "reason": self.reason,
        }


def _smooth(v: np.ndarray, S: SubsetZN) -> np.ndarray:
    sig = characteristic_measure(S).values
    return np.fft.ifft(np.fft.fft(v) * np.fft.fft(sig)) / v.size


def _structured_pieces(dec: Decomposition):
    if dec.U_terms is not None:
        return [(dec.terms[s.rep], s.Q, s.U) for s in dec.U_terms]
    return [(t, t.atom(), np.full(dec.modulus, t.lam)) for t in dec.terms]


def _kernel_freqs(t: PhaseTerm, P: SubsetZN) -> list[int]:
    """Frequencies of the local linear parts 2 a v + b over cover points v."""
    N = t.modulus
    if t.a == 0:
        return [t.b % N]
    step = max(1, P.size)
    return sorted({(2 * t.a * v + t.b) % N for v in range(0, N, step)})


def high_rank_purge(
    dec: Decomposition,
    R0: float,
    P,
    u2f: float | None = None,
    b: float = 2.0,
    t: float = 2.0,
    zeta: float | None = None,
    spectrum_rho: float = 0.5,
    widths: Sequence[float] = (2.0, 1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125),
    system: SubsetZN | None = None,
    alpha: float = 0.01,
) -> tuple[Decomposition, PurgeReport]:
    """Absorb the low-rank part of a structured decomposition into g and h.

    f_L (terms of rank <= R) is split as f_L * sigma + (f_L - f_L * sigma);
    the first piece joins h and the second joins g. sigma is the normalized
    indicator of S, the widest Bohr set on the kernel and spectrum frequencies
    of the low-rank terms for which ||f_L - f_L * sigma||_2 <= zeta, unless a
    system is supplied.
    """
    N = dec.modulus
    zeta = dec.delta if zeta is None else zeta
    if dec.terms and any(tm.window is not None for tm in dec.terms):
        return dec, PurgeReport(None, [], None, [], None, [], {}, False, "local atoms have no global rank")
    Pm = P.members if hasattr(P, "members") and isinstance(P.members, SubsetZN) else P
    if not isinstance(Pm, SubsetZN) or Pm.size == 0:
        return dec, PurgeReport(None, [], None, [], None, [], {}, False, "probe progression missing or empty")
    pieces = _structured_pieces(dec)
    ranks = [rank(tm.q, Pm).rank for tm, _, _ in pieces]
    part = rank_gap_partition(ranks, R0, b, t)
    reports = list(part.reports)
    fL = np.zeros(N, dtype=complex)
    fH = np.zeros(N, dtype=complex)
    for i, (tm, Q, U) in enumerate(pieces):
        if i in part.L:
            fL += Q * U
        else:
            fH += Q * U
    f = dec.f
    u2f = u2_norm(GroupFn(N, f)) if u2f is None else float(u2f)

    freqs: list[int] = []
    chosen_w = None
    if system is None:
        for i in part.L:
            tm, Q, U = pieces[i]
            freqs.extend(_kernel_freqs(tm, Pm))
            K, _, rep = bogolyubov_bohr(GroupFn(N, U), spectrum_rho, C=max(float(np.max(np.abs(U))), 1e-12))
            reports.append(rep)
            freqs.extend(K)
        freqs = sorted(set(f_ % N for f_ in freqs) - {0})
        S = SubsetZN.from_members(N, [0])
        for w in widths:
            cand = build_bohr(N, freqs, w).members if freqs else SubsetZN.full(N)
            if _l2(fL - _smooth(fL, cand)) <= zeta:
                S, chosen_w = cand, w
                break
    else:
        S = system
    sig = characteristic_measure(S)
    u2sig = u2_norm(sig)
    fLs = _smooth(fL, S)
    fs = _smooth(f, S)
    fHs = _smooth(fH, S)
    inst = {"N": N, "|S|": S.size, "zeta": zeta, "L": part.L, "H": part.H}
    reports.append(CheckReport("purge(a)", _l2(fL - fLs), zeta, dict(inst, step="a")))
    reports.append(CheckReport("purge(b)", _l2(fs), u2f * u2sig, dict(inst, step="b")))
    termwise = sum(u2_norm(GroupFn(N, pieces[i][1] * pieces[i][2])) for i in part.H) * u2sig
    reports.append(CheckReport("purge(c)", float(np.mean(np.abs(fHs))), termwise, dict(inst, step="c")))
    for i in part.H:
        tm = pieces[i][0]
        for j in part.L:
            reports.append(high_rank_correlation_check(tm, pieces[j][1] * pieces[j][2] / max(1.0, float(np.max(np.abs(pieces[j][2])))), Pm, alpha, 0.0, 1, 2.0))
    if any(r.failed for r in reports):
        return dec, PurgeReport(part, ranks, S, freqs, chosen_w, reports, {}, False, "a measured step failed")

    keep = [s for k, s in enumerate(dec.U_terms or []) if k in part.H] if dec.U_terms is not None else None
    kept_terms = dec.terms if dec.U_terms is not None else [dec.terms[i] for i in part.H]
    g = dec.g + (fL - fLs)
    h = dec.h + fLs
    out = Decomposition(N, f, kept_terms, g, h, dec.delta, dec.iterations, dec.converged, dec.family, keep, dec.residual_terms, dec.energy, list(dec.reports))
    diag = out.diagnostics
    budget = {"g_l1": diag["g_l1"], "g_shape": 10 * dec.delta, "h_u3": diag["h_u3"], "h_shape": 2 * dec.delta}
    rec = out.reconstruction_error()
    reports.append(CheckReport("reconstruction", rec, 1e-9, {"N": N, "purged": True}, tol=0.0))
    return out, PurgeReport(part, ranks, S, freqs, chosen_w, reports, budget, True)
