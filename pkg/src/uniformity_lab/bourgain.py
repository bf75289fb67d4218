"""Bourgain systems: nested families (X_rho) for rho in [0, 4] with symmetry,
additivity and doubling, held lazily as an evaluator plus memo cache."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bohr import bohr_profile, GUARD
from .gap import Gap, build_gap
from .homs import check_freiman_hom
from .reports import CheckReport
from .zn_core import GroupFn, SubsetZN

RHO_MAX = 4.0


def default_grid(levels: int = 9) -> list[float]:
    """{4 * 2^-k : k = 0..levels-1} together with 0."""
    return sorted({0.0} | {RHO_MAX * 2.0**-k for k in range(levels)})


class BourgainSystem:
    """A family rho -> X_rho with a claimed dimension.

    ``ambient`` (optional) is the box the family lives in; the additivity
    axiom is then checked inside the box.
    """

    def __init__(self, modulus: int, kind: str, d: float, evaluator: Callable[[float], SubsetZN], params: dict | None = None, ambient: SubsetZN | None = None):
        self.modulus = modulus
        self.kind = kind
        self.d = d
        self._eval = evaluator
        self.params = params or {}
        self.ambient = ambient
        self._cache: dict[float, SubsetZN] = {}
        self._lock = threading.Lock()

    def __call__(self, rho: float) -> SubsetZN:
        if rho < 0 or rho > RHO_MAX + 1e-12:
            raise ValueError(f"index {rho} outside [0, 4]")
        key = round(float(rho), 14)
        with self._lock:
            hit = self._cache.get(key)
            if hit is None:
                hit = self._eval(key)
                self._cache[key] = hit
        return hit

    def size(self, rho: float) -> int:
        return self(rho).size

    def density(self, rho: float) -> float:
        return self(rho).size / self.modulus

    def __repr__(self):
        return f"BourgainSystem({self.kind}, N={self.modulus}, d={self.d})"


def trivial_system(N: int) -> BourgainSystem:
    full = SubsetZN.full(N)
    return BourgainSystem(N, "trivial", 0, lambda rho: full)


def bohr_family(N: int, K: Sequence[int], sigma: float) -> BourgainSystem:
    """X_rho = {x : |1 - e(rx/N)| <= rho sigma for all r in K}, dimension 3|K|."""
    Kn = tuple(sorted({int(r) % N for r in K}))
    prof = bohr_profile(N, Kn)
    return BourgainSystem(
        N, "bohr", 3 * len(Kn), lambda rho: SubsetZN(N, prof <= rho * sigma + GUARD), {"K": list(Kn), "sigma": sigma}
    )


def gap_scaled(P: Gap) -> BourgainSystem:
    """X_rho = {sum a_i x_i : |a_i| <= rho m_i}, dimension 2d."""
    N = P.modulus

    def ev(rho):
        half = [int(math.floor(rho * m + 1e-12)) for m in P.lens]
        x0 = -sum(h * g for h, g in zip(half, P.gens))
        return build_gap(N, x0, P.gens, [2 * h + 1 for h in half]).members

    return BourgainSystem(N, "gap_scaled", 2 * P.d, ev, {"gens": list(P.gens), "lens": list(P.lens)})


def dilation(parent: BourgainSystem, eta: float) -> BourgainSystem:
    """X'_rho = X_{eta rho} for eta in (0, 1]."""
    if not 0 < eta <= 1:
        raise ValueError("dilation factor must lie in (0, 1]")
    return BourgainSystem(parent.modulus, "dilation", parent.d, lambda rho: parent(eta * rho), {"eta": eta, "parent": parent.kind}, parent.ambient)


def intersection_dimension(ds: Sequence[float]) -> float:
    s = len(ds)
    if s == 1:
        return ds[0]
    if s == 2:
        return 4 * (ds[0] + ds[1])
    return 4 * s * s * sum(ds)


def intersection_density_factor(ds: Sequence[float]) -> float:
    s = len(ds)
    if s == 1:
        return 1.0
    if s == 2:
        return 2.0 ** (-3 * (ds[0] + ds[1]))
    return 2.0 ** (-4 * s * s * sum(ds))


def intersect(systems: Sequence[BourgainSystem]) -> BourgainSystem:
    if not systems:
        raise ValueError("nothing to intersect")
    N = systems[0].modulus
    if any(s.modulus != N for s in systems):
        raise ValueError("modulus mismatch")
    amb = None
    for s in systems:
        if s.ambient is not None:
            amb = s.ambient if amb is None else amb & s.ambient

    def ev(rho):
        out = systems[0](rho)
        for s in systems[1:]:
            out = out & s(rho)
        return out

    return BourgainSystem(N, "intersection", intersection_dimension([s.d for s in systems]), ev, {"parts": [s.kind for s in systems]}, amb)


def intersection_density_reports(systems: Sequence[BourgainSystem], rhos=(0.25, 0.5, 1.0)) -> list[CheckReport]:
    inter = intersect(systems)
    fac = intersection_density_factor([s.d for s in systems])
    out = []
    lemma = "L8.13" if len(systems) == 2 else "C8.14"
    for rho in rhos:
        prod = math.prod(s.density(rho) for s in systems)
        out.append(CheckReport(lemma, fac * prod, inter.density(rho), {"rho": rho, "s": len(systems), "dims": [s.d for s in systems]}))
    return out


def freiman_kernel_system(P: Gap, homs: Sequence[GroupFn], tol: float = 1e-9) -> BourgainSystem:
    """X_rho = {x in P : |1 - f_j(x)| <= rho for all j}, dimension 2M.

    Each f_j must be a multiplicative Freiman homomorphism on P with f_j(0) = 1.
    """
    N = P.modulus
    if not P.proper:
        raise ValueError("box must be proper")
    mask = P.members.mask
    if not mask[0]:
        raise ValueError("box must contain 0")
    for j, f in enumerate(homs):
        if abs(f.values[0] - 1) > tol:
            raise ValueError(f"homomorphism {j} is not 1 at 0")
        if np.any(np.abs(np.abs(f.values[mask]) - 1) > tol):
            raise ValueError(f"homomorphism {j} is not unimodular on the box")
        chk = check_freiman_hom(f.values, P.members, N, tol=tol, multiplicative=True)
        if not chk:
            raise ValueError(f"homomorphism {j} fails the Freiman identity at {chk.witness}")
    dist = np.zeros(N)
    for f in homs:
        dist = np.maximum(dist, np.abs(1 - f.values))

    def ev(rho):
        return SubsetZN(N, mask & (dist <= rho + GUARD))

    return BourgainSystem(N, "freiman_kernel", 2 * len(homs), ev, {"M": len(homs), "box_dim": P.d}, P.members)


def kernel_density_reports(sys: BourgainSystem, box_dim: int, rhos=(0.25, 0.5, 1.0, 2.0)) -> list[CheckReport]:
    """Relative density of X_rho in the box against 3^-d (rho / 2 pi)^M."""
    M = sys.params.get("M", 0)
    P = sys.ambient
    out = []
    for rho in rhos:
        rel = sys.size(rho) / P.size
        out.append(CheckReport("L8.8", 3.0**-box_dim * (rho / (2 * math.pi)) ** M, rel, {"rho": rho, "M": M}))
    return out


def check_axioms(sys: BourgainSystem, grid: Sequence[float] | None = None) -> CheckReport:
    """All five axioms on the grid; lhs counts violations, the first one is recorded."""
    grid = sorted(set(default_grid() if grid is None else grid))
    N = sys.modulus
    violations = []
    sets = {r: sys(r) for r in grid}
    for a, b in zip(grid, grid[1:]):
        if not sets[a].issubset(sets[b]):
            violations.append(("nesting", a, b))
    if 0 not in sys(0.0):
        violations.append(("zero", 0.0))
    for r in grid:
        if not sets[r].is_symmetric():
            violations.append(("symmetry", r))
    for i, a in enumerate(grid):
        for b in grid[i:]:
            if a + b > RHO_MAX + 1e-12:
                continue
            s = sets[a].sumset(sets[b])
            if sys.ambient is not None:
                s = s & sys.ambient
            if not s.issubset(sys(a + b)):
                violations.append(("additivity", a, b))
    for r in grid:
        if 0 < r <= 1 + 1e-12 and sys.size(2 * r) > 2.0**sys.d * sys.size(r) + 1e-9:
            violations.append(("doubling", r, sys.size(2 * r), sys.size(r)))
    inst = {"kind": sys.kind, "N": N, "d": sys.d, "grid": grid, "first_violation": violations[0] if violations else None}
    return CheckReport("BS.axioms", float(len(violations)), 0.0, inst)


def dilation_law_reports(sys: BourgainSystem, rhos=(0.5, 1.0, 2.0, 4.0), etas=(0.125, 0.25, 0.5, 0.75, 1.0)) -> list[CheckReport]:
    """|X_{eta rho}| >= (eta / 2)^d |X_rho|."""
    out = []
    for rho in rhos:
        for eta in etas:
            out.append(CheckReport("BS.dilation", (eta / 2) ** sys.d * sys.size(rho), sys.size(eta * rho), {"rho": rho, "eta": eta}))
    return out


def default_kappa_grid(d: float) -> list[float]:
    if d <= 0:
        return []
    cap = 1.0 / (10 * d)
    pts = {round(0.001 * k, 3) for k in range(1, 101)} | {cap, cap / 2, cap / 4}
    return sorted(k for k in pts if k <= cap + 1e-15)


def regular_index_slack(sys: BourgainSystem, rho: float, kappas: Sequence[float]) -> float:
    base = sys.size(rho)
    worst = math.inf
    for k in kappas:
        hi = min(rho * (1 + k), RHO_MAX)
        up = sys.size(hi)
        down = sys.size(rho * (1 - k))
        allow = 10 * sys.d * k * base
        worst = min(worst, base + allow - up, down - (base - allow))
    return worst


def is_regular_index(sys: BourgainSystem, rho: float, kappas: Sequence[float] | None = None) -> bool:
    if sys.d == 0:
        return True
    kappas = default_kappa_grid(sys.d) if kappas is None else kappas
    return regular_index_slack(sys, rho, kappas) >= -1e-9


@dataclass(frozen=True)
class RegularIndex:
    system: BourgainSystem = field(repr=False)
    rho: float
    kappas: tuple

    def recheck(self) -> bool:
        return is_regular_index(self.system, self.rho, self.kappas)


class NoRegularIndex(RuntimeError):
    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


def find_regular_index(sys: BourgainSystem, tau: float, steps: int = 256, kappas=None) -> RegularIndex:
    if not 0 < tau <= 1:
        raise ValueError("tau must lie in (0, 1]")
    kappas = tuple(default_kappa_grid(sys.d) if kappas is None else kappas)
    if sys.d == 0:
        return RegularIndex(sys, tau / 2, kappas)
    trace = []
    for j in range(steps):
        rho = (tau / 2) * 2.0 ** (j / (steps - 1))
        if j == steps - 1:
            rho = tau
        slack = regular_index_slack(sys, rho, kappas)
        if slack >= -1e-9:
            return RegularIndex(sys, rho, kappas)
        trace.append((rho, slack))
    raise NoRegularIndex(f"no regular index in [{tau / 2}, {tau}]", trace)


def centrality_window(rho: float, eps: float, d: float) -> tuple[float, float]:
    d = max(d, 1)
    return eps * rho / (400 * d), eps * rho / (200 * d)


def find_central_index(sys: BourgainSystem, rho: float, eps: float, steps: int = 64) -> float:
    lo, hi = centrality_window(rho, eps, sys.d)
    for j in range(steps):
        s = lo * (hi / lo) ** (j / (steps - 1))
        if is_regular_index(sys, s):
            return s
    raise NoRegularIndex(f"no regular index in [{lo:.3g}, {hi:.3g}]", [])


def bourgain_averaging_check(sys: BourgainSystem, rho: float, sigma: float, f: GroupFn, eps: float) -> CheckReport:
    """E_{x in X_rho} f(x) against E_{x in X_rho} E_{y in X_sigma} f(x + y)."""
    inst = {"kind": sys.kind, "rho": rho, "sigma": sigma, "eps": eps, "N": sys.modulus}
    lo, hi = centrality_window(rho, eps, sys.d)
    if not (lo * (1 - 1e-12) <= sigma <= hi * (1 + 1e-12) and 0 < sigma < rho <= 1):
        return CheckReport.skip("L8.7", "sigma outside the centrality window", inst)
    if not (is_regular_index(sys, rho) and is_regular_index(sys, sigma)):
        return CheckReport.skip("L8.7", "index not regular", inst)
    if f.sup() > 1 + 1e-12:
        return CheckReport.skip("L8.7", "||f||_inf > 1", inst)
    X = sys(rho).members
    Y = sys(sigma).members
    N = sys.modulus
    lhs_a = np.mean(f.values[X])
    lhs_b = np.mean(f.values[(X[:, None] + Y[None, :]) % N])
    return CheckReport("L8.7", abs(lhs_a - lhs_b), eps, inst)
