"""Bohr sets B(K, rho) = {x : |omega^{rx} - 1| <= rho for all r in K}."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .reports import CheckReport
from .zn_core import GroupFn, SubsetZN, check_modulus

GUARD = 1e-12
REGULARITY_CONSTANT = 100
CENTRAL_LO = 400
CENTRAL_HI = 200
MEMBERS_ELIDE = 10**4


class NoRegularWidth(RuntimeError):
    def __init__(self, msg: str, trace: list):
        super().__init__(msg)
        self.trace = trace


def _norm_freqs(K: Iterable[int], N: int) -> tuple[int, ...]:
    return tuple(sorted({int(r) % N for r in K}))


@lru_cache(maxsize=256)
def bohr_profile(N: int, K: tuple) -> np.ndarray:
    """t(x) = max_{r in K} |omega^{rx} - 1| = max 2|sin(pi (rx mod N) / N)|.

    x lies in B(K, rho) exactly when t(x) <= rho (up to the guard band).
    """
    x = np.arange(N, dtype=np.int64)
    t = np.zeros(N)
    for r in K:
        k = (r * x) % N
        t = np.maximum(t, 2.0 * np.abs(np.sin(np.pi * k / N)))
    t.setflags(write=False)
    return t


@lru_cache(maxsize=256)
def _sorted_profile(N: int, K: tuple) -> np.ndarray:
    s = np.sort(bohr_profile(N, K))
    s.setflags(write=False)
    return s


def bohr_size(N: int, K: Sequence[int], rho: float) -> int:
    K = _norm_freqs(K, N)
    return int(np.searchsorted(_sorted_profile(N, K), rho + GUARD, side="right"))


@dataclass(frozen=True, eq=False)
class BohrSet:
    modulus: int
    K: tuple
    rho: float
    members: SubsetZN

    @property
    def d(self) -> int:
        return len(self.K)

    @property
    def size(self) -> int:
        return self.members.size

    def __len__(self):
        return self.size

    @property
    def density(self) -> Fraction:
        return self.members.density

    def __contains__(self, x) -> bool:
        return x in self.members

    def with_width(self, rho: float) -> "BohrSet":
        return build_bohr(self.modulus, self.K, rho)

    def dilate(self, factor: float) -> "BohrSet":
        return build_bohr(self.modulus, self.K, self.rho * factor)

    def measure(self) -> GroupFn:
        from .zn_core import characteristic_measure

        return characteristic_measure(self.members)

    def to_json(self) -> dict:
        out = {
            "modulus": self.modulus,
            "K": list(self.K),
            "rho": self.rho,
            "size": self.size,
            "density": float(self.density),
        }
        if self.size <= MEMBERS_ELIDE:
            out["members"] = [int(x) for x in self.members]
        return out

    def __repr__(self):
        return f"BohrSet(N={self.modulus}, K={list(self.K)}, rho={self.rho:.6g}, |B|={self.size})"


def build_bohr(N: int, K: Iterable[int], rho: float) -> BohrSet:
    N = check_modulus(N)
    if not rho > 0:
        raise ValueError(f"width must be positive, got {rho}")
    Kn = _norm_freqs(K, N)
    mask = bohr_profile(N, Kn) <= rho + GUARD
    return BohrSet(N, Kn, float(rho), SubsetZN(N, mask))


def full_bohr(N: int) -> BohrSet:
    return build_bohr(N, (), 2.0)


def default_eps_grid(d: int) -> list[float]:
    """{0.001, ..., 0.1} together with 1/(200d), 1/(400d), cut at 1/(100d)."""
    d = max(d, 1)
    cap = 1.0 / (REGULARITY_CONSTANT * d)
    pts = {round(0.001 * k, 3) for k in range(1, 101)}
    pts |= {1.0 / (200 * d), 1.0 / (400 * d)}
    return sorted(e for e in pts if e <= cap + 1e-15)


@dataclass(frozen=True)
class RegularityResult:
    regular: bool
    worst_eps: float | None
    worst_slack: float
    checked: int

    def __bool__(self):
        return self.regular


def _regular_slacks(N: int, K: tuple, rho: float, eps_values: Sequence[float]):
    """Yield (eps, slack) where slack < 0 means a violation at eps."""
    d = len(K)
    base = bohr_size(N, K, rho)
    for eps in eps_values:
        up = bohr_size(N, K, rho * (1 + eps))
        down = bohr_size(N, K, rho * (1 - eps))
        allow = REGULARITY_CONSTANT * d * eps * base
        yield eps, min(base + allow - up, down - (base - allow))


def is_regular(B: BohrSet, eps_grid: Sequence[float] | None = None) -> RegularityResult:
    """Check the two cardinality inequalities at every eps in the grid.

    Returns the binding eps: the first violating one, or else the one with
    the least slack.
    """
    if B.d == 0:
        return RegularityResult(True, None, math.inf, 0)
    grid = default_eps_grid(B.d) if eps_grid is None else list(eps_grid)
    worst, worst_slack = None, math.inf
    for eps, slack in _regular_slacks(B.modulus, B.K, B.rho, grid):
        if slack < -1e-9:
            return RegularityResult(False, eps, slack, len(grid))
        if slack < worst_slack:
            worst, worst_slack = eps, slack
    return RegularityResult(True, worst, worst_slack, len(grid))


def regular_at(B: BohrSet, ratios: Sequence[float]) -> bool:
    if B.d == 0:
        return True
    return all(s >= -1e-9 for _, s in _regular_slacks(B.modulus, B.K, B.rho, ratios))


def find_regular(N: int, K: Iterable[int], rho0: float, steps: int = 512, eps_grid=None) -> BohrSet:
    """First regular width in the geometric scan rho0 * 2^{j/(steps-1)}."""
    Kn = _norm_freqs(K, N)
    if not 0 < rho0:
        raise ValueError("rho0 must be positive")
    if not Kn:
        return build_bohr(N, Kn, rho0)
    trace = []
    for j in range(steps):
        rho = rho0 * 2.0 ** (j / (steps - 1)) if steps > 1 else rho0
        if j == steps - 1:
            rho = 2.0 * rho0
        B = build_bohr(N, Kn, rho)
        res = is_regular(B, eps_grid)
        if res.regular:
            return B
        trace.append((rho, res.worst_eps, res.worst_slack))
    raise NoRegularWidth(f"no regular width for N={N}, K={list(Kn)} in [{rho0}, {2 * rho0}]", trace)


def sigma_window(rho: float, eps: float, d: int) -> tuple[float, float]:
    d = max(d, 1)
    return eps * rho / (CENTRAL_LO * d), eps * rho / (CENTRAL_HI * d)


@dataclass(frozen=True, eq=False)
class CentralPair:
    outer: BohrSet
    inner: BohrSet
    eps: float
    closure: BohrSet = field(repr=False)
    interior: BohrSet = field(repr=False)
    closure2: BohrSet = field(repr=False)
    interior2: BohrSet = field(repr=False)

    @property
    def sigma(self) -> float:
        return self.inner.rho

    @property
    def K(self) -> tuple:
        return self.outer.K

    def boundary(self) -> SubsetZN:
        return self.closure.members - self.interior.members

    def to_json(self) -> dict:
        return {
            "outer": self.outer.to_json(),
            "inner": self.inner.to_json(),
            "eps": self.eps,
            "sigma": self.sigma,
            "closure_size": self.closure.size,
            "interior_size": self.interior.size,
        }


def _pair_from(B: BohrSet, inner: BohrSet, eps: float) -> CentralPair:
    s = inner.rho
    N, K = B.modulus, B.K
    lo = lambda w: build_bohr(N, K, w) if w > 0 else build_bohr(N, K, 1e-300)
    return CentralPair(B, inner, eps, build_bohr(N, K, B.rho + s), lo(B.rho - s), build_bohr(N, K, B.rho + 2 * s), lo(B.rho - 2 * s))


def central_subset(B: BohrSet, eps: float, steps: int = 64, eps_grid=None) -> CentralPair:
    """A regular B' = B(K, sigma) with sigma in [eps rho / 400d, eps rho / 200d]."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    lo, hi = sigma_window(B.rho, eps, B.d)
    if B.d == 0:
        return _pair_from(B, build_bohr(B.modulus, (), lo), eps)
    if not is_regular(B, eps_grid):
        raise NoRegularWidth("outer Bohr set is not regular", [])
    trace = []
    for j in range(steps):
        sigma = lo * (hi / lo) ** (j / (steps - 1)) if steps > 1 else lo
        sigma = min(max(sigma, lo), hi)
        inner = build_bohr(B.modulus, B.K, sigma)
        res = is_regular(inner, eps_grid)
        ok_outer = regular_at(B, [sigma / B.rho, 2 * sigma / B.rho])
        if res.regular and ok_outer:
            return _pair_from(B, inner, eps)
        trace.append((sigma, res.worst_eps, ok_outer))
    raise NoRegularWidth(f"no regular sigma in [{lo:.3g}, {hi:.3g}]", trace)


def check_central(pair: CentralPair) -> bool:
    lo, hi = sigma_window(pair.outer.rho, pair.eps, pair.outer.d)
    s = pair.sigma
    return lo * (1 - 1e-12) <= s <= hi * (1 + 1e-12) and bool(is_regular(pair.outer)) and bool(is_regular(pair.inner))


def _containment_counts(B: SubsetZN, Bp: SubsetZN) -> np.ndarray:
    """C(z) = #{b in B' : z + b in B}."""
    c = np.zeros(B.modulus, dtype=np.int64)
    for b in Bp.members:
        c += np.roll(B.mask, -int(b))
    return c


def boundary_lemma_check(pair: CentralPair, xs: Sequence[int]) -> CheckReport:
    """Count x for which some B' + x straddles B + x_i."""
    N = pair.outer.modulus
    Bp = pair.inner.members
    C0 = _containment_counts(pair.outer.members, Bp)
    straddle = (C0 > 0) & (C0 < Bp.size)
    bad = np.zeros(N, dtype=bool)
    for xi in xs:
        bad |= np.roll(straddle, int(xi))
    m = len(xs)
    return CheckReport(
        "L2.3",
        float(bad.sum()),
        pair.eps * m * pair.outer.size,
        {"N": N, "K": list(pair.K), "rho": pair.outer.rho, "eps": pair.eps, "m": m},
    )


def _avg_shift(values: np.ndarray, S: SubsetZN, P: SubsetZN) -> complex:
    """E_{x in S} E_{y in P} values[x + y]."""
    N = S.modulus
    pts = (S.members[:, None] + P.members[None, :]) % N
    return complex(np.mean(values[pts]))


def _avg2_shift(g: np.ndarray, S: SubsetZN, P: SubsetZN) -> complex:
    """E_{x, x' in S} E_{y in P} g[x + y, x' + y]."""
    N = S.modulus
    s = S.members
    tot = 0.0 + 0.0j
    for y in P.members:
        xs = (s + y) % N
        tot += g[np.ix_(xs, xs)].sum()
    return complex(tot / (len(s) ** 2 * P.size))


def averaging_checks(pair: CentralPair, f: GroupFn, P: SubsetZN | None = None, g2: np.ndarray | None = None) -> list[CheckReport]:
    """Evaluate both sides of the five averaging approximations literally.

    g2 is the two-variable test function for (iv) and (v); it defaults to
    g(x, x') = f(x) conj f(x').
    """
    B = pair.outer.members
    Bm = pair.interior.members
    Bp = pair.inner.members
    P = Bp if P is None else P
    eps = pair.eps
    v = f.values
    inst = {"N": f.modulus, "K": list(pair.K), "rho": pair.outer.rho, "eps": eps, "sigma": pair.sigma}
    if f.sup() > 1 + 1e-12:
        return [CheckReport.skip(f"L2.4({k})", "||f||_inf > 1", inst) for k in ("i", "ii", "iii", "iv", "v")]
    if g2 is None:
        g2 = np.outer(v, np.conj(v))
    out = []
    zero = SubsetZN.from_members(f.modulus, [0])
    eB = _avg_shift(v, B, zero)
    if P.issubset(Bp) and P.size:
        out.append(CheckReport("L2.4(i)", abs(eB - _avg_shift(v, B, P)), eps, inst))
    else:
        out.append(CheckReport.skip("L2.4(i)", "P is not a nonempty subset of B'", inst))
    if Bm.size == 0:
        out += [CheckReport.skip(f"L2.4({k})", "empty interior", inst) for k in ("ii", "iii", "v")]
        out.insert(3, CheckReport("L2.4(iv)", abs(_avg2_shift(g2, B, zero) - _avg2_shift(g2, B, Bp)), 4 * eps, inst))
        return out
    eBm = _avg_shift(v, Bm, zero)
    out.append(CheckReport("L2.4(ii)", abs(eB - eBm), eps, inst))
    out.append(CheckReport("L2.4(iii)", abs(eBm - _avg_shift(v, Bm, Bp)), 3 * eps, inst))
    out.append(CheckReport("L2.4(iv)", abs(_avg2_shift(g2, B, zero) - _avg2_shift(g2, B, Bp)), 4 * eps, inst))
    out.append(CheckReport("L2.4(v)", abs(_avg2_shift(g2, Bm, zero) - _avg2_shift(g2, Bm, Bp)), 8 * eps, inst))
    return out


@dataclass(frozen=True)
class BohrCover:
    translates: tuple
    bound: float
    covered: bool

    @property
    def m(self) -> int:
        return len(self.translates)

    @property
    def ok(self) -> bool:
        return self.covered and self.m <= self.bound + 1e-9

    def to_json(self) -> dict:
        return {"translates": list(self.translates), "m": self.m, "bound": self.bound, "covered": self.covered}


def bohr_cover(B: BohrSet) -> BohrCover:
    """Maximal packing by translates of B(K, rho/2), then x_i + B covers Z_N."""
    N = B.modulus
    half = B.with_width(B.rho / 2).members
    diff = half.difference_set(half)
    blocked = np.zeros(N, dtype=bool)
    xs = []
    for x in range(N):
        if not blocked[x]:
            xs.append(x)
            blocked |= np.roll(diff.mask, x)
    cov = np.zeros(N, dtype=bool)
    for x in xs:
        cov |= np.roll(B.members.mask, x)
    dens = B.density
    bound = 5.0**B.d * dens.denominator / dens.numerator
    return BohrCover(tuple(xs), bound, bool(cov.all()))


def cover_report(B: BohrSet) -> CheckReport:
    c = bohr_cover(B)
    inst = {"N": B.modulus, "K": list(B.K), "rho": B.rho, "covered": c.covered}
    if not c.covered:
        return CheckReport("L7.2", math.inf, c.bound, inst)
    return CheckReport("L7.2", c.m, c.bound, inst)
