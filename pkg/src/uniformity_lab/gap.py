"""Generalized arithmetic progressions {x0 + sum a_i x_i : 0 <= a_i < m_i}."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .reports import CheckReport
from .zn_core import SubsetZN, check_modulus


@dataclass(frozen=True, eq=False)
class Gap:
    modulus: int
    x0: int
    gens: tuple
    lens: tuple
    members: SubsetZN = field(repr=False)
    proper: bool = True
    coords: np.ndarray | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return len(self.gens)

    @property
    def size(self) -> int:
        return self.members.size

    def __len__(self):
        return self.size

    @property
    def density(self) -> Fraction:
        return self.members.density

    def point(self, a: Sequence[int]) -> int:
        return (self.x0 + sum(int(ai) * g for ai, g in zip(a, self.gens))) % self.modulus

    def coordinate_grid(self) -> np.ndarray:
        """All coefficient vectors, shape (prod m_i, d), in C order."""
        if self.d == 0:
            return np.zeros((1, 0), dtype=np.int64)
        return np.indices(self.lens, dtype=np.int64).reshape(self.d, -1).T

    def points(self) -> np.ndarray:
        a = self.coordinate_grid()
        return (self.x0 + a @ np.array(self.gens, dtype=np.int64)) % self.modulus if self.d else np.array([self.x0 % self.modulus])

    def coordinates_of(self, x: int) -> tuple | None:
        if self.coords is None:
            raise ValueError("coordinates are only defined on proper progressions")
        row = self.coords[int(x) % self.modulus]
        return None if row[0] < 0 and self.d else tuple(int(v) for v in row)

    def translate(self, t: int) -> "Gap":
        return build_gap(self.modulus, self.x0 + t, self.gens, self.lens)

    def to_json(self) -> dict:
        return {
            "modulus": self.modulus,
            "base": self.x0,
            "gens": list(self.gens),
            "lens": list(self.lens),
            "proper": self.proper,
            "size": self.size,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Gap":
        try:
            return build_gap(int(obj["modulus"]), int(obj.get("base", 0)), obj["gens"], obj["lens"])
        except KeyError as exc:
            raise ValueError(f"gap description is missing field {exc}") from None


def build_gap(N: int, x0: int, gens: Sequence[int], lens: Sequence[int]) -> Gap:
    N = check_modulus(N)
    gens = tuple(int(g) % N for g in gens)
    lens = tuple(int(m) for m in lens)
    if len(gens) != len(lens):
        raise ValueError("generators and lengths differ in count")
    if any(m < 1 for m in lens):
        raise ValueError("all lengths must be at least 1")
    x0 = int(x0) % N
    if gens:
        a = np.indices(lens, dtype=np.int64).reshape(len(gens), -1).T
        pts = (x0 + a @ np.array(gens, dtype=np.int64)) % N
    else:
        a = np.zeros((1, 0), dtype=np.int64)
        pts = np.array([x0], dtype=np.int64)
    distinct = np.unique(pts)
    proper = distinct.shape[0] == math.prod(lens)
    coords = None
    if proper:
        coords = np.full((N, max(len(gens), 1)), -1, dtype=np.int64)
        if gens:
            coords[pts] = a
        else:
            coords[pts] = 0
    S = SubsetZN.from_members(N, distinct)
    return Gap(N, x0, gens, lens, S, bool(proper), coords)


def interval(N: int, start: int, length: int) -> Gap:
    return build_gap(N, start, (1,), (length,))


def symmetric_box(N: int, gens: Sequence[int], half: Sequence[int]) -> Gap:
    """prod [-m_i, m_i] in the given generators."""
    x0 = -sum(g * m for g, m in zip(gens, half))
    return build_gap(N, x0, gens, [2 * m + 1 for m in half])


@dataclass(frozen=True)
class RelativeBoundary:
    closure: SubsetZN
    interior: SubsetZN
    boundary: SubsetZN


def relative_boundary(A: SubsetZN, B: SubsetZN) -> RelativeBoundary:
    """A+ = A + B, A- = {x : x + B in A}, dA = A+ minus A-."""
    if A.modulus != B.modulus:
        raise ValueError("modulus mismatch")
    plus = A.sumset(B)
    inside = np.ones(A.modulus, dtype=bool)
    for b in B.members:
        inside &= np.roll(A.mask, -int(b))
    minus = SubsetZN(A.modulus, inside)
    return RelativeBoundary(plus, minus, plus - minus)


def centre_lengths(P: Gap, eps: float) -> tuple:
    """Number of integers b with 0 <= b < eps m_i / d, per coordinate."""
    d = P.d
    return tuple(math.ceil(eps * m / d) for m in P.lens)


def progression_centre(P: Gap, eps: float) -> tuple[Gap, list[CheckReport]]:
    if not P.proper:
        raise ValueError("progression must be proper")
    lens = centre_lengths(P, eps)
    if any(m < 1 for m in lens):
        raise ValueError("centre is empty; eps too small for these lengths")
    Q = build_gap(P.modulus, 0, P.gens, lens)
    rb = relative_boundary(P.members, Q.members)
    N = P.modulus
    gamma = P.density
    inst = {"N": N, "gens": list(P.gens), "lens": list(P.lens), "eps": eps}
    reps = [
        CheckReport("L6.3(boundary)", float(Fraction(rb.boundary.size, N)), 3 * eps * float(gamma), inst),
        CheckReport("L6.3(centre)", (eps / P.d) ** P.d * float(gamma), float(Q.density), inst),
    ]
    return Q, reps


@dataclass(frozen=True)
class GapCover:
    translates: tuple
    bound: float
    covered: bool

    @property
    def m(self) -> int:
        return len(self.translates)

    @property
    def ok(self) -> bool:
        return self.covered and self.m <= self.bound + 1e-9


def gap_cover(P: Gap) -> GapCover:
    """Pack translates of the half-length subgrid, then cover by P + u_i - z.

    Returned translates t_i satisfy: the sets P + t_i cover Z_N.
    """
    if not P.proper:
        raise ValueError("progression must be proper")
    N = P.modulus
    half = build_gap(N, 0, P.gens, [math.ceil(m / 2) for m in P.lens])  # 0 <= a < m/2
    diff = half.members.difference_set(half.members)
    blocked = np.zeros(N, dtype=bool)
    us = []
    for u in range(N):
        if not blocked[u]:
            us.append(u)
            blocked |= np.roll(diff.mask, u)
    z = sum((m // 2) * g for m, g in zip(P.lens, P.gens))
    ts = tuple(int((u - z - P.x0) % N) for u in us)
    cov = np.zeros(N, dtype=bool)
    for t in ts:
        cov |= np.roll(P.members.mask, t)
    gamma = P.density
    bound = 3.0**P.d * gamma.denominator / gamma.numerator
    return GapCover(ts, bound, bool(cov.all()))


def convergent_denominators(p: int, q: int) -> list[int]:
    """Denominators of the continued-fraction convergents of p/q."""
    out = []
    k2, k1 = 1, 0
    a, b = p, q
    while b:
        t = a // b
        a, b = b, a - t * b
        k2, k1 = k1, t * k1 + k2
        out.append(k1)
    return [k for k in out if k > 0]


def _ok_mask(B) -> np.ndarray:
    return B.members.mask


def _max_len_1d(mask: np.ndarray, g: int, N: int) -> int:
    """Largest m with {j g : |j| <= 2(m - 1)} inside the mask and m g-steps distinct."""
    if g % N == 0:
        return 1
    order = N // math.gcd(g, N)
    m = 1
    while m < order:
        j = 2 * m  # extend the difference range to |j| <= 2m
        if not (mask[(j * g) % N] and mask[(-j * g) % N] and mask[((j - 1) * g) % N] and mask[(-(j - 1) * g) % N]):
            break
        m += 1
    return m


def _contains_2q_minus_2q(mask: np.ndarray, gens: Sequence[int], lens: Sequence[int], N: int) -> bool:
    ranges = [np.arange(-2 * (m - 1), 2 * (m - 1) + 1, dtype=np.int64) for m in lens]
    pts = np.zeros(1, dtype=np.int64)
    for g, r in zip(gens, ranges):
        pts = (pts[:, None] + (r * g)[None, :]).reshape(-1)
    return bool(mask[np.mod(pts, N)].all())


@dataclass(frozen=True)
class GapSearch:
    gap: Gap
    target_sigma_d: float
    target_sigma_2d: float
    candidates: int


def find_gap_in_bohr(B, d_target: int = 1, max_pairs: int = 24) -> GapSearch:
    """Best-effort proper progression P with 2P - 2P inside B.

    |K| = 1 searches convergent denominators of r/N (plus all small steps);
    |K| = 2 additionally tries pairs of the strongest one-dimensional steps.
    Both Ruzsa-type density targets are reported, not asserted.
    """
    N = B.modulus
    d = B.d
    mask = _ok_mask(B)
    rho = B.rho
    tgt1 = (rho / max(d, 1)) ** max(d, 1)
    tgt2 = (rho / (2 * max(d, 1))) ** max(d, 1)
    if mask.all():
        return GapSearch(build_gap(N, 0, (1,), (N,)), tgt1, tgt2, 1)
    if d_target > max(d, 1):
        raise ValueError("d_target exceeds the number of frequencies")
    if d > 2:
        raise ValueError("exhaustive strategy supports at most two frequencies")
    cands = set(range(1, min(N, 64)))
    for r in B.K:
        for q in convergent_denominators(r, N):
            cands.add(q % N)
            cands.add((-q) % N)
    cands.discard(0)
    scored = sorted(((_max_len_1d(mask, g, N), g) for g in cands), key=lambda t: (-t[0], t[1]))
    best = None
    for m, g in scored:
        P = build_gap(N, 0, (g,), (m,))
        if P.proper and _contains_2q_minus_2q(mask, (g,), (m,), N):
            if best is None or P.size > best.size:
                best = P
    if d_target >= 2:
        top = [g for _, g in scored[:max_pairs]]
        for g1, g2 in itertools.combinations(sorted(top), 2):
            m1 = m2 = 1
            grown = True
            while grown:
                grown = False
                for cand in ((m1 + 1, m2), (m1, m2 + 1)) if m1 <= m2 else ((m1, m2 + 1), (m1 + 1, m2)):
                    if _contains_2q_minus_2q(mask, (g1, g2), cand, N):
                        P = build_gap(N, 0, (g1, g2), cand)
                        if P.proper:
                            m1, m2 = cand
                            grown = True
                            break
            if m1 > 1 and m2 > 1:
                P = build_gap(N, 0, (g1, g2), (m1, m2))
                if best is None or best.d < 2 or P.size > best.size:
                    best = P
    if best is None:
        best = build_gap(N, 0, (1,), (1,))
    return GapSearch(best, tgt1, tgt2, len(cands))
