"""Exhaustive checkers for Freiman and quadratic homomorphisms on subsets of Z_N."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .zn_core import SubsetZN

FREIMAN_LIMIT = 1 << 12
QUADRATIC_LIMIT = 1 << 10


@dataclass(frozen=True)
class HomCheck:
    ok: bool
    witness: tuple | None = None

    def __bool__(self):
        return self.ok


def _as_domain(A, N: int) -> np.ndarray:
    if isinstance(A, SubsetZN):
        return A.mask.copy()
    mask = np.zeros(N, dtype=bool)
    mask[np.mod(np.asarray(list(A), dtype=np.int64), N)] = True
    return mask


def check_freiman_hom(values, A, N: int, tol: float = 1e-9, multiplicative: bool = False) -> HomCheck:
    """phi(x + d) - phi(x) = phi(y + d) - phi(y) whenever all four points lie in A.

    ``values`` is a length-N table; entries off A are ignored. Additive values
    are residues mod N; multiplicative values are unit complex numbers.
    """
    mask = _as_domain(A, N)
    members = np.flatnonzero(mask)
    if members.size > FREIMAN_LIMIT:
        raise ValueError(f"domain larger than {FREIMAN_LIMIT}")
    vals = np.asarray(values)
    for d in range(1, N):
        xs = members[mask[(members + d) % N]]
        if xs.size < 2:
            continue
        if multiplicative:
            ratio = vals[(xs + d) % N] * np.conj(vals[xs])
            bad = np.flatnonzero(np.abs(ratio - ratio[0]) > tol)
        else:
            diff = np.mod(vals[(xs + d) % N].astype(np.int64) - vals[xs].astype(np.int64), N)
            bad = np.flatnonzero(diff != diff[0])
        if bad.size:
            return HomCheck(False, (int(xs[0]), int(xs[bad[0]]), d))
    return HomCheck(True)


def check_quadratic_hom(gamma, A, N: int, tol: float = 1e-9) -> HomCheck:
    """Exhaustive eight-point identity over every (x, a, b, c) with all points in A.

    gamma is a length-N table of unit complex numbers.
    """
    mask = _as_domain(A, N)
    members = np.flatnonzero(mask)
    if members.size > QUADRATIC_LIMIT:
        raise ValueError(f"domain larger than {QUADRATIC_LIMIT}")
    g = np.asarray(gamma, dtype=complex)
    shifts = np.arange(N)
    for x in members:
        okx = mask[(x + shifts) % N]  # which a give x + a in A
        a_vals = shifts[okx]
        if a_vals.size == 0:
            continue
        B_ = a_vals[:, None]
        C_ = a_vals[None, :]
        for a in a_vals:
            pts = [x + a + B_, x + a + C_, x + B_ + C_, x + a + B_ + C_]
            inside = np.ones((a_vals.size, a_vals.size), dtype=bool)
            for p in pts:
                inside &= mask[p % N]
            if not inside.any():
                continue
            prod = (
                g[x]
                * np.conj(g[(x + a) % N])
                * np.conj(g[(x + B_) % N])
                * np.conj(g[(x + C_) % N])
                * g[pts[0] % N]
                * g[pts[1] % N]
                * g[pts[2] % N]
                * np.conj(g[pts[3] % N])
            )
            bad = np.argwhere(inside & (np.abs(prod - 1) > tol))
            if bad.size:
                j, k = bad[0]
                return HomCheck(False, (int(x), int(a), int(a_vals[j]), int(a_vals[k])))
    return HomCheck(True)
