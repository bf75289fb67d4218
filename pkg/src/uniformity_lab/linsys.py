"""Systems of integer linear forms: square independence, Cauchy-Schwarz
complexity, exhaustive pattern counts and von Neumann-type bounds."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .reports import CheckReport
from .unorms import u2_norm, u3_norm
from .zn_core import GroupFn, ModulusMismatch
from . import parallel

DEFAULT_BUDGET = 10**9
_INNER_CHUNK = 1 << 22


@dataclass(frozen=True)
class LinearSystem:
    coeffs: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(c) for c in row) for row in self.coeffs)
        if not rows:
            raise ValueError("a system needs at least one form")
        s = len(rows[0])
        if s == 0 or any(len(r) != s for r in rows):
            raise ValueError("all forms must have the same positive number of variables")
        for i, r in enumerate(rows):
            if not any(r):
                raise ValueError(f"form {i} is identically zero")
        object.__setattr__(self, "coeffs", rows)

    @property
    def r(self) -> int:
        return len(self.coeffs)

    @property
    def s(self) -> int:
        return len(self.coeffs[0])

    @property
    def M(self) -> int:
        return max(sum(abs(c) for c in row) for row in self.coeffs)

    def matrix(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=np.int64)

    @classmethod
    def parse(cls, text: str) -> "LinearSystem":
        rows = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                rows.append([int(tok) for tok in line.replace(",", " ").split()])
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        return cls(tuple(rows))

    def to_text(self) -> str:
        return "\n".join(" ".join(str(c) for c in row) for row in self.coeffs) + "\n"


def three_ap() -> LinearSystem:
    return LinearSystem(((1, 0), (1, 1), (1, 2)))


def four_ap() -> LinearSystem:
    return LinearSystem(((1, 0), (1, 1), (1, 2), (1, 3)))


def k_ap(k: int) -> LinearSystem:
    return LinearSystem(tuple((1, j) for j in range(k)))


def pairwise_sums() -> LinearSystem:
    """{x+y, y+z, x+z, x+y+z}."""
    return LinearSystem(((1, 1, 0), (0, 1, 1), (1, 0, 1), (1, 1, 1)))


# exact linear algebra over Q

def _rref(rows: Sequence[Sequence]) -> tuple[list[list[Fraction]], list[int]]:
    m = [[Fraction(x) for x in row] for row in rows]
    pivots = []
    if not m:
        return m, pivots
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                fac = m[i][c]
                m[i] = [a - fac * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def rank_q(rows: Sequence[Sequence]) -> int:
    return len(_rref(rows)[1])


def nullspace_q(rows: Sequence[Sequence]) -> list[list[Fraction]]:
    """Basis of {v : rows @ v = 0} over Q."""
    if not rows:
        return []
    ncols = len(rows[0])
    m, pivots = _rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        v = [Fraction(0)] * ncols
        v[fcol] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -m[i][fcol]
        basis.append(v)
    return basis


def primitive_integer(v: Sequence[Fraction]) -> tuple[int, ...]:
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (x.denominator for x in v), 1)
    ints = [int(x * den) for x in v]
    g = reduce(math.gcd, (abs(x) for x in ints), 0) or 1
    ints = [x // g for x in ints]
    first = next((x for x in ints if x != 0), 0)
    if first < 0:
        ints = [-x for x in ints]
    return tuple(ints)


def in_span(vec: Sequence, span: Sequence[Sequence]) -> bool:
    if not span:
        return not any(vec)
    return rank_q(list(span) + [vec]) == rank_q(span)


@dataclass(frozen=True)
class SquareIndependence:
    independent: bool
    rank: int
    pivots: tuple
    witness: tuple | None

    def to_json(self) -> dict:
        return {
            "independent": self.independent,
            "rank": self.rank,
            "pivots": list(self.pivots),
            "witness": list(self.witness) if self.witness else None,
        }


def square_expansion(sys: LinearSystem) -> list[list[int]]:
    """Coefficients of each L_i^2 on the monomials x_u x_v, u <= v."""
    s = sys.s
    out = []
    for row in sys.coeffs:
        vec = []
        for u in range(s):
            for v in range(u, s):
                vec.append(row[u] * row[u] if u == v else 2 * row[u] * row[v])
        out.append(vec)
    return out


def square_independent(sys: LinearSystem) -> SquareIndependence:
    vecs = square_expansion(sys)
    _, pivots = _rref(vecs)
    rk = len(pivots)
    if rk == sys.r:
        return SquareIndependence(True, rk, tuple(pivots), None)
    # dependence among rows: nullspace of the transpose
    cols = [list(col) for col in zip(*vecs)]
    basis = nullspace_q(cols)
    witness = primitive_integer(basis[0])
    return SquareIndependence(False, rk, tuple(pivots), witness)


def _set_partitions(n: int, k: int):
    """Restricted growth strings of length n using exactly k blocks."""
    if n == 0:
        if k == 0:
            yield ()
        return

    def rec(prefix, mx):
        if len(prefix) == n:
            if mx + 1 == k:
                yield tuple(prefix)
            return
        remaining = n - len(prefix)
        if mx + 1 + remaining < k:
            return
        for b in range(min(mx + 2, k)):
            prefix.append(b)
            yield from rec(prefix, max(mx, b))
            prefix.pop()

    yield from rec([0], 0)


def cs_index(sys: LinearSystem, i: int) -> int | None:
    """Smallest s_i such that the other forms split into s_i + 1 classes with
    L_i outside every class span. None if no such partition exists."""
    target = list(sys.coeffs[i])
    others = [list(sys.coeffs[j]) for j in range(sys.r) if j != i]
    n = len(others)
    if n == 0:
        return 0
    for k in range(1, n + 1):
        for labels in _set_partitions(n, k):
            ok = True
            for blk in range(k):
                cls = [others[j] for j in range(n) if labels[j] == blk]
                if in_span(target, cls):
                    ok = False
                    break
            if ok:
                return k - 1
    return None


def cs_complexity(sys: LinearSystem, max_forms: int = 8) -> int | None:
    """Cauchy-Schwarz complexity by exhaustive partition search.

    Returns None when some form lies in the span of a single other form
    (repeated or proportional forms), where no finite complexity exists.
    """
    if sys.r > max_forms:
        raise ValueError(f"exhaustive partition search supports at most {max_forms} forms")
    worst = 0
    for i in range(sys.r):
        si = cs_index(sys, i)
        if si is None:
            return None
        worst = max(worst, si)
    return worst


@dataclass(frozen=True)
class CountResult:
    value: complex
    N: int
    evaluations: int
    wall_time: float

    def to_json(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "abs": abs(self.value),
            "N": self.N,
            "evaluations": self.evaluations,
            "wall_time": self.wall_time,
        }


class BudgetExceeded(ValueError):
    pass


def count_pattern(
    sys: LinearSystem,
    fs: Sequence[GroupFn],
    budget: int = DEFAULT_BUDGET,
    threads: int | None = None,
) -> CountResult:
    """E_{x in Z_N^s} prod_i f_i(L_i(x))."""
    if len(fs) != sys.r:
        raise ValueError(f"expected {sys.r} functions, got {len(fs)}")
    N = fs[0].modulus
    for f in fs:
        if f.modulus != N:
            raise ModulusMismatch("all functions must share a modulus")
    s = sys.s
    total = N**s
    if total > budget:
        raise BudgetExceeded(f"N^s = {total} exceeds budget {budget}")
    t0 = time.perf_counter()
    C = np.mod(sys.matrix(), N)
    # split the variables into an outer loop and a vectorized inner grid
    n_outer = 0
    while N ** (s - n_outer) > _INNER_CHUNK and n_outer < s - 1:
        n_outer += 1
    n_outer = max(n_outer, 1) if s > 1 else 0
    inner_vars = s - n_outer
    grids = np.indices((N,) * inner_vars, dtype=np.int64).reshape(inner_vars, -1)
    inner_part = np.mod(C[:, n_outer:] @ grids, N)  # [form, point]
    vals = [f.values for f in fs]

    def slab(outer: tuple) -> complex:
        shift = np.mod(C[:, :n_outer] @ np.array(outer, dtype=np.int64), N) if n_outer else np.zeros(sys.r, np.int64)
        prod = vals[0][np.mod(inner_part[0] + shift[0], N)]
        for i in range(1, sys.r):
            prod = prod * vals[i][np.mod(inner_part[i] + shift[i], N)]
        return complex(np.sum(prod))

    outers = list(itertools.product(range(N), repeat=n_outer))
    partials = parallel.map_ordered(slab, outers, threads=threads)
    value = complex(np.sum(np.array(partials, dtype=complex))) / total
    return CountResult(value, N, total, time.perf_counter() - t0)


def pattern_histogram(sys: LinearSystem, N: int) -> np.ndarray:
    """H[q, t] = #{x in Z_N^s : sum_i L_i(x)^2 = q, sum_i L_i(x) = t (mod N)}."""
    s = sys.s
    if N**s > DEFAULT_BUDGET:
        raise BudgetExceeded("histogram grid too large")
    C = np.mod(sys.matrix(), N)
    H = np.zeros((N, N), dtype=np.int64)
    n_outer = 1 if s > 1 else 0
    grids = np.indices((N,) * (s - n_outer), dtype=np.int64).reshape(s - n_outer, -1)
    inner_part = C[:, n_outer:] @ grids
    for x0 in range(N) if n_outer else [None]:
        L = inner_part if x0 is None else inner_part + (C[:, 0] * x0)[:, None]
        L = np.mod(L, N)
        q = np.mod(np.sum(L * L, axis=0), N)
        t = np.mod(np.sum(L, axis=0), N)
        np.add.at(H, (q, t), 1)
    return H


def quadratic_family_counts(sys: LinearSystem, N: int) -> np.ndarray:
    """T[a, b] = E_x prod_i omega^{a L_i(x)^2 + b L_i(x)} for every (a, b)."""
    H = pattern_histogram(sys, N)
    # sum_{q,t} H[q,t] omega^{aq+bt} = N^2 * ifft2(H)[a,b]
    return np.fft.ifft2(H) * (N * N) / float(N**sys.s)


def _sup_ok(fs, bound=1.0 + 1e-12) -> bool:
    return all(f.sup() <= bound for f in fs)


def von_neumann_check(sys: LinearSystem, fs: Sequence[GroupFn], k: int, budget: int = DEFAULT_BUDGET) -> CheckReport:
    """|E prod f_i(L_i)| against the U^{k-1} bound.

    k = 2: RHS = min_i ||f_i||_{U^2} (needs ||f_i||_inf <= 1 and complexity <= 1).
    k = 3: RHS = min_j ||f_j||_{U^3} prod_{i != j} ||f_i||_inf (needs complexity <= 2).
    """
    lemma = "EQ1" if k == 2 else "T11.2"
    inst = {"k": k, "N": fs[0].modulus if fs else None, "system": [list(r) for r in sys.coeffs]}
    if k not in (2, 3):
        raise ValueError("k must be 2 or 3")
    comp = cs_complexity(sys)
    if comp is None or comp > k - 1:
        return CheckReport.skip(lemma, f"complexity {comp} exceeds {k - 1}", inst)
    if k == 2:
        if not _sup_ok(fs):
            return CheckReport.skip(lemma, "some ||f_i||_inf exceeds 1", inst)
        rhs = min(u2_norm(f) for f in fs)
    else:
        sups = [f.sup() for f in fs]
        rhs = min(u3_norm(fs[j]) * math.prod(sups[:j] + sups[j + 1:]) for j in range(len(fs)))
    lhs = abs(count_pattern(sys, fs, budget=budget).value)
    return CheckReport(lemma, lhs, rhs, inst)


def telescoping_instance(sys: LinearSystem, N: int, a: int = 1) -> list[GroupFn]:
    """Phases omega^{a w_i x^2} from a square-dependence witness w; their
    pattern count is exactly 1."""
    res = square_independent(sys)
    if res.independent:
        raise ValueError("system is square independent; no telescoping instance")
    return [GroupFn.quadratic_phase(N, (a * w) % N) for w in res.witness]


@dataclass
class ProbeRow:
    N: int
    params: dict
    u2: float
    count: float

    def to_json(self) -> dict:
        return {"N": self.N, "params": self.params, "u2": self.u2, "count": self.count}


def _family_functions(family, N: int):
    if isinstance(family, str):
        name, _, arg = family.partition(":")
        if name == "quadphase":
            return None
        if name == "randpm1":
            from .generators import randpm1

            n_fns, _, seed = arg.partition(",")
            n_fns = int(n_fns or 10)
            seed = int(seed or 0)
            return [({"seed": seed + j}, randpm1(N, seed + j)) for j in range(n_fns)]
        if name == "one":
            return [({"const": 1}, GroupFn.constant(N, 1.0))]
        raise ValueError(f"unknown family {family!r}")
    return [({"index": j}, f) for j, f in enumerate(family) if f.modulus == N]


def main_theorem_probe(sys: LinearSystem, family="quadphase", Ns: Iterable[int] = (101,)) -> list[ProbeRow]:
    """Tabulate (||f||_{U^2}, |E prod f(L_i)|) for every f in a family.

    The ``quadphase`` family is every omega^{a x^2 + b x} with a != 0; its
    counts come from one histogram of (sum L_i^2, sum L_i) over Z_N^s.
    """
    rows: list[ProbeRow] = []
    for N in Ns:
        fns = _family_functions(family, N)
        if fns is None:
            T = np.abs(quadratic_family_counts(sys, N))
            for a in range(1, N):
                u2 = u2_norm(GroupFn.quadratic_phase(N, a, 0))
                for b in range(N):
                    rows.append(ProbeRow(N, {"a": a, "b": b}, u2, float(T[a, b])))
        else:
            for params, f in fns:
                val = abs(count_pattern(sys, [f] * sys.r).value)
                rows.append(ProbeRow(N, params, u2_norm(f), val))
    rows.sort(key=lambda r: (r.u2, r.N, sorted(r.params.items())))
    return rows
