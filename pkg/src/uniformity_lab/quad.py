"""Quadratic and bilinear phase machinery on Z_N.

Quadratic forms live either globally (a x^2 + b x + c) or in the coordinates of
a proper progression chart. A quadratic average

    Q(x) = E_{y in x - W} omega^{q_y(x)},   q_y(x) = q(x - y) + phi_y(x - y)

is stored through its mixture matrix M[w, x] (the mean of omega^{q_w(x)} over
its components, zero off x in w + W), so base-shrinking and products become
circular smearing along the translate axis and stay exact. Components are kept
as lightweight exponent providers so that every structural claim can be
re-checked on individual quadratic averages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .bohr import BohrSet, CentralPair, build_bohr, central_subset, full_bohr
from .bohr import bohr_cover
from .gap import Gap, build_gap, progression_centre
from .homs import HomCheck, check_freiman_hom, check_quadratic_hom
from .reports import CheckReport, assert_report
from .unorms import _argmax_lex, inner, u2_dual_norm, u2_norm
from .zn_core import GroupFn, SubsetZN, TWO_PI, check_modulus, dist_to_int

__all__ = [
    "HomCheck",
    "check_freiman_hom",
    "check_quadratic_hom",
    "QuadForm",
    "BilinForm",
    "RankReport",
    "rank",
    "QuadAverage",
    "global_phase_average",
    "average_from_offsets",
    "build_special_average",
    "shrink_base",
    "product_average",
    "make_chain",
    "rational_dichotomy_1d",
    "rational_dichotomy_dd",
    "smooth_linear_phase",
    "rank_dichotomy",
    "high_rank_checks",
    "close_in_dual_check",
]

LITERAL_LIMIT = 40
PART_LIMIT = 4096
TOL = 1e-9


def _e_int(k, N: int) -> np.ndarray:
    return np.exp(1j * TWO_PI * (np.mod(np.asarray(k, dtype=np.int64), N) / N))


def _members(S) -> SubsetZN:
    if isinstance(S, SubsetZN):
        return S
    mem = getattr(S, "members", None)
    if isinstance(mem, SubsetZN):
        return mem
    raise TypeError("expected a SubsetZN, BohrSet or Gap")


# --------------------------------------------------------------------------
# forms


@dataclass(frozen=True, eq=False)
class QuadForm:
    """q(x) mod N on its domain. kind is "global" or "gap_coords"."""

    modulus: int
    kind: str
    coeffs: tuple
    chart: Gap | None = None

    @classmethod
    def global_form(cls, N: int, a: int, b: int = 0, c: int = 0) -> "QuadForm":
        N = check_modulus(N)
        return cls(N, "global", (int(a) % N, int(b) % N, int(c) % N))

    @classmethod
    def gap_form(cls, chart: Gap, A, b=None, c: int = 0) -> "QuadForm":
        if not chart.proper:
            raise ValueError("gap_coords forms need a proper chart")
        N = chart.modulus
        A = np.asarray(A, dtype=np.int64).reshape(chart.d, chart.d)
        if not np.array_equal(A, A.T):
            raise ValueError("coefficient matrix must be symmetric")
        b = np.zeros(chart.d, dtype=np.int64) if b is None else np.asarray(b, dtype=np.int64).reshape(chart.d)
        At = tuple(tuple(int(v) % N for v in row) for row in A)
        return cls(N, "gap_coords", (At, tuple(int(v) % N for v in b), int(c) % N), chart)

    @property
    def is_global(self) -> bool:
        return self.kind == "global"

    @property
    def is_linear(self) -> bool:
        if self.is_global:
            return self.coeffs[0] == 0
        return all(v == 0 for row in self.coeffs[0] for v in row)

    def table(self) -> tuple[np.ndarray, np.ndarray]:
        """(values mod N, domain mask), both of length N."""
        N = self.modulus
        x = np.arange(N, dtype=np.int64)
        if self.is_global:
            a, b, c = self.coeffs
            return (a * (x * x % N) + b * x + c) % N, np.ones(N, dtype=bool)
        A = np.array(self.coeffs[0], dtype=np.int64)
        b = np.array(self.coeffs[1], dtype=np.int64)
        mask = self.chart.members.mask.copy()
        h = self.chart.coords[:, : self.chart.d]
        h = np.where(mask[:, None], h, 0)
        vals = (np.einsum("xi,ij,xj->x", h, A, h) + h @ b + self.coeffs[2]) % N
        return np.where(mask, vals, 0), mask

    @property
    def domain(self) -> SubsetZN:
        return SubsetZN(self.modulus, self.table()[1])

    def __call__(self, x):
        vals, mask = self.table()
        idx = np.mod(np.asarray(x, dtype=np.int64), self.modulus)
        if not np.all(mask[idx]):
            raise ValueError("point outside the domain of the form")
        out = vals[idx]
        return int(out) if out.ndim == 0 else out

    def phase(self) -> GroupFn:
        vals, mask = self.table()
        return GroupFn(self.modulus, _e_int(vals, self.modulus) * mask)

    def _same_shape(self, other: "QuadForm"):
        if self.modulus != other.modulus or self.kind != other.kind or self.chart is not other.chart:
            if not (self.kind == other.kind == "gap_coords" and self.chart.to_json() == other.chart.to_json()):
                raise ValueError("forms live on different charts")

    def __sub__(self, other: "QuadForm") -> "QuadForm":
        self._same_shape(other)
        N = self.modulus
        if self.is_global:
            return QuadForm(N, "global", tuple((u - v) % N for u, v in zip(self.coeffs, other.coeffs)))
        A = (np.array(self.coeffs[0]) - np.array(other.coeffs[0])) % N
        b = (np.array(self.coeffs[1]) - np.array(other.coeffs[1])) % N
        return QuadForm.gap_form(self.chart, A, b, self.coeffs[2] - other.coeffs[2])

    def __add__(self, other: "QuadForm") -> "QuadForm":
        self._same_shape(other)
        N = self.modulus
        if self.is_global:
            return QuadForm(N, "global", tuple((u + v) % N for u, v in zip(self.coeffs, other.coeffs)))
        A = (np.array(self.coeffs[0]) + np.array(other.coeffs[0])) % N
        b = (np.array(self.coeffs[1]) + np.array(other.coeffs[1])) % N
        return QuadForm.gap_form(self.chart, A, b, self.coeffs[2] + other.coeffs[2])

    def add_affine(self, u: int, v: int = 0) -> "QuadForm":
        """q + (u x + v) for a global form."""
        if not self.is_global:
            raise ValueError("global affine shift of a chart form; use gap coefficients instead")
        a, b, c = self.coeffs
        return QuadForm.global_form(self.modulus, a, b + u, c + v)

    def bilinear(self) -> "BilinForm":
        return BilinForm(self.modulus, self)

    def to_json(self) -> dict:
        if self.is_global:
            a, b, c = self.coeffs
            return {"kind": "global", "modulus": self.modulus, "a": a, "b": b, "c": c}
        return {
            "kind": "gap_coords",
            "modulus": self.modulus,
            "A": [list(r) for r in self.coeffs[0]],
            "b": list(self.coeffs[1]),
            "c": self.coeffs[2],
            "chart": self.chart.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "QuadForm":
        kind = obj.get("kind")
        try:
            if kind == "global":
                return cls.global_form(int(obj["modulus"]), obj.get("a", 0), obj.get("b", 0), obj.get("c", 0))
            if kind == "gap_coords":
                chart = Gap.from_json(obj["chart"])
                return cls.gap_form(chart, obj["A"], obj.get("b"), obj.get("c", 0))
        except KeyError as exc:
            raise ValueError(f"quadratic form is missing field {exc}") from None
        raise ValueError(f"unknown quadratic form kind {kind!r}")

    def __repr__(self):
        if self.is_global:
            a, b, c = self.coeffs
            return f"QuadForm({a}x^2 + {b}x + {c} mod {self.modulus})"
        return f"QuadForm(chart d={self.chart.d}, A={self.coeffs[0]}, b={self.coeffs[1]}, c={self.coeffs[2]})"


@dataclass(frozen=True, eq=False)
class BilinForm:
    """beta(u, v) = q(u + v) - q(u) - q(v) + q(0) or, explicitly, 2 a u v for coefficient a."""

    modulus: int
    source: QuadForm | None = None
    coeff: int | None = None

    def __call__(self, u, v):
        N = self.modulus
        u = np.mod(np.asarray(u, dtype=np.int64), N)
        v = np.mod(np.asarray(v, dtype=np.int64), N)
        if self.source is None:
            out = (2 * self.coeff * (u * v % N)) % N
        else:
            vals, mask = self.source.table()
            s = (u + v) % N
            if not (np.all(mask[s]) and np.all(mask[u]) and np.all(mask[v])):
                raise ValueError("bilinear form evaluated outside the domain of q")
            # adding q's constant back keeps beta bilinear
            out = (vals[s] - vals[u] - vals[v] + self.source.coeffs[2]) % N
        return int(out) if np.ndim(out) == 0 else out

    def alpha(self, P) -> float:
        """|E_{a,a',b,b' in P} omega^{beta(a - a', b - b')}|."""
        pts = _members(P).members
        N = self.modulus
        D = np.mod(pts[:, None] - pts[None, :], N).ravel()
        u, ru = np.unique(D, return_counts=True)
        B = self(u[:, None], u[None, :])
        tot = ru @ _e_int(B, N) @ ru
        return float(abs(tot)) / pts.size**4


# --------------------------------------------------------------------------
# rank


@dataclass(frozen=True)
class RankReport:
    alpha: float
    rank: float
    probe_size: int
    domain_ok: bool
    method: str

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "rank": "inf" if math.isinf(self.rank) else self.rank,
            "probe_size": self.probe_size,
            "domain_ok": self.domain_ok,
            "method": self.method,
        }


def _rank_from_alpha(alpha: float) -> float:
    return math.inf if alpha <= 1e-15 else max(0.0, -math.log(min(alpha, 1.0)))


def _difference_counts(pts: np.ndarray, N: int) -> tuple[np.ndarray, np.ndarray]:
    mask = np.zeros(N, dtype=float)
    mask[pts] = 1.0
    # r(u) = #{(a, a') : a - a' = u}
    r = np.rint(np.fft.ifft(np.fft.fft(mask) * np.conj(np.fft.fft(mask))).real).astype(np.int64)
    u = np.flatnonzero(r)
    return u, r[u]


def _rank_alpha_fast(vals: np.ndarray, pts: np.ndarray, N: int) -> float:
    u, ru = _difference_counts(pts, N)
    expo = vals[(u[:, None] + u[None, :]) % N] - vals[u][:, None] - vals[u][None, :]
    tot = ru.astype(float) @ _e_int(expo, N) @ ru.astype(float)
    return float(abs(tot)) / float(pts.size) ** 4


def _rank_alpha_literal(vals: np.ndarray, pts: np.ndarray, N: int) -> float:
    tot = 0j
    b = pts[:, None]
    bp = pts[None, :]
    vb = vals[(b - bp) % N]
    for a in pts:
        for ap in pts:
            ex = vals[(a + b - ap - bp) % N] - vals[(a - ap) % N] - vb
            tot += _e_int(ex, N).sum()
    return float(abs(tot)) / float(pts.size) ** 4


def rank(q: QuadForm, P, B=None, Bp=None, method: str = "fast") -> RankReport:
    """Rank of B(x) omega^{q(x)} relative to P, as ln(1/alpha).

    With B and Bp given, P inside Bp and 2Bp - 2Bp inside B are checked
    exhaustively; B must lie in the domain of q.
    """
    N = q.modulus
    P = _members(P)
    vals, dom = q.table()
    domain_ok = True
    if Bp is not None:
        Bp = _members(Bp)
        if not P.issubset(Bp):
            raise ValueError("probe set is not inside B'")
        if B is not None:
            two = Bp.sumset(Bp)
            if not two.difference_set(two).issubset(_members(B)):
                raise ValueError("2B' - 2B' is not inside B")
    if B is not None and not _members(B).issubset(SubsetZN(N, dom)):
        raise ValueError("q is not defined on all of B")
    pts = P.members
    two = P.sumset(P)
    if not two.difference_set(two).issubset(SubsetZN(N, dom)):
        raise ValueError("2P - 2P leaves the domain of q")
    if pts.size == 0:
        raise ValueError("empty probe set")
    if method == "fast":
        alpha = _rank_alpha_fast(vals, pts, N)
    elif method == "literal":
        if pts.size > LITERAL_LIMIT:
            raise ValueError(f"literal route limited to |P| <= {LITERAL_LIMIT}")
        alpha = _rank_alpha_literal(vals, pts, N)
    else:
        raise ValueError(f"unknown method {method!r}")
    alpha = min(max(alpha, 0.0), 1.0)
    return RankReport(alpha, _rank_from_alpha(alpha), int(pts.size), domain_ok, method)


# --------------------------------------------------------------------------
# quadratic averages


class _Plain:
    """exp(w, x) = E[w, pos(x - w)] for a table over translates."""

    def __init__(self, table: np.ndarray, window: SubsetZN, invariant: bool = False):
        self.table = table
        self.N = window.modulus
        self.pos = np.full(self.N, -1, dtype=np.int64)
        self.pos[window.members] = np.arange(window.size)
        self.invariant = invariant

    def exp(self, w, x):
        w = np.mod(w, self.N)
        j = self.pos[np.mod(np.asarray(x) - w, self.N)]
        if np.any(j < 0):
            raise ValueError("exponent requested outside the local window")
        return self.table[w, j]


class _Invariant:
    """exp(w, x) = f(x) for every translate w."""

    invariant = True

    def __init__(self, vals: np.ndarray):
        self.vals = vals
        self.N = vals.shape[0]

    def exp(self, w, x):
        return self.vals[np.mod(np.asarray(x), self.N)] + 0 * np.asarray(w)


class _Shift:
    def __init__(self, parent, y: int):
        self.parent, self.y = parent, int(y)
        self.invariant = parent.invariant
        self.N = parent.N

    def exp(self, w, x):
        return self.parent.exp(np.asarray(w) + self.y, x)


class _Diff:
    def __init__(self, p1, v1: int, p2, v2: int):
        self.p1, self.v1, self.p2, self.v2 = p1, int(v1), p2, int(v2)
        self.invariant = p1.invariant and p2.invariant
        self.N = p1.N

    def exp(self, w, x):
        w = np.asarray(w)
        return (self.p1.exp(w + self.v1, x) - self.p2.exp(w + self.v2, x)) % self.N


@dataclass(frozen=True)
class SpecialCert:
    eps_hat: float
    m: int
    translates: tuple
    good: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {"eps_hat": self.eps_hat, "m": self.m, "translates": list(self.translates)}


@dataclass(eq=False)
class QuadAverage:
    """Generalized quadratic average with base (window, q).

    parts is the list of distinct components as (weight, provider); None when
    there are too many to enumerate (values stay exact either way).
    """

    modulus: int
    window: SubsetZN
    q: QuadForm
    M: np.ndarray = field(repr=False)
    parts: list | None = field(default=None, repr=False)
    bohr: BohrSet | None = None
    special: SpecialCert | None = None
    _values: np.ndarray | None = field(default=None, repr=False)

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            N = self.modulus
            x = np.arange(N)
            W = self.window.members
            self._values = self.M[np.mod(x[:, None] - W[None, :], N), x[:, None]].mean(axis=1)
        return self._values

    @property
    def fn(self) -> GroupFn:
        return GroupFn(self.modulus, self.values)

    @property
    def generalized(self) -> bool:
        return self.parts is None or len(self.parts) > 1

    @property
    def n_components(self) -> int | None:
        return None if self.parts is None else len(self.parts)

    def component(self, k: int) -> "QuadAverage":
        """The k-th distinct component as a plain quadratic average."""
        if self.parts is None:
            raise ValueError("components were not enumerated for this average")
        w, prov = self.parts[k]
        N = self.modulus
        W = self.window.members
        u = np.arange(N)[:, None]
        table = np.asarray(prov.exp(u, u + W[None, :])) % N
        return _from_table(self.window, self.q, table, self.bohr, prov.invariant)

    def component_weight(self, k: int) -> float:
        return self.parts[k][0]

    def local_exponents(self) -> np.ndarray:
        """Table E[y, j] = q_y(y + W[j]) for a non-generalized average."""
        if self.parts is None or len(self.parts) != 1:
            raise ValueError("local exponents exist only for a single average")
        return self.component(0)._table

    def check_local_phases(self, ys: Sequence[int] | None = None) -> HomCheck:
        """Each phi_y(z) = q_y(y + z) - q(z) is a Freiman homomorphism on the window."""
        N = self.modulus
        W = self.window.members
        qv, dom = self.q.table()
        if not np.all(dom[W]):
            return HomCheck(False, ("window outside domain of q",))
        ks = range(len(self.parts)) if self.parts is not None else []
        for k in ks:
            E = self.component(k)._table
            for y in (range(N) if ys is None else ys):
                phi = np.zeros(N, dtype=np.int64)
                phi[W] = (E[y] - qv[W]) % N
                res = check_freiman_hom(phi, self.window, N)
                if not res.ok:
                    return HomCheck(False, (k, int(y)) + res.witness)
        return HomCheck(True)

    def to_json(self) -> dict:
        out = {
            "modulus": self.modulus,
            "window_size": self.window.size,
            "q": self.q.to_json(),
            "components": self.n_components,
            "values": [[float(v.real), float(v.imag)] for v in self.values],
        }
        if self.bohr is not None:
            out["base"] = self.bohr.to_json()
        if self.special is not None:
            out["special"] = self.special.to_json()
        return out


def _mixture_from_table(window: SubsetZN, table: np.ndarray) -> np.ndarray:
    N = window.modulus
    W = window.members
    M = np.zeros((N, N), dtype=complex)
    w = np.arange(N)[:, None]
    M[w, np.mod(w + W[None, :], N)] = _e_int(table, N)
    return M


def _from_table(window: SubsetZN, q: QuadForm, table: np.ndarray, bohr=None, invariant=False) -> QuadAverage:
    table = np.mod(np.asarray(table, dtype=np.int64), window.modulus)
    if table.shape != (window.modulus, window.size):
        raise ValueError("exponent table must have shape (N, |W|)")
    avg = QuadAverage(window.modulus, window, q, _mixture_from_table(window, table), None, bohr)
    avg.parts = [(1.0, _Plain(table, window, invariant))]
    avg._table = table
    return avg


def _window_of(B) -> tuple[SubsetZN, BohrSet | None]:
    if isinstance(B, BohrSet):
        return B.members, B
    return _members(B), None


def global_phase_average(B, q: QuadForm) -> QuadAverage:
    """q_y(x) = q(x) for every y, so Q = omega^q on the domain."""
    W, bohr = _window_of(B)
    N = W.modulus
    vals, dom = q.table()
    w = np.arange(N)[:, None]
    pts = np.mod(w + W.members[None, :], N)
    if not np.all(dom[pts]):
        raise ValueError("q must be defined on every translate of the base")
    avg = _from_table(W, q, vals[pts], bohr, invariant=True)
    avg.parts = [(1.0, _Invariant(vals))]
    return avg


def average_from_offsets(B, q: QuadForm, u, v) -> QuadAverage:
    """q_y(x) = q(x - y) + u_y (x - y) + v_y."""
    W, bohr = _window_of(B)
    N = W.modulus
    vals, dom = q.table()
    if not np.all(dom[W.members]):
        raise ValueError("q must be defined on the base")
    u = np.broadcast_to(np.asarray(u, dtype=np.int64), (N,))
    v = np.broadcast_to(np.asarray(v, dtype=np.int64), (N,))
    z = W.members[None, :]
    table = vals[z] + u[:, None] * z + v[:, None]
    return _from_table(W, q, table, bohr)


def _smear(M: np.ndarray, c: np.ndarray) -> np.ndarray:
    """T[u, x] = sum_v c(v) M[u + v, x]."""
    crev = np.roll(c[::-1], 1)  # crev(v) = c(-v)
    return np.fft.ifft(np.fft.fft(crev)[:, None] * np.fft.fft(M, axis=0), axis=0)


def _restrict(T: np.ndarray, window: SubsetZN) -> np.ndarray:
    N = window.modulus
    out = np.zeros_like(T)
    w = np.arange(N)[:, None]
    idx = np.mod(w + window.members[None, :], N)
    out[w, idx] = T[w, idx]
    return out


def _uniform(S: SubsetZN, negate: bool = True) -> np.ndarray:
    c = np.zeros(S.modulus)
    pts = S.members
    c[np.mod(-pts if negate else pts, S.modulus)] = 1.0 / pts.size
    return c


def _interior(W: SubsetZN, Bp: SubsetZN) -> SubsetZN:
    """{a : a + B' inside W}."""
    inside = np.ones(W.modulus, dtype=bool)
    for b in Bp.members:
        inside &= np.roll(W.mask, -int(b))
    return SubsetZN(W.modulus, inside)


def _shifted_parts(parts, offsets_weights):
    """Spread each part over translate offsets with the given weights."""
    if parts is None:
        return None
    out = []
    nz = [(int(v), float(wt)) for v, wt in offsets_weights]
    for w, p in parts:
        if p.invariant:
            out.append((w, p))
        else:
            out.extend((w * wt, _Shift(p, v)) for v, wt in nz)
        if len(out) > PART_LIMIT:
            return None
    return out


def _sup(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)))


def shrink_base(Q: QuadAverage, pair: CentralPair, check: bool = True) -> tuple[QuadAverage, CheckReport]:
    """Generalized average with base (B', q) within 4 eps of Q.

    S(x) = E_{y in -A} E_{u in x - B'} omega^{q_{y+u}(x)}, with A the interior
    of the base relative to B'.
    """
    if Q.modulus != pair.outer.modulus:
        raise ValueError("modulus mismatch")
    Bp = pair.inner.members
    if pair.outer.members == Q.window:
        A = pair.interior.members
    else:
        if not pair.outer.members.issubset(Q.window):
            raise ValueError("pair outer set is not inside the base of Q")
        A = _interior(Q.window, Bp)
    if A.size == 0:
        raise ValueError("empty interior")
    c = _uniform(A)
    M = _restrict(_smear(Q.M, c), Bp)
    parts = _shifted_parts(Q.parts, [(v, c[v]) for v in np.flatnonzero(c)])
    S = QuadAverage(Q.modulus, Bp, Q.q, M, parts, pair.inner)
    rep = CheckReport(
        "L4.1",
        _sup(Q.values, S.values),
        4 * pair.eps,
        {"N": Q.modulus, "K": list(pair.K), "rho": pair.outer.rho, "sigma": pair.sigma, "eps": pair.eps},
    )
    if check:
        assert_report(rep)
    return S, rep


def intersect_bohr(B1: BohrSet, B2: BohrSet) -> BohrSet:
    """B(K1, rho) cap B(K2, rho) = B(K1 u K2, rho); a frequency-free set is Z_N."""
    if B1.modulus != B2.modulus:
        raise ValueError("modulus mismatch")
    if B1.d == 0 and B1.members.mask.all():
        return B2
    if B2.d == 0 and B2.members.mask.all():
        return B1
    if abs(B1.rho - B2.rho) > 1e-12:
        raise ValueError("intersection of Bohr sets with different widths is not a Bohr set")
    return build_bohr(B1.modulus, tuple(B1.K) + tuple(B2.K), B1.rho)


def make_chain(B1: BohrSet, B2: BohrSet, eps: float, depth: int = 2) -> list[CentralPair]:
    """Pairs B_{k+1} < B_k < ... < B1 cap B2, each central at eps."""
    cur = intersect_bohr(B1, B2)
    chain = []
    for _ in range(depth):
        pair = central_subset(cur, eps)
        chain.append(pair)
        cur = pair.inner
    return chain


def _product_parts(Q1, c1, Q2, c2):
    if Q1.parts is None or Q2.parts is None:
        return None
    s1 = [(int(v), float(c1[v])) for v in np.flatnonzero(c1 > 1e-15)]
    s2 = [(int(v), float(c2[v])) for v in np.flatnonzero(c2 > 1e-15)]
    out = []
    for w1, p1 in Q1.parts:
        for w2, p2 in Q2.parts:
            if p1.invariant and p2.invariant:
                out.append((w1 * w2, _Diff(p1, 0, p2, 0)))
            else:
                l1 = [(0, 1.0)] if p1.invariant else s1
                l2 = [(0, 1.0)] if p2.invariant else s2
                if len(out) + len(l1) * len(l2) > PART_LIMIT:
                    return None
                out.extend((w1 * w2 * a * b, _Diff(p1, v1, p2, v2)) for v1, a in l1 for v2, b in l2)
            if len(out) > PART_LIMIT:
                return None
    return out


def product_average(Q1: QuadAverage, Q2: QuadAverage, chain: Sequence[CentralPair], check: bool = True):
    """Generalized average Q' with base (B', q1 - q2) within 18 eps of Q1 conj(Q2).

    chain = (pair_hi, pair_lo) with pair_hi: B < (B1 cap B2) and pair_lo: B' < B.
    Returns (Q', reports).
    """
    pair_hi, pair_lo = chain
    N = Q1.modulus
    inter = Q1.window & Q2.window
    if pair_hi.outer.members != inter:
        raise ValueError("chain does not start at the intersection of the bases")
    if pair_lo.outer.members != pair_hi.inner.members:
        raise ValueError("chain links do not match")
    eps = max(pair_hi.eps, pair_lo.eps)
    B = pair_hi.inner.members
    Bp = pair_lo.inner.members
    Bminus = pair_lo.interior.members
    reps = []
    cs = []
    for Q in (Q1, Q2):
        A = _interior(Q.window, B)
        cA = _uniform(A)
        # the intermediate shrink, kept for its own bound
        Mi = _restrict(_smear(Q.M, cA), B)
        Qi = QuadAverage(N, B, Q.q, Mi, None, pair_hi.inner)
        reps.append(CheckReport("L4.1", _sup(Q.values, Qi.values), 4 * eps, {"N": N, "eps": eps}))
        cB = _uniform(Bminus)
        cs.append(np.real(np.fft.ifft(np.fft.fft(cA) * np.fft.fft(cB))))
    T1 = _smear(Q1.M, cs[0])
    T2 = _smear(Q2.M, cs[1])
    M = _restrict(T1 * np.conj(T2), Bp)
    q = Q1.q - Q2.q
    parts = _product_parts(Q1, cs[0], Q2, cs[1])
    out = QuadAverage(N, Bp, q, M, parts, pair_lo.inner)
    rep = CheckReport("L4.2", _sup(Q1.values * np.conj(Q2.values), out.values), 18 * eps, {"N": N, "eps": eps})
    reps.append(rep)
    if check:
        for r in reps:
            assert_report(r)
    return out, reps


# --------------------------------------------------------------------------
# special averages


def build_special_average(B: BohrSet, q: QuadForm, eps: float) -> QuadAverage:
    """Cover by translates x_i + B, make them disjoint greedily and use q(. - x_i) on each piece."""
    N = B.modulus
    d = B.d
    pair = central_subset(B, eps / 5**d)
    sigma = pair.sigma
    inner2 = build_bohr(N, B.K, sigma / 2) if d else full_bohr(N)
    W = inner2.members
    if not W.difference_set(W).issubset(pair.inner.members):
        raise ValueError("B'' - B'' is not inside B'")
    cover = bohr_cover(B)
    if not cover.covered:
        raise ValueError("cover of Z_N failed")
    owner = np.full(N, -1, dtype=np.int64)
    for i, xi in enumerate(cover.translates):
        fresh = np.roll(B.members.mask, xi) & (owner < 0)
        owner[fresh] = i
    xs = np.array(cover.translates, dtype=np.int64)
    vals, dom = q.table()
    y = np.arange(N)[:, None]
    pts = np.mod(y + W.members[None, :] - xs[owner][:, None], N)
    if not np.all(dom[pts]):
        raise ValueError("q is not defined on the shifted pieces")
    avg = _from_table(W, q, vals[pts], inner2)
    # measured specialness
    Qv = avg.values
    x = np.arange(N)
    good = np.zeros(N, dtype=bool)
    for xi in xs:
        match = np.abs(Qv - _e_int(vals[np.mod(x - xi, N)], N)) <= TOL
        match &= dom[np.mod(x - xi, N)]
        ok = np.ones(N, dtype=bool)
        for z in W.members:
            ok &= np.roll(match, -int(z))
        good |= ok
    eps_hat = float((~good).sum()) / N
    avg.special = SpecialCert(eps_hat, len(xs), tuple(int(v) for v in xs), good)
    assert_report(CheckReport("C7.3", eps_hat, eps, {"N": N, "K": list(B.K), "rho": B.rho, "m": len(xs)}))
    return avg


# --------------------------------------------------------------------------
# bilinear rational dichotomy


def _convergents(x: Fraction) -> list[tuple[int, int]]:
    h2, h1, k2, k1 = 0, 1, 1, 0
    a, b = x.numerator, x.denominator
    out = []
    while b:
        t = a // b
        a, b = b, a - t * b
        h2, h1 = h1, t * h1 + h2
        k2, k1 = k1, t * k1 + k2
        out.append((h1, k1))
    return out


def _frac(alpha) -> Fraction:
    a = alpha if isinstance(alpha, Fraction) else Fraction(float(alpha))
    return a - math.floor(a)


def _pigeonhole_rational(alpha: Fraction, limit: float) -> tuple[int, int]:
    """Last convergent p/q with q <= limit; q = 1 rounding when limit < 1."""
    best = None
    for p, q in _convergents(alpha):
        if q <= limit + 1e-12:
            best = (p, q)
        else:
            break
    if best is None:
        best = (round(alpha), 1)
    return best


def _rational_certificate(alpha: Fraction, c: float, bound: float) -> tuple[int, int]:
    """Closest convergent with q <= 2/c when it meets the bound, else the pigeonhole choice."""
    best = None
    for p, q in _convergents(alpha):
        if q > 2 / c + 1e-12:
            break
        best = (p, q)
    if best is not None and abs(alpha - Fraction(*best)) <= bound:
        return best
    return _pigeonhole_rational(alpha, 1 / bound)


@dataclass(frozen=True)
class Dichotomy1D:
    branch: str  # "small_average" | "rational"
    avg: float
    c: float
    p: int | None = None
    q: int | None = None
    approx_err: float = 0.0
    approx_bound: float = 0.0
    consequence_max: float = 0.0
    consequence_bound: float = 0.0

    @property
    def valid(self) -> bool:
        if self.branch == "small_average":
            return self.avg < 2 * self.c
        return (
            self.q <= 2 / self.c + 1e-12
            and self.approx_err <= self.approx_bound + 1e-15
            and self.consequence_max <= self.consequence_bound + 1e-12
        )

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__} | {"valid": self.valid}


def rational_dichotomy_1d(alpha, m1: int, m2: int, c: float, lam: float = 0.0, mu: float = 0.0, nu: float = 0.0) -> Dichotomy1D:
    """Either |E_{x<m1, y<m2} e(alpha x y + lam x + mu y + nu)| < 2c or alpha is near p/q with q <= 2/c."""
    if not 0 < c <= 0.5:
        raise ValueError("c must lie in (0, 1/2]")
    if m1 < 1 or m2 < 1:
        raise ValueError("box lengths must be positive")
    a = _frac(alpha)
    x = np.arange(m1)[:, None]
    y = np.arange(m2)[None, :]
    af = float(a)
    avg = float(abs(np.exp(1j * TWO_PI * (af * x * y + lam * x + mu * y + nu)).mean()))
    if avg < 2 * c:
        return Dichotomy1D("small_average", avg, c)
    Cp = 2.0 / c**2
    p, q = _rational_certificate(a, c, Cp / (m1 * m2))
    err = float(abs(a - Fraction(p, q)))
    xs = np.arange(0, math.floor(c**1.5 * m1 + 1e-12) + 1, q)
    ys = np.arange(0, math.floor(c**1.5 * m2 + 1e-12) + 1, q)
    ph = np.array([[(a * int(u) * int(v)) % 1 for v in ys] for u in xs], dtype=object) if xs.size * ys.size <= 4096 else None
    if ph is not None:
        cmax = max(float(min(t, 1 - t)) for t in ph.ravel())
    else:
        cmax = float(dist_to_int(af * xs[:, None] * ys[None, :]).max())
    return Dichotomy1D("rational", avg, c, int(p), int(q), err, Cp / (m1 * m2), cmax, 2 * c)


@dataclass(frozen=True)
class DichotomyDD:
    branch: str
    avg: float
    c: float
    qs: tuple = ()
    sub_lens: tuple = ()
    entries: tuple = ()
    max_phase: float = 0.0
    bound: float = 0.0
    q_bound: float = 0.0

    @property
    def valid(self) -> bool:
        if self.branch == "small_average":
            return self.avg < 2 * self.c
        ents = all(e["q"] <= 2 / self.c + 1e-12 and e["err"] <= e["bound"] + 1e-15 for e in self.entries)
        return ents and self.max_phase <= self.bound + 1e-12 and all(q <= self.q_bound + 1e-9 for q in self.qs)

    def to_json(self) -> dict:
        return {
            "branch": self.branch,
            "avg": self.avg,
            "c": self.c,
            "qs": list(self.qs),
            "sub_lens": list(self.sub_lens),
            "entries": list(self.entries),
            "max_phase": self.max_phase,
            "bound": self.bound,
            "valid": self.valid,
        }


def _box(lens) -> np.ndarray:
    return np.indices(lens, dtype=np.int64).reshape(len(lens), -1).T


def rational_dichotomy_dd(alphas, lens: Sequence[int], c: float, lam=None, mu=None, nu: float = 0.0) -> DichotomyDD:
    """d-dimensional version on the box prod [0, m_r), one 1d dichotomy per entry."""
    if not 0 < c <= 0.5:
        raise ValueError("c must lie in (0, 1/2]")
    lens = tuple(int(m) for m in lens)
    d = len(lens)
    A = [[_frac(alphas[r][s]) for s in range(d)] for r in range(d)]
    Af = np.array([[float(v) for v in row] for row in A])
    lam = np.zeros(d) if lam is None else np.asarray(lam, dtype=float)
    mu = np.zeros(d) if mu is None else np.asarray(mu, dtype=float)
    H = _box(lens)
    tot = 0j
    for start in range(0, H.shape[0], 2048):
        h = H[start : start + 2048]
        ph = h @ Af @ H.T + (h @ lam)[:, None] + (H @ mu)[None, :] + nu
        tot += np.exp(1j * TWO_PI * ph).sum()
    avg = float(abs(tot)) / H.shape[0] ** 2
    if avg < 2 * c:
        return DichotomyDD("small_average", avg, c)
    Cp = 2.0 / c**2
    qrs = np.ones((d, d), dtype=np.int64)
    entries = []
    for r in range(d):
        for s in range(d):
            lim = lens[r] * lens[s] / Cp
            p, q = _rational_certificate(A[r][s], c, 1 / lim)
            qrs[r, s] = q
            entries.append(
                {"r": r, "s": s, "p": int(p), "q": int(q), "err": float(abs(A[r][s] - Fraction(p, q))), "bound": Cp / (lens[r] * lens[s])}
            )
    qs = tuple(int(np.prod(qrs[r, :]) * np.prod(qrs[:, r])) for r in range(d))
    sub = tuple(math.floor(c**1.5 * lens[r] / qs[r] + 1e-12) + 1 for r in range(d))
    G = _box(sub) * np.array(qs, dtype=np.int64)
    # exact fractional part of sum alpha_rs x_r y_s
    num = [[A[r][s].numerator for s in range(d)] for r in range(d)]
    den = math.lcm(*[A[r][s].denominator for r in range(d) for s in range(d)])
    if den < 2**40 and G.shape[0] ** 2 <= 4_000_000:
        Aint = np.array([[int(A[r][s] * den) for s in range(d)] for r in range(d)], dtype=object)
        mx = 0.0
        for g in G:
            vals = (np.array([int(v) for v in g], dtype=object) @ Aint) @ G.T.astype(object)
            fr = [float(Fraction(int(v) % den, den)) for v in vals]
            mx = max(mx, max(min(t, 1 - t) for t in fr))
    else:
        mx = float(dist_to_int(G @ Af @ G.T).max())
    return DichotomyDD("rational", avg, c, qs, sub, tuple(entries), mx, 2 * d * d * c, (2 / c) ** (2 * d))


# --------------------------------------------------------------------------
# smoothing a linear phase on a progression


@dataclass
class Smoothing:
    h: GroupFn
    f: GroupFn
    centre: Gap
    reports: list

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.reports)


def _phi_table(phi, N: int) -> np.ndarray:
    if callable(phi):
        return np.mod(np.asarray(phi(np.arange(N)), dtype=np.int64), N)
    t = np.asarray(phi)
    if t.shape != (N,):
        raise ValueError("phase table must have length N")
    return np.mod(t.astype(np.int64), N)


def _directional_boundary(P: SubsetZN, Qc: SubsetZN) -> SubsetZN:
    """(P + Q) minus {x : x - Q inside P}: exactly where f * g can differ from f."""
    plus = P.sumset(Qc)
    inside = np.ones(P.modulus, dtype=bool)
    for d in Qc.members:
        inside &= np.roll(P.mask, int(d))
    return plus - SubsetZN(P.modulus, inside)


def smooth_linear_phase(P: Gap, phi, eps: float, check: bool = True) -> Smoothing:
    """h = f * g with f = gamma^{-1} omega^phi 1_P and g the matching phase on the centre."""
    if not P.proper:
        raise ValueError("progression must be proper")
    N = P.modulus
    table = _phi_table(phi, N)
    hc = check_freiman_hom(table, P.members, N)
    if not hc.ok:
        raise ValueError(f"phase is not a Freiman homomorphism on P (witness {hc.witness})")
    d = P.d
    Qc, creps = progression_centre(P, eps)
    gamma = P.size / N
    theta = Qc.size / N
    f = np.zeros(N, dtype=complex)
    f[P.members.members] = _e_int(table[P.members.members], N) / gamma
    g = np.zeros(N, dtype=complex)
    D = Qc.points()
    g[D] = _e_int(table[(P.x0 + D) % N] - table[P.x0], N) / theta
    h = np.fft.ifft(np.fft.fft(f) * np.fft.fft(g)) / N
    hf = GroupFn(N, h)
    diff = np.abs(f - h)
    bd = _directional_boundary(P.members, Qc.members)
    stray = int(np.count_nonzero((diff > TOL) & ~bd.mask))
    dual = u2_dual_norm(hf)
    inst = {"N": N, "gens": list(P.gens), "lens": list(P.lens), "eps": eps}
    reps = [
        CheckReport("L6.4", float(diff.max()), 2 / gamma, inst),
        CheckReport("L6.4(support)", stray, 0, inst),
        CheckReport("L6.3(boundary)", bd.size / N, 3 * eps * gamma, inst),
        CheckReport("L6.5", dual, gamma**-0.5 * theta**-0.25, inst),
        CheckReport("L6.8", dual, gamma**-0.75 * (eps / d) ** (-d / 4), inst),
    ]
    reps.append(creps[1])
    if check:
        for r in reps:
            assert_report(r)
    return Smoothing(hf, GroupFn(N, f), Qc, reps)


# --------------------------------------------------------------------------
# rank dichotomy


@dataclass
class RankDichotomy:
    branch: str  # "u2_small" | "low_rank" | "unavailable"
    rank: RankReport
    alpha: float
    u2: float | None = None
    Qpp: GroupFn | None = None
    sup_dist: float | None = None
    dual_norm: float | None = None
    sub: Gap | None = None
    reports: list = field(default_factory=list)
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.branch != "unavailable" and all(r.passed for r in self.reports if not r.skipped)

    def to_json(self) -> dict:
        return {
            "branch": self.branch,
            "rank": self.rank.to_json(),
            "alpha": self.alpha,
            "u2": self.u2,
            "sup_dist": self.sup_dist,
            "dual_norm": self.dual_norm,
            "sub": None if self.sub is None else self.sub.to_json(),
            "reports": [r.to_json() for r in self.reports],
            "reason": self.reason,
        }


def _default_pair(Q: QuadAverage, alpha: float) -> CentralPair:
    if Q.bohr is None:
        raise ValueError("a central pair is needed when the base is not a Bohr set")
    return central_subset(Q.bohr, alpha)


def _p_coords(P: Gap) -> np.ndarray:
    return P.coordinate_grid()


def rank_dichotomy(
    Q: QuadAverage,
    P: Gap,
    alpha: float,
    eps: float | None = None,
    pair: CentralPair | None = None,
    force: str | None = None,
    check: bool = True,
) -> RankDichotomy:
    """Either ||Q||_{U2} is small (high rank relative to P) or Q is uniformly close to Q'' with bounded U2-dual norm."""
    if not 0 < alpha <= 1 / 20:
        raise ValueError("alpha must lie in (0, 1/20]")
    if not P.proper:
        raise ValueError("progression must be proper")
    N = Q.modulus
    pair = pair or _default_pair(Q, alpha)
    if pair.outer.members != Q.window:
        raise ValueError("pair does not sit on the base of Q")
    Pm = P.members
    if not Pm.sumset(Pm).issubset(pair.inner.members):
        raise ValueError("P + P is not inside the central subset")
    d = P.d
    eta = pair.eps
    if eps is None:
        eps = min(1.0, alpha * d * d)
    rk = rank(Q.q, Pm, pair.outer.members, pair.inner.members)
    inst = {"N": N, "alpha": alpha, "eps": eps, "eta": eta, "d": d, "P": P.to_json()}
    if force != "low" and rk.alpha <= alpha:
        u2 = u2_norm(Q.fn)
        reps = [
            CheckReport("T6.11(high)", u2, (12 * alpha) ** 0.125, inst),
            CheckReport("L5.2", u2, (11 * eta + math.exp(-rk.rank)) ** 0.125, inst),
        ]
        return RankDichotomy("u2_small", rk, alpha, u2=u2, reports=reps)
    return _low_rank_branch(Q, P, alpha, eps, pair, rk, inst, check)


def _low_rank_branch(Q, P, alpha, eps, pair, rk, inst, check) -> RankDichotomy:
    N = Q.modulus
    d = P.d
    eta = pair.eps
    qv, dom = Q.q.table()
    gens = np.array(P.gens, dtype=np.int64)
    bil = Q.q.bilinear()
    betag = np.array([[bil(gens[r], gens[s]) for s in range(d)] for r in range(d)], dtype=np.int64)
    H = _p_coords(P)
    nP = H.shape[0]
    Bint = np.mod(H @ betag @ H.T, N)
    Wm = _e_int(Bint, N)
    X = Wm @ np.conj(Wm).T
    T = X.T @ np.conj(Wm)
    mag = np.abs(T) / nP**2
    # cross-checks against the defining sum
    mean_T = abs(np.sum(T * Wm)) / nP**4
    if abs(mean_T - rk.alpha) > 1e-8:
        raise ValueError("form is not coordinate-bilinear on P; cannot run the constructive branch")
    ia, ib = _argmax_lex(mag)
    best = float(mag[ia, ib])
    pts = P.points()
    ap, bp = pts[ia], pts[ib]
    direct = abs(
        _e_int(qv[(pts[:, None] + pts[None, :] - ap - bp) % N] - qv[(pts[:, None] - ap) % N] - qv[(pts[None, :] - bp) % N], N).mean()
    )
    if abs(direct - best) > 1e-8:
        raise ValueError("coordinate evaluation disagrees with q on P")
    if best < alpha:
        return RankDichotomy("unavailable", rk, alpha, reason="no translate pair reaches alpha", reports=[])
    Af = [[Fraction(int(betag[r, s]) % N, N) for s in range(d)] for r in range(d)]
    Afl = betag.astype(float) / N
    hp, kp = H[ia].astype(float), H[ib].astype(float)
    lam = -(Afl @ kp)
    mu = -(hp @ Afl)
    nu = float(hp @ Afl @ kp)
    c = alpha / 2
    dd = rational_dichotomy_dd(Af, P.lens, c, lam, mu, nu)
    reps = [CheckReport("C6.2", 0.0 if dd.valid else 1.0, 0.0, inst | {"branch": dd.branch})]
    if dd.branch != "rational":
        reps.append(CheckReport("C6.9(avg)", 2 * c, dd.avg, inst))
        return RankDichotomy("unavailable", rk, alpha, reason="bilinear average below 2c", reports=reps)
    qs = np.array(dd.qs, dtype=np.int64)
    e1 = np.mod(qs * gens, N)
    lens2 = [math.floor(c**1.5 * P.lens[r] / (2 * qs[r]) + 1e-12) + 1 for r in range(d)]
    P2 = build_gap(N, P.x0, np.mod(2 * e1, N), lens2)
    if not P2.proper:
        raise ValueError("even subgrid is not proper")
    gamma = P.size / N
    gamma2 = P2.size / N
    reps.append(CheckReport("C6.9(density)", (alpha / 4) ** (4 * d * d) * gamma, gamma2, inst))
    beta1 = np.mod(np.outer(qs, qs) % N * betag, N)
    H2 = P2.coordinate_grid()
    quad = np.mod(2 * np.einsum("ki,ij,kj->k", H2, beta1, H2), N)
    theta = TWO_PI * d * d * alpha
    reps.append(CheckReport("C6.9(phase)", float(np.abs(1 - _e_int(quad, N)).max()), theta, inst))
    O = P2.points()
    phi = np.zeros(N, dtype=np.int64)
    phi[O] = np.mod(qv[O] - quad, N)
    fh = check_freiman_hom(phi, P2.members, N)
    reps.append(CheckReport("C6.9(freiman)", 0.0 if fh.ok else 1.0, 0.0, inst))
    sm = smooth_linear_phase(P2, phi, eps, check=False) if fh.ok else None
    if sm is not None:
        reps.extend(sm.reports)
    Qc = progression_centre(P2, eps)[0]
    Hc = Qc.coordinate_grid()
    # index of centre point x0 + d inside the P2 grid (C order)
    strides = np.array([int(np.prod(lens2[r + 1 :])) for r in range(d)], dtype=np.int64)
    kc = Hc @ strides
    Dc = Qc.points()
    Qpp = _assemble(Q, O, quad, Dc, kc, gamma2, Qc.size / N)
    if Qpp is None:
        reps.append(CheckReport.skip("C6.9(sup)", "too many components to assemble", inst))
        return RankDichotomy("unavailable", rk, alpha, sub=P2, reports=reps, reason="too many components")
    Qf = GroupFn(N, Qpp)
    sup = _sup(Q.values, Qpp)
    dual = u2_dual_norm(Qf)
    rho = pair.outer.rho
    reps.append(CheckReport("C6.9(sup)", sup, 2 * theta + 2 * eps + 7 * eta, inst))
    reps.append(CheckReport("C6.9(dual)", dual, gamma2**-0.75 * (eps / d) ** (-d / 4), inst))
    if abs(eps - min(1.0, alpha * d * d)) < 1e-15 and eta <= alpha + 1e-15:
        reps.append(CheckReport("T6.11(low,sup)", sup, 16 * d * d * alpha, inst))
        reps.append(CheckReport("T6.11(low,dual)", dual, (4 / alpha) ** (4 * d * d) * (800 * d * d / rho) ** d, inst))
    if check:
        for r in reps:
            if r.lemma_id in ("C6.9(sup)", "C6.9(dual)", "C6.9(phase)", "C6.9(freiman)", "C6.2"):
                assert_report(r)
    return RankDichotomy("low_rank", rk, alpha, Qpp=Qf, sup_dist=sup, dual_norm=dual, sub=P2, reports=reps)


def _assemble(Q: QuadAverage, O, quad, Dc, kc, gamma2, theta) -> np.ndarray | None:
    """Q'' = sum_parts w (N |W|)^{-1} sum_y sum_{t in y + B^-} (F_{y,t} * G_{y,t})."""
    if Q.parts is None:
        return None
    N = Q.modulus
    W = Q.window
    P2mask = np.zeros(N, dtype=bool)
    P2mask[O] = True
    Bm = _interior(W, SubsetZN(N, P2mask)).members
    out = np.zeros(N, dtype=complex)
    if Bm.size == 0:
        return out
    for w, prov in Q.parts:
        ys = [0] if prov.invariant else range(N)
        scale = w * Bm.size / (N * W.size) if prov.invariant else w / (N * W.size)
        for y in ys:
            ts = np.arange(N) if prov.invariant else np.mod(y + Bm, N)
            pts = np.mod(ts[:, None] + O[None, :], N)
            psi = np.mod(np.asarray(prov.exp(np.full(pts.shape, y), pts)) - quad[None, :], N)
            F = np.zeros((ts.size, N), dtype=complex)
            rows = np.arange(ts.size)[:, None]
            F[rows, pts] = _e_int(psi, N) / gamma2
            G = np.zeros((ts.size, N), dtype=complex)
            G[:, Dc] = _e_int(psi[:, kc] - psi[:, [0]], N) / theta
            Hrows = np.fft.ifft(np.fft.fft(F, axis=1) * np.fft.fft(G, axis=1), axis=1) / N
            out += scale * Hrows.sum(axis=0)
    return out


# --------------------------------------------------------------------------
# high-rank inequalities


def high_rank_checks(Q: QuadAverage, P, pair: CentralPair, Qother: QuadAverage | None = None, chain=None) -> list[CheckReport]:
    """Literal evaluation of the high-rank bounds with the measured rank."""
    N = Q.modulus
    Pm = _members(P)
    eps = pair.eps
    inst = {"N": N, "eps": eps, "P_size": Pm.size}
    out = []
    try:
        rk = rank(Q.q, Pm, pair.outer.members, pair.inner.members)
    except ValueError as exc:
        return [CheckReport.skip("L5.1", str(exc), inst), CheckReport.skip("L5.2", str(exc), inst)]
    er = math.exp(-rk.rank) if not math.isinf(rk.rank) else 0.0
    inst = inst | {"rank": rk.rank}
    if eps < 1 / 20:
        out.append(CheckReport("L5.1", abs(Q.fn.mean()), (11 * eps + er) ** 0.25, inst))
    else:
        out.append(CheckReport.skip("L5.1", "needs eps < 1/20", inst))
    out.append(CheckReport("L5.2", u2_norm(Q.fn), (11 * eps + er) ** 0.125, inst))
    if Qother is not None:
        out.append(_cor53(Q, Qother, Pm, eps, chain))
    return out


def _cor53(Q, Qo, Pm, eps, chain) -> CheckReport:
    N = Q.modulus
    inst = {"N": N, "eps": eps}
    try:
        if chain is None:
            if Q.bohr is None or Qo.bohr is None:
                raise ValueError("bases are not Bohr sets")
            chain = make_chain(Q.bohr, Qo.bohr, eps, depth=3)
        B2, B3 = chain[1].inner, chain[2].inner
        if not Pm.issubset(B3.members):
            raise ValueError("P is not inside B3")
        rk = rank(Q.q - Qo.q, Pm, B2.members, B3.members)
    except Exception as exc:  # chain construction failures become skips
        return CheckReport.skip("C5.3", str(exc), inst)
    er = math.exp(-rk.rank) if not math.isinf(rk.rank) else 0.0
    lhs = abs(inner(Q.fn, Qo.fn))
    return CheckReport("C5.3", lhs, 18 * eps + (11 * eps + er) ** 0.25, inst | {"rank": rk.rank})


def close_in_dual_check(Q: QuadAverage, Qp: QuadAverage, Q0: QuadAverage, P: Gap | None = None, zeta: float | None = None) -> CheckReport:
    """Q0 conj(Q') is uniformly close to a function of bounded U2-dual norm when <Q, Q'> >= zeta."""
    N = Q.modulus
    corr = abs(inner(Q.fn, Qp.fn))
    zeta = corr if zeta is None else zeta
    inst = {"N": N, "zeta": zeta, "corr": corr}
    if corr < zeta - 1e-12 or zeta <= 0:
        return CheckReport.skip("L7.1", "correlation below zeta", inst)
    if Q0.window != Q.window:
        return CheckReport.skip("L7.1", "Q0 must share the base of Q", inst)
    eta = zeta / 36
    try:
        chain = make_chain(Q.bohr, Qp.bohr, eta, depth=2)
        Q0pp, _ = product_average(Q0, Qp, chain)
        alpha = zeta**8 / 2**9
        inner_pair = central_subset(chain[1].inner, alpha)
        if P is None:
            from .gap import find_gap_in_bohr

            P = find_gap_in_bohr(inner_pair.inner).gap
        # P + P has to fit inside the central subset of the product's base
        if not P.members.sumset(P.members).issubset(inner_pair.inner.members):
            P = build_gap(N, 0, (1,), (1,))
        res = rank_dichotomy(Q0pp, P, alpha, pair=inner_pair, force="low", check=False)
    except Exception as exc:
        return CheckReport.skip("L7.1", str(exc), inst)
    if res.branch != "low_rank":
        return CheckReport.skip("L7.1", res.reason or "constructive branch unavailable", inst)
    d = max(P.d, 1)
    lhs = _sup(Q0.values * np.conj(Qp.values), res.Qpp.values)
    return CheckReport("L7.1", lhs, zeta / 2 + d * d * zeta**8 / 2**5, inst | {"dual": res.dual_norm})
