"""Uniformity norms on Z_N and the local quadratic correlation search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .zn_core import GroupFn, ModulusMismatch, SubsetZN, dft, omega_pow


@dataclass(frozen=True)
class NormReport:
    norm_id: str
    value: float
    method: str

    def to_json(self) -> dict:
        return {"norm_id": self.norm_id, "value": self.value, "method": self.method}


@dataclass(frozen=True)
class LocalCorrelation:
    value: float
    a: int
    b: int
    c: int
    family: str = "global quadratic ax^2+bx+c restricted to B+y"

    def to_json(self) -> dict:
        return {"value": self.value, "a": self.a, "b": self.b, "c": self.c, "family": self.family}


def _vals(f) -> np.ndarray:
    return f.values if isinstance(f, GroupFn) else np.asarray(f, dtype=complex)


def inner(f: GroupFn, g: GroupFn) -> complex:
    """<f, g> = E_x f(x) conj(g(x))."""
    if f.modulus != g.modulus:
        raise ModulusMismatch(f"{f.modulus} != {g.modulus}")
    return complex(np.mean(f.values * np.conj(g.values)))


def u2_norm(f: GroupFn, method: str = "spectral") -> float:
    if method == "spectral":
        c = dft(f).abs()
        return float(np.sum(c**4) ** 0.25)
    if method == "combinatorial":
        return float(max(u2_fourth_combinatorial(f), 0.0) ** 0.25)
    raise ValueError(f"unknown method {method!r}")


def u2_fourth_combinatorial(f: GroupFn) -> float:
    """E_a |E_x f(x) conj f(x+a)|^2, which equals the fourth power of U^2."""
    v = f.values
    N = f.modulus
    idx = (np.arange(N)[:, None] + np.arange(N)[None, :]) % N  # [a, x] -> x + a
    autocorr = np.mean(v[None, :] * np.conj(v[idx]), axis=1)
    return float(np.mean(np.abs(autocorr) ** 2))


def u2_report(f: GroupFn, method: str = "spectral") -> NormReport:
    return NormReport("u2", u2_norm(f, method), method)


def _u2_fourth_batched(rows: np.ndarray) -> np.ndarray:
    """Fourth powers of U^2 for each row of a 2-D array."""
    N = rows.shape[-1]
    spec = np.fft.fft(rows, axis=-1) / N
    return np.sum(np.abs(spec) ** 4, axis=-1)


def u3_norm(f: GroupFn) -> float:
    """(E_c ||f conj f(. + c)||_{U^2}^4)^{1/8}."""
    v = f.values
    N = f.modulus
    idx = (np.arange(N)[:, None] + np.arange(N)[None, :]) % N  # [c, x] -> x + c
    derivs = v[None, :] * np.conj(v[idx])
    s = float(np.mean(_u2_fourth_batched(derivs)))
    return max(s, 0.0) ** 0.125


def u3_norm_direct(f: GroupFn) -> float:
    """Literal average over (x, a, b, c) of the eight-term product. O(N^4)."""
    v = f.values
    N = f.modulus
    r = np.arange(N)
    total = 0.0 + 0.0j
    for x in range(N):
        a = r[:, None, None]
        b = r[None, :, None]
        c = r[None, None, :]
        prod = (
            v[x]
            * np.conj(v[(x + a) % N])
            * np.conj(v[(x + b) % N])
            * np.conj(v[(x + c) % N])
            * v[(x + a + b) % N]
            * v[(x + a + c) % N]
            * v[(x + b + c) % N]
            * np.conj(v[(x + a + b + c) % N])
        )
        total += prod.sum()
    val = (total / N**4).real
    return max(float(val), 0.0) ** 0.125


def u2_dual_norm(f: GroupFn) -> float:
    """(sum_r |f^(r)|^{4/3})^{3/4}."""
    c = dft(f).abs()
    return float(np.sum(c ** (4.0 / 3.0)) ** 0.75)


def norm(f: GroupFn, norm_id: str) -> NormReport:
    if norm_id == "u2":
        return u2_report(f)
    if norm_id == "u3":
        return NormReport("u3", u3_norm(f), "spectral")
    if norm_id == "u2_dual":
        return NormReport("u2_dual", u2_dual_norm(f), "spectral")
    if norm_id == "l1":
        return NormReport("l1", f.l1(), "combinatorial")
    if norm_id == "l2":
        return NormReport("l2", f.l2(), "combinatorial")
    if norm_id == "linf":
        return NormReport("linf", f.sup(), "combinatorial")
    raise ValueError(f"unknown norm {norm_id!r}")


def _members_of(B) -> SubsetZN:
    if isinstance(B, SubsetZN):
        return B
    mem = getattr(B, "members", None)
    if isinstance(mem, SubsetZN):
        return mem
    raise TypeError("expected a BohrSet or SubsetZN")


def quadratic_correlation_table(f: GroupFn, S: SubsetZN) -> np.ndarray:
    """T[a, b] = |E_{x in S} f(x) omega^{-(a x^2 + b x)}|."""
    N = f.modulus
    if S.size == 0:
        raise ValueError("empty window")
    x = np.arange(N, dtype=np.int64)
    g = f.values * S.mask
    chirps = omega_pow(-np.outer(x, x * x), N)  # [a, x] -> omega^{-a x^2}
    rows = g[None, :] * chirps
    # sum_x rows[a, x] omega^{-b x}
    sums = np.fft.fft(rows, axis=1)
    return np.abs(sums) / S.size


def _argmax_lex(table: np.ndarray, tol: float = 1e-12) -> tuple[int, int]:
    best = table.max()
    hits = np.argwhere(table >= best - tol)
    a, b = hits[0]  # argwhere is row-major, hence lexicographic
    return int(a), int(b)


def local_u3(f: GroupFn, B, y: int = 0) -> LocalCorrelation:
    """Best correlation of f with a quadratic phase on the window B + y.

    Searches omega^{a x^2 + b x + c} over all (a, b); c only rotates the
    average so the reported maximizer has c = 0.
    """
    S = _members_of(B).translate(y)
    if S.modulus != f.modulus:
        raise ModulusMismatch(f"{S.modulus} != {f.modulus}")
    table = quadratic_correlation_table(f, S)
    a, b = _argmax_lex(table)
    return LocalCorrelation(float(table[a, b]), a, b, 0)
