"""Functions on Z_N, the normalized Fourier transform, convolution and measures.

Conventions used everywhere in the package:

    omega = e^{2 pi i / N}
    f^(r) = E_x f(x) omega^{-r x}
    (f * g)(x) = E_d f(x - d) g(d)
    <f, g> = E_x f(x) conj(g(x))
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class ModulusMismatch(ValueError):
    pass


def e(theta) -> complex | np.ndarray:
    """e(theta) = exp(2 pi i theta)."""
    return np.exp(1j * TWO_PI * np.asarray(theta, dtype=float)) if np.ndim(theta) else complex(
        np.exp(1j * TWO_PI * float(theta))
    )


def omega_pow(k, N: int):
    """omega^k with the exponent reduced mod N first (exact for integer k)."""
    k = np.asarray(k)
    if np.issubdtype(k.dtype, np.integer):
        k = np.mod(k, N)
    return np.exp(1j * TWO_PI * k / N)


def dist_to_int(theta) -> float | np.ndarray:
    """||theta||, the distance from theta to the nearest integer."""
    t = np.asarray(theta, dtype=float)
    out = np.abs(t - np.round(t))
    return float(out) if out.ndim == 0 else out


def check_modulus(N: int) -> int:
    N = int(N)
    if N < 1:
        raise ValueError(f"modulus must be positive, got {N}")
    return N


def require_odd(N: int) -> int:
    N = check_modulus(N)
    if N < 3 or N % 2 == 0:
        raise ValueError(f"modulus must be odd and at least 3, got {N}")
    return N


@dataclass(frozen=True, eq=False)
class GroupFn:
    """A complex-valued function on Z_N stored as its table of values."""

    modulus: int
    values: np.ndarray

    def __post_init__(self):
        N = check_modulus(self.modulus)
        vals = np.array(self.values, dtype=complex).reshape(-1)
        if vals.shape[0] != N:
            raise ValueError(f"expected {N} values, got {vals.shape[0]}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "modulus", N)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, N: int, fn: Callable[[np.ndarray], np.ndarray]) -> "GroupFn":
        return cls(N, fn(np.arange(N)))

    @classmethod
    def constant(cls, N: int, c: complex = 1.0) -> "GroupFn":
        return cls(N, np.full(N, c, dtype=complex))

    @classmethod
    def zero(cls, N: int) -> "GroupFn":
        return cls.constant(N, 0.0)

    @classmethod
    def character(cls, N: int, r: int) -> "GroupFn":
        return cls(N, omega_pow(r * np.arange(N), N))

    @classmethod
    def quadratic_phase(cls, N: int, a: int, b: int = 0, c: int = 0) -> "GroupFn":
        x = np.arange(N, dtype=np.int64)
        return cls(N, omega_pow(a * x * x + b * x + c, N))

    @classmethod
    def indicator(cls, N: int, members: Iterable[int]) -> "GroupFn":
        v = np.zeros(N, dtype=complex)
        for m in members:
            v[int(m) % N] = 1.0
        return cls(N, v)

    def __len__(self):
        return self.modulus

    def __call__(self, x):
        return self.values[np.mod(x, self.modulus)]

    def _other(self, other):
        if isinstance(other, GroupFn):
            if other.modulus != self.modulus:
                raise ModulusMismatch(f"{self.modulus} != {other.modulus}")
            return other.values
        return other

    def __add__(self, other):
        return GroupFn(self.modulus, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GroupFn(self.modulus, self.values - self._other(other))

    def __rsub__(self, other):
        return GroupFn(self.modulus, self._other(other) - self.values)

    def __mul__(self, other):
        return GroupFn(self.modulus, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return GroupFn(self.modulus, self.values / c)

    def __neg__(self):
        return GroupFn(self.modulus, -self.values)

    def conj(self) -> "GroupFn":
        return GroupFn(self.modulus, np.conj(self.values))

    def shift(self, t: int) -> "GroupFn":
        """x -> f(x + t)."""
        return GroupFn(self.modulus, np.roll(self.values, -int(t)))

    def reflect(self) -> "GroupFn":
        """x -> f(-x)."""
        return GroupFn(self.modulus, self.values[np.mod(-np.arange(self.modulus), self.modulus)])

    def modulate(self, r: int) -> "GroupFn":
        return self * GroupFn.character(self.modulus, r)

    def mean(self) -> complex:
        return complex(np.mean(self.values))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values))) if self.modulus else 0.0

    def l1(self) -> float:
        return float(np.mean(np.abs(self.values)))

    def l2(self) -> float:
        return float(math.sqrt(np.mean(np.abs(self.values) ** 2)))

    def support(self, tol: float = 0.0) -> "SubsetZN":
        return SubsetZN(self.modulus, np.abs(self.values) > tol)

    def allclose(self, other: "GroupFn", tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.values - self._other(other)), initial=0.0) <= tol)

    def to_json(self) -> dict:
        return {
            "modulus": self.modulus,
            "values": [[float(z.real), float(z.imag)] for z in self.values],
        }

    @classmethod
    def from_json(cls, obj) -> "GroupFn":
        if isinstance(obj, dict):
            N = obj.get("modulus")
            vals = obj.get("values")
        else:
            vals, N = obj, None
        if vals is None:
            raise ValueError("missing 'values'")
        out = []
        for i, pair in enumerate(vals):
            if isinstance(pair, (int, float)):
                out.append(complex(pair))
                continue
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise ValueError(f"values[{i}]: expected [re, im] pair, got {pair!r}")
            out.append(complex(float(pair[0]), float(pair[1])))
        if N is None:
            N = len(out)
        return cls(int(N), np.array(out))


@dataclass(frozen=True, eq=False)
class Spectrum:
    modulus: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.shape[0] != self.modulus:
            raise ValueError("coefficient count does not match modulus")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __getitem__(self, r):
        return self.coeffs[np.mod(r, self.modulus)]

    def abs(self) -> np.ndarray:
        return np.abs(self.coeffs)


class SubsetZN:
    """A subset of Z_N held as a boolean mask."""

    __slots__ = ("modulus", "mask", "_members")

    def __init__(self, modulus: int, mask):
        N = check_modulus(modulus)
        m = np.array(mask, dtype=bool).reshape(-1)
        if m.shape[0] != N:
            raise ValueError(f"mask length {m.shape[0]} != modulus {N}")
        m.setflags(write=False)
        self.modulus = N
        self.mask = m
        self._members = None

    @classmethod
    def from_members(cls, N: int, members: Iterable[int]) -> "SubsetZN":
        m = np.zeros(N, dtype=bool)
        idx = np.fromiter((int(x) for x in members), dtype=np.int64)
        if idx.size:
            m[np.mod(idx, N)] = True
        return cls(N, m)

    @classmethod
    def full(cls, N: int) -> "SubsetZN":
        return cls(N, np.ones(N, dtype=bool))

    @classmethod
    def empty(cls, N: int) -> "SubsetZN":
        return cls(N, np.zeros(N, dtype=bool))

    @property
    def members(self) -> np.ndarray:
        if self._members is None:
            mem = np.flatnonzero(self.mask)
            mem.setflags(write=False)
            self._members = mem
        return self._members

    @property
    def size(self) -> int:
        return int(self.members.shape[0])

    def __len__(self):
        return self.size

    @property
    def density(self) -> Fraction:
        return Fraction(self.size, self.modulus)

    def __contains__(self, x) -> bool:
        return bool(self.mask[int(x) % self.modulus])

    def __iter__(self):
        return iter(int(x) for x in self.members)

    def __eq__(self, other):
        return (
            isinstance(other, SubsetZN)
            and other.modulus == self.modulus
            and bool(np.array_equal(other.mask, self.mask))
        )

    def __hash__(self):
        return hash((self.modulus, self.mask.tobytes()))

    def __repr__(self):
        if self.size <= 12:
            return f"SubsetZN({self.modulus}, {list(self)})"
        return f"SubsetZN({self.modulus}, |S|={self.size})"

    def _check(self, other: "SubsetZN"):
        if other.modulus != self.modulus:
            raise ModulusMismatch(f"{self.modulus} != {other.modulus}")

    def __and__(self, other):
        self._check(other)
        return SubsetZN(self.modulus, self.mask & other.mask)

    def __or__(self, other):
        self._check(other)
        return SubsetZN(self.modulus, self.mask | other.mask)

    def __sub__(self, other):
        """Set difference."""
        self._check(other)
        return SubsetZN(self.modulus, self.mask & ~other.mask)

    def issubset(self, other: "SubsetZN") -> bool:
        self._check(other)
        return bool(np.all(~self.mask | other.mask))

    def isdisjoint(self, other: "SubsetZN") -> bool:
        self._check(other)
        return not bool(np.any(self.mask & other.mask))

    def translate(self, t: int) -> "SubsetZN":
        return SubsetZN(self.modulus, np.roll(self.mask, int(t)))

    def negate(self) -> "SubsetZN":
        return SubsetZN(self.modulus, self.mask[np.mod(-np.arange(self.modulus), self.modulus)])

    def is_symmetric(self) -> bool:
        return self == self.negate()

    def sumset(self, other: "SubsetZN") -> "SubsetZN":
        self._check(other)
        N = self.modulus
        out = np.zeros(N, dtype=bool)
        small, big = (self, other) if self.size <= other.size else (other, self)
        for t in small.members:
            out |= np.roll(big.mask, int(t))
        return SubsetZN(N, out)

    def difference_set(self, other: "SubsetZN") -> "SubsetZN":
        return self.sumset(other.negate())

    def dilate_sum(self, k: int) -> "SubsetZN":
        """k-fold sumset kS (k >= 1)."""
        out = self
        for _ in range(k - 1):
            out = out.sumset(self)
        return out

    def indicator(self) -> GroupFn:
        return GroupFn(self.modulus, self.mask.astype(complex))


@lru_cache(maxsize=64)
def _dft_matrix(N: int) -> np.ndarray:
    k = np.outer(np.arange(N, dtype=np.int64), np.arange(N, dtype=np.int64)) % N
    m = np.exp(-1j * TWO_PI * k / N)
    m.setflags(write=False)
    return m


def dft(f: GroupFn, fast: bool = False) -> Spectrum:
    """Normalized transform f^(r) = E_x f(x) omega^{-rx}.

    The default is the direct matrix product with exactly reduced exponents;
    ``fast=True`` routes through numpy's FFT.
    """
    N = f.modulus
    if fast:
        return Spectrum(N, np.fft.fft(f.values) / N)
    return Spectrum(N, _dft_matrix(N) @ f.values / N)


def idft(s: Spectrum, fast: bool = False) -> GroupFn:
    """Inverse: f(x) = sum_r f^(r) omega^{rx}."""
    N = s.modulus
    if fast:
        return GroupFn(N, np.fft.ifft(s.coeffs) * N)
    return GroupFn(N, np.conj(_dft_matrix(N)) @ s.coeffs)


def dft_values(values: np.ndarray) -> np.ndarray:
    """Normalized transform along the last axis (batched)."""
    N = values.shape[-1]
    return np.fft.fft(values, axis=-1) / N


def convolve(f: GroupFn, g: GroupFn, method: str = "direct") -> GroupFn:
    """(f * g)(x) = E_d f(x - d) g(d)."""
    if f.modulus != g.modulus:
        raise ModulusMismatch(f"{f.modulus} != {g.modulus}")
    N = f.modulus
    if method == "spectral":
        return idft(Spectrum(N, dft(f).coeffs * dft(g).coeffs))
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    idx = np.mod(np.arange(N)[:, None] - np.arange(N)[None, :], N)
    return GroupFn(N, (f.values[idx] @ g.values) / N)


def convolve_fast(f: GroupFn, g: GroupFn) -> GroupFn:
    if f.modulus != g.modulus:
        raise ModulusMismatch(f"{f.modulus} != {g.modulus}")
    N = f.modulus
    return GroupFn(N, np.fft.ifft(np.fft.fft(f.values) * np.fft.fft(g.values)) / N)


def characteristic_measure(S: SubsetZN) -> GroupFn:
    """mu_S = density(S)^{-1} 1_S, so that E_x mu_S(x) = 1."""
    if S.size == 0:
        raise ValueError("characteristic measure of the empty set")
    d = S.density
    scale = d.denominator / d.numerator
    return GroupFn(S.modulus, S.mask.astype(complex) * scale)


def average_over(values: np.ndarray, S: SubsetZN) -> complex:
    """E_{x in S} values[x]."""
    if S.size == 0:
        raise ValueError("average over the empty set")
    return complex(np.mean(values[S.members]))


def as_values(f) -> np.ndarray:
    return f.values if isinstance(f, GroupFn) else np.asarray(f, dtype=complex)


def residues(xs: Sequence[int], N: int) -> np.ndarray:
    return np.mod(np.asarray(xs, dtype=np.int64), N)
