import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uniformity_lab.bohr import build_bohr
from uniformity_lab.generators import rand_complex_disc, rand_interval, randpm1
from uniformity_lab.unorms import (
    inner,
    local_u3,
    norm,
    u2_dual_norm,
    u2_fourth_combinatorial,
    u2_norm,
    u3_norm,
    u3_norm_direct,
)
from uniformity_lab.zn_core import GroupFn, SubsetZN


def u3_oracle(vals):
    """E over (x, a, b, c) of the 8-fold product, by explicit index arithmetic."""
    f = np.asarray(vals, dtype=complex)
    N = len(f)
    x, a, b, c = np.meshgrid(*(np.arange(N),) * 4, indexing="ij")
    tot = np.ones(x.shape, dtype=complex)
    for e1, e2, e3 in itertools.product((0, 1), repeat=3):
        v = f[(x + e1 * a + e2 * b + e3 * c) % N]
        tot = tot * (np.conj(v) if (e1 + e2 + e3) % 2 else v)
    return float(np.real(tot.mean())) ** 0.125


def u2_oracle(vals):
    f = list(vals)
    N = len(f)
    s = 0
    for x in range(N):
        for a in range(N):
            for b in range(N):
                s += f[x] * np.conj(f[(x + a) % N]) * np.conj(f[(x + b) % N]) * f[(x + a + b) % N]
    return float(np.real(s) / N**3) ** 0.25


def test_u2_examples():
    assert u2_norm(GroupFn.constant(9)) == pytest.approx(1.0, abs=1e-12)
    for N in (5, 16, 31):
        assert u2_norm(GroupFn.indicator(N, [0])) == pytest.approx(N**-0.75, abs=1e-12)
    assert u2_norm(GroupFn.quadratic_phase(13, 1)) == pytest.approx(13**-0.25, abs=1e-12)


def test_u2_routes_agree_with_oracle():
    f = rand_complex_disc(15, 8)
    ref = u2_oracle(f.values)
    assert u2_norm(f) == pytest.approx(ref, abs=1e-10)
    assert u2_fourth_combinatorial(f) ** 0.25 == pytest.approx(ref, abs=1e-10)
    assert u2_norm(f, method="combinatorial") == pytest.approx(ref, abs=1e-10)


def test_u3_examples():
    assert u3_norm(GroupFn.constant(11)) == pytest.approx(1.0, abs=1e-12)
    for N in (7, 13, 31, 101):
        assert u3_norm(GroupFn.quadratic_phase(N, 1)) == pytest.approx(1.0, abs=1e-10)


def test_u3_matches_direct_sum_on_z32():
    f = randpm1(32, 7)
    assert u3_norm(f) == pytest.approx(u3_oracle(f.values), abs=1e-8)


def test_u3_direct_route_matches_oracle():
    f = rand_complex_disc(12, 1)
    assert u3_norm_direct(f) == pytest.approx(u3_oracle(f.values), abs=1e-10)


def test_dual_norm_examples():
    assert u2_dual_norm(GroupFn.character(17, 5)) == pytest.approx(1.0, abs=1e-12)
    two = GroupFn.character(17, 5) + GroupFn.character(17, 2)
    assert u2_dual_norm(two) == pytest.approx(2**0.75, abs=1e-12)


def test_inner_examples():
    assert abs(inner(GroupFn.character(10, 1), GroupFn.character(10, 3))) < 1e-14
    f, g = rand_complex_disc(64, 1), rand_complex_disc(64, 2)
    ref = sum(f.values[x] * np.conj(g.values[x]) for x in range(64)) / 64
    assert abs(inner(f, g) - ref) < 1e-12


@settings(max_examples=40, deadline=None)
@given(N=st.sampled_from([15, 31, 63]), seed=st.integers(0, 2**32))
def test_monotone_u2_below_u3(N, seed):
    f = rand_interval(N, seed)
    assert u2_norm(f) <= u3_norm(f) + 1e-12


@settings(max_examples=40, deadline=None)
@given(N=st.integers(2, 64), seed=st.integers(0, 2**32))
def test_nesting_duality(N, seed):
    f, g = rand_complex_disc(N, seed), rand_complex_disc(N, seed ^ 0xABCDEF)
    assert abs(inner(f, g)) <= u2_norm(f) * u2_dual_norm(g) + 1e-9


@settings(max_examples=30, deadline=None)
@given(N=st.integers(2, 80), seed=st.integers(0, 2**32), t=st.integers(0, 1000), r=st.integers(0, 1000))
def test_u2_translation_and_modulation_invariance(N, seed, t, r):
    f = rand_complex_disc(N, seed)
    base = u2_norm(f)
    assert u2_norm(f.shift(t)) == pytest.approx(base, abs=1e-10)
    assert u2_norm(f.modulate(r)) == pytest.approx(base, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(N=st.sampled_from([7, 15, 31]), seed=st.integers(0, 2**32), a=st.integers(0, 100), b=st.integers(0, 100))
def test_u3_quadratic_modulation_invariance(N, seed, a, b):
    f = rand_complex_disc(N, seed)
    assert u3_norm(f * GroupFn.quadratic_phase(N, a, b)) == pytest.approx(u3_norm(f), abs=1e-9)


def test_norm_dispatch():
    f = rand_complex_disc(9, 3)
    assert norm(f, "l2").value == pytest.approx(math.sqrt(np.mean(np.abs(f.values) ** 2)))
    assert norm(f, "linf").value == pytest.approx(np.max(np.abs(f.values)))
    with pytest.raises(ValueError):
        norm(f, "u4")


def test_local_u3_self_correlation():
    N = 31
    B = build_bohr(N, [1], 1.0)
    q = GroupFn.quadratic_phase(N, 4, 9)
    res = local_u3(q, B, y=3)
    assert res.value == pytest.approx(1.0, abs=1e-12)
    assert (res.a, res.b) == (4, 9)
    assert local_u3(GroupFn.zero(N), B).value == 0.0


def test_local_u3_matches_exhaustive_search():
    N = 31
    f = randpm1(N, 2)
    B = build_bohr(N, [1], 1.0)
    S = list(B.members)
    best = 0.0
    for a in range(N):
        for b in range(N):
            v = abs(sum(f.values[x] * np.exp(-2j * np.pi * (a * x * x + b * x) / N) for x in S)) / len(S)
            best = max(best, v)
    assert local_u3(f, B).value == pytest.approx(best, abs=1e-12)


def test_local_u3_accepts_subset():
    f = randpm1(13, 1)
    assert local_u3(f, SubsetZN.full(13)).value <= 1.0
