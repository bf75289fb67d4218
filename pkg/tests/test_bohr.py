import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uniformity_lab.bohr import (
    NoRegularWidth,
    averaging_checks,
    bohr_cover,
    boundary_lemma_check,
    build_bohr,
    central_subset,
    check_central,
    cover_report,
    find_regular,
    full_bohr,
    is_regular,
    sigma_window,
)
from uniformity_lab.generators import SplitMix64, rand_unimodular
from uniformity_lab.zn_core import GroupFn, SubsetZN


def bohr_oracle(N, K, rho):
    return [x for x in range(N) if all(abs(cmath.exp(2j * cmath.pi * r * x / N) - 1) <= rho + 1e-12 for r in K)]


def test_build_examples():
    assert full_bohr(13).size == 13
    assert build_bohr(13, [], 0.3).size == 13
    assert build_bohr(13, [0], 0.3).size == 13
    B = build_bohr(12, [1], 1.0)
    assert sorted(B.members) == [0, 1, 2, 10, 11]
    assert float(B.density) == pytest.approx(5 / 12)


@settings(max_examples=40, deadline=None)
@given(N=st.integers(3, 256), K=st.lists(st.integers(0, 300), max_size=3), rho=st.floats(0.01, 2.0))
def test_membership_matches_oracle(N, K, rho):
    B = build_bohr(N, K, rho)
    assert sorted(B.members) == bohr_oracle(N, K, rho)
    assert 0 in B and B.members.is_symmetric()


@settings(max_examples=20, deadline=None)
@given(N=st.integers(3, 120), K=st.lists(st.integers(1, 50), min_size=1, max_size=2), r1=st.floats(0.05, 1.0), r2=st.floats(0.05, 1.0))
def test_sum_of_bohr_sets_is_inside(N, K, r1, r2):
    A, B = build_bohr(N, K, r1), build_bohr(N, K, r2)
    assert A.members.sumset(B.members).issubset(build_bohr(N, K, r1 + r2).members)


def test_full_group_is_regular():
    assert is_regular(full_bohr(101)).regular


def test_regularity_fails_just_below_a_jump():
    N = 101
    jump = 2 * math.sin(math.pi / N)  # |B({1}, rho)| goes from 1 to 3 here
    B = build_bohr(N, [1], jump / 1.0005)
    assert B.size == 1
    res = is_regular(B, [0.001])
    assert not res.regular and res.worst_eps == 0.001


def test_find_regular_examples():
    assert find_regular(101, [], 0.4).rho == 0.4
    B = find_regular(101, [1], 0.5)
    assert 0.5 <= B.rho <= 1.0 and is_regular(B).regular
    B2 = find_regular(101, [1, 10], 0.8)
    assert 0.8 <= B2.rho <= 1.6 and is_regular(B2).regular


def test_find_regular_reports_failure():
    # a one-step scan tries only 2 rho0, placed just below the first jump
    jump = 2 * math.sin(math.pi / 101)
    with pytest.raises(NoRegularWidth):
        find_regular(101, [1], jump / 2.001, steps=1, eps_grid=[0.001])


@pytest.mark.parametrize("N", [101, 401])
@pytest.mark.parametrize("rho0", [0.3, 0.6])
def test_find_regular_default_grid(N, rho0):
    for K in ([1], [3], [1, 10], [2, 7]):
        B = find_regular(N, K, rho0)
        assert rho0 <= B.rho <= 2 * rho0


def test_central_subset_trivial_base():
    pair = central_subset(full_bohr(31), 0.2)
    assert pair.inner.size == 31 and pair.closure.size == 31 and pair.interior.size == 31


def test_central_subset_example():
    B = find_regular(401, [1], 0.9)
    pair = central_subset(B, 0.2)
    lo, hi = sigma_window(B.rho, 0.2, 1)
    assert lo <= pair.sigma <= hi
    assert check_central(pair)
    gap = pair.closure.size - pair.interior.size
    assert gap <= 2 * 100 * (pair.sigma / B.rho) * B.size


def test_boundary_lemma_examples():
    B = find_regular(101, [1], 0.9)
    pair = central_subset(B, 0.2)
    assert boundary_lemma_check(pair, []).lhs == 0
    rng = SplitMix64(5)
    assert boundary_lemma_check(pair, [rng.below(101) for _ in range(6)]).passed
    trivial = central_subset(full_bohr(31), 0.5)
    assert boundary_lemma_check(trivial, list(range(31))).lhs == 0


def test_averaging_constant_function():
    pair = central_subset(find_regular(101, [1], 0.9), 0.2)
    for r in averaging_checks(pair, GroupFn.constant(101, 0.7)):
        assert not r.skipped and r.lhs == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kind", ["unimodular", "character"])
def test_averaging_on_z401(kind):
    pair = central_subset(find_regular(401, [1], 0.9), 0.2)
    f = rand_unimodular(401, 3) if kind == "unimodular" else GroupFn.character(401, 1)
    reps = averaging_checks(pair, f)
    assert len(reps) == 5 and all(r.passed for r in reps)


def test_averaging_skips_large_functions():
    pair = central_subset(full_bohr(11), 0.2)
    assert all(r.skipped for r in averaging_checks(pair, GroupFn.constant(11, 2.0)))


def test_cover_examples():
    c = bohr_cover(full_bohr(31))
    assert c.m == 1 and c.ok
    B = find_regular(101, [1], 0.9)
    c = bohr_cover(B)
    assert c.ok and len(set(c.translates)) == c.m
    union = np.zeros(101, dtype=bool)
    for x in c.translates:
        union[[(x + b) % 101 for b in B.members]] = True
    assert union.all()
    assert c.m <= 5 * 101 / B.size
    assert cover_report(B).passed
