import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uniformity_lab.bohr import build_bohr, full_bohr
from uniformity_lab.gap import (
    Gap,
    build_gap,
    convergent_denominators,
    find_gap_in_bohr,
    gap_cover,
    interval,
    progression_centre,
    relative_boundary,
    symmetric_box,
)
from uniformity_lab.generators import rand_subset_mask
from uniformity_lab.zn_core import SubsetZN


def members_oracle(N, x0, gens, lens):
    pts = [(x0 + sum(a * g for a, g in zip(coef, gens))) % N for coef in itertools.product(*(range(m) for m in lens))]
    return sorted(set(pts)), len(set(pts)) == len(pts)


def contains_2q_minus_2q(B, gens, lens):
    N = B.modulus
    ranges = [range(-2 * (m - 1), 2 * (m - 1) + 1) for m in lens]
    return all(sum(j * g for j, g in zip(js, gens)) % N in B for js in itertools.product(*ranges))


def test_build_examples():
    P = build_gap(101, 0, (1,), (5,))
    assert sorted(P.members) == [0, 1, 2, 3, 4] and P.proper
    W = build_gap(101, 0, (2,), (101,))
    assert W.size == 101 and W.proper
    B = build_gap(101, 0, (1, 10), (3, 3))
    assert B.size == 9 and B.proper
    assert not build_gap(10, 0, (5,), (3,)).proper


@settings(max_examples=40, deadline=None)
@given(
    N=st.integers(3, 150),
    x0=st.integers(0, 500),
    gens=st.lists(st.integers(0, 500), min_size=1, max_size=2),
    data=st.data(),
)
def test_members_match_enumeration(N, x0, gens, data):
    lens = [data.draw(st.integers(1, 8)) for _ in gens]
    P = build_gap(N, x0, gens, lens)
    pts, proper = members_oracle(N, x0, gens, lens)
    assert sorted(P.members) == pts
    assert P.proper == proper == (P.size == math.prod(lens))


def test_coordinates_and_json():
    P = build_gap(101, 3, (1, 10), (3, 3))
    assert P.coordinates_of(3 + 2 + 10) == (2, 1)
    assert P.coordinates_of(50) is None
    Q = Gap.from_json(P.to_json())
    assert Q.members == P.members and Q.gens == P.gens
    with pytest.raises(ValueError):
        Gap.from_json({"modulus": 11, "gens": [1]})


def test_build_rejects_bad_lengths():
    with pytest.raises(ValueError):
        build_gap(11, 0, (1,), (0,))
    with pytest.raises(ValueError):
        build_gap(11, 0, (1, 2), (3,))


def test_relative_boundary_examples():
    N = 101
    A = SubsetZN.from_members(N, range(10))
    rb = relative_boundary(A, SubsetZN.from_members(N, [0]))
    assert rb.closure == A and rb.interior == A and rb.boundary.size == 0
    rb = relative_boundary(A, SubsetZN.from_members(N, [0, 1]))
    assert sorted(rb.closure) == list(range(11))
    assert sorted(rb.interior) == list(range(9))
    assert sorted(rb.boundary) == [9, 10]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_relative_boundary_matches_double_loop(seed):
    N = 64
    A = SubsetZN(N, rand_subset_mask(N, seed, 0.6))
    B = SubsetZN(N, rand_subset_mask(N, seed + 1, 0.1))
    B = B | SubsetZN.from_members(N, [0])
    plus = {(a + b) % N for a in A for b in B}
    minus = {x for x in range(N) if all((x + b) % N in A for b in B)}
    rb = relative_boundary(A, B)
    assert set(rb.closure) == plus and set(rb.interior) == minus
    assert set(rb.boundary) == plus - minus


def test_progression_centre_examples():
    P = interval(1009, 0, 100)
    Q, reps = progression_centre(P, 0.1)
    assert Q.lens == (10,)
    assert Q.density / P.density >= Fraction(1, 10)
    assert all(r.passed for r in reps)
    P2 = build_gap(1009, 0, (1, 40), (20, 20))
    assert P2.proper
    _, reps = progression_centre(P2, 0.2)
    assert all(r.passed for r in reps)
    Q1, reps = progression_centre(interval(101, 0, 30), 1.0)
    assert Q1.lens == (30,) and all(r.passed for r in reps)


def test_progression_centre_errors():
    with pytest.raises(ValueError):
        progression_centre(build_gap(10, 0, (5,), (3,)), 0.5)
    with pytest.raises(ValueError):
        progression_centre(interval(101, 0, 5), 0.0)


def _check_cover(P, cov):
    N = P.modulus
    union = np.zeros(N, dtype=bool)
    for t in cov.translates:
        union[[(x + t) % N for x in P.members]] = True
    return union.all()


def test_gap_cover_examples():
    full = interval(31, 0, 31)
    assert gap_cover(full).m == 1
    P = interval(101, 0, 10)
    cov = gap_cover(P)
    assert cov.ok and cov.m <= 31 and _check_cover(P, cov)
    P2 = build_gap(101, 0, (1, 11), (4, 4))
    cov2 = gap_cover(P2)
    assert cov2.ok and cov2.m <= 9 * 101 / P2.size and _check_cover(P2, cov2)


def test_convergent_denominators():
    # 7/101 = [0; 14, 2, 3]
    assert convergent_denominators(7, 101) == [1, 14, 29, 101]


def test_find_gap_full_group():
    res = find_gap_in_bohr(full_bohr(31))
    assert res.gap.size == 31 and res.gap.d == 1


def test_find_gap_small_example():
    B = build_bohr(12, [1], 1.0)
    res = find_gap_in_bohr(B)
    best = max(m for g in range(1, 12) for m in range(1, 13) if build_gap(12, 0, (g,), (m,)).proper and contains_2q_minus_2q(B, (g,), (m,)))
    assert res.gap.size == best == 2


def test_find_gap_uses_convergents():
    B = build_bohr(101, [7], 0.5)
    res = find_gap_in_bohr(B)
    P = res.gap
    assert P.proper and contains_2q_minus_2q(B, P.gens, P.lens)
    best_conv = max(
        m for q in convergent_denominators(7, 101)[:-1] for m in range(1, 40) if build_gap(101, 0, (q,), (m,)).proper and contains_2q_minus_2q(B, (q,), (m,))
    )
    assert P.size >= best_conv
    assert P.gens[0] in convergent_denominators(7, 101)


@pytest.mark.parametrize("K,rho", [([1], 0.9), ([3], 0.6), ([1, 10], 1.4), ([2, 7], 1.8)])
def test_find_gap_result_is_verified(K, rho):
    B = build_bohr(101, K, rho)
    P = find_gap_in_bohr(B, d_target=len(K)).gap
    assert P.proper and contains_2q_minus_2q(B, P.gens, P.lens)


def test_symmetric_box():
    P = symmetric_box(101, (1,), (3,))
    assert sorted(P.members) == [0, 1, 2, 3, 98, 99, 100]
