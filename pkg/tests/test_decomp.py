import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uniformity_lab.decomp import (
    bogolyubov_bohr,
    greedy_cluster,
    high_rank_correlation_check,
    high_rank_purge,
    matching_pursuit,
    rank_gap_partition,
    second_derivative_profile,
    structured_decomposition,
)
from uniformity_lab.gap import build_gap
from uniformity_lab.generators import SplitMix64, rand_complex_disc
from uniformity_lab.quad import QuadForm
from uniformity_lab.unorms import u2_norm
from uniformity_lab.zn_core import GroupFn, SubsetZN


def phase(N, a, b):
    return GroupFn.quadratic_phase(N, a, b).values


def test_bogolyubov_single_character():
    N = 101
    K, B, rep = bogolyubov_bohr(GroupFn.character(N, 7), 0.5)
    assert K == (7,)
    # |1 - omega^{7x}| <= 1/2 means 7x lies within 8 of 0 mod 101
    assert B.size == 17 and rep.passed


def test_bogolyubov_constant_and_random():
    K, B, rep = bogolyubov_bohr(GroupFn.constant(31, 0.5), 0.5)
    assert K == (0,) and rep.lhs == 0
    _, _, rep = bogolyubov_bohr(rand_complex_disc(401, 3), 0.3)
    assert rep.passed
    with pytest.raises(ValueError):
        bogolyubov_bohr(GroupFn.constant(31, 2.0), 0.5, C=1.0)


def test_cluster_equal_vectors():
    u = GroupFn.character(17, 3)
    res = greedy_cluster([u] * 5, [0.2] * 5, 0.1)
    assert res.k == 1 and res.members(res.representatives[0]) == list(range(5))
    assert res.ok


def test_cluster_orthonormal_characters():
    n = 16
    us = [GroupFn.character(64, r) for r in range(n)]
    res = greedy_cluster(us, [1 / n] * n, 0.3)
    # residual of the untouched mass is C / sqrt(n) = 1/4
    assert res.k == 0 and res.residual_l2 == pytest.approx(0.25, abs=1e-12)
    res = greedy_cluster(us, [1 / n] * n, 0.2)
    assert res.k <= math.ceil(2 / 0.04) and res.ok


def test_cluster_random_phases():
    rng = SplitMix64(11)
    N = 101
    us = [GroupFn.quadratic_phase(N, rng.below(N), rng.below(N)) for _ in range(40)]
    lam = [0.05 * (1 + rng.below(4)) for _ in range(40)]
    res = greedy_cluster(us, lam, 0.3)
    assert res.ok and len(res.reports) == 3
    with pytest.raises(ValueError):
        greedy_cluster(us, lam, 0.3, C=0.1)


def test_rank_gap_examples():
    low = rank_gap_partition([0.5, 1.0], 2)
    assert low.L == [0, 1] and low.H == [] and low.R == 2**2 * (2 + 2)
    # levels are 2 R0 + t = 6 and 4 R0 + 3 t = 14, so i = 2 and R = 6
    mixed = rank_gap_partition([1, 100], 2)
    assert (mixed.L, mixed.H, mixed.R, mixed.index) == ([0], [1], 6.0, 2)
    one = rank_gap_partition([100], 2)
    assert (one.L, one.H, one.R) == ([], [0], 2.0)
    with pytest.raises(ValueError):
        rank_gap_partition([1], 2, b=1.5)


@settings(max_examples=60, deadline=None)
@given(ranks=st.lists(st.floats(0, 200), max_size=8), R0=st.floats(0.1, 10), b=st.floats(2, 4), t=st.floats(1.01, 5))
def test_rank_gap_certificate(ranks, R0, b, t):
    res = rank_gap_partition(ranks, R0, b, t)
    assert sorted(res.L + res.H) == list(range(len(ranks)))
    assert R0 <= res.R <= b ** len(ranks) * (R0 + t) + 1e-9
    assert all(ranks[i] <= res.R + 1e-9 for i in res.L)
    assert all(ranks[i] >= b * res.R + t - 1e-9 for i in res.H)


def test_pursuit_recovers_single_phase():
    N = 101
    dec = matching_pursuit(GroupFn(N, 0.8 * phase(N, 5, 3)), 0.3)
    assert dec.iterations == 1 and dec.converged
    (t,) = dec.terms
    assert (t.a, t.b) == (5, 3) and t.lam == pytest.approx(0.8, abs=1e-12)
    assert np.abs(dec.h).max() < 1e-12


def test_pursuit_already_uniform():
    f = GroupFn.indicator(101, [0])
    dec = matching_pursuit(f, 0.3)
    assert dec.iterations == 0 and dec.terms == [] and np.array_equal(dec.h, f.values)


def test_pursuit_two_phases():
    N = 31
    dec = matching_pursuit(GroupFn(N, 0.6 * phase(N, 2, 1) + 0.3 * phase(N, 9, 4)), 0.05)
    got = sorted(((t.a, t.b), t.lam) for t in dec.terms)
    assert [k for k, _ in got] == [(2, 1), (9, 4)]
    assert got[0][1] == pytest.approx(0.6, abs=1e-9) and got[1][1] == pytest.approx(0.3, abs=1e-9)
    assert dec.iterations <= 2


def test_pursuit_budget_and_errors():
    f = rand_complex_disc(31, 5) * 0.5
    dec = matching_pursuit(f, 1e-6, budget=2)
    assert not dec.converged and dec.iterations == 2
    with pytest.raises(ValueError):
        matching_pursuit(GroupFn.constant(7, 2.0), 0.1)
    with pytest.raises(ValueError):
        matching_pursuit(f, 0.1, family="cubic")


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_pursuit_energy_and_reconstruction(seed):
    f = rand_complex_disc(17, seed) * 0.5
    dec = matching_pursuit(f, 0.2, budget=30)
    assert all(r.passed for r in dec.reports)
    assert all(a >= b - 1e-12 for a, b in zip(dec.energy, dec.energy[1:]))
    assert dec.reconstruction_error() < 1e-9


def test_profile_ignores_linear_part():
    N = 31
    assert np.allclose(second_derivative_profile(phase(N, 4, 1)), second_derivative_profile(phase(N, 4, 20)))
    assert not np.allclose(second_derivative_profile(phase(N, 4, 1)), second_derivative_profile(phase(N, 5, 1)))


def test_structured_single_phase():
    N = 31
    dec = structured_decomposition(GroupFn(N, 0.7 * phase(N, 3, 2)), 0.2)
    (s,) = dec.U_terms
    assert np.allclose(s.U, 0.7) and s.to_json()["U_dual"] == pytest.approx(0.7, abs=1e-12)


def test_structured_clusters_by_quadratic_part():
    N = 101
    f = 0.4 * phase(N, 3, 1) + 0.4 * phase(N, 3, 7) + 0.35 * phase(N, 10, 2)
    dec = structured_decomposition(GroupFn(N, f), 0.2)
    groups = sorted(sorted((dec.terms[j].a, dec.terms[j].b) for j in s.members) for s in dec.U_terms)
    assert groups == [[(3, 1), (3, 7)], [(10, 2)]]
    pair = next(s for s in dec.U_terms if len(s.members) == 2)
    # U = 0.4 (1 + omega^{6x}) up to which phase is the representative: two coefficients of 0.4
    assert pair.to_json()["U_dual"] == pytest.approx(0.4 * 2**0.75, abs=1e-12)
    assert dec.reconstruction_error() < 1e-9 and all(r.passed for r in dec.reports)


def test_purge_identity_when_all_high_rank():
    N = 101
    dec = structured_decomposition(GroupFn(N, 0.6 * phase(N, 4, 4)), 0.2)
    out, rep = high_rank_purge(dec, 0.5, build_gap(N, 0, (7,), (30,)))
    assert rep.partition.L == [] and rep.absorbed
    assert np.allclose(out.g, dec.g) and np.allclose(out.h, dec.h)


def test_purge_absorbs_linear_term():
    N = 101
    f = 0.5 * phase(N, 0, 4) + 0.5 * phase(N, 1, 0)
    dec = structured_decomposition(GroupFn(N, f), 0.2)
    out, rep = high_rank_purge(dec, 2.0, build_gap(N, 0, (7,), (30,)))
    assert rep.ranks[0] == 0.0 and 0 in rep.partition.L
    assert rep.ok and rep.absorbed
    steps = {r.lemma_id: r for r in rep.reports}
    assert steps["purge(a)"].passed and steps["purge(b)"].passed
    assert out.reconstruction_error() < 1e-9


def test_purge_with_trivial_system_is_not_absorbed():
    N = 101
    f = 0.5 * phase(N, 0, 4) + 0.5 * phase(N, 1, 0)
    dec = structured_decomposition(GroupFn(N, f), 0.2)
    out, rep = high_rank_purge(dec, 2.0, build_gap(N, 0, (7,), (30,)), system=SubsetZN.full(N))
    b = next(r for r in rep.reports if r.lemma_id == "purge(b)")
    # f * sigma is the constant E f, so (b) reads |E f| <= ||f||_{U^2}
    assert b.lhs == pytest.approx(abs(f.mean()), abs=1e-12)
    assert b.rhs == pytest.approx(u2_norm(GroupFn(N, f)), abs=1e-12) and b.passed
    # smoothing over all of Z_N wipes out f_L, so (a) fails and nothing is absorbed
    assert not rep.absorbed and out is dec


def test_high_rank_correlation_small_u2_branch():
    N = 101
    rep = high_rank_correlation_check(QuadForm.global_form(N, 1), GroupFn.quadratic_phase(N, 2), SubsetZN.from_members(N, range(10)), 0.05, 0.0, 1, 1.0)
    assert rep.instance["branch"] == "small U2" and rep.passed
