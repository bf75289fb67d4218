import cmath
import math

import numpy as np
import pytest

from uniformity_lab.bourgain import (
    BourgainSystem,
    NoRegularIndex,
    bohr_family,
    bourgain_averaging_check,
    centrality_window,
    check_axioms,
    default_grid,
    dilation,
    dilation_law_reports,
    find_central_index,
    find_regular_index,
    freiman_kernel_system,
    gap_scaled,
    intersect,
    intersection_density_reports,
    kernel_density_reports,
    trivial_system,
)
from uniformity_lab.gap import build_gap, symmetric_box
from uniformity_lab.generators import rand_unimodular
from uniformity_lab.zn_core import GroupFn, SubsetZN


def test_grid_is_dyadic():
    g = default_grid()
    assert g[0] == 0.0 and g[1:] == sorted(4 * 2.0**-k for k in range(len(g) - 1))


@pytest.mark.parametrize("K", [[1], [1, 10], [3, 50]])
def test_bohr_family_axioms(K):
    sys = bohr_family(401, K, 0.5)
    assert sys.d == 3 * len(K)
    assert check_axioms(sys).passed
    # membership against a direct evaluation
    X = sys(1.0)
    assert sorted(X) == [x for x in range(401) if all(abs(1 - cmath.exp(2j * cmath.pi * r * x / 401)) <= 0.5 + 1e-12 for r in K)]


def test_trivial_system_axioms():
    assert check_axioms(trivial_system(31)).passed


def test_understated_dimension_fails_doubling():
    fam = bohr_family(401, [1, 10], 0.5)
    fake = BourgainSystem(401, "bohr", 1, fam._eval)
    rep = check_axioms(fake)
    assert not rep.passed
    assert rep.instance["first_violation"][0] == "doubling"


def test_dilation_law():
    for sys in (bohr_family(401, [1], 0.5), gap_scaled(build_gap(401, 0, (1, 30), (6, 5)))):
        assert all(r.passed for r in dilation_law_reports(sys))
    half = dilation(bohr_family(401, [1], 0.5), 0.5)
    assert half(1.0) == bohr_family(401, [1], 0.5)(0.5)
    with pytest.raises(ValueError):
        dilation(trivial_system(5), 2.0)


def test_index_range_enforced():
    with pytest.raises(ValueError):
        trivial_system(5)(4.5)


def test_find_regular_index_examples():
    ri = find_regular_index(trivial_system(31), 0.6)
    assert ri.rho == 0.3
    ri = find_regular_index(bohr_family(401, [1], 0.5), 0.5)
    assert 0.25 <= ri.rho <= 0.5 and ri.recheck()
    P = build_gap(401, 0, (1, 40), (8, 6))
    assert P.proper
    ri = find_regular_index(gap_scaled(P), 1.0)
    assert 0.5 <= ri.rho <= 1.0 and ri.recheck()


def test_find_regular_index_failure_is_loud():
    # intervals of radius 100 rho with a badly understated dimension
    N = 1001
    x = np.arange(N)
    dist = np.minimum(x, N - x)
    fake = BourgainSystem(N, "fake", 0.01, lambda rho: SubsetZN(N, dist <= math.floor(100 * rho)))
    with pytest.raises(NoRegularIndex):
        find_regular_index(fake, 1.0, steps=16, kappas=[0.05])
    with pytest.raises(ValueError):
        find_regular_index(trivial_system(5), 1.5)


def test_intersection_examples():
    sys = bohr_family(401, [1], 0.5)
    both = intersect([sys, trivial_system(401)])
    assert all(both(r) == sys(r) for r in default_grid())
    assert check_axioms(both).passed
    reps = intersection_density_reports([bohr_family(401, [1], 0.6), bohr_family(401, [7], 0.6)])
    assert [r.instance["rho"] for r in reps] == [0.25, 0.5, 1.0]
    assert all(r.passed and r.lemma_id == "L8.13" for r in reps)
    three = [bohr_family(401, [k], 0.6) for k in (1, 2, 5)]
    inter = intersect(three)
    assert inter.d == 36 * (3 + 3 + 3)
    assert check_axioms(inter).passed
    assert all(r.passed and r.lemma_id == "C8.14" for r in intersection_density_reports(three))


def test_intersection_rejects_mixed_moduli():
    with pytest.raises(ValueError):
        intersect([trivial_system(5), trivial_system(7)])


def test_kernel_system_examples():
    P = symmetric_box(401, (1,), (50,))
    empty = freiman_kernel_system(P, [])
    assert all(empty(r) == P.members for r in (0.0, 1.0, 4.0))
    ker = freiman_kernel_system(P, [GroupFn.character(401, 1)])
    X = ker(0.5)
    xs = sorted((x + 200) % 401 - 200 for x in X)
    assert xs == list(range(xs[0], xs[-1] + 1)) and xs[0] == -xs[-1]
    assert all(r.passed for r in kernel_density_reports(ker, 1))
    P2 = symmetric_box(401, (1, 100), (4, 1))
    ker2 = freiman_kernel_system(P2, [GroupFn.character(401, 3), GroupFn.character(401, 17)])
    assert ker2.d == 4
    assert check_axioms(ker2).passed
    assert all(r.passed for r in kernel_density_reports(ker2, 2))


def test_kernel_system_rejects_non_homomorphisms():
    P = symmetric_box(101, (1,), (5,))
    with pytest.raises(ValueError):
        freiman_kernel_system(P, [GroupFn.quadratic_phase(101, 1)])
    with pytest.raises(ValueError):
        freiman_kernel_system(P, [GroupFn.constant(101, -1.0)])


def _central(sys, eps):
    rho = find_regular_index(sys, 1.0).rho
    return rho, find_central_index(sys, rho, eps)


def test_averaging_examples():
    sys = bohr_family(401, [1], 1.0)
    rho, sigma = _central(sys, 0.5)
    lo, hi = centrality_window(rho, 0.5, sys.d)
    assert lo <= sigma <= hi
    rep = bourgain_averaging_check(sys, rho, sigma, GroupFn.constant(401, 1.0), 0.5)
    assert rep.lhs == pytest.approx(0.0, abs=1e-12)
    assert bourgain_averaging_check(sys, rho, sigma, rand_unimodular(401, 9), 0.5).passed
    assert bourgain_averaging_check(sys, rho, sigma, GroupFn.character(401, 1), 0.5).passed


def test_averaging_skips_outside_window():
    sys = bohr_family(401, [1], 1.0)
    assert bourgain_averaging_check(sys, 1.0, 0.9, GroupFn.constant(401), 0.5).skipped
