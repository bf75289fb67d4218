import itertools
import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from uniformity_lab.generators import rand_complex_disc, rand_interval, randpm1
from uniformity_lab.linsys import (
    BudgetExceeded,
    LinearSystem,
    count_pattern,
    cs_complexity,
    four_ap,
    main_theorem_probe,
    pairwise_sums,
    quadratic_family_counts,
    square_independent,
    telescoping_instance,
    three_ap,
    von_neumann_check,
)
from uniformity_lab.unorms import u2_norm
from uniformity_lab.zn_core import GroupFn, ModulusMismatch


def sympy_square_rank(sys):
    rows = []
    for row in sys.coeffs:
        x = sympy.symbols(f"x0:{sys.s}")
        L = sum(c * v for c, v in zip(row, x))
        poly = sympy.Poly(sympy.expand(L**2), *x)
        mons = [m for m in itertools.combinations_with_replacement(range(sys.s), 2)]
        vec = []
        for u, v in mons:
            exps = [0] * sys.s
            exps[u] += 1
            exps[v] += 1
            vec.append(poly.coeff_monomial(tuple(exps)))
        rows.append(vec)
    return sympy.Matrix(rows).rank()


def naive_count(sys, fs):
    N = fs[0].modulus
    tot = 0
    for x in itertools.product(range(N), repeat=sys.s):
        p = 1
        for row, f in zip(sys.coeffs, fs):
            p *= f.values[sum(c * v for c, v in zip(row, x)) % N]
        tot += p
    return tot / N**sys.s


def in_span_oracle(v, vs):
    if not vs:
        return False
    return sympy.Matrix(vs).rank() == sympy.Matrix(vs + [v]).rank()


def cs_oracle(sys):
    worst = 0
    for i in range(sys.r):
        others = [list(r) for j, r in enumerate(sys.coeffs) if j != i]
        best = None
        for labels in itertools.product(range(len(others)), repeat=len(others)):
            k = len(set(labels))
            classes = [[others[j] for j in range(len(others)) if labels[j] == b] for b in set(labels)]
            if not any(in_span_oracle(list(sys.coeffs[i]), c) for c in classes):
                best = k - 1 if best is None else min(best, k - 1)
        worst = max(worst, 0 if not others else best)
    return worst


def test_square_independence_examples():
    for sys in (three_ap(), pairwise_sums()):
        res = square_independent(sys)
        assert res.independent
        assert res.rank == sys.r == sympy_square_rank(sys)
    res = square_independent(four_ap())
    assert not res.independent
    assert sympy_square_rank(four_ap()) == 3
    assert tuple(res.witness) in {(1, -3, 3, -1), (-1, 3, -3, 1)}


def test_square_independence_is_order_free():
    sys = pairwise_sums()
    for perm in itertools.permutations(range(sys.r)):
        p = LinearSystem(tuple(sys.coeffs[i] for i in perm))
        assert square_independent(p).independent


def test_repeated_form_is_dependent():
    assert not square_independent(LinearSystem(((1, 1), (1, 1)))).independent


def test_cs_complexity_examples():
    assert cs_complexity(three_ap()) == 1 == cs_oracle(three_ap())
    assert cs_complexity(four_ap()) == 2 == cs_oracle(four_ap())
    assert cs_complexity(LinearSystem(((1,),))) == 0
    assert cs_complexity(pairwise_sums()) == cs_oracle(pairwise_sums())


def test_cs_complexity_limit():
    with pytest.raises(ValueError):
        cs_complexity(LinearSystem(tuple((1, k) for k in range(9))))


def test_parse_and_errors():
    sys = LinearSystem.parse("1 0\n1 1  # middle\n\n1 2\n")
    assert sys.coeffs == three_ap().coeffs
    assert LinearSystem.parse(sys.to_text()).coeffs == sys.coeffs
    assert sys.M == 3
    with pytest.raises(ValueError, match="line 2"):
        LinearSystem.parse("1 0\n1 x\n")
    with pytest.raises(ValueError):
        LinearSystem(((0, 0),))
    with pytest.raises(ValueError):
        LinearSystem(((1, 0), (1,)))


def test_count_constant_and_telescoping():
    assert abs(count_pattern(pairwise_sums(), [GroupFn.constant(7)] * 4).value - 1) < 1e-12
    for N in (7, 15, 31):
        for a in (1, 2, 5):
            fs = [GroupFn.quadratic_phase(N, (c * a) % N) for c in (1, -3, 3, -1)]
            assert abs(count_pattern(four_ap(), fs).value - 1) < 1e-12


def test_count_gauss_example():
    assert abs(count_pattern(three_ap(), [GroupFn.quadratic_phase(13, 1)] * 3).value) == pytest.approx(1 / 13, abs=1e-12)


def test_count_matches_loop_oracle():
    fs = [rand_complex_disc(7, k) for k in range(4)]
    assert abs(count_pattern(pairwise_sums(), fs).value - naive_count(pairwise_sums(), fs)) < 1e-12
    gs = [rand_interval(11, k) for k in range(3)]
    assert abs(count_pattern(three_ap(), gs, threads=3).value - naive_count(three_ap(), gs)) < 1e-12


def test_count_errors():
    with pytest.raises(BudgetExceeded):
        count_pattern(pairwise_sums(), [GroupFn.constant(101)] * 4, budget=10**6)
    with pytest.raises(ModulusMismatch):
        count_pattern(three_ap(), [GroupFn.constant(5), GroupFn.constant(5), GroupFn.constant(7)])
    with pytest.raises(ValueError):
        count_pattern(three_ap(), [GroupFn.constant(5)])


def test_count_multilinear_and_bounded():
    fs = [randpm1(13, k) for k in range(3)]
    base = count_pattern(three_ap(), fs).value
    scaled = count_pattern(three_ap(), [fs[0] * 0.5, fs[1], fs[2]]).value
    assert abs(scaled - 0.5 * base) < 1e-14
    assert abs(base) <= 1 + 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32), t=st.integers(0, 100))
def test_three_ap_translation_covariance(seed, t):
    f = rand_interval(17, seed)
    a = count_pattern(three_ap(), [f] * 3).value
    b = count_pattern(three_ap(), [f.shift(t)] * 3).value
    assert abs(a - b) < 1e-12


def test_family_counts_match_direct():
    T = quadratic_family_counts(three_ap(), 11)
    for a, b in ((1, 0), (3, 7), (0, 4)):
        direct = count_pattern(three_ap(), [GroupFn.quadratic_phase(11, a, b)] * 3).value
        assert abs(T[a, b] - direct) < 1e-12


def test_von_neumann_examples():
    fs = [rand_interval(31, k) for k in range(3)]
    rep = von_neumann_check(three_ap(), fs, 2)
    assert rep.passed and rep.lemma_id == "EQ1"
    zero = [GroupFn.zero(31)] + fs[1:]
    assert von_neumann_check(three_ap(), zero, 2).lhs == 0
    tele = telescoping_instance(four_ap(), 31)
    rep = von_neumann_check(four_ap(), tele, 3)
    assert rep.passed and rep.lhs == pytest.approx(1.0, abs=1e-12)
    assert rep.margin == pytest.approx(0.0, abs=1e-9)


def test_von_neumann_skips_out_of_scope():
    # 4-AP has complexity 2, so the U^2 variant does not apply
    assert von_neumann_check(four_ap(), [GroupFn.constant(7)] * 4, 2).skipped
    big = [GroupFn.constant(7, 2.0)] * 3
    assert von_neumann_check(three_ap(), big, 2).skipped


def test_converse_instance():
    N = 101
    fs = telescoping_instance(four_ap(), N)
    assert abs(count_pattern(four_ap(), fs).value - 1) < 1e-12
    assert min(u2_norm(f) for f in fs) == pytest.approx(N**-0.25, abs=1e-9)
    with pytest.raises(ValueError):
        telescoping_instance(three_ap(), N)


def test_probe_examples():
    rows = main_theorem_probe(three_ap(), "quadphase", [31])
    assert len(rows) == 30 * 31
    assert max(r.count for r in rows) <= 2 * 31**-0.5
    one = main_theorem_probe(three_ap(), "one", [31])
    assert one[0].u2 == pytest.approx(1.0) and one[0].count == pytest.approx(1.0)
