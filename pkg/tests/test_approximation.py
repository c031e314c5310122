import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from ngls.approximation import (approximant_dimension, approximate_family, approximate_system,
                                domination_check, measure_convergence_check, mu_product, project_frequency)
from ngls.dimension import dim_formula
from ngls.frequency import FrequencyVector
from ngls.gls_core import Family, make_finite_system, make_parametric_system, validate_partition


def breaks(sys_):
    return [(r["interval"][0], r["interval"][1], r["merged"]) for r in sys_.branch_table()]


def test_luroth_first_approximations(luroth):
    a1 = approximate_system(luroth, 1)
    assert breaks(a1) == [(0, F(1, 2), True), (F(1, 2), 1, False)]
    assert a1.N(2) == 2 and a1.merged_digits == [2]
    a2 = approximate_system(luroth, 2)
    assert breaks(a2) == [(0, F(1, 3), True), (F(1, 3), F(1, 2), False), (F(1, 2), 1, False)]
    a3 = approximate_system(luroth, 3)
    assert a3.interval(4) == (0, F(1, 4))


def test_finite_system_unchanged(three):
    a = approximate_system(three, 3)
    assert a.merged_digits == []
    assert [a.interval(b) for b in (1, 2, 3)] == [three.interval(b) for b in (1, 2, 3)]


def test_finite_system_gap_sweep():
    s = make_finite_system("F", [F(1, 8), F(1, 2), F(1, 16), F(1, 4), F(1, 16)])
    # ratio labels: 1/2 -> 1, 1/4 -> 2, 1/8 -> 3, 1/16 -> 4, 5
    a = approximate_system(s, 2)
    assert validate_partition(a).ok
    # layout 3 | 1 | 4 | 2 | 5: three gaps, each holding one dropped digit
    assert a.merged_digits == [3, 4, 5]
    assert [a.interval(c) for c in (3, 4, 5)] == [(0, F(1, 8)), (F(5, 8), F(11, 16)), (F(15, 16), 1)]
    b = approximate_system(make_finite_system("G", [F(1, 2), F(1, 4), F(1, 8), F(1, 8)]), 2)
    assert b.merged_digits == [3] and b.members(3) == [3, 4] and b.interval(3) == (F(3, 4), 1)
    assert domination_check(s, 2)


def test_project_frequency_luroth(lur_fam):
    a = FrequencyVector.single(lur_fam, "geometric:1/2")
    approx, am = project_frequency(lur_fam, a, 1)
    assert am("L", 1) == F(1, 2) and am("L", 2) == F(1, 2)
    assert am.alpha_s("L") == 1


@pytest.mark.parametrize("spec", ["geometric:1/2", "geometric:2/3", "weights:1,2,3,4"])
def test_projected_mass_sums_to_one(lur_fam, spec):
    a = FrequencyVector.single(lur_fam, spec)
    for m in range(1, 51):
        approx, am = project_frequency(lur_fam, a, m)
        assert sum(am("L", b) for b in approx["L"].labels) == 1


def test_project_family_masses(mixed_fam):
    a = FrequencyVector.parse(mixed_fam, "L=1/3:geometric:1/2;B=2/3:weights:1,3")
    approx, am = project_frequency(mixed_fam, a, 4)
    for s in mixed_fam.symbols:
        assert am.alpha_s(s) == a.alpha_s(s)
    assert am("B", 2) == F(1, 2)


def test_convergence_table(lur_fam):
    a = FrequencyVector.single(lur_fam, "geometric:1/2")
    tab = measure_convergence_check(lur_fam, "L", a, [3, 1, 2], range(1, 7))
    assert tab.expected == 4
    assert all(r.equal for r in tab.rows if r.m >= 4)
    assert not any(r.equal for r in tab.rows if r.m < 3)
    assert tab.stabilization is not None and tab.stabilization <= 4
    for r in tab.rows:
        assert r.mu_m_lower <= r.mu_m_upper
    ones = measure_convergence_check(lur_fam, "L", a, [1, 1], range(1, 4))
    assert all(r.equal for r in ones.rows)


def test_merged_word_mass_is_product(lur_fam):
    a = FrequencyVector.single(lur_fam, "geometric:1/2")
    approx, am = project_frequency(lur_fam, a, 2)
    # digit 3 of T^(2) is the merged branch, weight 1/4
    assert mu_product(approx, am, "L", [3, 1, 3]) == F(1, 4) * F(1, 2) * F(1, 4)


@pytest.mark.parametrize("m", [1, 2, 5, 17])
def test_tiling(luroth, m):
    assert validate_partition(approximate_system(luroth, m)).ok
    g = make_parametric_system("G", "geometric", layout="ascending", r=F(1, 3))
    assert validate_partition(approximate_system(g, m)).ok


@pytest.mark.parametrize("m", [1, 3, 10])
def test_domination(luroth, m):
    assert domination_check(luroth, m)


def test_approximant_dimension_trend(lur_fam):
    a = FrequencyVector.single(lur_fam, "geometric:1/2")
    beta = dim_formula(lur_fam, a).beta
    rows = [approximant_dimension(lur_fam, a, m) for m in range(1, 40)]
    for r in rows:
        assert r.beta_m >= r.bound - 1e-12
        assert 0 < r.e_m <= 1
    bounds = [r.bound for r in rows]
    assert all(x <= y + 1e-12 for x, y in zip(bounds[4:], bounds[5:]))
    assert bounds[-1] == pytest.approx(beta, abs=1e-6)
    assert rows[-1].beta_m == pytest.approx(beta, abs=1e-6)


def test_mixed_family_approximation(mixed_fam):
    fam = approximate_family(mixed_fam, 3)
    assert fam.symbols == ["L", "B"]
    assert fam["B"].labels == mixed_fam["B"].labels


_LUR = Family([make_parametric_system("L", "luroth", layout="luroth-style")])
_ALPHA = FrequencyVector.single(_LUR, "geometric:1/2")


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(1, 5), min_size=1, max_size=4))
def test_stabilises_past_max_digit(word):
    m0 = max(word) + 1
    tab = measure_convergence_check(_LUR, "L", _ALPHA, word, [m0, m0 + 2], extra_depth=8)
    assert all(r.equal for r in tab.rows)


def test_random_words_exact_after_stabilisation():
    rng = random.Random(11)
    for _ in range(20):
        word = [rng.randint(1, 6) for _ in range(rng.randint(1, 5))]
        tab = measure_convergence_check(_LUR, "L", _ALPHA, word, [max(word) + 1], extra_depth=6)
        assert tab.rows[0].equal
