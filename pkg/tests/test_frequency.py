from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ngls.errors import ConfigError, StreamExhaustedError
from ngls.frequency import (DigitLaw, FrequencyVector, TauCounter, check_dagger, frequency_sequence,
                            level_set_membership_trace, omega_in_spectrum, weave, weave_spectrum)
from ngls.gls_core import Family, OmegaRule, make_finite_system, make_parametric_system


def test_dagger(lur_fam, mixed_fam):
    assert check_dagger(lur_fam, FrequencyVector.single(lur_fam, "geometric:1/3"))
    lop = FrequencyVector(mixed_fam, {"L": F(1)}, {"L": DigitLaw.geometric(F(1, 2))})
    assert not check_dagger(mixed_fam, lop)
    both = FrequencyVector.parse(mixed_fam, "L=1/2:geometric:1/2;B=1/2:weights:1,1")
    assert check_dagger(mixed_fam, both)


def test_normalisation_exact(mixed_fam):
    a = FrequencyVector.parse(mixed_fam, "L=2/3:geometric:1/3;B=1/3:weights:1,3")
    assert sum(a.alpha_s(s) for s in mixed_fam.symbols) == 1
    assert a("B", 2) == F(1, 4)
    assert a.alpha_s("L") - sum(a("L", b) for b in range(1, 41)) == a.tail_mass("L", 40)
    assert a.law("L").total() == 1


@pytest.mark.parametrize("spec, path", [
    ("L=1/2:geometric:1/2;B=1/3:uniform", "alpha"),
    ("L=1:geometric:3/2", "alpha.L.law"),
    ("L=1:nope:1", "alpha.L.law"),
    ("X=1:dirac:1", "alpha.X"),
])
def test_alpha_errors(mixed_fam, spec, path):
    with pytest.raises(ConfigError) as e:
        FrequencyVector.parse(mixed_fam, spec)
    assert str(e.value).startswith(path)


def test_finite_law_outside_digits(bin_fam):
    with pytest.raises(ConfigError):
        FrequencyVector.single(bin_fam, "dirac:3")
    with pytest.raises(ConfigError):
        FrequencyVector.single(bin_fam, "geometric:1/2")


def test_power_and_logpower_normalised():
    assert DigitLaw.power(2).total() == pytest.approx(1, abs=1e-12)
    assert DigitLaw.logpower(2).total() == pytest.approx(1, abs=1e-12)
    # independent value of sum 1/(b log(b+2)^2), computed once with a log-substituted integral
    assert 1 / DigitLaw.logpower(2).tail.c == pytest.approx(1.888001876931903, rel=1e-12)


def test_law_roundtrip_config(mixed_fam):
    a = FrequencyVector.parse(mixed_fam, "L=3/4:power:5/2;B=1/4:weights:1,2")
    b = FrequencyVector.parse(mixed_fam, a.to_config())
    for s in mixed_fam.symbols:
        for k in (1, 2):
            assert float(b(s, k)) == float(a(s, k))


def test_spectrum_verdicts(mixed_fam, lur_fam):
    a = FrequencyVector.parse(mixed_fam, "L=1/3:geometric:1/2;B=2/3:uniform")
    w = OmegaRule.weave({"L": F(1, 3), "B": F(2, 3)})
    v = omega_in_spectrum(mixed_fam, a, w, 10 ** 6)
    assert v.consistent and max(v.final_deviation.values()) < 1e-2
    assert not omega_in_spectrum(mixed_fam, a, "L", 1000).consistent
    single = FrequencyVector.single(lur_fam, "geometric:1/2")
    assert omega_in_spectrum(lur_fam, single, "L", 100).consistent


def test_greedy_small_cases():
    assert frequency_sequence([F(1, 2), F(1, 2)], 4).tolist() == [1, 2, 1, 2]
    assert frequency_sequence([1], 10).tolist() == [1] * 10
    assert frequency_sequence(DigitLaw.dirac(3), 5).tolist() == [3] * 5


def test_greedy_geometric():
    n = 10 ** 5
    seq = frequency_sequence(DigitLaw.geometric(F(1, 2)), n)
    counts = np.bincount(seq)
    for d in range(1, 11):  # 2^-10 >= 1e-3
        assert abs(counts[d] / n - 2.0 ** -d) < 1e-2
    assert np.all(seq <= np.arange(1, n + 1))


def test_greedy_power_bounded_digits():
    n = 20000
    seq = frequency_sequence(DigitLaw.power(2), n)
    assert np.all(seq <= np.arange(1, n + 1))
    w = DigitLaw.power(2)
    counts = np.bincount(seq)
    for d in range(1, 20):
        assert abs(counts[d] / n - w(d)) < 1e-2


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=1, max_size=8).filter(lambda ws: sum(ws) > 0))
def test_greedy_finite_support(ws):
    n = 10 ** 5
    total = sum(ws)
    seq = frequency_sequence([F(w, total) for w in ws], n)
    counts = np.bincount(seq, minlength=len(ws) + 1)
    active = sum(1 for w in ws if w)
    for d, w in enumerate(ws, start=1):
        assert abs(counts[d] / n - w / total) <= active / n + 1e-3


def test_weave_examples():
    xs, ys = [11, 12, 13], [21, 22, 23]
    assert weave(["A", "B", "A", "B"], {"A": xs, "B": ys}).tolist() == [11, 21, 12, 22]
    assert weave(["A", "A", "B"], {"A": xs, "B": ys}).tolist() == [11, 12, 21]
    with pytest.raises(StreamExhaustedError):
        weave(["A"] * 4, {"A": xs})


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from("AB"), min_size=1, max_size=200),
       st.lists(st.integers(1, 5), min_size=200, max_size=200),
       st.lists(st.integers(1, 5), min_size=200, max_size=200))
def test_weave_counting_identity(omega, sa, sb):
    out = weave(omega, {"A": sa, "B": sb}).tolist()
    for n in range(1, len(omega) + 1):
        pre_o, pre_w = omega[:n], out[:n]
        for s, stream in (("A", sa), ("B", sb)):
            tau = pre_o.count(s)
            for b in range(1, 6):
                lhs = sum(1 for o, d in zip(pre_o, pre_w) if (o, d) == (s, b))
                assert lhs == stream[:tau].count(b)


def test_tau_counter():
    c = TauCounter()
    c.extend("ABA", [1, 2, 1])
    assert c.n == 3 and c.tau("A") == 2 and c.tau(("A", 1)) == 2 and c.tau(("B", 1)) == 0
    assert sum(c.symbol_counts.values()) == c.n


def test_membership_trace(mixed_fam):
    a = FrequencyVector.parse(mixed_fam, "L=1/2:geometric:1/2;B=1/2:weights:1,3")
    omega, prefix, word = weave_spectrum(mixed_fam, a, 2 ** 14)
    tab = level_set_membership_trace(mixed_fam, a, prefix, word, m=4)
    devs = [d for _, d in tab.max_deviation]
    assert devs[-1] < devs[3] and devs[-1] < 1e-2
    const = level_set_membership_trace(mixed_fam, a, prefix, [1] * len(word), m=4)
    assert const.max_deviation[-1][1] > 0.1
    assert level_set_membership_trace(mixed_fam, a, prefix, [], m=4).rows == []


def test_weave_default_family():
    fam = Family([make_finite_system("B", [F(1, 2), F(1, 2)]), make_parametric_system("P", "power", p=3)])
    a = FrequencyVector.parse(fam, "B=1/2:weights:1,1;P=1/2:power:3")
    _, prefix, word = weave_spectrum(fam, a, 5000)
    assert len(word) == 5000 and set(prefix) == {"B", "P"}
