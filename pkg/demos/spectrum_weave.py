"""Build a word in a two-system level set and watch its frequencies settle."""

from fractions import Fraction

from ngls.frequency import FrequencyVector, level_set_membership_trace, weave_spectrum
from ngls.gls_core import Family, OmegaRule, make_finite_system, make_parametric_system

fam = Family([make_parametric_system("L", "luroth", layout="luroth-style"),
              make_finite_system("B", [Fraction(1, 2), Fraction(1, 2)])])
alpha = FrequencyVector.parse(fam, "L=3/5:geometric:1/2;B=2/5:weights:1,3")
omega = OmegaRule.weave({"L": Fraction(3, 5), "B": Fraction(2, 5)})

omega, prefix, word = weave_spectrum(fam, alpha, 10 ** 5, omega)
print("first 24 positions:", " ".join(f"{s}{b}" for s, b in zip(prefix[:24], word[:24])))

table = level_set_membership_trace(fam, alpha, prefix, word, m=4)
print("\n       n   max deviation")
for n, dev in table.max_deviation:
    print(f"{n:>8}   {dev:.2e}")
