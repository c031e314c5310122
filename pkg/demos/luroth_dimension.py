"""Dimension of Lüroth level sets for a few digit laws.

Prints eta, the beta liminf and the resulting dimension, then checks the
value against sampled words of the matching Bernoulli measure.
"""

from ngls.dimension import dim_formula
from ngls.frequency import FrequencyVector
from ngls.gls_core import Family, make_parametric_system
from ngls.measure import FibreBernoulli, local_dimension_trace, sample_level_set

fam = Family([make_parametric_system("L", "luroth", layout="luroth-style")])

print(f"{'law':<16}{'beta':>10}{'dim':>10}  divergent")
for spec in ["dirac:1", "geometric:1/2", "geometric:9/10", "power:2", "logpower:2"]:
    rep = dim_formula(fam, FrequencyVector.single(fam, spec))
    print(f"{spec:<16}{rep.beta:>10.5f}{rep.dim:>10.5f}  {rep.lyapunov_divergent}")

alpha = FrequencyVector.single(fam, "geometric:1/2")
mu = FibreBernoulli(fam, alpha, "L")
word = sample_level_set(mu, 10 ** 5, seed=0)
tr = local_dimension_trace(mu, word, checkpoints=[10, 100, 1000, 10 ** 4, 10 ** 5])
print("\nlocal dimension along one sampled word (geometric:1/2)")
for n, r in zip(tr.n, tr.ratio):
    print(f"  n={n:>6}  {r:.5f}")
