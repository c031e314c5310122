"""Planted-digit measure behind the universal lower bound.

Digits far out in the tail are planted at a sparse schedule of positions;
the ratio of log-mass to log-length climbs towards delta*eta/(1+eps).
"""

from fractions import Fraction

from ngls.frequency import FrequencyVector
from ngls.gls_core import Family, OmegaRule, make_finite_system, make_parametric_system
from ngls.measure import EaSampler, build_base_sequence, eta_lower_trace, kappa_thresholds, theta_schedule

eps, delta = Fraction(1, 10), Fraction(9, 10)
fam = Family([make_parametric_system("L", "luroth", layout="luroth-style"),
              make_finite_system("B", [Fraction(1, 2), Fraction(1, 2)])])
alpha = FrequencyVector.parse(fam, "L=9/10:dirac:1;B=1/10:uniform")
omega = OmegaRule.weave({"L": Fraction(9, 10), "B": Fraction(1, 10)})

sched = theta_schedule(omega, "L", gamma=Fraction(3, 2), horizon=40)
depth = sched.theta(40)
kap = kappa_thresholds(eps, delta, [fam[s] for s in fam.symbols])
print(f"kappa1={kap.kappa1} kappa2={kap.kappa2} depth={depth}")

base = build_base_sequence(fam, alpha, omega, depth, eps=eps)
sampler = EaSampler(fam, base, sched, kap.kappa, eps=eps, delta=delta)
tr = eta_lower_trace(sampler, depth, seed=0)
on = {t for _, t in sampler.scheduled(depth)}
print(f"comparator {tr.comparator:.4f}")
print("     n      ratio     c_n")
for n, r, c in zip(tr.n, tr.ratio, tr.c_n):
    if n in on:
        print(f"{n:>6}   {r:.4f}   {c:.4f}")
