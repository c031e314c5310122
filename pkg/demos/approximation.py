"""Finite approximations of the Lüroth map and their dimension values."""

from ngls.approximation import approximant_dimension, approximate_system, measure_convergence_check
from ngls.frequency import FrequencyVector
from ngls.gls_core import Family, make_parametric_system

L = make_parametric_system("L", "luroth", layout="luroth-style")
for m in (1, 2, 3):
    rows = approximate_system(L, m).branch_table()
    cells = ", ".join(f"[{r['interval'][0]}, {r['interval'][1]}]{'*' if r['merged'] else ''}" for r in rows)
    print(f"m={m}: {cells}")

fam = Family([L])
alpha = FrequencyVector.single(fam, "geometric:1/2")
print("\n  m   beta_m    e_m*R_m")
for m in (1, 2, 4, 8, 16, 32):
    d = approximant_dimension(fam, alpha, m)
    print(f"{m:>3}   {d.beta_m:.5f}   {d.bound:.5f}")

tab = measure_convergence_check(fam, "L", alpha, [3, 1, 2], range(1, 6))
print("\nmass of <3,1,2> under each approximation")
for r in tab.rows:
    print(f"  m={r.m}  [{float(r.mu_m_lower):.6g}, {float(r.mu_m_upper):.6g}]  exact={float(r.mu):.6g}  equal={r.equal}")
