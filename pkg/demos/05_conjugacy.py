"""Compare two golden-mean maps from different families: invariants and length ratios.

Run: python3 demos/05_conjugacy.py   (a few minutes)
"""

from fractions import Fraction

from fibrenorm.conjugacy import conjugacy_report
from fibrenorm.fibsearch import FamilySpec, bisect_fibonacci
from fibrenorm.flatmap import standard_point
from fibrenorm.invariants import extract_invariants
from fibrenorm.numerics import PrecisionContext
from fibrenorm.spectral import eigen_closed_form


def located(x1, s):
    ctx = PrecisionContext(bits=256)
    base = standard_point(1.5, x1, 0.05, 0.1, 0.97, s, ctx)
    x3 = Fraction(1, 10)
    fam = FamilySpec(base, "x2", (x3 / 10 ** 4, x3 * (1 - Fraction(1, 10 ** 4))))
    traj = bisect_fibonacci(fam, 14, trajectory_depth=12).trajectory
    return traj, extract_invariants(traj, eigen_closed_form(traj.ell, traj.ctx))


f, ef = located(-0.4, 0.5)
g, eg = located(-0.7, 0.02)
print(f"C_u(f) = {float(ef.C_u):.6f}   C_u(g) = {float(eg.C_u):.6f}")

rep = conjugacy_report(f, g, ef, eg)
print("classification:", rep.classification)
print("Hoelder estimate:", float(rep.holder_estimate))
for row, spread in zip(rep.dh_table, rep.lipschitz.running_log_spread):
    print(f"  n={row['n']:2d}  Dh(A)={float(row['A']):10.3e}  Dh(B)={float(row['B']):10.3e}  "
          f"log(sup/inf) so far {float(spread):6.2f}")

same = conjugacy_report(f, f, ef, ef)
print("f against itself:", same.classification, "Hoelder", same.holder_estimate)
