"""Geometric invariants of a located map, and how well the three-mode model predicts w_n.

Run: python3 demos/04_invariants.py   (about a minute)
"""

from fractions import Fraction

from fibrenorm.fibsearch import FamilySpec, bisect_fibonacci
from fibrenorm.flatmap import standard_point
from fibrenorm.invariants import extract_invariants, predict_w
from fibrenorm.numerics import PrecisionContext
from fibrenorm.spectral import eigen_closed_form

ctx = PrecisionContext(bits=256)
base = standard_point(1.5, -0.4, 0.05, 0.1, 0.97, 0.5, ctx)
x3 = Fraction(1, 10)
family = FamilySpec(base, "x2", (x3 / 10 ** 4, x3 * (1 - Fraction(1, 10 ** 4))))
traj = bisect_fibonacci(family, 14, trajectory_depth=12).trajectory

ed = eigen_closed_form(traj.ell, traj.ctx)
est = extract_invariants(traj, ed)
print(f"C_u = {float(est.C_u):.8f}  C_s = {float(est.C_s):.6f}  C_- = {float(est.C_minus):.6f}")
print(f"tail bound {float(est.series_tail_bound):.2e}")

mp = traj.ctx.mp
for n in range(4, 13):
    err = max(abs(a - b) for a, b in zip(predict_w(est, ed, n), traj.states[n].w))
    print(f"  n={n:2d}  |model - w_n| = {mp.nstr(err, 3)}")
