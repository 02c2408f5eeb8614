"""Bisect a one-parameter family for its golden-mean map and watch alpha_n collapse.

Run: python3 demos/03_locate_fibonacci.py   (about a minute)
"""

from fractions import Fraction

from fibrenorm.dynamics import rotation_number_estimate
from fibrenorm.fibsearch import FamilySpec, bisect_fibonacci
from fibrenorm.flatmap import standard_point
from fibrenorm.numerics import PrecisionContext
from fibrenorm.spectral import eigen_closed_form

ctx = PrecisionContext(bits=256)
mp = ctx.mp
base = standard_point(1.5, -0.4, 0.05, 0.1, 0.97, 0.5, ctx)
x3 = Fraction(1, 10)
family = FamilySpec(base, "x2", (x3 / 10 ** 4, x3 * (1 - Fraction(1, 10 ** 4))))

res = bisect_fibonacci(family, 14, trajectory_depth=12)
print(f"x2 = {float(res.parameter):.16f}  depth {res.achieved_depth}  {res.steps} steps  {res.bits} bits")
traj = res.trajectory
print(f"rotation number after 1000 iterates: {float(rotation_number_estimate(traj.states[0].X, 1000)):.6f}")

lam = eigen_closed_form(1.5, ctx).lambda_u
prev = None
for n, a in enumerate(traj.alphas()):
    ll = mp.log(-mp.log(a))
    step = "" if prev is None else f"   increment {float(ll - prev):.4f}"
    print(f"  n={n:2d}  alpha={mp.nstr(a, 5):>12}{step}")
    prev = ll
print(f"log lambda_u = {float(mp.log(lam)):.4f}")
