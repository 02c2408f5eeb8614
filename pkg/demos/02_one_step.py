"""One renormalization step of a flat circle map, checked against the first-return map.

Run: python3 demos/02_one_step.py
"""

from fibrenorm.dynamics import branch_grid, first_return_samples
from fibrenorm.flatmap import eval_map, standard_point
from fibrenorm.numerics import PrecisionContext
from fibrenorm.renorm import renorm_step, s_coords

ctx = PrecisionContext(bits=256)
mp = ctx.mp

# ell, x1, x2, x3, x4, s  (identity diffeomorphisms)
X = standard_point(1.5, -0.4, 0.08, 0.2, 0.9, 0.5, ctx)
Y = renorm_step(X)
print("X  :", [mp.nstr(v, 10) for v in X.coords])
print("RX :", [mp.nstr(v, 10) for v in Y.coords])
print("S(X) =", [mp.nstr(v, 8) for v in s_coords(X)])

# The renormalized map is the first return to [x1, x2], rescaled by 1/x1.
grid = branch_grid(Y, 8, X.x1)
for (t, v), y in zip(first_return_samples(X, grid), grid):
    w = eval_map(Y, y / X.x1)
    print(f"  y={mp.nstr(y, 8):>12}  return time {t}  |difference| = {mp.nstr(abs(v - w), 3)}")
