"""Direct iteration of the circle map: the brute-force side of every cross-check.

The circle is the interval ``[x1, 1]`` with its endpoints identified; the lift
adds ``1 - x1`` whenever an orbit passes through ``[0, 1]``.
"""

from dataclasses import dataclass

from .errors import DegenerateInterval, DomainError, FlatHit, NonReturn
from .flatmap import eval_map, eval_map_deriv

GOLDEN_MEAN = (5 ** 0.5 - 1) / 2


@dataclass(frozen=True)
class ReturnTimes:
    q: list

    def __getitem__(self, n):
        return self.q[n]

    def __len__(self):
        return len(self.q)


def fibonacci_qn(N):
    """Closest return times ``q_0..q_N`` for the all-ones continued fraction."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    q = [1, 1][: N + 1]
    while len(q) < N + 1:
        q.append(q[-1] + q[-2])
    return ReturnTimes(q)


def rotation_number_estimate(X, iterations, x0=None):
    """``(F^n(x0) - x0) / (n (1 - x1))`` for the lift ``F``; error at most ``1 / n``.

    The orbit is computed at the precision of ``X``; this is a coarse
    diagnostic and is meant for modest ``iterations``.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    mp = X.ctx.mp
    x = X.x1 if x0 is None else mp.convert(x0)
    start = x
    wraps = 0
    for _ in range(iterations):
        if x >= 0:
            wraps += 1
        x = eval_map(X, x)
    return (x - start + wraps * (1 - X.x1)) / (iterations * (1 - X.x1))


def _first_return(X, y, lo, hi, max_iter):
    x = y
    for t in range(1, max_iter + 1):
        x = eval_map(X, x)
        if lo <= x <= hi:
            return t, x
    raise NonReturn(f"no return to [{lo}, {hi}] within {max_iter} iterates")


def branch_grid(X_next, size, pullback=None):
    """``size`` points spread over the non-flat branches of the map ``X_next``.

    The branches are ``[x1, 0]``, ``[0, x3]`` and ``[x4, 1]``; points sit at
    cell midpoints so none hits a branch end.  A uniform grid can fall almost
    entirely in the flat interval once it dominates the circle, and then every
    comparison is trivially exact.  With ``pullback`` (the previous level's
    ``x1``) the points are mapped back into that level's ``[x1, x2]``.
    """
    mp = X_next.ctx.mp
    branches = ((X_next.x1, mp.zero), (mp.zero, X_next.x3), (X_next.x4, mp.one))
    counts = [size // 3 + (1 if i < size % 3 else 0) for i in range(3)]
    pts = []
    for (a, b), k in zip(branches, counts):
        pts.extend(a + (b - a) * (mp.mpf(i) + mp.mpf(0.5)) / k for i in range(k))
    if pullback is not None:
        pts = [pullback * y for y in pts]
    return pts


def first_return_samples(X, grid, max_iter=10000):
    """First return of each grid point to ``[x1, x2]``, rescaled by ``x -> x / x1``.

    Returns ``(return_time, value)`` pairs; ``value`` is comparable with
    ``eval_map(renorm_step(X), y / x1)``.
    """
    out = []
    for y in grid:
        if not X.x1 <= y <= X.x2:
            raise DomainError("grid points must lie in [x1, x2]")
        t, x = _first_return(X, y, X.x1, X.x2, max_iter)
        out.append((t, x / X.x1))
    return out


def deep_return_samples(X0, traj, n, grid, max_iter=100000):
    """Level-``n`` map recovered from the original map ``X0`` alone.

    With ``P_n = prod_{k<n} x_{1,k}`` (signed), the level-``n`` circle
    ``[x_{1,n}, 1]`` sits in the original chart as ``J = P_{n-1} [x_{1,n-1}, x_{2,n-1}]``
    and the map of ``R^n X0`` at ``y`` is ``f^t(P_n y) / P_n``, ``t`` being the
    first return time of ``f`` to ``J``.  Returns ``(t, value)`` pairs.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    mp = X0.ctx.mp
    P_prev = mp.one
    for k in range(n - 1):
        P_prev *= traj.states[k].X.x1
    prev = traj.states[n - 1].X
    P = P_prev * prev.x1
    ends = (P_prev * prev.x1, P_prev * prev.x2)
    lo, hi = min(ends), max(ends)
    out = []
    for y in grid:
        t, x = _first_return(X0, P * y, lo, hi, max_iter)
        out.append((t, x / P))
    return out


@dataclass(frozen=True)
class PartitionLevel:
    n: int
    lenA: object
    lenB: object
    lenC: object
    lenD: object
    Lambda: object

    def as_dict(self):
        return {"A": self.lenA, "B": self.lenB, "C": self.lenC, "D": self.lenD}


def partition_lengths(traj):
    """Absolute lengths of the central intervals ``A_n, B_n, C_n, D_n``.

    In the level-``n`` chart these are ``[x1, 0]``, ``[0, x3]``, ``[x3, x4]`` and
    ``[x4, 1]``; ``Lambda_n`` converts to the original scale.
    """
    out = []
    for st in traj.states:
        X, lam = st.X, st.Lambda
        out.append(PartitionLevel(st.n, lam * -X.x1, lam * X.x3, lam * (X.x4 - X.x3),
                                  lam * (1 - X.x4), lam))
    return out


def _grid(mp, a, b, size):
    return [a + (b - a) * mp.mpf(i) / (size - 1) for i in range(size)]


def measure_distortion(X, iterate, interval, grid_size=33):
    """Grid distortion ``sup log(Dg(x) / Dg(y))`` of ``g = f^iterate`` on ``interval``."""
    mp = X.ctx.mp
    a, b = (mp.convert(v) for v in interval)
    if not a < b:
        raise DegenerateInterval("need a < b")
    if iterate == 0:
        return mp.zero
    logs = []
    for x in _grid(mp, a, b, grid_size):
        total = mp.zero
        for k in range(iterate):
            if X.x3 <= x <= X.x4:
                raise FlatHit(f"orbit meets the flat interval at step {k}")
            total += mp.log(abs(eval_map_deriv(X, x)))
            x = eval_map(X, x)
        logs.append(total)
    return max(logs) - min(logs)


def cross_ratio(points, images):
    """``B = |g(T)| |g(J)| |L| |R| / (|T| |J| |g(L)| |g(R)|)``.

    ``points = (t0, j0, j1, t1)`` with ``T = [t0, t1] ⊃ J = [j0, j1]`` and wings
    ``L = [t0, j0]``, ``R = [j1, t1]``; ``images`` are the four image points.
    Works with any ordered field type (mpf, Fraction, float).
    """
    t0, j0, j1, t1 = points
    if not t0 < j0 < j1 < t1:
        raise DegenerateInterval("need t0 < j0 < j1 < t1")
    g0, gj0, gj1, g1 = images

    def ln(u, v):
        return abs(v - u)

    num = ln(g0, g1) * ln(gj0, gj1) * ln(t0, j0) * ln(j1, t1)
    den = ln(t0, t1) * ln(j0, j1) * ln(g0, gj0) * ln(gj1, g1)
    if den == 0:
        raise DegenerateInterval("an image interval collapsed")
    return num / den


def cross_ratio_of(g, T, J):
    t0, t1 = T
    j0, j1 = J
    pts = (t0, j0, j1, t1)
    return cross_ratio(pts, tuple(g(p) for p in pts))
