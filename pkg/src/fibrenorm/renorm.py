"""The renormalization operator on the model space and trajectories of it.

One step takes the first return map to ``[x1, x2]`` and rescales by
``x -> x / x1``.  Points of ``(0, x2]`` return after one iterate, points of
``[x1, 0)`` after two, so the new map is assembled from zooms of the old
diffeomorphisms.  With ``P = q_s o phi_minus`` and ``S1 = (x3 - x2) / x3``:

* ``x1' = x2 / x1``
* ``s' = phi_plus_l(S1)`` and ``x2' = s'**ell``
* ``P(1 - x3') = (x4 - x2) / (1 - x2)`` and ``P(1 - x4') = (x3 - x2) / (1 - x2)``
* ``phi_minus' = Z[S1, 1](phi_plus_l)``
* ``phi_plus_l' = phi_plus_r o Z[1 - x3', 1](P)``
* ``phi_plus_r' = Z[0, S1](phi_plus_l) o flip(Z[0, 1 - x4'](P))``

where ``flip(g)(x) = 1 - g(1 - x)``.
"""

import math
from dataclasses import dataclass, field

from .errors import (DegenerateInterval, DomainError, NotRenormalizable, PrecisionCeiling,
                     PrecisionExhausted, SimplexViolation)
from .flatmap import Compose, QsMinus, Reflect, RenormPoint, Zoom
from .numerics import PrecisionContext, monotone_invert
from .spectral import build_L, w_star

SHORT = "short"
LONG = "long"


@dataclass(frozen=True)
class Renormalizability:
    ok: bool
    side: str = None

    def __bool__(self):
        return self.ok


def is_renormalizable(X):
    """``0 < x2 < x3``; a vanishing ``x2`` counts as a short failure, ``x2 >= x3`` as long."""
    if X.x2 < X.ctx.tol:
        return Renormalizability(False, SHORT)
    if X.x2 >= X.x3:
        return Renormalizability(False, LONG)
    return Renormalizability(True)


def qs_deriv_zero(s, ell):
    """``Dq_s(0) = ell (1 - s) s**(ell - 1) / (1 - s**ell)``."""
    mp = s.context
    return ell * (1 - s) * s ** (ell - 1) / -mp.expm1(ell * mp.log(s))


def s_coords(X):
    """``(S1, ..., S5)``.  ``S5 = |x1| Df(x1) / (1 - x2) = Dq_s(0) Dphi_minus(0)``."""
    x1, x2, x3, x4 = X.coords
    if not x2 < x3:
        raise DomainError("S1 needs 0 < x2 < x3")
    S1 = (x3 - x2) / x3
    S2 = (1 - x4) / (1 - x2)
    S3 = x3 / (1 - x4)
    S4 = x2 / -x1
    S5 = qs_deriv_zero(X.s, X.ell) * X.phi_minus.deriv(X.ctx.mp.zero)
    return (S1, S2, S3, S4, S5)


def xtos(S1, S2, S3, S4):
    """Inverse of ``(x1, x2, x3, x4) -> (S1, S2, S3, S4)``."""
    if not 0 < S1 < 1 or min(S2, S3, S4) <= 0:
        raise SimplexViolation("need 0 < S1 < 1 and S2, S3, S4 > 0")
    u = S3 * (1 - S1) * S2
    D = 1 + u
    x1 = -u / (D * S4)
    x2 = u / D
    x3 = S3 * S2 / D
    x4 = 1 - S2 / D
    if not (x1 < 0 < x3 < x4 < 1 and 0 < x2 < 1):
        raise SimplexViolation("S-coordinates do not map into the simplex")
    return (x1, x2, x3, x4)


def partder_table(S1, S2, S3, S4):
    """Jacobian of ``xtos`` in the variables ``(S1, y2, y3, y4, y5)``, ``y_i = log S_i``.

    Rows are ``x1..x4``.  Entries are the hand derivatives of the closed forms.
    """
    T = S3 * S2
    u = T * (1 - S1)
    D = 1 + u
    D2 = D * D
    zero = 0 * S1
    return [
        [T / (D2 * S4), -u / (D2 * S4), -u / (D2 * S4), u / (D * S4), zero],
        [-T / D2, u / D2, u / D2, zero, zero],
        [T * T / D2, T / D2, T / D2, zero, zero],
        [-S3 * S2 * S2 / D2, -S2 / D2, S3 * S2 * S2 * (1 - S1) / D2, zero, zero],
    ]


# Entries where the nominal table has the opposite sign; the hand derivative
# of xtos (and finite differences) give the sign in partder_table.
NOMINAL_SIGN_FLIPS = ((1, 2), (2, 0))


def partder_table_nominal(S1, S2, S3, S4):
    """The nominal table, which differs from ``partder_table`` by sign at two entries."""
    table = partder_table(S1, S2, S3, S4)
    for i, j in NOMINAL_SIGN_FLIPS:
        table[i][j] = -table[i][j]
    return table


def _need(ctx, bits, what):
    if bits > ctx.usable_bits:
        raise PrecisionExhausted(f"{what} needs about {math.ceil(bits)} bits, have "
                                 f"{ctx.usable_bits} usable", needed_bits=math.ceil(bits) + ctx.guard_bits)


def _log2_inv(mp, x):
    return max(0.0, -float(mp.log(x, 2)))


def renorm_step(X):
    """One application of the renormalization operator."""
    verdict = is_renormalizable(X)
    if not verdict:
        raise NotRenormalizable(f"x2 is not in (0, x3): {verdict.side} failure", side=verdict.side)
    ctx, mp, ell = X.ctx, X.ctx.mp, X.ell
    x1, x2, x3, x4 = X.coords
    S1 = (x3 - x2) / x3
    base_loss = X.lost_bits
    _need(ctx, base_loss + _log2_inv(mp, S1), "S1")

    P = Compose(X.qs, X.phi_minus)
    s_new = X.phi_plus_l.value(S1)
    x2_new = s_new ** ell
    c3 = P.inverse((x4 - x2) / (1 - x2))
    d4 = P.inverse((x3 - x2) / (1 - x2))
    x3_new = 1 - c3
    x4_new = 1 - d4
    if not (0 < d4 < c3 < 1):
        raise PrecisionExhausted("inversion lost the ordering of the new marked points")
    _need(ctx, base_loss + max(_log2_inv(mp, x3_new), _log2_inv(mp, d4)), "new marked points")

    try:
        phi_minus = Zoom(X.phi_plus_l, S1, mp.one)
        phi_plus_l = Compose(X.phi_plus_r, Zoom(P, c3, mp.one))
        phi_plus_r = Compose(Zoom(X.phi_plus_l, mp.zero, S1), Reflect(Zoom(P, mp.zero, d4)))
    except DegenerateInterval as exc:
        raise PrecisionExhausted(f"zoom interval collapsed: {exc}") from exc
    try:
        Y = RenormPoint(x2 / x1, x2_new, x3_new, x4_new, s_new,
                        phi_minus, phi_plus_l, phi_plus_r, ell, ctx)
    except SimplexViolation as exc:
        raise PrecisionExhausted(f"renormalized point left the simplex: {exc}") from exc
    _need(ctx, Y.lost_bits, "renormalized diffeomorphisms")
    return Y


def perturbed_point(X, coords):
    """Point with S-coordinates ``(S1, y2, y3, y4, y5)``; diffeomorphisms kept, ``s`` re-solved for ``y5``."""
    mp = X.ctx.mp
    S1, y2, y3, y4, y5 = coords
    x1, x2, x3, x4 = xtos(S1, mp.exp(y2), mp.exp(y3), mp.exp(y4))
    target = mp.exp(y5) / X.phi_minus.deriv(mp.zero)
    lo = mp.ldexp(mp.one, -X.ctx.bits // 2)
    s = monotone_invert(lambda t: qs_deriv_zero(t, X.ell), target, (lo, 1 - lo), ctx=X.ctx)
    return X.replace(x1=x1, x2=x2, x3=x3, x4=x4, s=s)


@dataclass
class RenormState:
    n: int
    X: RenormPoint
    S: tuple
    w: tuple
    alpha: object
    Lambda: object


@dataclass
class Trajectory:
    states: list
    residuals: list
    precision_used: int
    failure: tuple = None
    restarts: list = field(default_factory=list)

    @property
    def depth(self):
        """Number of renormalization steps performed."""
        return len(self.states) - 1

    @property
    def ell(self):
        return self.states[0].X.ell

    @property
    def ctx(self):
        return self.states[0].X.ctx

    def alphas(self):
        return [st.alpha for st in self.states]


def _state(n, X, Lambda):
    mp = X.ctx.mp
    S = s_coords(X)
    w = tuple(mp.log(v) for v in S[1:])
    return RenormState(n=n, X=X, S=S, w=w, alpha=X.x3 / X.x4, Lambda=Lambda)


def residual(ctx, L, wstar, w0, w1):
    mp = ctx.mp
    Lw = L * mp.matrix(list(w0))
    return tuple(w1[i] - Lw[i] - wstar[i] for i in range(4))


def _run_once(X0, depth):
    ctx = X0.ctx
    L = build_L(X0.ell, ctx)
    wstar = w_star(X0.ell, ctx, "derived")
    X = X0
    Lambda = ctx.mp.one
    states, residuals = [], []
    failure = None
    for n in range(depth + 1):
        verdict = is_renormalizable(X)
        if not verdict:
            states.append(RenormState(n=n, X=X, S=None, w=None, alpha=X.x3 / X.x4, Lambda=Lambda))
            failure = (n, verdict.side)
            break
        states.append(_state(n, X, Lambda))
        if n > 0:
            residuals.append(residual(ctx, L, wstar, states[n - 1].w, states[n].w))
        if n == depth:
            break
        Lambda = Lambda * -X.x1
        X = renorm_step(X)
    return Trajectory(states=states, residuals=residuals, precision_used=ctx.bits, failure=failure)


def run_trajectory(X0, depth, ctx=None):
    """Iterate the operator ``depth`` times, or until the first failure.

    ``X0`` is a :class:`RenormPoint` or a callable ``ctx -> RenormPoint`` (the
    latter lets the starting point itself be rebuilt exactly at a higher
    precision).  On :class:`PrecisionExhausted` the whole run restarts with at
    least twice the bits, up to ``ctx.max_bits``.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if ctx is None:
        ctx = X0.ctx if isinstance(X0, RenormPoint) else PrecisionContext()
    build = X0 if callable(X0) else (lambda c: X0.rebind(c))
    restarts = []
    while True:
        try:
            traj = _run_once(build(ctx), depth)
            traj.restarts = restarts
            return traj
        except PrecisionExhausted as exc:
            restarts.append(ctx.bits)
            if ctx.bits >= ctx.max_bits:
                raise PrecisionCeiling(f"precision ceiling {ctx.max_bits} bits reached: {exc}") from exc
            bits = max(2 * ctx.bits, exc.needed_bits or 0)
            ctx = ctx.with_bits(min(bits, ctx.max_bits))


def check_s1_elimination(traj):
    """``ell S1**ell / S2 - 1`` per level; tends to 0 along Fibonacci trajectories."""
    ell = traj.ell
    return [st.S[0] ** ell * ell / st.S[1] - 1 for st in traj.states if st.S is not None]


@dataclass
class OrderRatios:
    n: int
    x2_next: object
    x3_next: object
    x4_next_gap: object
    S1: object
    scaled: tuple
    S1_root_scaled: object = None


def check_orderint(traj):
    """Four ratios comparing level ``n + 1`` with level ``n`` in the level-``n`` chart.

    A level-``n + 1`` coordinate ``x`` sits at ``x * x1_n`` in the level-``n``
    chart, so ``x_{2,n+1} / x_{1,n}`` there is just ``x_{2,n+1}``.  ``scaled``
    divides by ``alpha_{n+1}, alpha_{n+1}, alpha_n, alpha_{n+1}``.  Since
    ``x_{2,n+1}`` is about ``S1**ell``, ``S1`` itself is of order
    ``alpha_{n+1}**(1/ell)``; ``S1_root_scaled`` is that ratio.
    """
    rows = []
    st = traj.states
    for n in range(len(st) - 1):
        if st[n].S is None or st[n + 1].S is None:
            break
        nxt = st[n + 1].X
        r = (nxt.x2, nxt.x3, 1 - nxt.x4, st[n].S[0])
        a_next, a_n = st[n + 1].alpha, st[n].alpha
        rows.append(OrderRatios(n, *r, scaled=(r[0] / a_next, r[1] / a_next, r[2] / a_n, r[3] / a_next),
                                S1_root_scaled=r[3] / a_next ** (1 / traj.ell)))
    return rows


def ss_recursion_errors(traj):
    """Multiplicative errors of the five one-step S recursions, per level.

    Returns tuples ``(e1, ..., e5)`` with ``e_i = predicted_i / actual_i - 1``;
    for ``S1`` the comparison is on ``1 - S1``.
    """
    ell = traj.ell
    out = []
    st = traj.states
    for n in range(len(st) - 1):
        if st[n].S is None or st[n + 1].S is None:
            break
        S1, S2, S3, S4, S5 = st[n].S
        T = st[n + 1].S
        pred = (ell * S1 ** ell / S2, S1 * S2 * S3 / S5, S5 / (ell * S1 * S3), S1 ** ell / S4,
                ell * S1 ** (ell - 1))
        act = (1 - T[0],) + tuple(T[1:])
        out.append(tuple(p / a - 1 for p, a in zip(pred, act)))
    return out
