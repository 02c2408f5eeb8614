"""The linear model ``w_{n+1} = L w_n + w*`` and its closed-form eigen-data.

Vectors are indexed by the S-coordinates 2..5, i.e. ``w = (log S2, log S3,
log S4, log S5)``.  Characteristic polynomial of ``L``:
``det(L - x I) = x (x + 1) (x**2 - x/ell - 1/ell)``.
"""

import math
from dataclasses import dataclass

from .errors import SingularBasis, StepTooLarge
from .numerics import PrecisionContext

BETA_VARIANTS = ("theoremLM", "prop1beta", "holder")


def _ctx(ctx):
    return ctx or PrecisionContext()


def build_L(ell, ctx=None):
    mp = _ctx(ctx).mp
    ell = mp.convert(ell)
    inv = 1 / ell
    return mp.matrix([
        [1 + inv, 1, 0, -1],
        [-inv, -1, 0, 1],
        [1, 0, -1, 0],
        [1 - inv, 0, 0, 0],
    ])


W_STAR_FORMS = ("nominal", "derived")


def w_star(ell, ctx=None, form="nominal"):
    """Affine term of the linear model.

    ``nominal``: ``(-1/ell, 1 - 1/ell, -1, 1/ell) * log(ell)``.
    ``derived``: the same with the second entry negated.  Eliminating ``S1``
    through ``ell S1**ell = S2`` in ``S3' = S5 / (ell S1 S3)`` gives
    ``y3' = -y2/ell - y3 + y5 - (1 - 1/ell) log(ell)``, so only the derived
    form makes the residuals of real trajectories decay.
    """
    mp = _ctx(ctx).mp
    ell = mp.convert(ell)
    lg = mp.log(ell)
    second = (1 - 1 / ell) * lg
    if form == "derived":
        second = -second
    elif form != "nominal":
        raise ValueError(f"form must be one of {W_STAR_FORMS}")
    return mp.matrix([-lg / ell, second, -lg, lg / ell])


def fixed_point(ell, ctx=None, form="nominal"):
    """Solve ``(I - L) w = w*``; 1 is never an eigenvalue of ``L`` for ``ell > 1``."""
    mp = _ctx(ctx).mp
    L = build_L(ell, ctx)
    return mp.lu_solve(mp.eye(4) - L, w_star(ell, ctx, form))


def eigenvalues(ell, ctx=None):
    """``(lambda_u, lambda_s)``, the roots of ``x**2 - x/ell - 1/ell``."""
    mp = _ctx(ctx).mp
    inv = 1 / mp.convert(ell)
    root = mp.sqrt(inv * inv + 4 * inv)
    return (inv + root) / 2, (inv - root) / 2


def _eigvec(ell, lam, mp):
    return mp.matrix([
        1,
        (-lam + ell - 1) / (ell * lam * (1 + lam)),
        1 / (1 + lam),
        (ell - 1) / (ell * lam),
    ])


def unstable_pair_float(ell):
    """Float ``(lambda_u, e2u + e3u)`` for cheap precision estimates."""
    inv = 1.0 / ell
    lam = (inv + math.sqrt(inv * inv + 4 * inv)) / 2
    e3 = (-lam + ell - 1) / (ell * lam * (1 + lam))
    return lam, 1.0 + e3


@dataclass(frozen=True)
class EigenData:
    ell: object
    L: object
    w_star: object
    w_fix: object
    w_star_derived: object
    w_fix_derived: object
    lambda_u: object
    lambda_s: object
    E_u: object
    E_s: object
    E_minus: object
    E_zero: object
    ctx: PrecisionContext

    @property
    def basis(self):
        """Columns ``E_u, E_s, E_minus, E_zero``."""
        mp = self.ctx.mp
        B = mp.matrix(4, 4)
        for j, vec in enumerate((self.E_u, self.E_s, self.E_minus, self.E_zero)):
            for i in range(4):
                B[i, j] = vec[i]
        return B

    def beta(self, variant):
        return beta_exponent(self.ell, variant, self.ctx, eigen=self)

    def as_dict(self):
        def vec(v):
            return [float(x) for x in v]
        return {
            "ell": float(self.ell),
            "lambda_u": float(self.lambda_u),
            "lambda_s": float(self.lambda_s),
            "E_u": vec(self.E_u),
            "E_s": vec(self.E_s),
            "E_minus": vec(self.E_minus),
            "E_zero": vec(self.E_zero),
            "w_star": vec(self.w_star),
            "w_fix": vec(self.w_fix),
            "w_star_derived": vec(self.w_star_derived),
            "w_fix_derived": vec(self.w_fix_derived),
            "beta_theoremLM": float(self.beta("theoremLM")),
            "beta_prop": float(self.beta("prop1beta")),
            "beta_holder": float(self.beta("holder")),
        }


def eigen_closed_form(ell, ctx=None):
    ctx = _ctx(ctx)
    mp = ctx.mp
    ell = mp.convert(ell)
    if not 1 < ell < 2:
        raise ValueError("closed-form eigen-data is for 1 < ell < 2")
    lam_u, lam_s = eigenvalues(ell, ctx)
    return EigenData(
        ell=ell,
        L=build_L(ell, ctx),
        w_star=w_star(ell, ctx),
        w_fix=fixed_point(ell, ctx),
        w_star_derived=w_star(ell, ctx, "derived"),
        w_fix_derived=fixed_point(ell, ctx, "derived"),
        lambda_u=lam_u,
        lambda_s=lam_s,
        E_u=_eigvec(ell, lam_u, mp),
        E_s=_eigvec(ell, lam_s, mp),
        E_minus=mp.matrix([0, 0, -1, 0]),
        E_zero=mp.matrix([0, 1, 0, 1]),
        ctx=ctx,
    )


def project_eigenbasis(v, ed):
    """Coefficients ``(c_u, c_s, c_minus, c_zero)`` of ``v`` in the eigenbasis."""
    mp = ed.ctx.mp
    try:
        c = mp.lu_solve(ed.basis, mp.matrix(list(v)))
    except ZeroDivisionError as exc:
        raise SingularBasis("eigenbasis is degenerate") from exc
    return tuple(c[i] for i in range(4))


def beta_exponent(ell, variant, ctx=None, eigen=None):
    """Regularity exponent; the three variants differ only in the power of ``lambda_u``.

    ``theoremLM``: ``(1 + e3u)(lambda_u - 1) / (2 lambda_u**2)``
    ``prop1beta``: ``(1 + e3u)(lambda_u - 1) / (2 lambda_u**4)``
    ``holder``:    ``(1 + e3u)(lambda_u - 1) / lambda_u**3``
    """
    ed = eigen or eigen_closed_form(ell, ctx)
    lam, e3 = ed.lambda_u, ed.E_u[1]
    num = (1 + e3) * (lam - 1)
    if variant == "theoremLM":
        return num / (2 * lam ** 2)
    if variant == "prop1beta":
        return num / (2 * lam ** 4)
    if variant == "holder":
        return num / lam ** 3
    raise ValueError(f"unknown beta variant {variant!r}; expected one of {BETA_VARIANTS}")


def char_poly(L, x):
    mp = x.context
    return mp.det(L - x * mp.eye(4))


def char_poly_factored(ell, x):
    inv = 1 / x.context.convert(ell)
    return x * (x + 1) * (x * x - x * inv - inv)


def expected_A_block(ell, S1, ctx=None):
    """The 5x5 block ``A`` in coordinates ``(S1, y2, y3, y4, y5)``.

    Column one carries the ``1/S1`` terms, row one the ``S1`` update, and the
    lower-right 4x4 block is ``L``.
    """
    mp = _ctx(ctx).mp
    ell = mp.convert(ell)
    L = build_L(ell, ctx)
    A = mp.matrix(5, 5)
    col = (-ell, 1, -1, ell, ell - 1)
    for i in range(5):
        A[i, 0] = col[i] / S1
    A[0, 1] = 1
    for i in range(4):
        for j in range(4):
            A[i + 1, j + 1] = L[i, j]
    return A


@dataclass
class JacobianBlockReport:
    level: int
    S1: object
    jacobian: object
    column_scaled: list
    column_expected: list
    column_rel_err: list
    dS1_dy2: object
    reduced_block: object
    reduced_err: object
    fixed_block_err: object
    step: object

    @property
    def max_error(self):
        return max([abs(e) for e in self.column_rel_err]
                   + [abs(self.dS1_dy2 - 1), self.reduced_err, self.fixed_block_err])


def jacobian_block_check(traj, level, h=None):
    """Finite-difference Jacobian of ``(S1, y2..y5) -> (S1', y2'..y5')`` at one level.

    Checks column one scaled by ``S1`` against ``(-ell, 1, -1, ell, ell - 1)``,
    ``dS1'/dy2`` against 1, and the ``y -> y'`` block against ``L``.  Because
    ``L`` describes the dynamics after eliminating ``S1 = (S2/ell)**(1/ell)``,
    the block is compared in reduced form: the ``y2`` column gets the ``S1``
    column times ``dS1/dy2 = S1/ell`` added.  The raw fixed-``S1`` block is
    compared against ``L`` minus that same rank-one term.
    """
    from .renorm import perturbed_point, renorm_step, s_coords

    state = traj.states[level]
    X = state.X
    ctx = X.ctx
    mp = ctx.mp
    ell = X.ell
    S = s_coords(X)
    S1 = S[0]
    if h is None:
        h = mp.ldexp(mp.one, -(ctx.bits // 3))
    if h > S1 / 8:
        raise StepTooLarge("finite-difference step exceeds S1/8")

    def image(coords):
        Y = renorm_step(perturbed_point(X, coords))
        T = s_coords(Y)
        return [T[0]] + [mp.log(t) for t in T[1:]]

    base = [S1] + [mp.log(t) for t in S[1:]]
    J = mp.matrix(5, 5)
    for j in range(5):
        step = h * S1 if j == 0 else h
        plus = list(base)
        minus = list(base)
        plus[j] += step
        minus[j] -= step
        fp, fm = image(plus), image(minus)
        for i in range(5):
            J[i, j] = (fp[i] - fm[i]) / (2 * step)

    col_expected = [-ell, 1, -1, ell, ell - 1]
    col_scaled = [J[i, 0] * S1 for i in range(5)]
    col_err = [(col_scaled[i] - col_expected[i]) / col_expected[i] for i in range(5)]
    L = build_L(ell, ctx)
    reduced = mp.matrix(4, 4)
    fixed_err = mp.zero
    red_err = mp.zero
    for i in range(4):
        for j in range(4):
            reduced[i, j] = J[i + 1, j + 1] + (J[i + 1, 0] * S1 / ell if j == 0 else 0)
            red_err = max(red_err, abs(reduced[i, j] - L[i, j]))
            fixed_expected = L[i, j] - (col_expected[i + 1] / ell if j == 0 else 0)
            fixed_err = max(fixed_err, abs(J[i + 1, j + 1] - fixed_expected))
    return JacobianBlockReport(level=level, S1=S1, jacobian=J, column_scaled=col_scaled,
                               column_expected=col_expected, column_rel_err=col_err,
                               dS1_dy2=J[0, 1], reduced_block=reduced, reduced_err=red_err,
                               fixed_block_err=fixed_err, step=h)
