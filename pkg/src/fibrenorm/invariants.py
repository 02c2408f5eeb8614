"""The geometric invariants ``C_u, C_s, C_-`` of a Fibonacci trajectory.

With ``v_n = w_n - w_fix`` and ``v_{n+1} = L v_n + eps_n`` one has, mode by
mode, ``c(v_n) / lam**n = c(v_0) + sum_{k<n} c(eps_k) / lam**(k+1)``; the
invariants are the limits of these series.
"""

from dataclasses import dataclass, field

from .errors import NotConverged
from .renorm import RenormState, Trajectory, residual


@dataclass
class InvariantEstimate:
    C_u: object
    C_s: object
    C_minus: object
    per_level: list
    series_tail_bound: object
    converged: bool
    tolerance: object
    direct: tuple = None
    ell: object = None

    def as_dict(self):
        return {
            "C_u": float(self.C_u),
            "C_s": float(self.C_s),
            "C_minus": float(self.C_minus),
            "tail_bound": float(self.series_tail_bound),
            "converged": self.converged,
            "per_level": [{k: (float(v) if k != "n" else v) for k, v in row.items()}
                          for row in self.per_level],
        }


def _vec(mp, v):
    return mp.matrix(list(v))


def _project(ed, v):
    from .spectral import project_eigenbasis
    return project_eigenbasis(v, ed)


def _usable_states(traj):
    return [st for st in traj.states if st.w is not None]


def extract_invariants(traj, ed, min_depth=6, check=True):
    """Series and direct estimates of ``(C_u, C_s, C_-)``.

    ``per_level`` holds for each level ``n`` the direct estimates
    ``c_u(v_n) / lam_u**n``, ``c_s(v_n - known modes) / lam_s**n`` and
    ``c_-(v_n) / (-1)**n`` next to the partial series sums through ``k < n``.
    The tail bound is the magnitude of the last series terms used.
    """
    mp = ed.ctx.mp
    states = _usable_states(traj)
    N = len(states) - 1
    if N < min_depth:
        raise ValueError(f"trajectory depth {N} is below {min_depth}")
    eps = list(traj.residuals[:N])
    w_fix = ed.w_fix_derived
    lam_u, lam_s = ed.lambda_u, ed.lambda_s

    c0 = _project(ed, [states[0].w[i] - w_fix[i] for i in range(4)])
    terms = []
    for k, e in enumerate(eps):
        ce = _project(ed, e)
        terms.append((ce[0] / lam_u ** (k + 1), ce[1] / lam_s ** (k + 1),
                      ce[2] / (-1) ** (k + 1)))
    series = [list(c0[:3])]
    for t in terms:
        series.append([series[-1][i] + t[i] for i in range(3)])

    direct = []
    for n, st in enumerate(states):
        v = [st.w[i] - w_fix[i] for i in range(4)]
        cu, _, cm, _ = _project(ed, v)
        cu, cm = cu / lam_u ** n, cm / (-1) ** n
        # strip the dominant modes before reading off the stable one
        comp = [v[i] - series[n][0] * lam_u ** n * ed.E_u[i]
                - series[n][2] * (-1) ** n * ed.E_minus[i] for i in range(4)]
        cs = _project(ed, comp)[1] / lam_s ** n
        direct.append((cu, cs, cm))

    per_level = []
    for n in range(N + 1):
        per_level.append({"n": n, "C_u": direct[n][0], "C_s": direct[n][1], "C_minus": direct[n][2],
                          "series_u": series[n][0], "series_s": series[n][1],
                          "series_minus": series[n][2]})

    C = series[N]
    if terms:
        last = terms[-1]
        tail = max(abs(last[0]), abs(last[1]) * abs(lam_s) ** N, abs(last[2]))
    else:
        tail = mp.zero
    tail = max(tail, mp.ldexp(mp.one, -(ed.ctx.bits - 64)))
    tol = max(mp.mpf("1e-6"), 8 * tail)
    diffs = [abs(direct[N][i] - direct[N - 1][i]) for i in (0, 2)]
    converged = max(diffs) < tol
    disagreement = max(abs(direct[N][i] - C[i]) for i in (0, 2))
    if check and disagreement > tol:
        raise NotConverged(f"series and direct estimates differ by {mp.nstr(disagreement, 5)}")
    return InvariantEstimate(C_u=C[0], C_s=C[1], C_minus=C[2], per_level=per_level,
                             series_tail_bound=tail, converged=converged, tolerance=tol,
                             direct=direct[N], ell=ed.ell)


def model_w(ed, C_u, C_s, C_minus, n):
    mp = ed.ctx.mp
    return [C_u * ed.lambda_u ** n * ed.E_u[i] + C_s * ed.lambda_s ** n * ed.E_s[i]
            + C_minus * (-1) ** n * ed.E_minus[i] + ed.w_fix_derived[i] for i in range(4)]


def predict_w(est, ed, n):
    """``C_u lam_u**n E_u + C_s lam_s**n E_s + C_- (-1)**n E_- + w_fix``."""
    return model_w(ed, est.C_u, est.C_s, est.C_minus, n)


def synthetic_trajectory(ed, C_u, C_s, C_minus, depth):
    """Trajectory whose ``w_n`` follow the exact three-mode model."""
    mp = ed.ctx.mp
    ctx = ed.ctx
    C_u, C_s, C_minus = (ctx.mpf(c) for c in (C_u, C_s, C_minus))
    states = []
    for n in range(depth + 1):
        w = tuple(model_w(ed, C_u, C_s, C_minus, n))
        S = (None,) + tuple(mp.exp(y) for y in w)
        states.append(RenormState(n=n, X=None, S=S, w=w, alpha=None, Lambda=None))
    res = [residual(ctx, ed.L, ed.w_star_derived, states[n].w, states[n + 1].w) for n in range(depth)]
    return Trajectory(states=states, residuals=res, precision_used=ctx.bits)


def predict_x_asymptotics(est, ed, n):
    """``(x1, x2, x3, 1 - x4)`` at level ``n`` from the model ``w_n``.

    For small ``S1`` and ``S2 S3`` the coordinate inverse gives
    ``x2 ~ x3 ~ S2 S3``, ``1 - x4 ~ S2`` and ``-x1 ~ S2 S3 / S4``.
    """
    mp = ed.ctx.mp
    y2, y3, y4, _ = predict_w(est, ed, n)
    x23 = mp.exp(y2 + y3)
    return (-mp.exp(y2 + y3 - y4), x23, x23, mp.exp(y2))


def leading_log_x2(est, ed, n):
    """Leading exponent ``C_u lam_u**n (e2u + e3u)`` of ``log x2`` and ``log alpha``."""
    return est.C_u * ed.lambda_u ** n * (ed.E_u[0] + ed.E_u[1])


@dataclass
class ReturnGap:
    n: int
    product: object
    log_product: object
    log_model_summed: object
    log_model_leading: object
    ratio_summed: object = field(default=None)
    ratio_leading: object = field(default=None)


def predict_return_gap(est, ed, n, traj):
    """``prod_{k<=n} S_{4,k}`` against the model.

    The product is the gap ``f^{q_{n+1}+1}(U) - f(U)`` divided by ``|x_{1,0}|``.
    Summing the model over levels gives the exponent
    ``C_u e4u (lam_u**(n+1) - 1) / (lam_u - 1)`` plus bounded terms; the bare
    ``C_u lam_u**n e4u`` is reported too, and its ratio to ``log(product)``
    tends to ``lam_u / (lam_u - 1)`` rather than 1.
    """
    mp = ed.ctx.mp
    states = _usable_states(traj)
    if n >= len(states):
        raise ValueError("trajectory too short")
    log_prod = mp.fsum(states[k].w[2] for k in range(n + 1))
    summed = mp.fsum(predict_w(est, ed, k)[2] for k in range(n + 1))
    leading = est.C_u * ed.lambda_u ** n * ed.E_u[2]
    return ReturnGap(n=n, product=mp.exp(log_prod), log_product=log_prod,
                     log_model_summed=summed, log_model_leading=leading,
                     ratio_summed=log_prod / summed, ratio_leading=log_prod / leading)
