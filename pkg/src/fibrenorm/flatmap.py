"""Normalized circle maps with a flat interval.

A point of the model space is four marked points ``x1 < 0 < x3 < x4 < 1``, the
critical value ``x2``, the shape parameter ``s`` and three diffeomorphisms of
``[0, 1]``.  The associated circle map lives on ``[x1, 1]`` (endpoints
identified) and is

* ``f1(x) = (1 - x2) * q_s(phi_minus(1 - x / x1)) + x2``   on ``[x1, 0)``
* ``f2(x) = x1 * phi_plus_l((x3 - x) / x3) ** ell``        on ``[0, x3]``
* ``f3(x) = 0``                                            on ``(x3, x4)``
* ``f4(x) = x2 * phi_plus_r((x - x4) / (1 - x4)) ** ell``  on ``[x4, 1]``

Diffeomorphisms are exact expression DAGs (:class:`DiffeoExpr`); renormalizing
only ever zooms, reflects and composes existing pieces, so nothing is sampled.
"""

from dataclasses import dataclass

import mpmath

from .errors import DegenerateInterval, DomainError, SimplexViolation
from .numerics import PrecisionContext


class DiffeoExpr:
    """Orientation preserving diffeomorphism of ``[0, 1]`` given as an expression.

    Subclasses implement ``_value_deriv``, ``inverse`` and ``rebind``.  Nodes are
    immutable; children are shared by reference, never copied.
    """

    lost_bits = 0.0

    def __call__(self, x):
        return self.value(x)

    def value(self, x):
        return self._value_deriv(x, False)[0]

    def deriv(self, x):
        return self._value_deriv(x, True)[1]

    def value_deriv(self, x):
        return self._value_deriv(x, True)

    def _value_deriv(self, x, want_deriv):
        raise NotImplementedError

    def inverse(self, y):
        raise NotImplementedError

    def rebind(self, ctx, _memo=None):
        """Copy of the DAG with every constant re-evaluated in ``ctx``."""
        raise NotImplementedError

    def nodes(self):
        """All distinct nodes reachable from this one."""
        seen = {}
        stack = [self]
        while stack:
            node = stack.pop()
            if id(node) in seen:
                continue
            seen[id(node)] = node
            stack.extend(node.children())
        return list(seen.values())

    def children(self):
        return ()


class Identity(DiffeoExpr):
    def _value_deriv(self, x, want_deriv):
        return x, (x.context.one if want_deriv else None)

    def inverse(self, y):
        return y

    def rebind(self, ctx, _memo=None):
        return self

    def __repr__(self):
        return "Identity()"


IDENTITY = Identity()


class QsMinus(DiffeoExpr):
    """The diffeomorphic part ``q_s`` of ``x**ell`` on ``[s, 1]`` rescaled to ``[0, 1]``."""

    lost_bits = 1.0

    def __init__(self, s, ell):
        mp = s.context
        if not 0 < s < 1:
            raise DomainError(f"QsMinus needs 0 < s < 1, got {mpmath.nstr(s, 8)}")
        self.s = s
        self.ell = mp.convert(ell)
        self._mp = mp
        log_s = mp.log(s)
        self._s_ell = mp.exp(self.ell * log_s)
        # 1 - s**ell without cancellation for s near 1
        self._one_minus_s_ell = -mp.expm1(self.ell * log_s)
        self._ratio = (1 - s) / s

    def _value_deriv(self, x, want_deriv):
        mp = self._mp
        if x == 0:
            v = mp.zero
        elif x == 1:
            v = mp.one
        else:
            v = self._s_ell * mp.expm1(self.ell * mp.log1p(self._ratio * x)) / self._one_minus_s_ell
        d = None
        if want_deriv:
            base = (1 - self.s) * x + self.s
            d = self.ell * (1 - self.s) * base ** (self.ell - 1) / self._one_minus_s_ell
        return v, d

    def inverse(self, y):
        mp = self._mp
        if y == 0:
            return mp.zero
        if y == 1:
            return mp.one
        return self.s * mp.expm1(mp.log1p(self._one_minus_s_ell * y / self._s_ell) / self.ell) / (1 - self.s)

    def rebind(self, ctx, _memo=None):
        return QsMinus(ctx.mpf(self.s), ctx.mpf(self.ell))

    def __repr__(self):
        return f"QsMinus(s={mpmath.nstr(self.s, 8)}, ell={mpmath.nstr(self.ell, 8)})"


class Zoom(DiffeoExpr):
    """``x -> (phi(a + (b - a) x) - phi(a)) / (phi(b) - phi(a))``."""

    def __init__(self, inner, a, b):
        mp = a.context if hasattr(a, "context") else b.context
        a, b = mp.convert(a), mp.convert(b)
        if not 0 <= a < b <= 1:
            raise DegenerateInterval(f"zoom interval [{mpmath.nstr(a, 8)}, {mpmath.nstr(b, 8)}] "
                                     "must satisfy 0 <= a < b <= 1")
        width = b - a
        if width <= mp.ldexp(max(abs(a), abs(b)), -mp.prec + 2):
            raise DegenerateInterval("zoom interval below the precision floor")
        self.inner, self.a, self.b = inner, a, b
        self._mp = mp
        self._width = width
        self._fa = inner.value(a)
        self._fb = inner.value(b)
        self._den = self._fb - self._fa
        if self._den <= 0:
            raise DegenerateInterval("zoomed diffeomorphism is not increasing on the interval")
        scale = max(abs(self._fa), abs(self._fb))
        self.lost_bits = inner.lost_bits + max(0.0, float(mp.log(scale / self._den, 2)))

    def children(self):
        return (self.inner,)

    def _value_deriv(self, x, want_deriv):
        if x == 0:
            t = self.a
        elif x == 1:
            t = self.b
        else:
            t = self.a + self._width * x
        fv, fd = self.inner._value_deriv(t, want_deriv)
        if x == 0:
            v = self._mp.zero
        elif x == 1:
            v = self._mp.one
        else:
            v = (fv - self._fa) / self._den
        d = fd * self._width / self._den if want_deriv else None
        return v, d

    def inverse(self, y):
        if y == 0:
            return self._mp.zero
        if y == 1:
            return self._mp.one
        return (self.inner.inverse(self._fa + self._den * y) - self.a) / self._width

    def rebind(self, ctx, _memo=None):
        memo = {} if _memo is None else _memo
        if id(self) not in memo:
            memo[id(self)] = Zoom(self.inner.rebind(ctx, memo), ctx.mpf(self.a), ctx.mpf(self.b))
        return memo[id(self)]

    def __repr__(self):
        return f"Zoom({self.inner!r}, [{mpmath.nstr(self.a, 6)}, {mpmath.nstr(self.b, 6)}])"


class Compose(DiffeoExpr):
    """``outer(inner(x))``."""

    def __init__(self, outer, inner):
        self.outer, self.inner = outer, inner
        self.lost_bits = max(outer.lost_bits, inner.lost_bits) + 1.0

    def children(self):
        return (self.outer, self.inner)

    def _value_deriv(self, x, want_deriv):
        iv, idv = self.inner._value_deriv(x, want_deriv)
        ov, odv = self.outer._value_deriv(iv, want_deriv)
        return ov, (odv * idv if want_deriv else None)

    def inverse(self, y):
        return self.inner.inverse(self.outer.inverse(y))

    def rebind(self, ctx, _memo=None):
        memo = {} if _memo is None else _memo
        if id(self) not in memo:
            memo[id(self)] = Compose(self.outer.rebind(ctx, memo), self.inner.rebind(ctx, memo))
        return memo[id(self)]

    def __repr__(self):
        return f"Compose({self.outer!r}, {self.inner!r})"


class Reflect(DiffeoExpr):
    """``x -> 1 - phi(1 - x)``, the conjugate of ``phi`` by the flip of ``[0, 1]``."""

    def __init__(self, inner):
        self.inner = inner
        self.lost_bits = inner.lost_bits + 1.0

    def children(self):
        return (self.inner,)

    def _value_deriv(self, x, want_deriv):
        iv, idv = self.inner._value_deriv(1 - x, want_deriv)
        return 1 - iv, idv

    def inverse(self, y):
        return 1 - self.inner.inverse(1 - y)

    def rebind(self, ctx, _memo=None):
        memo = {} if _memo is None else _memo
        if id(self) not in memo:
            memo[id(self)] = Reflect(self.inner.rebind(ctx, memo))
        return memo[id(self)]

    def __repr__(self):
        return f"Reflect({self.inner!r})"


def qs_minus(s, ell, x):
    """``q_s(x) = (((1 - s) x + s)**ell - s**ell) / (1 - s**ell)`` for ``x`` in ``[0, 1]``."""
    if not 0 <= x <= 1:
        raise DomainError("qs_minus is defined on [0, 1]")
    mp = s.context
    return QsMinus(s, ell).value(mp.convert(x))


def qs_minus_inverse(s, ell, y):
    if not 0 <= y <= 1:
        raise DomainError("qs_minus_inverse is defined on [0, 1]")
    return QsMinus(s, ell).inverse(s.context.convert(y))


def zoom(phi, interval):
    a, b = interval
    return Zoom(phi, a, b)


def diffeo_eval(phi, x):
    if not 0 <= x <= 1:
        raise DomainError("diffeomorphisms are evaluated on [0, 1]")
    return phi.value(x)


def diffeo_deriv(phi, x):
    if not 0 <= x <= 1:
        raise DomainError("diffeomorphisms are evaluated on [0, 1]")
    return phi.deriv(x)


def _grid(mp, n):
    return [mp.mpf(i) / (n - 1) for i in range(n)]


def diffeo_distortion(phi, grid_size, ctx=None):
    """Grid approximation of ``sup log(Dphi(x) / Dphi(y))`` over ``[0, 1]``."""
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    mp = (ctx or PrecisionContext()).mp
    derivs = [phi.deriv(x) for x in _grid(mp, grid_size)]
    return mp.log(max(derivs) / min(derivs))


def nonlinearity(phi, x, h=None):
    """``D log D phi`` at ``x`` by central differences of ``log D phi`` (one-sided at the ends)."""
    mp = x.context
    if h is None:
        h = mp.ldexp(mp.one, -(mp.prec // 3))
    lo = max(mp.zero, x - h)
    hi = min(mp.one, x + h)
    return (mp.log(phi.deriv(hi)) - mp.log(phi.deriv(lo))) / (hi - lo)


def nonlinearity_norm(phi, grid_size, ctx=None):
    """Approximate ``sup |eta_phi|`` on a uniform grid of ``grid_size`` points."""
    if grid_size < 3:
        raise ValueError("grid_size must be at least 3")
    mp = (ctx or PrecisionContext()).mp
    return max(abs(nonlinearity(phi, x)) for x in _grid(mp, grid_size))


@dataclass(frozen=True)
class RenormPoint:
    """A point of the model space: marked points, shape parameter and three diffeos."""

    x1: object
    x2: object
    x3: object
    x4: object
    s: object
    phi_minus: DiffeoExpr
    phi_plus_l: DiffeoExpr
    phi_plus_r: DiffeoExpr
    ell: object
    ctx: PrecisionContext

    def __post_init__(self):
        if not (self.x1 < 0 < self.x3 < self.x4 < 1):
            raise SimplexViolation("need x1 < 0 < x3 < x4 < 1")
        if not 0 < self.x2 < 1:
            raise SimplexViolation("need 0 < x2 < 1")
        if not 0 < self.s < 1:
            raise SimplexViolation("need 0 < s < 1")
        if not 1 < self.ell < 2:
            raise DomainError("critical exponent must satisfy 1 < ell < 2")

    @property
    def coords(self):
        return (self.x1, self.x2, self.x3, self.x4)

    @property
    def qs(self):
        return QsMinus(self.s, self.ell)

    @property
    def lost_bits(self):
        return max(self.phi_minus.lost_bits, self.phi_plus_l.lost_bits, self.phi_plus_r.lost_bits)

    def rebind(self, ctx):
        """Same point with every number re-evaluated in ``ctx``."""
        memo = {}
        return RenormPoint(*(ctx.mpf(v) for v in (self.x1, self.x2, self.x3, self.x4, self.s)),
                           self.phi_minus.rebind(ctx, memo), self.phi_plus_l.rebind(ctx, memo),
                           self.phi_plus_r.rebind(ctx, memo), ctx.mpf(self.ell), ctx)

    def replace(self, **changes):
        fields = dict(x1=self.x1, x2=self.x2, x3=self.x3, x4=self.x4, s=self.s,
                      phi_minus=self.phi_minus, phi_plus_l=self.phi_plus_l,
                      phi_plus_r=self.phi_plus_r, ell=self.ell, ctx=self.ctx)
        fields.update(changes)
        return RenormPoint(**fields)

    def __repr__(self):
        vals = ", ".join(f"{k}={mpmath.nstr(getattr(self, k), 10)}"
                         for k in ("x1", "x2", "x3", "x4", "s", "ell"))
        return f"RenormPoint({vals}, bits={self.ctx.bits})"


def standard_point(ell, x1, x2, x3, x4, s, ctx=None):
    """Point with all three diffeomorphisms equal to the identity."""
    ctx = ctx or PrecisionContext()
    vals = [ctx.mpf(v) for v in (x1, x2, x3, x4, s, ell)]
    return RenormPoint(*vals[:5], IDENTITY, IDENTITY, IDENTITY, vals[5], ctx)


def eval_map(X, x):
    """Evaluate the circle map of ``X`` at ``x`` in ``[x1, 1]``."""
    if not X.x1 <= x <= 1:
        raise DomainError("eval_map is defined on [x1, 1]")
    if x < 0:
        t = 1 - x / X.x1
        return (1 - X.x2) * X.qs.value(X.phi_minus.value(t)) + X.x2
    if x <= X.x3:
        return X.x1 * X.phi_plus_l.value((X.x3 - x) / X.x3) ** X.ell
    if x < X.x4:
        return X.ctx.mp.zero
    return X.x2 * X.phi_plus_r.value((x - X.x4) / (1 - X.x4)) ** X.ell


def eval_map_deriv(X, x):
    """Derivative of the circle map at ``x``; zero on the closed flat interval."""
    if not X.x1 <= x <= 1:
        raise DomainError("eval_map_deriv is defined on [x1, 1]")
    mp = X.ctx.mp
    if x < 0:
        t = 1 - x / X.x1
        pv, pd = X.phi_minus.value_deriv(t)
        return (1 - X.x2) * X.qs.deriv(pv) * pd / (-X.x1)
    if x <= X.x3:
        u = (X.x3 - x) / X.x3
        pv, pd = X.phi_plus_l.value_deriv(u)
        return -X.x1 * X.ell * pv ** (X.ell - 1) * pd / X.x3
    if x < X.x4:
        return mp.zero
    u = (x - X.x4) / (1 - X.x4)
    pv, pd = X.phi_plus_r.value_deriv(u)
    return X.x2 * X.ell * pv ** (X.ell - 1) * pd / (1 - X.x4)
