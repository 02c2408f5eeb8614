"""Precision contract and monotone root finding.

Every computation takes an explicit :class:`PrecisionContext`.  Numbers are
``mpmath`` floats bound to that context's own ``MPContext``, so two contexts
with different precision never share rounding state.
"""

import math
import os
from dataclasses import dataclass, field

import mpmath

from .errors import BracketError, PrecisionCeiling, PrecisionExhausted, ToleranceError

DEFAULT_BITS = 256
DEFAULT_GUARD_BITS = 32
DEFAULT_MAX_BITS = 16384


def _env_max_bits(default=DEFAULT_MAX_BITS):
    value = os.environ.get("FIBRENORM_MAX_BITS")
    return int(value) if value else default


@dataclass(frozen=True)
class PrecisionContext:
    bits: int = DEFAULT_BITS
    guard_bits: int = DEFAULT_GUARD_BITS
    max_bits: int = field(default_factory=_env_max_bits)

    def __post_init__(self):
        if self.bits < 64:
            raise ValueError(f"precision must be at least 64 bits, got {self.bits}")
        if self.bits > self.max_bits:
            raise PrecisionCeiling(f"{self.bits} bits exceeds max_bits={self.max_bits}")
        if not 0 <= self.guard_bits < self.bits:
            raise ValueError("guard_bits must satisfy 0 <= guard_bits < bits")
        mp = mpmath.MPContext()
        mp.prec = self.bits
        object.__setattr__(self, "mp", mp)

    def mpf(self, x):
        """Convert ``x`` (int, str, Fraction, float or foreign mpf) into this context."""
        if hasattr(x, "numerator") and hasattr(x, "denominator") and not isinstance(x, int):
            return self.mp.mpf(x.numerator) / x.denominator
        return self.mp.convert(x)

    @property
    def tol(self):
        """Default inversion tolerance, ``2**-(bits - guard_bits)``."""
        return self.mp.ldexp(self.mp.one, -(self.bits - self.guard_bits))

    @property
    def usable_bits(self):
        return self.bits - self.guard_bits

    def with_bits(self, bits):
        return PrecisionContext(bits=bits, guard_bits=self.guard_bits, max_bits=self.max_bits)

    def doubled(self):
        if self.bits >= self.max_bits:
            raise PrecisionCeiling(f"already at max_bits={self.max_bits}")
        return self.with_bits(min(2 * self.bits, self.max_bits))

    def check_cancellation(self, result, *operands, what="subtraction"):
        """Raise PrecisionExhausted if ``result`` is below the guard threshold relative to operands."""
        scale = max(abs(op) for op in operands)
        if scale == 0:
            return
        if result == 0 or self.mp.mag(result) - self.mp.mag(scale) < -self.usable_bits:
            raise PrecisionExhausted(f"catastrophic cancellation in {what} at {self.bits} bits")


def context_of(x):
    """The mpmath context a number belongs to, or None for plain Python numbers."""
    return getattr(x, "context", None)


def monotone_invert(f, target, bracket, tol=None, fprime=None, ctx=None, max_iter=None):
    """Solve ``f(x) = target`` for a strictly monotone ``f`` on ``bracket``.

    Bisection, optionally polished by safeguarded Newton steps when ``fprime``
    is given.  Returns ``x`` with ``|f(x) - target| <= tol * max(1, |target|)``.
    """
    lo, hi = bracket
    if ctx is None:
        mp = context_of(lo) or context_of(target) or mpmath.mp
        ctx_tol = mp.ldexp(mp.one, -(mp.prec - DEFAULT_GUARD_BITS))
    else:
        mp = ctx.mp
        ctx_tol = ctx.tol
    lo, hi, target = mp.convert(lo), mp.convert(hi), mp.convert(target)
    tol = ctx_tol if tol is None else mp.convert(tol)
    if not lo <= hi:
        raise BracketError("bracket must satisfy lo <= hi")
    scale = max(mp.one, abs(target))
    flo, fhi = f(lo), f(hi)
    if abs(flo - target) <= tol * scale:
        return lo
    if abs(fhi - target) <= tol * scale:
        return hi
    increasing = fhi > flo
    if not (min(flo, fhi) <= target <= max(flo, fhi)):
        raise BracketError(f"target {mpmath.nstr(target, 8)} not bracketed by "
                           f"[{mpmath.nstr(flo, 8)}, {mpmath.nstr(fhi, 8)}]")
    if max_iter is None:
        max_iter = 4 * mp.prec + 64

    x = (lo + hi) / 2
    for _ in range(max_iter):
        fx = f(x)
        err = fx - target
        if abs(err) <= tol * scale:
            return x
        if (err < 0) == increasing:
            lo = x
        else:
            hi = x
        candidate = None
        if fprime is not None:
            d = fprime(x)
            if d != 0:
                candidate = x - err / d
                if not lo < candidate < hi:
                    candidate = None
        if candidate is None:
            candidate = (lo + hi) / 2
            if candidate == lo or candidate == hi:
                break
        x = candidate
    raise ToleranceError(f"tolerance {mpmath.nstr(tol, 5)} unreachable at {mp.prec} bits")


def required_precision(depth, ell, cu_hint):
    """Working bits so the smallest coordinate at ``depth`` keeps its guard bits.

    ``ceil(|cu_hint| (e2u + e3u) lambda_u**(depth + 2) / ln 2) + 256``, floored at 64.
    """
    from .spectral import unstable_pair_float

    if depth < 0:
        raise ValueError("depth must be nonnegative")
    lam_u, e23 = unstable_pair_float(float(ell))
    bits = math.ceil(abs(float(cu_hint)) * e23 * lam_u ** (depth + 2) / math.log(2)) + 256
    return max(64, bits)
