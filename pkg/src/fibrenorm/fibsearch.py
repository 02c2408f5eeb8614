"""Locate the Fibonacci parameter of a one-parameter family by bisection.

Each renormalization flips orientation, so which side of the Fibonacci
parameter a failing map lies on is read from the failure level and its side
together: a long failure (``x2 >= x3``) at level ``n`` and a short one
(``x2`` vanishing, i.e. ``x2 ~ x3`` one level up) at level ``n + 1`` are the
same event.  The bisection key is ``n`` for long failures and ``n - 1`` for
short ones, taken mod 2.
"""

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import PrecisionCeiling, PrecisionExhausted, SameSideBracket
from .flatmap import RenormPoint
from .renorm import LONG, SHORT, is_renormalizable, renorm_step, run_trajectory

COORDINATES = ("x1", "x2", "x3", "x4", "s")


@dataclass(frozen=True)
class FamilySpec:
    """Maps ``base`` with one coordinate replaced by the parameter."""

    base: RenormPoint
    varying: str = "x2"
    bracket: tuple = None

    def __post_init__(self):
        if self.varying not in COORDINATES:
            raise ValueError(f"varying must be one of {COORDINATES}")

    def point(self, param, ctx=None):
        ctx = ctx or self.base.ctx
        X = self.base.rebind(ctx)
        return X.replace(**{self.varying: ctx.mpf(Fraction(param))})


@dataclass
class SearchResult:
    parameter: object
    bracket: tuple
    bracket_width: object
    achieved_depth: int
    trajectory: object
    steps: int
    bits: int
    history: list = field(default_factory=list)


def renorm_depth(X, maxN):
    """``(n, side)``: ``R^k X`` is renormalizable for ``k < n``; side is short, long or ok."""
    for n in range(maxN + 1):
        verdict = is_renormalizable(X)
        if not verdict:
            return n, verdict.side
        if n == maxN:
            return n, "ok"
        X = renorm_step(X)


def orientation_key(depth, side):
    """0 or 1 telling which side of the Fibonacci parameter a failure lies on."""
    if side == LONG:
        return depth % 2
    if side == SHORT:
        return (depth - 1) % 2
    return None


def effective_side(depth, side):
    """The failure side transported back to level 0."""
    key = orientation_key(depth, side)
    return None if key is None else (LONG if key == 0 else SHORT)


def _bits_for(width, ctx, margin=96):
    """Bits to resolve parameters ``width`` apart, plus a margin for cancellation."""
    width = Fraction(width)
    need = width.denominator.bit_length() - width.numerator.bit_length() + 1 + margin
    return max(ctx.bits, need)


def _classify(family, param, ctx, max_levels):
    """Run ``param`` to its failure, raising precision as needed."""
    while True:
        try:
            depth, side = renorm_depth(family.point(param, ctx), max_levels)
            if side != "ok":
                return depth, side
            max_levels *= 2
        except PrecisionExhausted as exc:
            if ctx.bits >= ctx.max_bits:
                raise PrecisionCeiling(f"precision ceiling {ctx.max_bits} bits reached") from exc
            bits = max(2 * ctx.bits, exc.needed_bits or 0)
            ctx = ctx.with_bits(min(bits, ctx.max_bits))


def bisect_fibonacci(family, target_depth, ctx=None, min_width=None, max_steps=4000,
                     trajectory_depth=None, max_levels=None):
    """Bisect the family bracket until a midpoint is ``target_depth`` times renormalizable.

    The bracket is kept in exact rationals so its width after ``k`` steps is
    exactly ``initial / 2**k``.  When ``min_width`` is given the search goes on
    until the bracket is also narrower than it.  Candidates are run until they
    fail (at most ``max_levels`` levels, default ``target_depth + 40``), at a
    precision matched to the bracket width.
    """
    ctx = ctx or family.base.ctx
    lo, hi = (Fraction(v) for v in family.bracket)
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    max_levels = max_levels or target_depth + 40
    d_lo, s_lo = _classify(family, lo, ctx, max_levels)
    d_hi, s_hi = _classify(family, hi, ctx, max_levels)
    k_lo, k_hi = orientation_key(d_lo, s_lo), orientation_key(d_hi, s_hi)
    if k_lo is None or k_hi is None or k_lo == k_hi:
        raise SameSideBracket(f"bracket ends fail on the same side: lo ({d_lo}, {s_lo}), "
                              f"hi ({d_hi}, {s_hi})")
    width0 = hi - lo
    best = 0
    history = []
    bits = ctx.bits
    steps = 0
    while steps < max_steps:
        mid = (lo + hi) / 2
        bits = _bits_for(hi - lo, ctx)
        if bits > ctx.max_bits:
            raise PrecisionCeiling(f"bracket width needs more than {ctx.max_bits} bits")
        depth, side = _classify(family, mid, ctx.with_bits(bits), max_levels)
        steps += 1
        best = max(best, depth)
        history.append((steps, depth, side))
        key = orientation_key(depth, side)
        if key == k_lo:
            lo = mid
        else:
            hi = mid
        assert hi - lo == width0 / 2 ** steps
        done = depth >= target_depth and (min_width is None or hi - lo < Fraction(min_width))
        if done:
            break
    else:
        raise PrecisionCeiling(f"no midpoint reached depth {target_depth} in {max_steps} steps "
                               f"(best {best})")
    run_ctx = ctx.with_bits(bits)
    traj = run_trajectory(lambda c: family.point(mid, c), trajectory_depth or target_depth, run_ctx)
    return SearchResult(parameter=mid, bracket=(lo, hi), bracket_width=hi - lo,
                        achieved_depth=depth, trajectory=traj, steps=steps,
                        bits=traj.precision_used, history=history)
