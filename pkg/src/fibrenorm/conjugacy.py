"""Regularity of the conjugacy between two Fibonacci maps.

The conjugacy ``h`` is never built.  Combinatorially matching central
intervals correspond under ``h``, so ``Dh`` on an interval is the ratio of
their lengths, and the regularity class follows from which invariants agree.
"""

from dataclasses import dataclass, field

from .dynamics import partition_lengths
from .errors import DepthMismatch, Inconclusive
from .spectral import BETA_VARIANTS, beta_exponent

NOT_HOLDER = "not_holder"
HOLDER_ONLY = "holder_only"
BI_LIPSCHITZ = "bi_lipschitz"
C1 = "C1"
C1_BETA = "C1_beta"
CLASS_ORDER = (NOT_HOLDER, HOLDER_ONLY, BI_LIPSCHITZ, C1, C1_BETA)

INTERVALS = ("A", "B", "C", "D")
ATTRACTOR_INTERVALS = ("A", "B", "D")
LIPSCHITZ_THRESHOLD = 1e3


def _gray(delta, tol):
    return tol < abs(delta) < 4 * tol


def classify_by_invariants(estF, estG, ellF, ellG, tol=None):
    """Regularity class from the invariant comparison chain.

    Equal ``C_u`` gives bi-Lipschitz, adding ``C_-`` gives ``C^1``, adding
    ``C_s`` gives ``C^{1+beta}``; different exponents give not Hölder.
    Differences between ``tol`` and ``4 tol`` are reported as inconclusive.
    """
    if ellF != ellG:
        return NOT_HOLDER
    if tol is None:
        tol = 16 * max(estF.series_tail_bound, estG.series_tail_bound)
    chain = ((estF.C_u - estG.C_u, HOLDER_ONLY),
             (estF.C_minus - estG.C_minus, BI_LIPSCHITZ),
             (estF.C_s - estG.C_s, C1))
    for delta, below in chain:
        if _gray(delta, tol):
            raise Inconclusive(f"invariant difference {float(delta):.3g} is in the gray zone "
                               f"({float(tol):.3g}, {float(4 * tol):.3g})")
        if abs(delta) >= 4 * tol:
            return below
    return C1_BETA


def _common_depth(trajF, trajG, minimum=0):
    nF = sum(1 for st in trajF.states if st.X is not None)
    nG = sum(1 for st in trajG.states if st.X is not None)
    if nF != nG:
        raise DepthMismatch(f"trajectories have {nF} and {nG} levels")
    if nF - 1 < minimum:
        raise DepthMismatch(f"common depth {nF - 1} is below {minimum}")
    return nF


def dh_sequence(trajF, trajG):
    """``Dh_n(I) = |I_n(g)| / |I_n(f)|`` for the central intervals, per level.

    Returns rows ``{"n", "A", "B", "C", "D"}``.
    """
    n_levels = _common_depth(trajF, trajG)
    pf, pg = partition_lengths(trajF), partition_lengths(trajG)
    rows = []
    for n in range(n_levels):
        f, g = pf[n].as_dict(), pg[n].as_dict()
        rows.append({"n": n, **{I: g[I] / f[I] for I in INTERVALS}})
    return rows


def dh_oscillation(table):
    """``|log(Dh_{n+1} / Dh_n)|`` on nested pairs ``A_{n+1} ⊂ B_n`` and ``B_{n+1} ⊂ A_n``."""
    out = []
    for cur, nxt in zip(table, table[1:]):
        mp = cur["A"].context
        out.append(max(abs(mp.log(nxt["A"] / cur["B"])), abs(mp.log(nxt["B"] / cur["A"]))))
    return out


def holder_estimate(trajF, trajG, first_level=4):
    """``min log|h(I)| / log|I|`` over levels ``>= first_level`` and ``I`` in ``A, B, D``."""
    n_levels = _common_depth(trajF, trajG, minimum=6)
    pf, pg = partition_lengths(trajF), partition_lengths(trajG)
    best = None
    for n in range(first_level, n_levels):
        f, g = pf[n].as_dict(), pg[n].as_dict()
        for I in ATTRACTOR_INTERVALS:
            mp = f[I].context
            if f[I] == g[I]:
                value = mp.one
            else:
                value = mp.log(g[I]) / mp.log(f[I])
            best = value if best is None else min(best, value)
    return best


@dataclass
class LipschitzIndicator:
    sup: object
    inf: object
    bounded: bool
    running_log_spread: list


def bilipschitz_indicator(trajF, trajG, table=None, threshold=LIPSCHITZ_THRESHOLD):
    """Sup and inf of ``Dh`` over the attractor intervals, with the per-level running spread."""
    table = table or dh_sequence(trajF, trajG)
    sup = inf = None
    spread = []
    for row in table:
        for I in ATTRACTOR_INTERVALS:
            v = row[I]
            sup = v if sup is None else max(sup, v)
            inf = v if inf is None else min(inf, v)
        spread.append(sup.context.log(sup / inf))
    return LipschitzIndicator(sup=sup, inf=inf, bounded=bool(sup / inf < threshold),
                              running_log_spread=spread)


@dataclass
class ConjugacyReport:
    ell_f: object
    ell_g: object
    delta_Cu: object
    delta_Cminus: object
    delta_Cs: object
    tolerance: object
    classification: str
    beta_variants: dict
    dh_table: list
    holder_estimate: object
    oscillation: list
    lipschitz: LipschitzIndicator
    flags: list = field(default_factory=list)
    basis: str = ("classification rests on invariant equality (the numerically testable "
                  "direction); Dh and Hölder values are empirical length indicators")

    def as_dict(self):
        def num(x):
            return None if x is None else float(x)
        lip = self.lipschitz
        return {
            "ell_f": float(self.ell_f),
            "ell_g": float(self.ell_g),
            "delta_Cu": float(self.delta_Cu),
            "delta_Cminus": float(self.delta_Cminus),
            "delta_Cs": float(self.delta_Cs),
            "tolerance": float(self.tolerance),
            "classification": self.classification,
            "beta_variants": {k: float(v) for k, v in self.beta_variants.items()},
            "holder_estimate": num(self.holder_estimate),
            "dh_sup": num(lip.sup) if lip else None,
            "dh_inf": num(lip.inf) if lip else None,
            "dh_bounded": lip.bounded if lip else None,
            "oscillation": [float(v) for v in self.oscillation],
            "flags": list(self.flags),
            "basis": self.basis,
        }


def conjugacy_report(trajF, trajG, estF, estG, tol=None):
    """Classification plus the length indicators, with contradictions flagged."""
    ellF, ellG = trajF.ell, trajG.ell
    if tol is None:
        tol = 16 * max(estF.series_tail_bound, estG.series_tail_bound)
    classification = classify_by_invariants(estF, estG, ellF, ellG, tol)
    betas = {}
    if ellF == ellG:
        betas = {v: beta_exponent(ellF, v, trajF.ctx) for v in BETA_VARIANTS}
    flags = []
    table, holder, osc, lip = [], None, [], None
    if ellF == ellG:
        table = dh_sequence(trajF, trajG)
        holder = holder_estimate(trajF, trajG)
        osc = dh_oscillation(table)
        lip = bilipschitz_indicator(trajF, trajG, table)
        rank = CLASS_ORDER.index(classification)
        if rank >= CLASS_ORDER.index(BI_LIPSCHITZ) and not lip.bounded:
            flags.append("invariants say bi-Lipschitz but Dh spread exceeds the threshold")
        if classification == HOLDER_ONLY and lip.bounded:
            flags.append("invariants say Hölder only but Dh spread stays below the threshold "
                         "at the computed depth")
    else:
        flags.append("different critical exponents: length indicators not compared")
    return ConjugacyReport(ell_f=ellF, ell_g=ellG, delta_Cu=estF.C_u - estG.C_u,
                           delta_Cminus=estF.C_minus - estG.C_minus, delta_Cs=estF.C_s - estG.C_s,
                           tolerance=tol, classification=classification, beta_variants=betas,
                           dh_table=table, holder_estimate=holder, oscillation=osc,
                           lipschitz=lip, flags=flags)
