from types import SimpleNamespace

import pytest

from fibrenorm.conjugacy import (BI_LIPSCHITZ, C1, C1_BETA, HOLDER_ONLY, NOT_HOLDER,
                                 bilipschitz_indicator, classify_by_invariants, conjugacy_report,
                                 dh_oscillation, dh_sequence, holder_estimate)
from fibrenorm.errors import DepthMismatch, Inconclusive
from fibrenorm.invariants import extract_invariants
from fibrenorm.renorm import Trajectory
from fibrenorm.spectral import eigen_closed_form


def fake(C_u, C_minus=0.0, C_s=0.0, tail=1e-12):
    return SimpleNamespace(C_u=C_u, C_minus=C_minus, C_s=C_s, series_tail_bound=tail)


@pytest.fixture(scope="module")
def estimates(main_traj, second_traj):
    return tuple(extract_invariants(t, eigen_closed_form(t.ell, t.ctx)) for t in (main_traj, second_traj))


def test_classification_chain():
    a = fake(-5.8, 0.1, 0.02)
    assert classify_by_invariants(a, fake(-5.8, 0.1, 0.02), 1.5, 1.5) == C1_BETA
    assert classify_by_invariants(a, fake(-5.8, 0.1, 0.03), 1.5, 1.5) == C1
    assert classify_by_invariants(a, fake(-5.8, 0.2, 0.02), 1.5, 1.5) == BI_LIPSCHITZ
    assert classify_by_invariants(a, fake(-5.3, 0.1, 0.02), 1.5, 1.5) == HOLDER_ONLY
    assert classify_by_invariants(a, a, 1.4, 1.6) == NOT_HOLDER


def test_gray_zone_is_inconclusive():
    a = fake(-5.8, tail=1e-12)
    tol = 16e-12
    with pytest.raises(Inconclusive):
        classify_by_invariants(a, fake(-5.8 + 2 * tol), 1.5, 1.5, tol=tol)
    assert classify_by_invariants(a, fake(-5.8 + 5 * tol), 1.5, 1.5, tol=tol) == HOLDER_ONLY
    assert classify_by_invariants(a, fake(-5.8 + tol / 2), 1.5, 1.5, tol=tol) == C1_BETA


def test_self_conjugacy(main_traj, estimates):
    rep = conjugacy_report(main_traj, main_traj, estimates[0], estimates[0])
    assert rep.classification == C1_BETA
    assert all(row[I] == 1 for row in rep.dh_table for I in "ABCD")
    assert rep.holder_estimate == 1
    assert all(v == 0 for v in rep.oscillation)
    assert rep.lipschitz.bounded and not rep.flags


def test_depth_mismatch(main_traj):
    def cut(n):
        return Trajectory(states=main_traj.states[:n + 1], residuals=main_traj.residuals[:n],
                          precision_used=main_traj.precision_used)

    with pytest.raises(DepthMismatch):
        dh_sequence(main_traj, cut(9))
    with pytest.raises(DepthMismatch):
        holder_estimate(cut(4), cut(4))


def test_swap_symmetry(main_traj, second_traj):
    fg, gf = dh_sequence(main_traj, second_traj), dh_sequence(second_traj, main_traj)
    for a, b in zip(fg, gf):
        assert all(abs(a[I] * b[I] - 1) < 1e-60 for I in "ABCD")
    h1, h2 = holder_estimate(main_traj, second_traj), holder_estimate(second_traj, main_traj)
    assert 0 < h1 * h2 <= 1
    l1, l2 = bilipschitz_indicator(main_traj, second_traj), bilipschitz_indicator(second_traj, main_traj)
    assert abs(l1.running_log_spread[-1] - l2.running_log_spread[-1]) < 1e-60


def test_distinct_maps_are_holder_only(main_traj, second_traj, estimates):
    f, g = estimates
    rep = conjugacy_report(main_traj, second_traj, f, g)
    assert rep.classification == HOLDER_ONLY
    assert abs(rep.delta_Cu) > 1e3 * max(f.series_tail_bound, g.series_tail_bound)
    assert not rep.lipschitz.bounded and not rep.flags
    assert 0 < rep.holder_estimate < 1
    spread = rep.lipschitz.running_log_spread
    assert spread[-1] > spread[-2] > spread[-3]
    assert len(dh_oscillation(rep.dh_table)) == len(rep.dh_table) - 1
    d = rep.as_dict()
    assert d["classification"] == HOLDER_ONLY and set(d["beta_variants"]) == {"theoremLM", "prop1beta", "holder"}


def test_different_exponents_flagged(main_traj, estimates):
    other = SimpleNamespace(**{**main_traj.__dict__})
    other.ell = main_traj.ctx.mpf("1.6")
    rep = conjugacy_report(main_traj, other, estimates[0], estimates[0])
    assert rep.classification == NOT_HOLDER and rep.flags
    assert rep.as_dict()["holder_estimate"] is None
