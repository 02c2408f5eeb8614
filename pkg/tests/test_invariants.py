import random
from dataclasses import replace

import pytest

from fibrenorm.errors import NotConverged
from fibrenorm.invariants import (extract_invariants, leading_log_x2, predict_return_gap, predict_w,
                                  predict_x_asymptotics, synthetic_trajectory)
from fibrenorm.numerics import PrecisionContext
from fibrenorm.spectral import eigen_closed_form

from conftest import MAIN_BASE, frozen_trajectory

CTX = PrecisionContext(bits=256)
ED = eigen_closed_form(1.5, CTX)


@pytest.fixture(scope="module")
def est(main_traj):
    return extract_invariants(main_traj, eigen_closed_form(main_traj.ell, main_traj.ctx))


@pytest.fixture(scope="module")
def ed_main(main_traj):
    return eigen_closed_form(main_traj.ell, main_traj.ctx)


def test_synthetic_round_trip():
    tr = synthetic_trajectory(ED, "-0.8", "0.3", "0.05", 12)
    e = extract_invariants(tr, ED)
    for got, want in zip((e.C_u, e.C_s, e.C_minus), ("-0.8", "0.3", "0.05")):
        assert abs(got - CTX.mpf(want)) < 1e-40
    assert all(abs(r[i]) < 1e-50 for r in tr.residuals for i in range(4))


def test_synthetic_random_triples():
    rng = random.Random(11)
    for _ in range(50):
        c = [rng.uniform(-2, -0.1), rng.uniform(-1, 1), rng.uniform(-1, 1)]
        e = extract_invariants(synthetic_trajectory(ED, *c, 10), ED)
        assert max(abs(a - CTX.mpf(b)) for a, b in zip((e.C_u, e.C_s, e.C_minus), c)) < 1e-20


def test_predict_w_at_zero():
    tr = synthetic_trajectory(ED, "-0.8", "0.3", "0.05", 8)
    e = extract_invariants(tr, ED)
    w0 = predict_w(e, ED, 0)
    assert all(abs(a - b) < 1e-60 for a, b in zip(w0, tr.states[0].w))


def test_short_trajectory_rejected():
    with pytest.raises(ValueError):
        extract_invariants(synthetic_trajectory(ED, -1, 0, 0, 3), ED)


def test_disagreement_raises(main_traj, ed_main):
    # the other sign convention for w* leaves a constant residual, so the series and direct estimates split
    bad = replace(ed_main, w_fix_derived=ed_main.w_fix)
    with pytest.raises(NotConverged):
        extract_invariants(main_traj, bad)


def test_main_invariants(est):
    assert est.C_u < 0
    assert est.converged
    assert abs(est.C_u - est.direct[0]) <= est.tolerance
    assert est.series_tail_bound < 1e-10


def test_per_level_convergence(est):
    rows = est.per_level
    gaps = [abs(rows[n]["series_u"] - est.C_u) for n in range(4, 15)]
    assert all(b <= a for a, b in zip(gaps, gaps[1:]))
    assert abs(rows[14]["C_u"] - rows[14]["series_u"]) < 1e-20


def test_precision_doubling_is_stable(est):
    hi = frozen_trajectory(MAIN_BASE, "main", 14, 2200)
    e2 = extract_invariants(hi, eigen_closed_form(hi.ell, hi.ctx))
    assert abs(e2.C_u - est.C_u) < 1e-30
    assert abs(e2.C_minus - est.C_minus) < 1e-30


def test_x_asymptotics(main_traj, est, ed_main):
    mp = main_traj.ctx.mp
    X = main_traj.states[12].X
    pred = predict_x_asymptotics(est, ed_main, 12)
    assert abs(mp.log(X.x2) / leading_log_x2(est, ed_main, 12) - 1) < 0.05
    assert abs(mp.log(X.x2) / mp.log(pred[1]) - 1) < 0.05
    ratios = [main_traj.states[n].X.x2 / main_traj.states[n].X.x3 for n in range(6, 15)]
    assert all(abs(1 - b) < abs(1 - a) for a, b in zip(ratios, ratios[1:]))
    assert abs(1 - ratios[-1]) < 1e-6


def test_return_gap(main_traj, est, ed_main):
    lam = ed_main.lambda_u
    g = predict_return_gap(est, ed_main, 12, main_traj)
    assert abs(g.ratio_summed - 1) < 0.05
    leads = [predict_return_gap(est, ed_main, n, main_traj).ratio_leading for n in range(6, 13)]
    assert all(b > a for a, b in zip(leads, leads[1:]))
    assert leads[-1] < lam / (lam - 1)
    with pytest.raises(ValueError):
        predict_return_gap(est, ed_main, 40, main_traj)


def test_alpha_growth_rate(main_traj, ed_main):
    mp = main_traj.ctx.mp
    la = [mp.log(a) for a in main_traj.alphas()]
    rates = [la[n + 1] / la[n] for n in range(8, 14)]
    assert all(abs(r / ed_main.lambda_u - 1) < 0.05 for r in rates)
    assert abs(rates[-1] / ed_main.lambda_u - 1) < abs(rates[0] / ed_main.lambda_u - 1)
