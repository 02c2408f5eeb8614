from fractions import Fraction

import pytest

from fibrenorm.dynamics import (GOLDEN_MEAN, branch_grid, cross_ratio, cross_ratio_of,
                                deep_return_samples, fibonacci_qn, first_return_samples,
                                measure_distortion, partition_lengths, rotation_number_estimate)
from fibrenorm.errors import DegenerateInterval, DomainError, FlatHit, NonReturn
from fibrenorm.flatmap import diffeo_distortion, eval_map, standard_point
from fibrenorm.numerics import PrecisionContext
from fibrenorm.spectral import eigen_closed_form
from fibrenorm.invariants import extract_invariants

CTX = PrecisionContext(bits=256)
MP = CTX.mp


def test_fibonacci_return_times():
    assert fibonacci_qn(5).q == [1, 1, 2, 3, 5, 8]
    assert fibonacci_qn(0).q == [1]
    assert fibonacci_qn(10)[10] == 89
    q = fibonacci_qn(30)
    golden = (1 + 5 ** 0.5) / 2
    assert all(abs(q[n + 1] / q[n] / golden - 1) < 0.01 for n in range(10, 30))
    with pytest.raises(ValueError):
        fibonacci_qn(-1)


def test_rotation_number(main_traj):
    X = main_traj.states[0].X
    est = rotation_number_estimate(X, 1)
    assert 0 <= est < 1
    # 14 levels of renormalization: within 1/q_14^2 of the golden mean, up to the 1/n estimator error
    n = 2000
    q14 = fibonacci_qn(14)[14]
    assert abs(rotation_number_estimate(X, n) - GOLDEN_MEAN) < 1 / q14 ** 2 + 1 / n


def test_rotation_number_second_map(main_traj, second_traj):
    a = rotation_number_estimate(main_traj.states[0].X, 1000)
    b = rotation_number_estimate(second_traj.states[0].X, 1000)
    assert abs(a - b) < 2 / 1000


def test_first_return_matches_step(main_traj_512):
    tr = main_traj_512
    mp = tr.ctx.mp
    tol = mp.ldexp(1, -(tr.ctx.bits // 4))
    for n in range(1, 9):
        A, B = tr.states[n - 1].X, tr.states[n].X
        grid = branch_grid(B, 16, A.x1)
        samples = first_return_samples(A, grid)
        assert {t for t, _ in samples} == {1, 2}
        values = [v for _, v in samples]
        assert len({mp.nstr(v, 30) for v in values}) == 16
        for (t, v), y in zip(samples, grid):
            assert abs(v - eval_map(B, y / A.x1)) <= tol * abs(v)


def test_deep_return_times_are_fibonacci(main_traj_512):
    tr = main_traj_512
    q = fibonacci_qn(10)
    for n in range(2, 7):
        B = tr.states[n].X
        grid = branch_grid(B, 12)
        samples = deep_return_samples(tr.states[0].X, tr, n, grid)
        assert {t for t, _ in samples} == {q[n], q[n + 1]}
        for (t, v), y in zip(samples, grid):
            assert abs(v - eval_map(B, y)) <= 1e-100 * abs(v)


def test_flat_points_collapse():
    X = standard_point(1.5, -0.4, 0.08, 0.2, 0.9, 0.5, CTX)
    # preimage of the flat interval under the right branch of the return: all land on one value
    out = first_return_samples(X, [MP.mpf("-0.01"), MP.mpf("-0.02")])
    assert out[0][0] == out[1][0]


def test_first_return_domain_and_nonreturn():
    X = standard_point(1.5, -0.4, 0.08, 0.2, 0.9, 0.5, CTX)
    with pytest.raises(DomainError):
        first_return_samples(X, [MP.mpf("0.5")])
    with pytest.raises(NonReturn):
        first_return_samples(X, [MP.mpf("-0.3")], max_iter=0)


def test_branch_grid_avoids_flat_interval(main_traj):
    B = main_traj.states[6].X
    pts = branch_grid(B, 16)
    assert len(pts) == 16
    assert all(not (B.x3 <= p <= B.x4) and B.x1 < p < 1 for p in pts)


def test_partition_lengths(main_traj):
    levels = partition_lengths(main_traj)
    assert levels[0].Lambda == 1
    mp = main_traj.ctx.mp
    tol = mp.ldexp(1, -(main_traj.ctx.bits // 2))
    for lev, st in zip(levels, main_traj.states):
        assert min(lev.lenA, lev.lenB, lev.lenC, lev.lenD) > 0
        assert abs(lev.lenB / (lev.lenB + lev.lenC) / st.alpha - 1) < tol


def test_length_lower_bound_shape(main_traj):
    ed = eigen_closed_form(main_traj.ell, main_traj.ctx)
    est = extract_invariants(main_traj, ed)
    lam = ed.lambda_u
    levels = partition_lengths(main_traj)

    def gap(n):
        bound = est.C_u * lam ** (n + 1) * ed.E_u[0] * lam / (lam - 1)
        return min(main_traj.ctx.mp.log(v) for v in (levels[n].lenA, levels[n].lenB, levels[n].lenD)) - bound

    K = max(0, -min(gap(n) for n in range(5, 13)))
    assert all(gap(n) >= -K for n in (13, 14))


def test_distortion_closed_form():
    X = standard_point(1.5, -0.4, 0.08, 0.2, 0.9, 0.5, CTX)
    a, b = MP.mpf("0.92"), MP.mpf("0.99")
    expected = (X.ell - 1) * MP.log((b - X.x4) / (a - X.x4))
    assert abs(measure_distortion(X, 1, (a, b), grid_size=2) - expected) < 1e-60
    assert measure_distortion(X, 0, (a, b)) == 0
    with pytest.raises(FlatHit):
        measure_distortion(X, 2, (MP.mpf("0.25"), MP.mpf("0.3")))
    with pytest.raises(DegenerateInterval):
        measure_distortion(X, 1, (b, a))


def test_renormalized_diffeo_distortion_decays(main_traj):
    mp = main_traj.ctx.mp
    al = main_traj.alphas()

    def dist(n):
        X = main_traj.states[n].X
        return [diffeo_distortion(p, 17, main_traj.ctx) for p in (X.phi_minus, X.phi_plus_l, X.phi_plus_r)]

    d = {n: dist(n) for n in range(4, 15)}
    for n in range(4, 13):
        assert all(b < a for a, b in zip(d[n], d[n + 2]))
    K = max(max(d[n]) / mp.sqrt(al[n - 2]) for n in (4, 5, 6))
    assert all(max(d[n]) <= K * mp.sqrt(al[n - 2]) for n in range(6, 13))


def test_cross_ratio():
    pts = (MP.mpf(1), MP.mpf("1.25"), MP.mpf("1.75"), MP.mpf(2))
    assert abs(cross_ratio_of(lambda x: 3 * x + 1, (pts[0], pts[3]), (pts[1], pts[2])) - 1) < 1e-70
    assert cross_ratio_of(lambda x: x, (pts[0], pts[3]), (pts[1], pts[2])) == 1
    exact = cross_ratio((Fraction(1), Fraction(5, 4), Fraction(7, 4), Fraction(2)),
                        tuple(Fraction(v) ** 2 for v in (1, Fraction(5, 4), Fraction(7, 4), 2)))
    value = cross_ratio_of(lambda x: x * x, (pts[0], pts[3]), (pts[1], pts[2]))
    assert abs(value - MP.mpf(exact.numerator) / exact.denominator) < 1e-70
    with pytest.raises(DegenerateInterval):
        cross_ratio((1, 3, 2, 4), (1, 2, 3, 4))
