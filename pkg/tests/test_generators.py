import math

import pytest
from hypothesis import given, settings, strategies as st

from bvlimits.diagram import default_depth, heights, incidence, validate
from bvlimits.dynamics import min_path
from bvlimits.errors import PreconditionError
from bvlimits.generators import (GENERATORS, N_matrix, SturmianSpec, beta_digits, convergents, example1,
                                 gauss_map, generate, left_to_right, odometer_beta, odometer_classic,
                                 odometer_measure, sturmian, sturmian_limits)
from bvlimits.limitlaw import (PiecewiseLinearCDF, breakpoint_table, finite_F1, limit_F1, recurrence_bound,
                               sup_distance)

PHI = (1 + math.sqrt(5)) / 2
GOLD = (math.sqrt(5) - 1) / 2


def test_example1_shape():
    d = example1()
    assert validate(d, 4).standing_assumptions
    assert heights(d, 2) == (3, 4)
    assert incidence(d, 2) == [[1, 1], [2, 3]]


def test_left_to_right_orders_by_source():
    d = left_to_right([[2, 1], [1, 3]])
    assert d.level(2).into == ((0, 0, 1), (0, 1, 1, 1))
    with pytest.raises(PreconditionError):
        left_to_right([[1, 0], [1, 1]])


def test_dyadic_odometer_limit_is_uniform():
    d = odometer_classic([2, 2, 2])
    F = limit_F1(breakpoint_table(odometer_classic([2]), 0))
    assert sup_distance(F, PiecewiseLinearCDF((0.0, 1.0), (0.0, 1.0))) == pytest.approx(0, abs=1e-12)
    mu = odometer_measure([2])
    assert mu.q(5, 0) == pytest.approx(1 / 16)
    assert validate(d, 4).standing_assumptions


def test_odometer_rejects_base_one():
    with pytest.raises(PreconditionError):
        odometer_classic([1])


def test_beta_odometer_breakpoints():
    d, mu = odometer_beta([10], 0.25)
    assert beta_digits([10], 0.25) == (2,)
    assert breakpoint_table(d, 0).d == pytest.approx((0.2, 1.8), abs=1e-12)
    # exact enumeration at level 6: returns q_5 and q_5 (1 + p - beta - 1)
    F = finite_F1(d, min_path(d, 6, 0), mu)
    assert sorted(F.returns()) == [10 ** 5, 9 * 10 ** 5]
    assert F.mu == pytest.approx(2 / 10 ** 6)
    assert [N * F.mu for N in sorted(F.returns())] == pytest.approx([0.2, 1.8])


def test_beta_odometer_growing_bases_is_not_uniform():
    bases = [n + 2 for n in range(1, 14)]
    d, mu = odometer_beta(bases, 0.4, periodic=False)
    lows, highs = [], []
    for n in range(5, 11):
        F = finite_F1(d, min_path(d, n, 0), mu)
        r = sorted(F.returns())
        lows.append(r[0] * F.mu)
        highs.append(r[-1] * F.mu)
    assert abs(lows[-1] - 0.4) < abs(lows[0] - 0.4) + 0.05
    assert highs[-1] > 1.5 * highs[0]
    rb = recurrence_bound(d, [min_path(d, n, 0) for n in range(3, 10)], mu)
    assert not rb.bounded


def test_beta_odometer_rejects_zero_digit():
    with pytest.raises(PreconditionError):
        odometer_beta([3], 0.3)
    with pytest.raises(PreconditionError):
        odometer_beta([10], 1.2)


def test_convergents_fibonacci():
    t = convergents((1,), 10)
    fib = [0, 1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]
    assert [t.p(k) for k in range(1, 9)] == fib[1:9]
    assert [t.q(k) for k in range(1, 9)] == fib[2:10]
    assert (t.p(-1), t.q(-1), t.p(0), t.q(0)) == (1, 0, 0, 1)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=5), st.integers(2, 15))
def test_matrix_identity(digits, k):
    t = convergents(digits, k)
    prod = [[1, 0], [0, 1]]
    for i in range(k - 1):
        m = N_matrix(digits[i % len(digits)])
        prod = [[sum(prod[a][c] * m[c][b] for c in range(2)) for b in range(2)] for a in range(2)]
    assert prod == t.matrix_identity(k)
    assert t.p(k) * t.q(k - 1) - t.p(k - 1) * t.q(k) == (-1) ** (k - 1)


def test_sturmian_heights_follow_convergents():
    spec = SturmianSpec((1, 2, 3))
    d, _ = sturmian(spec)
    t = convergents(spec.digits, 12)
    for n in range(2, 10):
        h = heights(d, n)
        assert h == (t.p(n - 1) + t.q(n - 1), t.p(n - 2) + t.q(n - 2))


def test_sturmian_fails_standing_assumptions():
    d, _ = sturmian(SturmianSpec((1,)))
    assert not validate(d, default_depth(d)).h1


def test_sturmian_spec_blocks():
    with pytest.raises(PreconditionError):
        SturmianSpec((1,), ("a", "a", "b"))
    with pytest.raises(PreconditionError):
        SturmianSpec((1,), ("c",))
    assert SturmianSpec((1, 2), ("a", "b", "b")).period == 6


@pytest.mark.parametrize("digits", [(1,), (2,), (1, 2)])
@pytest.mark.parametrize("n", [6, 8, 9])
def test_sturmian_return_values(digits, n):
    d, mu = sturmian(SturmianSpec(digits))
    t = convergents(digits, n + 2)
    a = t.p(n - 1) + t.q(n - 1)
    b = a + t.p(n - 2) + t.q(n - 2)
    F = finite_F1(d, min_path(d, n, 0), mu)
    assert set(F.returns()) <= {a, b}
    assert sum(F.returns().values()) == pytest.approx(mu.q(n, 0), rel=1e-12)


def test_sturmian_measure_is_compatible():
    d, mu = sturmian(SturmianSpec((1, 3)))
    for n in range(1, 30):
        M = incidence(d, n + 1)
        for u in range(2):
            rhs = sum(M[u][j] * mu.q(n + 1, j) for j in range(2))
            assert mu.q(n, u) == pytest.approx(rhs, rel=1e-12)
    assert mu.vector(1, 2).total(d) == pytest.approx(1, abs=1e-12)
    assert mu.beta() == pytest.approx(1 / (1 + 1 / (3 + mu.beta())), rel=1e-12)


def test_golden_sturmian_scaled_returns_converge():
    d, mu = sturmian(SturmianSpec((1,)))
    F = finite_F1(d, min_path(d, 14, 0), mu)
    scaled = sorted(N * F.mu for N in F.returns())
    assert scaled == pytest.approx([PHI / math.sqrt(5), PHI ** 2 / math.sqrt(5)], abs=1e-4)


@pytest.mark.xfail(strict=True, reason="scaled returns converge to phi/sqrt5 and phi^2/sqrt5; the stated "
                                       "values lie below the smallest possible return h_n(1) mu(I_n)")
def test_golden_sturmian_matches_stated_limits():
    d, mu = sturmian(SturmianSpec((1,)))
    F = finite_F1(d, min_path(d, 12, 0), mu)
    scaled = sorted(N * F.mu for N in F.returns())
    assert scaled == pytest.approx(list(sturmian_limits(GOLD, GOLD)), abs=1e-3)


def test_sturmian_limits_formula():
    assert sturmian_limits(GOLD, GOLD) == pytest.approx((1 / math.sqrt(5), 2 / math.sqrt(5)), abs=1e-12)
    h1, h2 = sturmian_limits(1 - 1e-12, 0.0)
    assert (h1, h2) == pytest.approx((1.0, 2.0), abs=1e-9)
    with pytest.raises(PreconditionError):
        sturmian_limits(0.0, 0.5)


def test_gauss_map():
    assert gauss_map(GOLD) == pytest.approx(GOLD, abs=1e-12)
    assert gauss_map(0.3) == pytest.approx(1 / 0.3 - 3)
    with pytest.raises(ZeroDivisionError):
        gauss_map(0)


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_registry_builds(name):
    params = {"M": "2,1/1,1"} if name == "left-to-right" else {}
    d, mu = generate(name, params)
    assert d.vertex_count(3) >= 1
    if mu is not None:
        assert mu.q(3, 0) > 0


def test_registry_unknown_name():
    with pytest.raises(KeyError):
        generate("nope")
