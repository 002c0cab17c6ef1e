import math

import pytest
from hypothesis import given, settings, strategies as st

from bvlimits.dynamics import brute_force_returns, max_path, min_path, state_key
from bvlimits.generators import left_to_right, odometer_classic, odometer_measure
from bvlimits.limitlaw import (DiscreteCDF, EntranceCDF, FddSpec, PiecewiseLinearCDF, breakpoint_table,
                               convergence_report, cylinder_sequence, finite_F1, finite_Fk, finite_fdd,
                               fitted_slope, lattice_floor, left_right_closed_form, limit_F1, limit_fdd,
                               limit_Fk, recurrence_bound, sup_distance, table_from_cylinder)
from bvlimits.errors import PreconditionError
from bvlimits.spectral import StationaryMeasure, perron

UNIFORM = PiecewiseLinearCDF((0.0, 1.0), (0.0, 1.0))
ATOM_AT_ONE = DiscreteCDF((1.0,), (1.0,))


# -- primitives ----------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(1e-9, 10.0))
def test_lattice_floor_on_lattice_points(j, mu):
    assert lattice_floor(j * mu, mu) == j


def test_lattice_floor_between_points():
    assert lattice_floor(0.35, 0.1) == 3
    assert lattice_floor(0.0999999, 0.1) == 0


def test_sup_distance_identical():
    assert sup_distance(UNIFORM, UNIFORM) == 0
    assert sup_distance(ATOM_AT_ONE, ATOM_AT_ONE) == 0


def test_sup_distance_uniform_vs_atom():
    assert sup_distance(UNIFORM, ATOM_AT_ONE) == pytest.approx(1.0, abs=1e-15)
    assert sup_distance(ATOM_AT_ONE, UNIFORM) == pytest.approx(1.0, abs=1e-15)


atoms = st.dictionaries(st.floats(0.01, 3.0), st.floats(0.01, 1.0), min_size=1, max_size=6)


@settings(max_examples=60, deadline=None)
@given(atoms, st.floats(0.05, 0.5))
def test_sup_distance_dominates_grid(a, mu):
    A = DiscreteCDF.from_atoms(a)
    N = max(1, round(1 / mu))
    E = EntranceCDF(mu, ((N, 1 / N),))
    grid = [i / 997 * 4 for i in range(998)]
    sampled = max(abs(A(t) - E(t)) for t in grid)
    exact = sup_distance(A, E)
    assert exact >= sampled - 1e-12
    # the staircase steps at every lattice point below its top
    cands = sorted(set(A.breaks() + [j * mu for j in range(N + 1)]))
    assert any(math.isclose(exact, abs(A(t) - E(t)), abs_tol=1e-12)
               or math.isclose(exact, abs(A.left(t) - E.left(t)), abs_tol=1e-12) for t in cands)


def test_sup_distance_left_limits_at_shared_jump():
    A = DiscreteCDF.from_atoms({1.0: 1.0})
    E = EntranceCDF(0.5, ((2, 0.5),))
    assert sup_distance(A, E) == pytest.approx(0.5)
    assert sup_distance(E, A) == pytest.approx(0.5)


def test_entrance_cdf_staircase():
    F = EntranceCDF(0.25, ((2, 0.5), (3, 0.25)))
    assert F(0.24) == 0
    assert F(0.25) == pytest.approx(0.75)
    assert F(0.5) == pytest.approx(1.5)
    assert F.left(0.5) == pytest.approx(0.75)
    assert F.breaks() == [0.5, 0.75]
    assert F.returns() == {2: 0.5, 3: 0.25}


# -- breakpoint tables -----------------------------------------------------------

@pytest.mark.parametrize("p", [2, 3, 5])
def test_single_vertex_breakpoint(p):
    t = left_right_closed_form([[p]])
    assert t.d == pytest.approx((1.0,))
    b = breakpoint_table(odometer_classic([p]), 0)
    assert b.d == pytest.approx((1.0,))


@pytest.mark.parametrize("i_star", [0, 1])
def test_table_is_limit_of_scaled_returns(ex1, ex1_pd, i_star):
    table = breakpoint_table(ex1, i_star, ex1_pd)
    for n in (6, 8):
        for rec in brute_force_returns(ex1, min_path(ex1, n, i_star), n + 2, 1):
            scaled = rec.gaps[0] / ex1_pd.lam ** (n - 1)
            assert scaled == pytest.approx(table.cbar(state_key(rec.suffix[:2])), abs=1e-4)


def test_table_total_mass_is_one(ex1, ex1_pd):
    for i_star in (0, 1):
        table = breakpoint_table(ex1, i_star, ex1_pd)
        total = math.fsum(e.cbar * e.weight for e in table.entries)
        assert total == pytest.approx(1, abs=1e-12)
        assert sum(table.group_weights) == pytest.approx(ex1_pd.r[i_star], abs=1e-12)


def test_table_does_not_depend_on_cylinder_sequence(ex1, ex1_pd):
    for i_star in (0, 1):
        a, b = (table_from_cylinder(ex1, I, ex1_pd)
                for I in (min_path(ex1, 4, i_star), max_path(ex1, 5, i_star)))
        assert a.c_values == pytest.approx(b.c_values, abs=1e-12)
        assert a.group_weights == pytest.approx(b.group_weights, abs=1e-12)
        assert a.c_values == pytest.approx(breakpoint_table(ex1, i_star, ex1_pd).c_values, abs=1e-12)


def test_example1_breakpoints_are_fixed(ex1_pd):
    # left-to-right order of [[1,1],[2,3]] at vertex 1, from the closed form
    t = left_right_closed_form([[1, 1], [2, 3]], ex1_pd)
    lam, r, l = ex1_pd.lam, ex1_pd.r, ex1_pd.l
    expected = sorted({l[0] + lam * l[0] - l[0], l[0] + lam * l[1] - l[0]})
    assert t.c_values == pytest.approx(expected, abs=1e-12)
    assert t.d == pytest.approx([c * r[0] for c in expected], abs=1e-12)


matrices = st.integers(1, 3).flatmap(
    lambda m: st.lists(st.lists(st.integers(1, 3), min_size=m, max_size=m), min_size=m, max_size=m))


@settings(max_examples=40, deadline=None)
@given(matrices)
def test_closed_form_matches_walk_table(M):
    pd = perron(M)
    closed = left_right_closed_form(M, pd)
    walked = breakpoint_table(left_to_right(M), 0, pd)
    assert closed.c_values == pytest.approx(walked.c_values, abs=1e-9)
    assert closed.group_weights == pytest.approx(walked.group_weights, abs=1e-9)
    assert limit_F1(closed)(max(closed.d)) == pytest.approx(1, abs=1e-9)


# -- limit laws ------------------------------------------------------------------------

def test_odometer_limit_is_uniform():
    F = limit_F1(breakpoint_table(odometer_classic([2]), 0))
    for t in (0.0, 0.1, 0.5, 0.99, 1.0, 3.0):
        assert F(t) == pytest.approx(min(t, 1.0), abs=1e-12)
    assert sup_distance(F, UNIFORM) == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_odometer_kth_limit_is_atom_at_one(k):
    d = odometer_classic([3])
    assert sup_distance(limit_Fk(d, 0, k), ATOM_AT_ONE) == pytest.approx(0, abs=1e-12)


def test_limit_endpoints(ex1, ex1_pd):
    for i_star in (0, 1):
        F = limit_F1(breakpoint_table(ex1, i_star, ex1_pd))
        assert F(0) == 0
        assert F(F.xs[-1]) == pytest.approx(1, abs=1e-12)
        assert F(10 * F.xs[-1]) == pytest.approx(1, abs=1e-12)
        assert all(s >= 0 for s in F.slopes)


def test_kth_limit_below_first_breakpoint(ex1):
    G = limit_Fk(ex1, 0, 2)
    assert G(G.points[0] * 0.999) == 0
    assert G.total == pytest.approx(1, abs=1e-12)


def test_first_law_converges_at_n10(ex1, ex1_mu):
    table = breakpoint_table(ex1, 0)
    dist = sup_distance(finite_F1(ex1, min_path(ex1, 10, 0), ex1_mu), limit_F1(table))
    assert dist <= 1e-3


@pytest.mark.xfail(strict=True, reason="finite atoms approach the limit atoms from above; the sup "
                                       "distance between step laws stays at the atom mass")
def test_second_law_converges_at_n9(ex1, ex1_mu):
    dist = sup_distance(finite_Fk(ex1, min_path(ex1, 9, 0), 2, ex1_mu), limit_Fk(ex1, 0, 2))
    assert dist <= 1e-3


@pytest.mark.xfail(strict=True, reason="the staircase law sits on a lattice of step mu(I_n), so the "
                                       "distance decays like 1/lambda per level, not gamma/lambda")
def test_fitted_slope_reaches_gamma_rate(ex1, ex1_mu, ex1_pd):
    rep = convergence_report(ex1, cylinder_sequence(ex1, 0, range(4, 13)), 1, ex1_mu, ex1_pd)
    assert rep.slope <= rep.expected_slope + 0.2


def test_convergence_report_decreases(ex1, ex1_mu, ex1_pd):
    rep = convergence_report(ex1, cylinder_sequence(ex1, 0, range(4, 11)), 1, ex1_mu, ex1_pd)
    assert rep.decreasing
    assert rep.slope == pytest.approx(-math.log(ex1_pd.lam), abs=0.1)
    assert rep.expected_slope == pytest.approx(math.log((2 - math.sqrt(3)) / (2 + math.sqrt(3))), abs=1e-9)


def test_convergence_needs_common_vertex(ex1, ex1_mu):
    with pytest.raises(PreconditionError):
        convergence_report(ex1, [min_path(ex1, 4, 0), min_path(ex1, 5, 1)], 1, ex1_mu)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_odometer_finite_law_gap_is_cylinder_mass(n):
    d = odometer_classic([2])
    F = finite_F1(d, min_path(d, n, 0), odometer_measure([2]))
    assert sup_distance(F, UNIFORM) == pytest.approx(F.mu, rel=1e-12)


# -- finite laws ----------------------------------------------------------------------

def test_finite_methods_agree(ex1, ex1_mu):
    I = max_path(ex1, 4, 1)
    a = finite_F1(ex1, I, ex1_mu, method="walk")
    b = finite_F1(ex1, I, ex1_mu, method="oracle")
    assert sup_distance(a, b) == pytest.approx(0, abs=1e-12)


def test_finite_laws_have_mass_one(ex1, ex1_mu):
    I = min_path(ex1, 4, 0)
    F = finite_F1(ex1, I, ex1_mu)
    assert F(F.max_return * F.mu) == pytest.approx(1, abs=1e-12)
    for k in (2, 3):
        assert finite_Fk(ex1, I, k, ex1_mu).total == pytest.approx(1, abs=1e-12)


def test_fdd_reduces_to_first_law(ex1, ex1_mu):
    I = min_path(ex1, 5, 1)
    F = finite_F1(ex1, I, ex1_mu)
    for t1 in (0.0, 0.1, 0.37, 0.9, 2.0):
        assert finite_fdd(ex1, I, FddSpec(1, (t1,)), ex1_mu) == pytest.approx(F(t1), abs=1e-12)
        big = finite_fdd(ex1, I, FddSpec(3, (t1, math.inf, 1e9)), ex1_mu)
        assert big == pytest.approx(F(t1), abs=1e-12)


def test_limit_fdd_reduces_to_limit_law(ex1, ex1_pd):
    table = breakpoint_table(ex1, 0, ex1_pd)
    F = limit_F1(table)
    for t1 in (0.0, 0.1, 0.37, 0.9, 2.0):
        assert limit_fdd(ex1, 0, FddSpec(1, (t1,)), table, ex1_pd) == pytest.approx(F(t1), abs=1e-12)
        big = limit_fdd(ex1, 0, FddSpec(2, (t1, 1e9)), table, ex1_pd)
        assert big == pytest.approx(F(t1), abs=1e-12)


def test_fdd_converges_off_breakpoints(ex1, ex1_mu, ex1_pd):
    table = breakpoint_table(ex1, 0, ex1_pd)
    spec = FddSpec(2, (0.5, table.d[0] + 0.05))
    target = limit_fdd(ex1, 0, spec, table, ex1_pd)
    assert finite_fdd(ex1, min_path(ex1, 9, 0), spec, ex1_mu) == pytest.approx(target, abs=1e-3)


def test_fdd_spec_validation():
    with pytest.raises(PreconditionError):
        FddSpec(2, (1.0,))
    with pytest.raises(PreconditionError):
        FddSpec(1, (-1.0,))


def test_recurrence_bound_example1(ex1, ex1_mu):
    rb = recurrence_bound(ex1, cylinder_sequence(ex1, 0, range(3, 9)), ex1_mu)
    assert rb.bounded
    assert rb.K == pytest.approx(max(breakpoint_table(ex1, 0).d), rel=1e-3)


def test_fitted_slope():
    assert fitted_slope([1, 2, 3], [math.e ** -2, math.e ** -4, math.e ** -6]) == pytest.approx(-2)


def test_cylinder_sequence_kinds(ex1):
    mins = cylinder_sequence(ex1, 1, [3, 4])
    seconds = cylinder_sequence(ex1, 1, [3, 4], kind="second")
    assert [c.terminal for c in mins + seconds] == [1, 1, 1, 1]
    assert all(a != b for a, b in zip(mins, seconds))
    with pytest.raises(ValueError):
        cylinder_sequence(ex1, 1, [3], kind="other")


def test_second_cylinder_has_same_limit(ex1, ex1_pd):
    mu = StationaryMeasure(ex1, ex1_pd)
    lim = limit_F1(breakpoint_table(ex1, 1, ex1_pd))
    for I in cylinder_sequence(ex1, 1, [10], kind="second"):
        assert sup_distance(finite_F1(ex1, I, mu), lim) <= 1e-3
