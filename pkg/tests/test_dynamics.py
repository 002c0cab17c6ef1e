import math

import pytest
from hypothesis import given, settings, strategies as st

from bvlimits.diagram import Edge, heights
from bvlimits.dynamics import (AdicState, adic_successor, brute_force_returns, excursion_walk,
                               kth_return_state, max_path, min_path, return_spectrum, return_time,
                               state_key, tower_position, towers)
from bvlimits.errors import InconclusiveOracle, NeedsDeeperSuffix, PreconditionError
from bvlimits.generators import SturmianSpec, left_to_right, odometer_classic, odometer_measure, sturmian


def _walk_gap(d, n, I, suffix):
    prof = excursion_walk(d, n, I.terminal, suffix[0], suffix[1:])
    return return_time(d, n, I.terminal, prof)


def test_min_path_of_odometer_is_all_rank_zero():
    p = min_path(odometer_classic([3]), 6, 0)
    assert [e.rank for e in p.edges] == [0] * 6


def test_min_path_sources_follow_vertex_one(ex1):
    p = min_path(ex1, 2, 1)
    assert [ex1.edge_source(e) for e in p.edges] == [0, 0]
    assert tower_position(ex1, p) == 0


def test_max_path_is_tower_top(ex1):
    for n in (1, 2, 3):
        for i in range(2):
            assert tower_position(ex1, max_path(ex1, n, i)) == heights(ex1, n)[i] - 1


def test_successor_of_last_max_path_wraps(ex1):
    s = adic_successor(ex1, AdicState(max_path(ex1, 3, 1)))
    assert s.wrapped
    assert s.path == min_path(ex1, 3, 0)


def test_truncated_adic_map_is_one_cycle(ex1):
    m = 4
    total = sum(heights(ex1, m))
    start = AdicState(min_path(ex1, m, 0))
    seen, s = set(), start
    for step in range(total):
        seen.add(s.path)
        s = adic_successor(ex1, s)
        assert s.wrapped == (step == total - 1)
    assert len(seen) == total
    assert s.path == start.path


def test_towers(ex1):
    ts = towers(ex1, 3)
    assert ts.heights == (11, 15) and ts.total == 26
    assert ts.bases[1] == min_path(ex1, 3, 1)


@pytest.mark.parametrize("bases", [(2,), (3,), (2, 3)])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_odometer_return_time_is_tower_height(bases, n):
    d = odometer_classic(bases)
    I = min_path(d, n, 0)
    expected = math.prod(bases[(k - 1) % len(bases)] for k in range(1, n))
    for rec in brute_force_returns(d, I, n + 2, 1):
        assert rec.gaps == (expected,)
        assert _walk_gap(d, n, I, rec.suffix) == expected


def test_walk_counts_decompose_return_time(ex1):
    n = 3
    h = heights(ex1, n)
    I = min_path(ex1, n, 0)
    for rec in brute_force_returns(ex1, I, n + 3, 1):
        prof = excursion_walk(ex1, n, 0, rec.suffix[0], rec.suffix[1:])
        assert sum(c * x for c, x in zip(prof.c, h)) == rec.gaps[0]
        assert prof.c == rec.counts[0]


@pytest.mark.parametrize("n", [3, 4, 5])
@pytest.mark.parametrize("i_star", [0, 1])
def test_example1_walk_matches_oracle(ex1, n, i_star):
    for I in (min_path(ex1, n, i_star), max_path(ex1, n, i_star)):
        for rec in brute_force_returns(ex1, I, n + 3, 1):
            assert _walk_gap(ex1, n, I, rec.suffix) == rec.gaps[0]


def test_example1_second_returns_match_oracle(ex1):
    n, k = 3, 2
    I = min_path(ex1, n, 1)
    for rec in brute_force_returns(ex1, I, n + k + 2, k):
        gaps, profiles = kth_return_state(ex1, n, 1, rec.suffix[:k + 1])
        assert tuple(gaps) == rec.gaps
        assert len(profiles) == k


def test_state_map_is_level_independent(ex1):
    maps = []
    for n in (3, 4):
        I = min_path(ex1, n, 0)
        table = {}
        for rec in brute_force_returns(ex1, I, n + 3, 1):
            prof = excursion_walk(ex1, n, 0, rec.suffix[0], rec.suffix[1:])
            table[state_key(rec.suffix[:2])] = (prof.c, state_key(prof.next_state[:2]))
        maps.append(table)
    assert maps[0] == maps[1]


def test_walk_rejects_sturmian():
    d, _ = sturmian(SturmianSpec((1,)))
    I = min_path(d, 3, 0)
    rec = brute_force_returns(d, I, 6, 1)[0]
    with pytest.raises(PreconditionError):
        excursion_walk(d, 3, 0, rec.suffix[0], rec.suffix[1:])


def test_lenient_walk_without_h1_can_run_out_of_suffix():
    d, _ = sturmian(SturmianSpec((1,)))
    I = min_path(d, 2, 0)
    assert I.terminal == 0
    with pytest.raises(NeedsDeeperSuffix):
        excursion_walk(d, 2, 0, Edge(3, 0, 0), [Edge(4, 1, 0)], strict=False)


def test_suffix_too_short(ex1):
    rec = brute_force_returns(ex1, min_path(ex1, 2, 1), 5, 1)[0]
    with pytest.raises(PreconditionError):
        kth_return_state(ex1, 2, 1, rec.suffix[:1])


def test_suffix_must_chain(ex1):
    rec = brute_force_returns(ex1, min_path(ex1, 2, 0), 5, 1)[0]
    with pytest.raises(PreconditionError):
        excursion_walk(ex1, 2, 1, rec.suffix[0], rec.suffix[1:])


def test_oracle_cap(ex1):
    d, _ = sturmian(SturmianSpec((1,)))
    I = min_path(d, 2, 1)
    with pytest.raises(InconclusiveOracle):
        brute_force_returns(d, I, 4, 1, cap=4)
    assert brute_force_returns(d, I, 4, 1)
    with pytest.raises(PreconditionError):
        brute_force_returns(ex1, min_path(ex1, 2, 1), 3, 1)


def test_oracle_masses_cover_cylinder(ex1, ex1_mu):
    n = 3
    I = min_path(ex1, n, 1)
    recs = brute_force_returns(ex1, I, n + 3, 1, measures=ex1_mu)
    assert math.isclose(sum(r.mass for r in recs), ex1_mu.q(n, 1), rel_tol=1e-12)


def test_spectrum_methods_agree(ex1, ex1_mu):
    I = max_path(ex1, 4, 0)
    walk = return_spectrum(ex1, I, ex1_mu, method="walk")
    oracle = return_spectrum(ex1, I, ex1_mu, method="oracle")
    assert [N for N, _ in walk] == [N for N, _ in oracle]
    for (_, a), (_, b) in zip(walk, oracle):
        assert math.isclose(a, b, rel_tol=1e-12)


def test_spectrum_of_odometer_is_one_atom():
    d = odometer_classic([3])
    spec = return_spectrum(d, min_path(d, 4, 0), odometer_measure([3]))
    assert [N for N, _ in spec] == [27]
    assert math.isclose(spec[0][1], 1 / 27)


small = st.integers(2, 3).flatmap(
    lambda m: st.lists(st.lists(st.integers(1, 3), min_size=m, max_size=m), min_size=m, max_size=m))


@settings(max_examples=25, deadline=None)
@given(small, st.integers(1, 4), st.data())
def test_walk_equals_oracle_on_left_to_right(M, n, data):
    d = left_to_right(M)
    i_star = data.draw(st.integers(0, len(M) - 1))
    I = (min_path if data.draw(st.booleans()) else max_path)(d, n, i_star)
    for rec in brute_force_returns(d, I, n + 2, 1):
        assert _walk_gap(d, n, I, rec.suffix) == rec.gaps[0]
