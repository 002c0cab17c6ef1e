"""Vershik dynamics on path prefixes, tower arithmetic and return times.

Two independent routes compute return times to a cylinder ``I_n``:

* :func:`excursion_walk` scans incoming edges at level n+1 only, moving up the
  supplied suffix when a family is exhausted; the return time is then
  ``sum_i c(i) * h_n(i)``.
* :func:`brute_force_returns` steps the adic map one path at a time and reads
  the gaps off directly.  It is the ground truth used in tests.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

from .diagram import Edge, OrderedBratteliDiagram, PathPrefix, heights, suffix_paths
from .errors import InconclusiveOracle, NeedsDeeperSuffix, PreconditionError


# -- paths and towers ---------------------------------------------------------

def min_path(d: OrderedBratteliDiagram, n: int, i: int) -> PathPrefix:
    """All-minimal path from the root to vertex i of V_n."""
    return _extreme_path(d, n, i, use_max=False)


def max_path(d: OrderedBratteliDiagram, n: int, i: int) -> PathPrefix:
    return _extreme_path(d, n, i, use_max=True)


def _extreme_path(d, n, i, use_max):
    if not 0 <= i < d.vertex_count(n):
        raise PreconditionError(f"vertex {i + 1} not in V_{n}")
    edges = []
    v = i
    for k in range(n, 0, -1):
        fam = d.level(k).into[v]
        r = len(fam) - 1 if use_max else 0
        edges.append(Edge(k, v, r))
        v = fam[r]
    return PathPrefix(tuple(reversed(edges)))


def tower_position(d: OrderedBratteliDiagram, path: PathPrefix) -> int:
    """Index of ``path`` among all paths into its terminal vertex (0 = base)."""
    pos = 0
    for e in path.edges:
        fam = d.level(e.level).into[e.target]
        h = heights(d, e.level - 1)
        pos += sum(h[s] for s in fam[:e.rank])
    return pos


@dataclass(frozen=True)
class TowerSystem:
    """Kakutani-Rokhlin towers at level n: heights and base (minimal) paths."""

    level: int
    heights: tuple[int, ...]
    bases: tuple[PathPrefix, ...]

    @property
    def total(self) -> int:
        return sum(self.heights)


def towers(d: OrderedBratteliDiagram, n: int) -> TowerSystem:
    return TowerSystem(n, heights(d, n), tuple(min_path(d, n, i) for i in range(d.vertex_count(n))))


# -- truncated adic map -------------------------------------------------------

@dataclass(frozen=True)
class AdicState:
    """A depth-m path prefix plus a flag recording a pass over the top."""

    path: PathPrefix
    wrapped: bool = False


def adic_successor(d: OrderedBratteliDiagram, s: AdicState) -> AdicState:
    """Vershik successor on depth-m prefixes.

    Past the top of the tower of vertex v the orbit continues at the base of
    tower v+1; a finite truncation cannot see the true order of the level-m
    towers, so they are concatenated in label order and the flag is raised
    when leaving the last one.
    """
    edges = list(s.path.edges)
    m = len(edges)
    for j, e in enumerate(edges):
        fam = d.level(e.level).into[e.target]
        if e.rank + 1 < len(fam):
            edges[j] = Edge(e.level, e.target, e.rank + 1)
            src = fam[e.rank + 1]
            for i in range(j - 1, -1, -1):
                edges[i] = Edge(i + 1, src, 0)
                src = d.level(i + 1).into[src][0]
            return AdicState(PathPrefix(tuple(edges)), s.wrapped)
    top = s.path.terminal
    nxt = top + 1
    if nxt == d.vertex_count(m):
        return AdicState(min_path(d, m, 0), True)
    return AdicState(min_path(d, m, nxt), s.wrapped)


# -- excursion walk ------------------------------------------------------------

@dataclass(frozen=True)
class UnknownEdge:
    """Minimal edge at ``level`` into a vertex not yet determined; its source is known."""

    level: int
    source: int


@dataclass(frozen=True)
class ExcursionProfile:
    """Tower traversal counts between a visit to ``I_n`` and the next one.

    ``next_state`` is the edge chain above level n at the moment of return;
    its first two entries identify the cylinder ``[I_n e' f']`` the orbit is
    in at that time.
    """

    n: int
    i_star: int
    c: tuple[int, ...]
    stop_edge: Edge
    next_state: tuple

    def return_time(self, d: OrderedBratteliDiagram) -> int:
        h = heights(d, self.n)
        return sum(ci * hi for ci, hi in zip(self.c, h))


def _minimalize(d, n, chain, j, src):
    for i in range(j - 1, -1, -1):
        lvl = n + 1 + i
        chain[i] = Edge(lvl, src, 0)
        src = d.level(lvl).into[src][0]


def _carry(d, n, chain):
    """Advance the chain once the level-(n+1) edge is maximal."""
    for j in range(1, len(chain)):
        x = chain[j]
        if isinstance(x, UnknownEdge):
            raise NeedsDeeperSuffix(f"suffix exhausted at level {x.level}")
        fam = d.level(x.level).into[x.target]
        if x.rank + 1 < len(fam):
            chain[j] = Edge(x.level, x.target, x.rank + 1)
            _minimalize(d, n, chain, j, fam[x.rank + 1])
            return
    # every known edge is maximal: the carry leaves the chain; whatever happens
    # above, the new top edge is minimal, so its source is known when all
    # minimal edges of that level share a source
    top = n + len(chain)
    sources = {fam[0] for fam in d.level(top).into}
    if len(sources) != 1:
        raise NeedsDeeperSuffix(f"carry past level {top} with ambiguous minimal edges")
    src = sources.pop()
    chain[-1] = UnknownEdge(top, src)
    _minimalize(d, n, chain, len(chain) - 1, src)


def _excursion(d, n, i_star, chain):
    into = d.level(n + 1).into
    counts = [0] * d.vertex_count(n)
    counts[i_star] = 1
    while True:
        x = chain[0]
        if x.rank + 1 < len(into[x.target]):
            chain[0] = Edge(x.level, x.target, x.rank + 1)
        else:
            _carry(d, n, chain)
            if isinstance(chain[0], UnknownEdge):
                raise NeedsDeeperSuffix(f"carry past level {n + 1}")
        x = chain[0]
        src = into[x.target][x.rank]
        if src == i_star:
            return counts, x
        counts[src] += 1


def _check_chain(d, n, i_star, chain):
    src = i_star
    for idx, e in enumerate(chain):
        if e.level != n + 1 + idx:
            raise PreconditionError(f"suffix edge {idx} sits at level {e.level}, expected {n + 1 + idx}")
        if d.level(e.level).into[e.target][e.rank] != src:
            raise PreconditionError(f"suffix does not chain at level {e.level}")
        src = e.target


def standing_assumptions_hold(d: OrderedBratteliDiagram, lo: int, hi: int) -> bool:
    """H1 and H3 on levels lo..hi."""
    for k in range(lo, hi + 1):
        lv = d.level(k)
        if any(fam[0] != 0 for fam in lv.into):
            return False
        mat = lv.incidence(d.vertex_count(k - 1))
        if any(x == 0 for row in mat for x in row):
            return False
    return True


def excursion_walk(d: OrderedBratteliDiagram, n: int, i_star: int, e: Edge,
                   f_chain: Sequence[Edge], strict: bool = True) -> ExcursionProfile:
    """Tower counts c(ef) for points of ``[J_n e f ...]``.

    With ``strict`` the levels spanned by the suffix must satisfy H1 and H3.
    """
    chain = [e, *f_chain]
    if len(chain) < 2:
        raise PreconditionError("need at least one suffix edge above e")
    _check_chain(d, n, i_star, chain)
    if strict and not standing_assumptions_hold(d, n + 1, n + len(chain)):
        raise PreconditionError(f"H1/H3 fail on levels {n + 1}..{n + len(chain)}")
    counts, stop = _excursion(d, n, i_star, chain)
    return ExcursionProfile(n, i_star, tuple(counts), stop, tuple(chain))


def return_time(d: OrderedBratteliDiagram, n: int, i_star: int, profile: ExcursionProfile) -> int:
    if profile.n != n or profile.i_star != i_star:
        raise PreconditionError("profile was computed for another level or vertex")
    return profile.return_time(d)


def kth_return_state(d: OrderedBratteliDiagram, n: int, i_star: int, suffix: Sequence[Edge],
                     strict: bool = True) -> tuple[list[int], list[ExcursionProfile]]:
    """Gaps N^(1), N^(2)-N^(1), ..., N^(k)-N^(k-1) for the suffix e_1..e_{k+1}.

    Also returns the excursion profiles; profile j starts from the state pair
    ``e^(j)`` (its first two chain entries before the walk).
    """
    chain = list(suffix)
    if len(chain) < 2:
        raise PreconditionError("suffix must contain at least two edges")
    _check_chain(d, n, i_star, chain)
    if strict and not standing_assumptions_hold(d, n + 1, n + len(chain)):
        raise PreconditionError(f"H1/H3 fail on levels {n + 1}..{n + len(chain)}")
    k = len(chain) - 1
    h = heights(d, n)
    gaps, profiles = [], []
    for _ in range(k):
        if isinstance(chain[0], UnknownEdge) or isinstance(chain[1], UnknownEdge):
            raise NeedsDeeperSuffix("state pair not determined by the suffix")
        start = tuple(chain)
        counts, stop = _excursion(d, n, i_star, chain)
        prof = ExcursionProfile(n, i_star, tuple(counts), stop, tuple(chain))
        profiles.append(_with_start(prof, start))
        gaps.append(sum(c * hh for c, hh in zip(counts, h)))
    return gaps, profiles


@dataclass(frozen=True)
class _Started:
    profile: ExcursionProfile
    start: tuple

    def __getattr__(self, name):
        return getattr(self.profile, name)


def _with_start(prof, start):
    return _Started(prof, start)


def state_key(chain_pair) -> tuple:
    """Level-free identifier (target, rank) pairs of a state; valid for stationary diagrams."""
    return tuple((e.target, e.rank) for e in chain_pair)


# -- brute-force oracle ----------------------------------------------------------

@dataclass(frozen=True)
class OracleRecord:
    """Gaps and tower counts for every point of ``[I_n suffix]``."""

    suffix: tuple[Edge, ...]
    gaps: tuple[int, ...]
    counts: tuple[tuple[int, ...], ...]
    mass: float | None


def _coalescence_depth(d, K):
    """Largest level L <= K at which all minimal paths into V_K agree below L."""
    cache = d._cache.setdefault("coalesce", {})
    if K not in cache:
        cur = set(range(d.vertex_count(K)))
        lvl = K
        while len(cur) > 1 and lvl > 0:
            f = d.level(lvl).into
            cur = {f[v][0] for v in cur}
            lvl -= 1
        cache[K] = (lvl, cur.pop()) if lvl > 0 else (0, 0)
    return cache[K]


def _orbit_gaps(d, prefix: PathPrefix, suffix: tuple[Edge, ...], k: int, pos_I: int):
    # Only the level-n tower and the edges above level n matter, so the orbit
    # is followed one tower traversal at a time.
    n = len(prefix)
    i_star = prefix.terminal
    K = n + len(suffix)
    targets = [0] * (n + 1) + [e.target for e in suffix]
    ranks = [0] * (n + 1) + [e.rank for e in suffix]
    into = [None] * (n + 1) + [d.level(lvl).into for lvl in range(n + 1, K + 1)]
    h = heights(d, n)
    tower, pos = i_star, pos_I
    counts = [0] * d.vertex_count(n)
    counts[i_star] = 1
    gaps, all_counts = [], []
    t = 0

    def record():
        nonlocal counts, t
        counts[i_star] -= 1
        gaps.append(t)
        all_counts.append(tuple(counts))
        counts = [0] * len(counts)
        counts[i_star] = 1
        t = 0

    while len(gaps) < k:
        if tower == i_star and pos < pos_I:
            t += pos_I - pos
            pos = pos_I
            record()
            continue
        t += h[tower] - pos
        j = n + 1
        while j <= K and ranks[j] >= len(into[j][targets[j]]) - 1:
            j += 1
        if j <= K:
            ranks[j] += 1
            src = into[j][targets[j]][ranks[j]]
            top = j - 1
        else:
            # past the top of the known prefix: only the coalesced part survives
            top, src = _coalescence_depth(d, K)
            K = top
            if K < n:
                raise NeedsDeeperSuffix("level-n tower unknown after carry")
        for i in range(top, n, -1):
            targets[i] = src
            ranks[i] = 0
            src = into[i][src][0]
        tower, pos = src, 0
        counts[tower] += 1
        if tower == i_star and pos_I == 0:
            record()
    return tuple(gaps), tuple(all_counts)


def brute_force_returns(d: OrderedBratteliDiagram, I: PathPrefix, depth: int, k: int,
                        cap: int | None = None, measures=None) -> list[OracleRecord]:
    """Return gaps of every depth-``depth`` subcylinder of ``I`` by direct iteration.

    A subcylinder whose orbit needs edges above its known prefix is refined
    one level deeper, up to ``cap`` (default n+k+6).
    """
    I.check(d)
    n = len(I)
    if k < 1:
        raise PreconditionError("k must be positive")
    if depth < n + k + 1:
        raise PreconditionError(f"depth {depth} must be at least n+k+1 = {n + k + 1}")
    cap = n + k + 6 if cap is None else cap
    pos_I = tower_position(d, I)
    out = []
    pending = list(suffix_paths(d, n, I.terminal, depth - n))
    pending.reverse()
    while pending:
        suffix = pending.pop()
        try:
            gaps, counts = _orbit_gaps(d, I, suffix, k, pos_I)
        except NeedsDeeperSuffix:
            lvl = n + len(suffix)
            if lvl >= cap:
                raise InconclusiveOracle(f"cylinder still unresolved at depth cap {cap}") from None
            children = [suffix + ext for ext in suffix_paths(d, lvl, suffix[-1].target, 1)]
            pending.extend(reversed(children))
            continue
        mass = None
        if measures is not None:
            mass = measures.q(n + len(suffix), suffix[-1].target)
        out.append(OracleRecord(suffix, gaps, counts, mass))
    return out


def oracle_by_suffix(records: Sequence[OracleRecord], length: int) -> dict:
    """Group oracle records by their first ``length`` suffix edges."""
    grouped = defaultdict(set)
    for rec in records:
        grouped[rec.suffix[:length]].add(rec.gaps)
    return dict(grouped)


# -- return spectrum ---------------------------------------------------------------

def return_spectrum(d: OrderedBratteliDiagram, I: PathPrefix, measures, method: str = "auto") -> list[tuple[int, float]]:
    """Distinct first-return values to ``I`` with the mass of the points realising each.

    ``method`` is "walk", "oracle" or "auto" (walk when H1 and H3 hold above I).
    """
    I.check(d)
    n, i_star = len(I), I.terminal
    if method == "auto":
        method = "walk" if standing_assumptions_hold(d, n + 1, n + 2) else "oracle"
    masses: dict[int, float] = defaultdict(float)
    if method == "walk":
        for e, f in suffix_paths(d, n, i_star, 2):
            N = excursion_walk(d, n, i_star, e, (f,)).return_time(d)
            masses[N] += measures.q(n + 2, f.target)
    elif method == "oracle":
        for rec in brute_force_returns(d, I, n + 2, 1, measures=measures):
            masses[rec.gaps[0]] += rec.mass
    else:
        raise ValueError(f"unknown method {method!r}")
    return sorted(masses.items())
