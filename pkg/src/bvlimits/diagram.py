"""Ordered Bratteli diagrams: representation, validation, contraction, I/O.

Vertices are 0-based integers inside the library.  The root is vertex 0 of
level 0.  A level is stored as, for each target vertex, the ordered tuple of
its incoming edges' source vertices; the position in that tuple is the edge
rank (0 = minimal edge).  The JSON format uses 1-based vertex labels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

from .errors import DiagramError, LevelRangeError, NormalizationError


class Edge(NamedTuple):
    """An edge identified by (level, target vertex, rank within its family)."""

    level: int
    target: int
    rank: int


@dataclass(frozen=True)
class LevelSpec:
    """Incoming edge families of one level: ``into[j]`` lists sources of edges into j."""

    into: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "into", tuple(tuple(int(s) for s in fam) for fam in self.into))

    @property
    def width(self) -> int:
        return len(self.into)

    @property
    def source_count(self) -> int:
        """Number of source vertices referenced (max index + 1)."""
        return 1 + max(s for fam in self.into for s in fam)

    def incidence(self, n_sources: int) -> list[list[int]]:
        mat = [[0] * len(self.into) for _ in range(n_sources)]
        for j, fam in enumerate(self.into):
            for s in fam:
                mat[s][j] += 1
        return mat

    def source(self, target: int, rank: int) -> int:
        return self.into[target][rank]

    def is_max(self, target: int, rank: int) -> bool:
        return rank == len(self.into[target]) - 1

    def relabeled(self, src_perm: Sequence[int], tgt_perm: Sequence[int]) -> "LevelSpec":
        """Apply vertex permutations (old -> new) to sources and targets."""
        new = [None] * len(self.into)
        for j, fam in enumerate(self.into):
            new[tgt_perm[j]] = tuple(src_perm[s] for s in fam)
        return LevelSpec(tuple(new))


def compose_levels(lower: LevelSpec, upper: LevelSpec) -> LevelSpec:
    """Collapse two consecutive levels into one with the induced order.

    Composite edges into j are ordered by the upper edge first, then by the
    lower edge (reverse lexicographic order on paths).
    """
    return LevelSpec(tuple(
        tuple(s for mid in fam for s in lower.into[mid]) for fam in upper.into
    ))


@dataclass(frozen=True)
class OrderedBratteliDiagram:
    """Leveled multigraph with a total order on each incoming-edge family.

    ``levels[k-1]`` connects V_{k-1} to V_k.  When ``stationary_period`` is
    set, the last ``stationary_period`` stored levels repeat forever, so the
    diagram is infinite; otherwise it has exactly ``len(levels)`` levels.
    """

    levels: tuple[LevelSpec, ...]
    stationary_period: int | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.levels:
            raise DiagramError("diagram needs at least one level")
        p = self.stationary_period
        if p is not None and not (1 <= p <= len(self.levels)):
            raise DiagramError(f"stationary_period {p} must lie in 1..{len(self.levels)}")
        _check_structure(self)

    # -- level access -------------------------------------------------
    @property
    def depth(self) -> int | None:
        """Number of levels, or None for an infinite (periodic) diagram."""
        return None if self.stationary_period else len(self.levels)

    @property
    def periodic_start(self) -> int | None:
        """First level of the repeating regime."""
        if not self.stationary_period:
            return None
        return len(self.levels) - self.stationary_period + 1

    @property
    def is_stationary(self) -> bool:
        """One incidence matrix and order for every level >= 2."""
        return self.stationary_period == 1 and len(self.levels) <= 2

    def has_level(self, k: int) -> bool:
        return k >= 1 and (self.stationary_period is not None or k <= len(self.levels))

    def level(self, k: int) -> LevelSpec:
        if k < 1:
            raise LevelRangeError(f"level {k} out of range (levels start at 1)")
        if k <= len(self.levels):
            return self.levels[k - 1]
        if not self.stationary_period:
            raise LevelRangeError(f"level {k} beyond finite depth {len(self.levels)}")
        s0 = self.periodic_start
        return self.levels[s0 - 1 + (k - s0) % self.stationary_period]

    def vertex_count(self, k: int) -> int:
        if k == 0:
            return 1
        return self.level(k).width

    @property
    def vertex_counts(self) -> tuple[int, ...]:
        """m_0 = 1, m_1, ... over the stored levels."""
        return (1,) + tuple(lv.width for lv in self.levels)

    def incidence(self, k: int) -> list[list[int]]:
        return incidence(self, k)

    def edge_source(self, e: Edge) -> int:
        return self.level(e.level).into[e.target][e.rank]

    def repeating_level(self) -> LevelSpec:
        if not self.is_stationary:
            raise LevelRangeError("diagram is not stationary")
        return self.levels[-1]


def _check_structure(d: OrderedBratteliDiagram) -> None:
    prev_width = 1
    n_check = len(d.levels) + (1 if d.stationary_period else 0)
    for k in range(1, n_check + 1):
        lv = d.level(k)
        if lv.width == 0:
            raise DiagramError("level has no vertices", level=k)
        used = set()
        for j, fam in enumerate(lv.into):
            if not fam:
                raise DiagramError("empty incoming list", level=k, vertex=j + 1)
            for s in fam:
                if not 0 <= s < prev_width:
                    raise DiagramError(f"source {s + 1} not in V_{k - 1}", level=k, vertex=j + 1)
                used.add(s)
        missing = set(range(prev_width)) - used
        if missing:
            raise DiagramError("dangling vertex with no outgoing edge", level=k - 1,
                               vertex=min(missing) + 1)
        prev_width = lv.width


# -- basic operations -------------------------------------------------

def incidence(d: OrderedBratteliDiagram, k: int) -> list[list[int]]:
    """M^(k)[i][j] = number of edges from i in V_{k-1} to j in V_k."""
    return d.level(k).incidence(d.vertex_count(k - 1))


def heights(d: OrderedBratteliDiagram, n: int) -> tuple[int, ...]:
    """Number of root-to-j paths for each j in V_n (exact integers)."""
    if n < 0:
        raise LevelRangeError(f"level {n} out of range")
    cache = d._cache.setdefault("heights", [(1,)])
    while len(cache) <= n:
        k = len(cache)
        prev = cache[-1]
        cache.append(tuple(sum(prev[s] for s in fam) for fam in d.level(k).into))
    return cache[n]


def matmul(a: Sequence[Sequence[int]], b: Sequence[Sequence[int]]) -> list[list[int]]:
    """Exact integer matrix product."""
    cols = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in cols] for row in a]


def contract(d: OrderedBratteliDiagram, cuts: Sequence[int], step: int | None = None) -> OrderedBratteliDiagram:
    """Contract along the increasing sequence ``cuts`` (first element 0).

    With ``step`` the cut sequence continues ``cuts[-1] + step, cuts[-1] + 2*step, ...``
    and the result is stationary beyond its stored levels.
    """
    cuts = [int(c) for c in cuts]
    if len(cuts) < 2 and step is None:
        raise LevelRangeError("need at least two cuts")
    if not cuts or cuts[0] != 0:
        raise LevelRangeError("cuts must start at 0")
    if any(b <= a for a, b in zip(cuts, cuts[1:])):
        raise LevelRangeError("cuts must be strictly increasing")
    if step is not None:
        p = d.stationary_period
        if not p:
            raise LevelRangeError("an infinite cut sequence needs a periodic diagram")
        if step <= 0 or step % p:
            raise LevelRangeError(f"step {step} must be a positive multiple of the period {p}")
        if cuts[-1] + 1 < d.periodic_start:
            raise LevelRangeError("last explicit cut must reach the periodic regime")
        cuts = cuts + [cuts[-1] + step]
    elif d.depth is not None and cuts[-1] > d.depth:
        raise LevelRangeError(f"cut {cuts[-1]} beyond depth {d.depth}")
    new_levels = []
    for lo, hi in zip(cuts, cuts[1:]):
        block = d.level(lo + 1)
        for k in range(lo + 2, hi + 1):
            block = compose_levels(block, d.level(k))
        new_levels.append(block)
    return OrderedBratteliDiagram(tuple(new_levels), 1 if step is not None else None)


# -- paths ----------------------------------------------------------------

@dataclass(frozen=True)
class PathPrefix:
    """Finite path from the root; ``edges[k-1]`` is the edge at level k."""

    edges: tuple[Edge, ...]

    def __len__(self):
        return len(self.edges)

    @property
    def terminal(self) -> int:
        return self.edges[-1].target if self.edges else 0

    def check(self, d: OrderedBratteliDiagram) -> None:
        src = 0
        for k, e in enumerate(self.edges, start=1):
            if e.level != k:
                raise DiagramError(f"edge {k} labeled with level {e.level}", level=k)
            fam = d.level(k).into
            if not 0 <= e.target < len(fam) or not 0 <= e.rank < len(fam[e.target]):
                raise DiagramError("edge rank or target out of range", level=k, vertex=e.target + 1)
            if fam[e.target][e.rank] != src:
                raise DiagramError("edges do not chain", level=k, vertex=e.target + 1)
            src = e.target

    @classmethod
    def from_ranks(cls, d: OrderedBratteliDiagram, targets: Sequence[int], ranks: Sequence[int]) -> "PathPrefix":
        p = cls(tuple(Edge(k, t, r) for k, (t, r) in enumerate(zip(targets, ranks), start=1)))
        p.check(d)
        return p


def paths_into(d: OrderedBratteliDiagram, n: int, j: int) -> Iterator[tuple[Edge, ...]]:
    """All root-to-j paths of length n in increasing (adic) order."""
    if n == 0:
        yield ()
        return
    for rank, s in enumerate(d.level(n).into[j]):
        for p in paths_into(d, n - 1, s):
            yield p + (Edge(n, j, rank),)


def suffix_paths(d: OrderedBratteliDiagram, start_level: int, start_vertex: int, length: int) -> Iterator[tuple[Edge, ...]]:
    """Edge chains at levels start_level+1 .. start_level+length leaving start_vertex.

    Enumerated in a fixed lexicographic order (lowest level first).
    """
    if length == 0:
        yield ()
        return
    k = start_level + 1
    lv = d.level(k)
    for j, fam in enumerate(lv.into):
        for r, s in enumerate(fam):
            if s == start_vertex:
                for rest in suffix_paths(d, k, j, length - 1):
                    yield (Edge(k, j, r),) + rest


# -- validation -------------------------------------------------------------

@dataclass
class ValidationReport:
    depth: int
    h1: bool
    h2: bool
    h3: bool
    proper: bool
    unique_min: bool
    unique_max: bool
    stationary: bool
    period: int | None
    h1_levels: dict[int, bool]
    h3_levels: dict[int, bool]
    diagnostics: list[str]

    @property
    def standing_assumptions(self) -> bool:
        return self.h1 and self.h2 and self.h3

    def as_dict(self) -> dict:
        return {
            "depth": self.depth, "H1": self.h1, "H2": self.h2, "H3": self.h3,
            "proper": self.proper, "unique_min": self.unique_min, "unique_max": self.unique_max,
            "stationary": self.stationary, "period": self.period,
            "H1_levels": {str(k): v for k, v in self.h1_levels.items()},
            "H3_levels": {str(k): v for k, v in self.h3_levels.items()},
            "diagnostics": list(self.diagnostics),
        }


def _extreme_source_map(lv: LevelSpec, use_max: bool) -> tuple[int, ...]:
    return tuple(fam[-1] if use_max else fam[0] for fam in lv.into)


def _unique_chain_closed(maps: Sequence[tuple[int, ...]]) -> bool:
    """Unique infinite chain through one period of extreme-source maps.

    ``maps[i]`` sends V_{s+i} to V_{s+i-1}; their composite g: V_top -> V_bottom
    (same vertex set) has a unique chain iff it has exactly one periodic
    point and that point is fixed.
    """
    width = len(maps[-1])
    def g(v):
        for f in reversed(maps):
            v = f[v]
        return v
    periodic = set()
    for v in range(width):
        w = v
        for _ in range(width):
            w = g(w)
        periodic.add(w)
    return len(periodic) == 1 and g(next(iter(periodic))) == next(iter(periodic))


def extreme_vertex_image(d: OrderedBratteliDiagram, top: int, bottom: int, use_max: bool) -> set[int]:
    """Vertices of V_bottom reached from V_top by following extreme (min or max) edges."""
    cur = set(range(d.vertex_count(top)))
    for k in range(top, bottom, -1):
        f = _extreme_source_map(d.level(k), use_max)
        cur = {f[v] for v in cur}
    return cur


def validate(d: OrderedBratteliDiagram, depth: int) -> ValidationReport:
    """Check H1, H2, H3 and proper ordering on levels 1..depth."""
    if depth < 1:
        raise LevelRangeError("depth must be positive")
    if d.depth is not None and depth > d.depth:
        raise LevelRangeError(f"depth {depth} beyond diagram depth {d.depth}")
    diag: list[str] = []
    h1_levels, h3_levels = {}, {}
    for k in range(1, depth + 1):
        mat = incidence(d, k)
        h1_levels[k] = all(x >= 1 for row in mat for x in row)
        if not h1_levels[k]:
            diag.append(f"H1 fails at level {k}: incidence matrix has a zero entry")
        lv = d.level(k)
        h3_levels[k] = all(fam[0] == 0 for fam in lv.into)
        if not h3_levels[k]:
            bad = [j + 1 for j, fam in enumerate(lv.into) if fam[0] != 0]
            diag.append(f"H3 fails at level {k}: minimal edge into vertices {bad} does not start at 1")
    h2 = all(len(fam) == 1 for fam in d.level(1).into)
    if not h2:
        diag.append("H2 fails: some vertex of V_1 has several edges from the root")

    if d.stationary_period:
        s0 = d.periodic_start
        p = d.stationary_period
        maps_min = [_extreme_source_map(d.level(k), False) for k in range(s0, s0 + p)]
        maps_max = [_extreme_source_map(d.level(k), True) for k in range(s0, s0 + p)]
        if d.vertex_count(s0 - 1) != d.vertex_count(s0 + p - 1):
            unique_min = unique_max = False
        else:
            unique_min = _unique_chain_closed(maps_min)
            unique_max = _unique_chain_closed(maps_max)
    else:
        mid = max(1, depth // 2)
        unique_min = len(extreme_vertex_image(d, depth, mid, False)) == 1
        unique_max = len(extreme_vertex_image(d, depth, mid, True)) == 1
    if not unique_min:
        diag.append("minimal infinite path is not unique")
    if not unique_max:
        diag.append("maximal infinite path is not unique")
    return ValidationReport(
        depth=depth,
        h1=all(h1_levels.values()),
        h2=h2,
        h3=all(h3_levels.values()),
        proper=unique_min and unique_max,
        unique_min=unique_min,
        unique_max=unique_max,
        stationary=d.is_stationary,
        period=d.stationary_period,
        h1_levels=h1_levels,
        h3_levels=h3_levels,
        diagnostics=diag,
    )


def default_depth(d: OrderedBratteliDiagram) -> int:
    """Enough levels to cover the stored prefix and one extra period."""
    if d.depth is not None:
        return d.depth
    return len(d.levels) + d.stationary_period


# -- normalization ------------------------------------------------------------

def primitivity_exponent(mat: Sequence[Sequence[int]]) -> int | None:
    """Smallest p with mat**p > 0, or None if mat is not primitive."""
    m = len(mat)
    if m != len(mat[0]):
        return None
    bound = (m - 1) ** 2 + 1  # Wielandt
    bool_mat = [[1 if x else 0 for x in row] for row in mat]
    power = bool_mat
    for p in range(1, bound + 1):
        if all(x for row in power for x in row):
            return p
        power = [[1 if v else 0 for v in row] for row in matmul(power, bool_mat)]
    return None


def relabel(d: OrderedBratteliDiagram, perms: Sequence[Sequence[int]]) -> OrderedBratteliDiagram:
    """Relabel vertices; ``perms[k]`` maps old labels of V_k to new ones (perms[0] is the root)."""
    new_levels = []
    for k, lv in enumerate(d.levels, start=1):
        new_levels.append(lv.relabeled(perms[k - 1], perms[k]))
    return OrderedBratteliDiagram(tuple(new_levels), d.stationary_period)


def _swap_perm(width: int, v: int) -> list[int]:
    perm = list(range(width))
    perm[0], perm[v] = v, 0
    return perm


def relabel_normalize(d: OrderedBratteliDiagram) -> tuple[OrderedBratteliDiagram, ValidationReport]:
    """Reach H1-H3 by contracting levels and relabeling vertices.

    Raises NormalizationError when this would need microscoping.
    """
    depth = default_depth(d)
    rep = validate(d, depth)
    if rep.standing_assumptions:
        return d, rep
    if not rep.h2:
        raise NormalizationError("H2 fails at level 1; only microscoping could repair it")

    if d.stationary_period:
        s0, p = d.periodic_start, d.stationary_period
        block = d.level(s0)
        for k in range(s0 + 1, s0 + p):
            block = compose_levels(block, d.level(k))
        width = block.width
        if width != d.vertex_count(s0 - 1):
            raise NormalizationError("periodic block is not square")
        e = primitivity_exponent(block.incidence(width))
        if e is None:
            raise NormalizationError("repeating incidence matrix is not primitive")
        cuts = [0, 1]
        if s0 > 2:
            cuts.append(s0 - 1)
        work = contract(d, cuts, step=p * e)
    else:
        cuts = [0, 1]
        k = 1
        while k < d.depth:
            prod = incidence(d, k + 1)
            hi = k + 1
            while not all(x for row in prod for x in row) and hi < d.depth:
                hi += 1
                prod = matmul(prod, incidence(d, hi))
            if not all(x for row in prod for x in row):
                raise NormalizationError(f"levels {k + 1}..{hi} never reach a positive product")
            cuts.append(hi)
            k = hi
        work = contract(d, cuts)

    # H3: each level's minimal edges must share one source, moved to label 0.
    top = len(work.levels) + (1 if work.stationary_period else 0)
    perms = [[0]] + [list(range(work.vertex_count(k))) for k in range(1, len(work.levels) + 1)]
    for k in range(2, top + 1):
        sources = {fam[0] for fam in work.level(k).into}
        if len(sources) != 1:
            raise NormalizationError(
                f"minimal edges at level {k} start at different vertices {sorted(s + 1 for s in sources)}; "
                "H3 needs microscoping")
        perms[k - 1] = _swap_perm(work.vertex_count(k - 1), sources.pop())
    out = relabel(work, perms)
    rep = validate(out, default_depth(out))
    if not rep.standing_assumptions:
        raise NormalizationError("; ".join(rep.diagnostics) or "normalization failed")
    return out, rep


# -- serialization ------------------------------------------------------------

def to_json_obj(d: OrderedBratteliDiagram) -> dict:
    obj = {
        "vertex_counts": list(d.vertex_counts),
        "levels": [
            {"into": {str(j + 1): [s + 1 for s in fam] for j, fam in enumerate(lv.into)}}
            for lv in d.levels
        ],
    }
    if d.stationary_period:
        obj["stationary_period"] = d.stationary_period
    return obj


def dumps(d: OrderedBratteliDiagram) -> str:
    return json.dumps(to_json_obj(d), indent=2) + "\n"


def from_json_obj(obj: dict) -> OrderedBratteliDiagram:
    if not isinstance(obj, dict) or "levels" not in obj:
        raise DiagramError("diagram object needs a 'levels' array")
    levels = []
    for k, lv in enumerate(obj["levels"], start=1):
        into = lv.get("into") if isinstance(lv, dict) else None
        if not isinstance(into, dict):
            raise DiagramError("level needs an 'into' object", level=k)
        try:
            keys = sorted(into, key=int)
        except ValueError as exc:
            raise DiagramError(f"non-integer vertex label: {exc}", level=k) from None
        if [int(x) for x in keys] != list(range(1, len(keys) + 1)):
            raise DiagramError("vertex labels must be 1..m", level=k)
        fams = []
        for key in keys:
            fam = into[key]
            if not isinstance(fam, list) or not all(isinstance(s, int) for s in fam):
                raise DiagramError("incoming list must be an array of integers", level=k, vertex=int(key))
            fams.append(tuple(s - 1 for s in fam))
        levels.append(LevelSpec(tuple(fams)))
    d = OrderedBratteliDiagram(tuple(levels), obj.get("stationary_period"))
    if "vertex_counts" in obj and list(obj["vertex_counts"]) != list(d.vertex_counts):
        raise DiagramError(f"vertex_counts {obj['vertex_counts']} disagree with levels {list(d.vertex_counts)}")
    return d


def loads(text: str) -> OrderedBratteliDiagram:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DiagramError(f"invalid JSON: {exc}") from None
    return from_json_obj(obj)


def load(path) -> OrderedBratteliDiagram:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def dump(d: OrderedBratteliDiagram, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(d))


def stationary(first: Iterable[Iterable[int]], repeating: Iterable[Iterable[int]]) -> OrderedBratteliDiagram:
    """Build a stationary diagram from a first level and a repeating level."""
    return OrderedBratteliDiagram((LevelSpec(tuple(map(tuple, first))),
                                   LevelSpec(tuple(map(tuple, repeating)))), 1)


def log_int(x: int) -> float:
    """Natural log of a possibly huge positive integer."""
    return math.log(x)
