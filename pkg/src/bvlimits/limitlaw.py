"""Finite-n entrance and return-time laws, their limits, and distances between them.

Scaled time throughout is ``mu(I) * N``.  Finite laws are exact enumerations
over suffix cylinders; limit laws come from the excursion vectors of a
stationary diagram contracted against the left Perron vector.
"""

from __future__ import annotations

import bisect
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .diagram import Edge, OrderedBratteliDiagram, PathPrefix, incidence, suffix_paths
from .dynamics import (brute_force_returns, excursion_walk, kth_return_state,
                       min_path, standing_assumptions_hold, state_key)
from .errors import PreconditionError
from .spectral import MeasureSource, PerronData, perron, subdominant_rate

GROUP_TOL = 1e-9


def lattice_floor(t: float, mu: float) -> int:
    """Largest j with j*mu <= t, robust to rounding in t/mu."""
    j = math.floor(t / mu)
    if (j + 1) * mu <= t:
        return j + 1
    if j * mu > t:
        return j - 1
    return j


def _cbar(c: Sequence[int], l: Sequence[float]) -> float:
    return math.fsum(ci * li for ci, li in zip(c, l))


# -- CDF types -------------------------------------------------------------------

class CDF:
    """Right-continuous distribution function on [0, inf)."""

    def __call__(self, t: float) -> float:
        raise NotImplementedError

    def left(self, t: float) -> float:
        """Left limit at t."""
        raise NotImplementedError

    def breaks(self) -> list[float]:
        """Points where the function is not affine."""
        raise NotImplementedError

    def sample(self, ts) -> list[float]:
        return [self(t) for t in ts]


@dataclass(frozen=True)
class PiecewiseLinearCDF(CDF):
    """Continuous, affine between knots, constant after the last one."""

    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __call__(self, t):
        if t <= self.xs[0]:
            return self.ys[0] if t == self.xs[0] else 0.0
        return float(np.interp(t, self.xs, self.ys))

    def left(self, t):
        return self(t)

    def breaks(self):
        return list(self.xs)

    @property
    def slopes(self) -> tuple[float, ...]:
        return tuple((y1 - y0) / (x1 - x0) for x0, x1, y0, y1
                     in zip(self.xs, self.xs[1:], self.ys, self.ys[1:]))

    @property
    def final(self) -> float:
        return self.ys[-1]


@dataclass(frozen=True)
class LimitEntranceCDF(PiecewiseLinearCDF):
    """sum_i min(t / r_istar, cap_i) * w_i, the shape of every entrance-time limit."""

    r_istar: float = 1.0
    items: tuple[tuple[float, float], ...] = ()

    def __call__(self, t):
        if t <= 0:
            return 0.0
        s = t / self.r_istar
        return math.fsum(min(s, cap) * w for cap, w in self.items)


@dataclass(frozen=True)
class DiscreteCDF(CDF):
    """Finitely many atoms."""

    points: tuple[float, ...]
    masses: tuple[float, ...]
    cumulative: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "cumulative", tuple(np.cumsum(self.masses).tolist()))

    @classmethod
    def from_atoms(cls, atoms: dict) -> "DiscreteCDF":
        pts = sorted(atoms)
        return cls(tuple(float(p) for p in pts), tuple(float(atoms[p]) for p in pts))

    def __call__(self, t):
        i = bisect.bisect_right(self.points, t)
        return self.cumulative[i - 1] if i else 0.0

    def left(self, t):
        i = bisect.bisect_left(self.points, t)
        return self.cumulative[i - 1] if i else 0.0

    def breaks(self):
        return list(self.points)

    @property
    def total(self) -> float:
        return self.cumulative[-1] if self.cumulative else 0.0


@dataclass(frozen=True)
class EntranceCDF(CDF):
    """Staircase sum_i min(floor(t / mu), N_i) * w_i with jumps on the lattice mu*Z."""

    mu: float
    items: tuple[tuple[int, float], ...]

    def at(self, j: int) -> float:
        """Value on [j*mu, (j+1)*mu)."""
        if j <= 0:
            return 0.0
        return math.fsum(min(j, N) * w for N, w in self.items)

    def __call__(self, t):
        return self.at(lattice_floor(t, self.mu)) if t > 0 else 0.0

    def left(self, t):
        if t <= 0:
            return 0.0
        j = lattice_floor(t, self.mu)
        return self.at(j - 1 if j * self.mu == t else j)

    def breaks(self):
        return [N * self.mu for N in sorted({N for N, _ in self.items})]

    @property
    def max_return(self) -> int:
        return max(N for N, _ in self.items)

    def returns(self) -> dict[int, float]:
        """Mass of I carried by each return value (mu(I and N = r))."""
        out = defaultdict(float)
        for N, w in self.items:
            out[N] += w
        return dict(sorted(out.items()))


def sup_distance(a: CDF, b: CDF) -> float:
    """Exact sup_t |a(t) - b(t)|.

    Between consecutive candidate points both functions are affine or
    constant, so the supremum is reached as a value or a left limit there.
    """
    if isinstance(a, EntranceCDF) and isinstance(b, EntranceCDF):
        return _sup_two_staircases(a, b)
    if isinstance(b, EntranceCDF):
        a, b = b, a
    if isinstance(a, EntranceCDF):
        return _sup_staircase(a, b)
    pts = sorted(set([0.0] + a.breaks() + b.breaks()))
    return max(max(abs(a(x) - b(x)), abs(a.left(x) - b.left(x))) for x in pts)


def _sup_staircase(s: EntranceCDF, g: CDF) -> float:
    mu = s.mu
    js = {0, 1}
    for N, _ in s.items:
        js.update((N - 1, N, N + 1))
    gb = g.breaks()
    for x in gb:
        f = lattice_floor(x, mu)
        js.update(range(f - 1, f + 3))
    best = 0.0
    for j in sorted(j for j in js if j >= 0):
        x = j * mu
        best = max(best, abs(s.at(j) - g(x)), abs(s.at(j - 1) - g.left(x)))
    for x in gb:
        f = lattice_floor(x, mu)
        best = max(best, abs(s.at(f) - g(x)), abs(s.left(x) - g.left(x)))
    return best


def _sup_two_staircases(a: EntranceCDF, b: EntranceCDF, limit: int = 5_000_000) -> float:
    xmax = max(a.max_return * a.mu, b.max_return * b.mu)
    if xmax / min(a.mu, b.mu) > limit:
        raise PreconditionError("staircases too fine to compare point by point")
    pts = sorted(set(np.arange(0, a.max_return + 2) * a.mu) | set(np.arange(0, b.max_return + 2) * b.mu))
    return max(max(abs(a(x) - b(x)), abs(a.left(x) - b.left(x))) for x in pts)


# -- breakpoint tables ------------------------------------------------------------------

@dataclass(frozen=True)
class SuffixEntry:
    key: tuple
    c: tuple[int, ...]
    cbar: float
    weight: float


@dataclass(frozen=True)
class BreakpointTable:
    """Suffix classes S(i) of equal contracted excursion value, and breakpoints d_j = c_j r(i*)."""

    i_star: int
    r_istar: float
    entries: tuple[SuffixEntry, ...]
    c_values: tuple[float, ...]
    groups: tuple[tuple[tuple, ...], ...]
    group_weights: tuple[float, ...]

    @property
    def d(self) -> tuple[float, ...]:
        return tuple(c * self.r_istar for c in self.c_values)

    def cbar(self, key) -> float:
        for e in self.entries:
            if e.key == key:
                return e.cbar
        raise KeyError(key)

    def group_value(self, cbar: float) -> float:
        """Representative c value of the group containing ``cbar``."""
        i = bisect.bisect_left(self.c_values, cbar - GROUP_TOL)
        if i < len(self.c_values) and abs(self.c_values[i] - cbar) <= GROUP_TOL:
            return self.c_values[i]
        raise KeyError(cbar)


def _group(i_star, r_istar, entries) -> BreakpointTable:
    entries = tuple(sorted(entries, key=lambda e: e.key))
    order = sorted(entries, key=lambda e: (e.cbar, e.key))
    c_values, groups, weights = [], [], []
    for e in order:
        if c_values and e.cbar - c_values[-1] <= GROUP_TOL:
            groups[-1].append(e.key)
            weights[-1] += e.weight
        else:
            c_values.append(e.cbar)
            groups.append([e.key])
            weights.append(e.weight)
    return BreakpointTable(i_star, r_istar, entries, tuple(c_values),
                           tuple(tuple(g) for g in groups), tuple(weights))


def _stationary_base(d: OrderedBratteliDiagram) -> int:
    if d.stationary_period != 1:
        raise PreconditionError("diagram must be stationary (contract it first)")
    n0 = max(d.periodic_start - 1, 1)
    if not standing_assumptions_hold(d, n0 + 1, n0 + 1):
        raise PreconditionError("repeating level violates H1 or H3")
    return n0


def _perron_of(d, pd):
    return pd or perron(incidence(d, _stationary_base(d) + 1))


def breakpoint_table(d: OrderedBratteliDiagram, i_star: int, pd: PerronData | None = None) -> BreakpointTable:
    n0 = _stationary_base(d)
    pd = _perron_of(d, pd)
    lam2 = pd.lam ** 2
    entries = []
    for e, f in suffix_paths(d, n0, i_star, 2):
        prof = excursion_walk(d, n0, i_star, e, (f,))
        entries.append(SuffixEntry(state_key((e, f)), prof.c, _cbar(prof.c, pd.l), pd.r[f.target] / lam2))
    return _group(i_star, pd.r[i_star], entries)


def table_from_cylinder(d: OrderedBratteliDiagram, I: PathPrefix, pd: PerronData | None = None) -> BreakpointTable:
    """Breakpoint table read off direct iteration from the cylinder ``I``.

    Every subcylinder of ``[I e f]`` must yield the same excursion counts.
    """
    n0 = _stationary_base(d)
    n = len(I)
    if n < n0:
        raise PreconditionError(f"cylinder must reach level {n0}")
    pd = _perron_of(d, pd)
    lam2 = pd.lam ** 2
    seen: dict[tuple, tuple[int, ...]] = {}
    for rec in brute_force_returns(d, I, n + 2, 1):
        key = state_key(rec.suffix[:2])
        c = rec.counts[0]
        if seen.setdefault(key, c) != c:
            raise PreconditionError(f"excursion counts not constant on suffix {key}")
    entries = [SuffixEntry(key, c, _cbar(c, pd.l), pd.r[key[1][0]] / lam2) for key, c in seen.items()]
    return _group(I.terminal, pd.r[I.terminal], entries)


def left_right_closed_form(M: Sequence[Sequence[int]], pd: PerronData | None = None) -> BreakpointTable:
    """Table for left-to-right ordered stationary diagrams at i* = first vertex, without any walk.

    Keys are single edges ((target, rank),): the value only depends on the
    first edge above the cylinder.
    """
    pd = pd or perron(M)
    m = len(M)
    lam, r, l = pd.lam, pd.r, pd.l
    entries = []
    for j in range(m):
        mult = M[0][j]
        for rank in range(mult):
            if rank < mult - 1:
                cb = l[0]
            else:
                cb = l[0] + lam * l[j] - mult * l[0]
            entries.append(SuffixEntry(((j, rank),), (), cb, r[j] / lam))
    return _group(0, r[0], entries)


def limit_F1(table: BreakpointTable) -> LimitEntranceCDF:
    xs = (0.0,) + table.d
    items = tuple(sorted((e.cbar, e.weight) for e in table.entries))
    r = table.r_istar
    ys = tuple(math.fsum(min(x / r, cap) * w for cap, w in items) for x in xs)
    return LimitEntranceCDF(xs, ys, r, items)


def _auto(d, n, k, method):
    if method == "auto":
        return "walk" if standing_assumptions_hold(d, n + 1, n + k + 1) else "oracle"
    if method not in ("walk", "oracle"):
        raise ValueError(f"unknown method {method!r}")
    return method


def _suffix_gaps(d, I, k, measures, method):
    """(gaps, mass) for every cylinder of I deep enough to fix the first k gaps."""
    n, i_star = len(I), I.terminal
    method = _auto(d, n, k, method)
    out = []
    if method == "walk":
        for suffix in suffix_paths(d, n, i_star, k + 1):
            gaps, _ = kth_return_state(d, n, i_star, suffix)
            out.append((tuple(gaps), measures.q(n + k + 1, suffix[-1].target)))
    else:
        for rec in brute_force_returns(d, I, n + k + 1, k, measures=measures):
            out.append((rec.gaps, rec.mass))
    return out


def finite_F1(d: OrderedBratteliDiagram, I: PathPrefix, measures: MeasureSource, method: str = "auto") -> EntranceCDF:
    I.check(d)
    mu = measures.q(len(I), I.terminal)
    items = tuple(sorted((g[0], w) for g, w in _suffix_gaps(d, I, 1, measures, method)))
    return EntranceCDF(mu, items)


def finite_Fk(d: OrderedBratteliDiagram, I: PathPrefix, k: int, measures: MeasureSource,
              method: str = "auto") -> CDF:
    """Law of mu(I) times the k-th inter-entrance time; k = 1 gives the entrance law."""
    if k < 1:
        raise PreconditionError("k must be positive")
    if k == 1:
        return finite_F1(d, I, measures, method)
    I.check(d)
    mu = measures.q(len(I), I.terminal)
    atoms = defaultdict(float)
    for gaps, w in _suffix_gaps(d, I, k, measures, method):
        atoms[gaps[-1]] += gaps[0] * w
    return DiscreteCDF.from_atoms({g * mu: m for g, m in sorted(atoms.items())})


def _limit_paths(d, i_star, k, pd):
    """(cbar of each of the k excursions, terminal weight) for every suffix of length k+1."""
    n0 = _stationary_base(d)
    out = []
    for suffix in suffix_paths(d, n0, i_star, k + 1):
        _, profs = kth_return_state(d, n0, i_star, suffix)
        out.append((tuple(_cbar(p.c, pd.l) for p in profs),
                    pd.r[suffix[-1].target] / pd.lam ** (k + 1)))
    return out


def limit_Fk(d: OrderedBratteliDiagram, i_star: int, k: int, table: BreakpointTable | None = None,
             pd: PerronData | None = None) -> CDF:
    pd = _perron_of(d, pd)
    table = table or breakpoint_table(d, i_star, pd)
    if k == 1:
        return limit_F1(table)
    atoms = defaultdict(float)
    for cbars, w in _limit_paths(d, i_star, k, pd):
        atoms[table.group_value(cbars[-1]) * table.r_istar] += cbars[0] * w
    return DiscreteCDF.from_atoms(atoms)


# -- finite-dimensional distributions -----------------------------------------------------

@dataclass(frozen=True)
class FddSpec:
    p: int
    thresholds: tuple[float, ...]

    def __post_init__(self):
        if self.p < 1:
            raise PreconditionError("p must be at least 1")
        if len(self.thresholds) != self.p:
            raise PreconditionError(f"need {self.p} thresholds, got {len(self.thresholds)}")
        if any(t < 0 for t in self.thresholds):
            raise PreconditionError("thresholds must be nonnegative")
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))


def _floor_ratio(t, mu):
    return lattice_floor(t, mu) if math.isfinite(t) else math.inf


def finite_fdd(d: OrderedBratteliDiagram, I: PathPrefix, spec: FddSpec, measures: MeasureSource,
               method: str = "auto") -> float:
    """Measure of points whose first p scaled inter-entrance times are below the thresholds."""
    I.check(d)
    mu = measures.q(len(I), I.terminal)
    T = [_floor_ratio(t, mu) for t in spec.thresholds]
    items = []
    for gaps, w in _suffix_gaps(d, I, spec.p, measures, method):
        if all(g <= Tk for g, Tk in zip(gaps[1:], T[1:])):
            items.append((gaps[0], w))
    if T[0] <= 0:
        return 0.0
    return math.fsum(min(T[0], N) * w for N, w in sorted(items))


def limit_fdd(d: OrderedBratteliDiagram, i_star: int, spec: FddSpec, table: BreakpointTable | None = None,
              pd: PerronData | None = None) -> float:
    pd = _perron_of(d, pd)
    table = table or breakpoint_table(d, i_star, pd)
    r = table.r_istar
    t1 = spec.thresholds[0]
    if spec.p == 1:
        return limit_F1(table)(t1)
    if t1 <= 0:
        return 0.0
    items = []
    for cbars, w in _limit_paths(d, i_star, spec.p, pd):
        if all(table.group_value(c) * r <= t for c, t in zip(cbars[1:], spec.thresholds[1:])):
            items.append((cbars[0], w))
    return math.fsum(min(t1 / r, cap) * w for cap, w in sorted(items))


# -- convergence ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceReport:
    ns: tuple[int, ...]
    distances: tuple[float, ...]
    slope: float
    expected_slope: float | None

    @property
    def decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.distances, self.distances[1:]))

    def rows(self):
        return list(zip(self.ns, self.distances))


def fitted_slope(ns: Sequence[int], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against n."""
    ys = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(np.asarray(ns, dtype=float), ys, 1)[0])


def cylinder_sequence(d: OrderedBratteliDiagram, i_star: int, ns: Sequence[int], kind: str = "min") -> list[PathPrefix]:
    """Cylinders ending at i_star for each n: the base path, or the path ranked
    just above it when ``kind`` is "second" (falls back to the base if unique)."""
    out = []
    for n in ns:
        p = min_path(d, n, i_star)
        if kind == "second":
            e = list(p.edges)
            fam = d.level(n).into[i_star]
            if len(fam) > 1:
                src = fam[1]
                e[-1] = Edge(n, i_star, 1)
                e[:-1] = min_path(d, n - 1, src).edges if n > 1 else ()
                p = PathPrefix(tuple(e))
        elif kind != "min":
            raise ValueError(f"unknown cylinder kind {kind!r}")
        out.append(p)
    return out


def convergence_report(d: OrderedBratteliDiagram, cylinders: Sequence[PathPrefix], k: int,
                       measures: MeasureSource, pd: PerronData | None = None) -> ConvergenceReport:
    """sup distance between finite and limit laws along a cylinder sequence with a common end vertex."""
    if not cylinders:
        raise PreconditionError("empty cylinder sequence")
    i_star = cylinders[0].terminal
    if any(c.terminal != i_star for c in cylinders):
        raise PreconditionError("all cylinders must end at the same vertex")
    pd = _perron_of(d, pd)
    table = breakpoint_table(d, i_star, pd)
    lim = limit_Fk(d, i_star, k, table, pd)
    ns, dist = [], []
    for I in cylinders:
        ns.append(len(I))
        dist.append(sup_distance(finite_Fk(d, I, k, measures), lim))
    slope = fitted_slope(ns, dist) if len(ns) > 1 and min(dist) > 0 else float("nan")
    M = incidence(d, _stationary_base(d) + 1)
    gamma = subdominant_rate(M, pd)
    expected = math.log(gamma / pd.lam) if gamma > 0 else None
    return ConvergenceReport(tuple(ns), tuple(dist), slope, expected)


@dataclass(frozen=True)
class RecurrenceBound:
    """Largest scaled return mu(I_n) * N over each level, and their max K."""

    ns: tuple[int, ...]
    scaled_max: tuple[float, ...]
    scaled_min: tuple[float, ...]

    @property
    def K(self) -> float:
        return max(self.scaled_max)

    @property
    def bounded(self) -> bool:
        """Heuristic: the latest maximum stays within 5% of those in the first half."""
        m = self.scaled_max
        if len(m) < 4:
            return True
        return m[-1] <= 1.05 * max(m[:len(m) // 2])


def recurrence_bound(d: OrderedBratteliDiagram, cylinders: Sequence[PathPrefix], measures: MeasureSource,
                     method: str = "auto") -> RecurrenceBound:
    ns, hi, lo = [], [], []
    for I in cylinders:
        F = finite_F1(d, I, measures, method)
        Ns = [N for N, _ in F.items]
        ns.append(len(I))
        hi.append(max(Ns) * F.mu)
        lo.append(min(Ns) * F.mu)
    return RecurrenceBound(tuple(ns), tuple(hi), tuple(lo))
