"""Factories for the standard example diagrams and their invariant measures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import mpmath

from .diagram import LevelSpec, OrderedBratteliDiagram, stationary
from .errors import PreconditionError
from .spectral import ExactMeasure, MeasureSource


def example1() -> OrderedBratteliDiagram:
    """Stationary diagram with incidence [[1,1],[2,3]]."""
    return stationary([[0], [0]], [[0, 1, 1], [0, 1, 1, 1]])


def left_to_right(M: Sequence[Sequence[int]]) -> OrderedBratteliDiagram:
    """Stationary diagram of M with every incoming list sorted by source."""
    m = len(M)
    if any(len(row) != m for row in M) or any(x < 1 for row in M for x in row):
        raise PreconditionError("matrix must be square and strictly positive")
    into = [[i for i in range(m) for _ in range(M[i][j])] for j in range(m)]
    return stationary([[0]] * m, into)


# -- odometers ---------------------------------------------------------------------

def _cycle(seq, periodic):
    seq = tuple(int(x) for x in seq)
    if not seq:
        raise PreconditionError("need at least one base")
    if periodic:
        return lambda n: seq[(n - 1) % len(seq)]
    return lambda n: seq[n - 1]


def odometer_classic(bases: Sequence[int], periodic: bool = True) -> OrderedBratteliDiagram:
    """One vertex per level; level k+1 carries p_k parallel edges."""
    if any(p < 2 for p in bases):
        raise PreconditionError("odometer bases must be at least 2")
    levels = [LevelSpec(((0,),))] + [LevelSpec(((0,) * p,)) for p in bases]
    return OrderedBratteliDiagram(tuple(levels), len(bases) if periodic else None)


def odometer_measure(bases: Sequence[int], periodic: bool = True) -> MeasureSource:
    """Cylinders of length n have mass 1/(p_1...p_{n-1})."""
    p = _cycle(bases, periodic)

    def log_q(n, v):
        return -math.fsum(math.log(p(k)) for k in range(1, n))
    return ExactMeasure(log_q, "odometer")


def beta_digits(bases: Sequence[int], beta: float) -> tuple[int, ...]:
    out = tuple(math.floor(beta * p) for p in bases)
    for k, (b, p) in enumerate(zip(out, bases), start=1):
        if b < 1:
            raise PreconditionError(f"beta_{k} = floor(beta * {p}) is zero")
        if b >= p:
            raise PreconditionError(f"beta_{k} must be below p_{k}")
    return out


def _beta_level(prev_beta: int, p: int, b: int) -> LevelSpec:
    fam = (0,) * prev_beta + (1,)
    return LevelSpec((fam, fam * (p - b)))


def odometer_beta(bases: Sequence[int], beta: float, periodic: bool = True) -> tuple[OrderedBratteliDiagram, MeasureSource]:
    """Two-vertex odometer representation with beta_n = floor(beta * p_n).

    The tower over the first vertex has height p_1...p_{n-1}, the other one
    p_1...p_{n-1} (p_n - beta_n).  The exact measure gives a vertex-1
    cylinder mass beta_n / q_n and a vertex-2 cylinder mass 1 / q_n.
    """
    if not 0 < beta < 1:
        raise PreconditionError("beta must lie in (0, 1)")
    if any(p < 2 for p in bases):
        raise PreconditionError("bases must be at least 2")
    bs = beta_digits(bases, beta)
    P = len(bases)
    levels = [LevelSpec(((0,), (0,) * (bases[0] - bs[0])))]
    count = P + 1 if periodic else P
    for k in range(2, count + 1):
        i, j = (k - 2) % P, (k - 1) % P
        levels.append(_beta_level(bs[i], bases[j], bs[j]))
    d = OrderedBratteliDiagram(tuple(levels), P if periodic else None)
    p = _cycle(bases, periodic)
    b = _cycle(bs, periodic)

    def log_q(n, v):
        lq = math.fsum(math.log(p(k)) for k in range(1, n + 1))
        return (math.log(b(n)) if v == 0 else 0.0) - lq
    return d, ExactMeasure(log_q, "odometer-beta")


# -- continued fractions and Sturmian diagrams --------------------------------------

@dataclass(frozen=True)
class ConvergentTable:
    """p_k/q_k = [0; d_1..d_k] for k = -1..K (p_{-1}=1, q_{-1}=0, p_0=0, q_0=1)."""

    digits: tuple[int, ...]
    ps: tuple[int, ...]
    qs: tuple[int, ...]

    def p(self, k: int) -> int:
        return self.ps[k + 1]

    def q(self, k: int) -> int:
        return self.qs[k + 1]

    def matrix_identity(self, k: int) -> list[list[int]]:
        """Closed form of N_{d_1} ... N_{d_{k-1}}."""
        return [[self.q(k - 1), self.q(k - 2)], [self.p(k - 1), self.p(k - 2)]]


def convergents(digits: Sequence[int], k: int) -> ConvergentTable:
    """Convergents up to index k; digits are cycled if fewer than k are given."""
    if k < 1:
        raise PreconditionError("k must be at least 1")
    ds = tuple(int(x) for x in digits)
    if not ds or any(x < 1 for x in ds):
        raise PreconditionError("digits must be positive")
    ps, qs = [1, 0], [0, 1]
    for i in range(k):
        a = ds[i % len(ds)]
        ps.append(a * ps[-1] + ps[-2])
        qs.append(a * qs[-1] + qs[-2])
    return ConvergentTable(ds, tuple(ps), tuple(qs))


def N_matrix(d: int) -> list[list[int]]:
    return [[d, 1], [1, 0]]


def gauss_map(x):
    """Fractional part of 1/x."""
    if x == 0:
        raise ZeroDivisionError("Gauss map undefined at 0")
    y = 1 / x
    return y - math.floor(y)


def sturmian_limits(theta: float, w: float) -> tuple[float, float]:
    if not 0 < theta < 1:
        raise PreconditionError("theta must lie in (0, 1)")
    if not 0 <= w <= 1:
        raise PreconditionError("w must lie in [0, 1]")
    a = math.floor(1 / theta)
    den = 1 + theta * w
    return a * theta / den, (1 + a) * theta / den


@dataclass(frozen=True)
class SturmianSpec:
    """Digits d_1, d_2, ... and level blocks 'a'/'b'; both sequences repeat."""

    digits: tuple[int, ...]
    blocks: tuple[str, ...] = ("a", "b")

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(x) for x in self.digits))
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.digits or any(x < 1 for x in self.digits):
            raise PreconditionError("digits must be positive")
        if not self.blocks or any(b not in ("a", "b") for b in self.blocks):
            raise PreconditionError("blocks must be 'a' or 'b'")
        P = self.period
        seq = [self.block(k) for k in range(1, P + 1)]
        if any(x == y == "a" for x, y in zip(seq, seq[1:] + seq[:1])):
            raise PreconditionError("two consecutive levels use block 'a'")

    @property
    def period(self) -> int:
        return math.lcm(len(self.digits), len(self.blocks))

    def digit(self, k: int) -> int:
        return self.digits[(k - 1) % len(self.digits)]

    def block(self, k: int) -> str:
        return self.blocks[(k - 1) % len(self.blocks)]


def _sturmian_level(d: int, block: str) -> LevelSpec:
    # both blocks have incidence [[d, 1], [1, 0]]; they differ in where the
    # edge from the second vertex sits
    if block == "a":
        into1 = (1,) + (0,) * d
    else:
        into1 = (0,) * d + (1,)
    return LevelSpec((into1, (0,)))


def sturmian(spec: SturmianSpec) -> tuple[OrderedBratteliDiagram, MeasureSource]:
    """Diagram whose level k+1 has incidence N_{d_k}, with its unique invariant measure."""
    levels = [LevelSpec(((0,), (0,)))]
    levels += [_sturmian_level(spec.digit(k), spec.block(k)) for k in range(1, spec.period + 1)]
    d = OrderedBratteliDiagram(tuple(levels), spec.period)
    return d, SturmianMeasure(spec.digits)


class SturmianMeasure(MeasureSource):
    """mu of a level-n cylinder: |beta q_j - p_j| / (1 + beta), j = n-2 at vertex 1, n-1 at vertex 2."""

    def __init__(self, digits: Sequence[int]):
        self.digits = tuple(digits)

    @lru_cache(maxsize=None)
    def _log_delta(self, j: int) -> float:
        # enough digits to resolve beta*q_j - p_j, which is about 1/q_{j+1}
        table = convergents(self.digits, max(j + 2, 1))
        need = 30 + 2 * len(str(table.q(j + 1)))
        with mpmath.workdps(need):
            beta = self._beta(need)
            delta = abs(beta * table.q(j) - table.p(j))
            return float(mpmath.log(delta) - mpmath.log(1 + beta))

    def _beta(self, dps: int):
        k = 8
        while True:
            t = convergents(self.digits, k)
            if len(str(t.q(k))) * 2 > dps + 10:
                return mpmath.mpf(t.p(k)) / t.q(k)
            k *= 2

    def log_q(self, n: int, v: int) -> float:
        if n < 1:
            raise PreconditionError("level must be at least 1")
        return self._log_delta(n - 2 if v == 0 else n - 1)

    def beta(self) -> float:
        with mpmath.workdps(40):
            return float(self._beta(40))


# -- registry used by the command line ----------------------------------------------------

def _ints(s) -> tuple[int, ...]:
    if isinstance(s, (list, tuple)):
        return tuple(int(x) for x in s)
    return tuple(int(x) for x in str(s).replace(";", ",").split(",") if x.strip())


def _matrix(s) -> list[list[int]]:
    if isinstance(s, (list, tuple)):
        return [list(map(int, r)) for r in s]
    return [list(_ints(row)) for row in str(s).split("/")]


def _bool(s) -> bool:
    return str(s).lower() in ("1", "true", "yes", "on")


def _gen_example1(params):
    return example1(), None


def _gen_left_to_right(params):
    return left_to_right(_matrix(params["M"])), None


def _gen_odometer(params):
    bases = _ints(params.get("bases", "2"))
    periodic = _bool(params.get("periodic", "true"))
    return odometer_classic(bases, periodic), odometer_measure(bases, periodic)


def _gen_odometer_beta(params):
    bases = _ints(params.get("bases", "10"))
    return odometer_beta(bases, float(params.get("beta", "0.25")), _bool(params.get("periodic", "true")))


def _gen_sturmian(params):
    digits = _ints(params.get("digits", "1"))
    blocks = tuple(str(params.get("blocks", "a,b")).replace(";", ",").split(","))
    return sturmian(SturmianSpec(digits, tuple(b.strip() for b in blocks)))


GENERATORS: dict[str, Callable[[dict], tuple]] = {
    "example1": _gen_example1,
    "left-to-right": _gen_left_to_right,
    "odometer": _gen_odometer,
    "odometer-beta": _gen_odometer_beta,
    "sturmian": _gen_sturmian,
}


def generate(name: str, params: dict | None = None) -> tuple[OrderedBratteliDiagram, MeasureSource | None]:
    """Build a named example; the measure is None when the stationary formula applies."""
    if name not in GENERATORS:
        raise KeyError(f"unknown generator {name!r}; choose from {', '.join(sorted(GENERATORS))}")
    return GENERATORS[name](dict(params or {}))
