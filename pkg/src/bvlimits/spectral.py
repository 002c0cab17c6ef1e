"""Perron-Frobenius data and invariant cylinder measures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .diagram import OrderedBratteliDiagram, heights, incidence
from .errors import MeasureUnavailable, NumericError, PreconditionError

DEFAULT_TOL = 1e-14
MAX_ITER = 10**6


@dataclass(frozen=True)
class PerronData:
    """Dominant eigenvalue with right eigenvector r (sum 1) and left eigenvector l (l.r = 1)."""

    lam: float
    r: tuple[float, ...]
    l: tuple[float, ...]
    residual: float

    @property
    def size(self) -> int:
        return len(self.r)


def _as_positive(M) -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.size == 0:
        raise PreconditionError("matrix must be square and non-empty")
    if (A <= 0).any():
        raise PreconditionError("matrix must be strictly positive")
    return A


def _power(A: np.ndarray, tol: float) -> np.ndarray:
    x = np.ones(A.shape[0]) / A.shape[0]
    floor = max(tol, 8 * np.finfo(float).eps)
    for _ in range(MAX_ITER):
        y = A @ x
        y /= y.sum()
        if np.max(np.abs(y - x)) <= floor:
            return y
        x = y
    raise NumericError(f"power iteration did not converge in {MAX_ITER} steps")


def perron(M: Sequence[Sequence[int]], tol: float = DEFAULT_TOL) -> PerronData:
    A = _as_positive(M)
    r = _power(A, tol)
    lam = float((A @ r).sum())
    l = _power(A.T, tol)
    l = l / float(l @ r)
    residual = max(np.max(np.abs(A @ r - lam * r)), np.max(np.abs(l @ A - lam * l)))
    return PerronData(lam, tuple(map(float, r)), tuple(map(float, l)), float(residual))


@dataclass(frozen=True)
class SubdominantEstimate:
    gamma: float
    converged: bool


def subdominant_estimate(M, pd: PerronData | None = None, iters: int = 4000) -> SubdominantEstimate:
    """Second-largest eigenvalue modulus of M.

    Orthogonal (block power) iteration on the deflated matrix M - lam r l;
    the Ritz values of the iterated subspace catch complex pairs as well.
    """
    A = _as_positive(M)
    m = A.shape[0]
    if m == 1:
        return SubdominantEstimate(0.0, True)
    pd = pd or perron(M)
    B = A - pd.lam * np.outer(np.array(pd.r), np.array(pd.l))
    Q, _ = np.linalg.qr(np.cos(np.outer(np.arange(1, m + 1), np.arange(1, m)) * 1.3) + np.eye(m)[:, :m - 1])
    prev = None
    for _ in range(iters):
        Q, _ = np.linalg.qr(B @ Q)
        ritz = float(np.max(np.abs(np.linalg.eigvals(Q.T @ B @ Q))))
        if prev is not None and abs(ritz - prev) <= 1e-13 * pd.lam:
            gamma = 0.0 if ritz < 1e-12 * pd.lam else ritz
            if gamma >= pd.lam:
                break
            return SubdominantEstimate(gamma, True)
        prev = ritz
    return SubdominantEstimate(pd.lam * (1 - 1e-6), False)


def subdominant_rate(M, pd: PerronData | None = None) -> float:
    return subdominant_estimate(M, pd).gamma


# -- measures -------------------------------------------------------------------

@dataclass(frozen=True)
class MeasureVector:
    """q_n(i): measure of one path cylinder ending at i in V_n."""

    level: int
    q: tuple[float, ...]
    error_bound: float = 0.0

    def total(self, d: OrderedBratteliDiagram) -> float:
        return float(sum(h * x for h, x in zip(heights(d, self.level), self.q)))


class MeasureSource:
    """Anything that can report cylinder masses level by level."""

    error_bound = 0.0

    def log_q(self, n: int, v: int) -> float:
        raise NotImplementedError

    def q(self, n: int, v: int) -> float:
        return math.exp(self.log_q(n, v))

    def vector(self, n: int, width: int) -> MeasureVector:
        return MeasureVector(n, tuple(self.q(n, v) for v in range(width)), self.error_bound)


class StationaryMeasure(MeasureSource):
    """Unique invariant measure of a diagram that is stationary from some level on.

    Above the stationary start s the masses are kappa * r(v) / lam^(n-s+1);
    kappa normalizes the total mass, which also covers a first level with
    several edges into one vertex.  Levels below s follow by pulling back.
    """

    def __init__(self, d: OrderedBratteliDiagram, pd: PerronData | None = None):
        if d.stationary_period != 1:
            raise MeasureUnavailable("diagram is not stationary with period 1; contract it first")
        self.d = d
        self.start = max(d.periodic_start, 2)
        M = incidence(d, self.start)
        self.pd = pd or perron(M)
        base = self.start - 1
        h = heights(d, base)
        self.kappa = 1.0 / sum(hv * rv for hv, rv in zip(h, self.pd.r))
        self._low = {base: [self.kappa * rv for rv in self.pd.r]}
        for k in range(base, 0, -1):
            Mk = incidence(d, k)
            qk = self._low[k]
            self._low[k - 1] = [sum(Mk[u][j] * qk[j] for j in range(len(qk))) for u in range(len(Mk))]

    def log_q(self, n: int, v: int) -> float:
        base = self.start - 1
        if n <= base:
            return math.log(self._low[n][v])
        return math.log(self.kappa * self.pd.r[v]) - (n - base) * math.log(self.pd.lam)


class ExactMeasure(MeasureSource):
    """Measure given in closed form by ``log_q(n, v)``."""

    def __init__(self, log_q: Callable[[int, int], float], label: str = "exact"):
        self._f = log_q
        self.label = label

    def log_q(self, n: int, v: int) -> float:
        return self._f(n, v)


class VectorMeasure(MeasureSource):
    """Measure known on one level, pulled back exactly to lower levels."""

    def __init__(self, d: OrderedBratteliDiagram, mv: MeasureVector):
        self.d = d
        self.top = mv.level
        self.error_bound = mv.error_bound
        self._q = {mv.level: list(mv.q)}
        for k in range(mv.level, 0, -1):
            Mk = incidence(d, k)
            qk = self._q[k]
            self._q[k - 1] = [sum(Mk[u][j] * qk[j] for j in range(len(qk))) for u in range(len(Mk))]

    def log_q(self, n: int, v: int) -> float:
        if n not in self._q:
            raise MeasureUnavailable(f"measure estimated only up to level {self.top}")
        return math.log(self._q[n][v])


def stationary_cylinder_measure(pd: PerronData, n: int, terminal: int) -> float:
    """r(terminal) / lam^(n-1); zero only if the value underflows."""
    if n < 1:
        raise PreconditionError("n must be at least 1")
    return math.exp(math.log(pd.r[terminal]) - (n - 1) * math.log(pd.lam))


def _hilbert_diameter(P: np.ndarray) -> float:
    """Projective diameter of the image cone of a positive matrix."""
    logs = np.log(P)
    m = P.shape[1]
    diam = 0.0
    for a in range(m):
        for b in range(a + 1, m):
            diff = logs[:, a] - logs[:, b]
            diam = max(diam, float(diff.max() - diff.min()))
    return diam


def nonstationary_measure_estimate(d: OrderedBratteliDiagram, n: int, seed_depth: int,
                                   tol: float = 1e-12) -> MeasureVector:
    """q_n by pulling a uniform seed back from level n+D.

    The error bound is the projective (Hilbert metric) diameter of the image
    of the positive cone under M^(n+1)...M^(n+D); every invariant measure lies
    in that image, so the true q_n is within this relative distance.
    """
    if seed_depth < 1:
        raise PreconditionError("seed depth must be positive")
    P = np.eye(d.vertex_count(n))
    for k in range(n + 1, n + seed_depth + 1):
        Mk = np.asarray(incidence(d, k), dtype=float)
        if (Mk <= 0).any():
            raise PreconditionError(f"H1 fails at level {k}; supply an exact measure")
        P = P @ Mk
        P /= P.max()
    top = d.vertex_count(n + seed_depth)
    q = P @ (np.ones(top) / top)
    h = np.array([float(x) for x in heights(d, n)])
    q = q / float(h @ q)
    diam = _hilbert_diameter(P)
    bound = math.expm1(diam) if diam < 700 else math.inf
    return MeasureVector(n, tuple(map(float, q)), max(bound, 0.0))
