"""Exact inference for zero-field planar Ising models via the Kac-Ward determinant.

For a straight-line drawing of the graph, the transition matrix over directed
edges is ``W = A D`` where ``A[(i,j),(j,l)] = exp(i * phi_ijl / 2)`` for
``l != i`` and ``D = diag(tanh theta)``.  Then

    log Z = n log 2 + sum log cosh theta_ij + 1/2 log det(I - W)

and the moments and Hessian follow from ``S = (I - W)^{-1} A``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import EmbeddingMismatch, NonZeroField, NumericalFailure, TooLarge
from .graph import Graph, Pair, PlanarEmbedding, draw, is_planar, turning_angle
from .ising import IsingModel, MomentSet, extend_zero_field

IMAG_TOL = 1e-6
DET_TOL = 1e-10
THETA_CLAMP = 15.0
BRUTE_FORCE_MAX_N = 20


def log_cosh(theta) -> np.ndarray:
    a = np.abs(np.asarray(theta, dtype=float))
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


@dataclass(frozen=True)
class DirectedEdgeIndex:
    """Darts ``2k`` and ``2k+1`` are the two orientations of undirected edge ``k``."""

    darts: tuple[Pair, ...]
    lookup: dict = field(compare=False, repr=False)
    reverse: np.ndarray = field(compare=False, repr=False)

    @classmethod
    def for_graph(cls, g: Graph) -> "DirectedEdgeIndex":
        darts = []
        for u, v in g.edges:
            darts.append((u, v))
            darts.append((v, u))
        rev = np.arange(len(darts)) ^ 1
        rev.setflags(write=False)
        return cls(tuple(darts), {d: k for k, d in enumerate(darts)}, rev)

    def __len__(self) -> int:
        return len(self.darts)


@dataclass(frozen=True, eq=False)
class KacWardSystem:
    n: int
    index: DirectedEdgeIndex
    A: np.ndarray
    theta: np.ndarray
    w: np.ndarray  # tanh(theta) per undirected edge
    imag_tol: float = IMAG_TOL
    det_tol: float = DET_TOL

    def with_theta(self, theta) -> "KacWardSystem":
        """Same drawing, new couplings; the angle matrix is reused."""
        theta = np.array(theta, dtype=float)
        w = np.tanh(np.clip(theta, -THETA_CLAMP, THETA_CLAMP))
        return KacWardSystem(self.n, self.index, self.A, theta, w, self.imag_tol, self.det_tol)

    @property
    def dart_weights(self) -> np.ndarray:
        return np.repeat(self.w, 2)

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.dart_weights)

    @cached_property
    def W(self) -> np.ndarray:
        return self.A * self.dart_weights[None, :]

    @cached_property
    def I_minus_W(self) -> np.ndarray:
        return np.eye(len(self.index)) - self.W

    @cached_property
    def S(self) -> np.ndarray:
        if len(self.index) == 0:
            return np.zeros((0, 0), dtype=complex)
        try:
            return np.linalg.solve(self.I_minus_W, self.A)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("I - W is singular") from exc


def _angle_matrix(emb: PlanarEmbedding, index: DirectedEdgeIndex) -> np.ndarray:
    g = emb.graph
    A = np.zeros((len(index), len(index)), dtype=complex)
    for a, (i, j) in enumerate(index.darts):
        for l in g.adjacency[j]:
            if l == i:
                continue
            phi = turning_angle(emb, i, j, l)
            A[a, index.lookup[(j, l)]] = np.exp(0.5j * phi)
    return A


def build_kacward(model: IsingModel, emb: PlanarEmbedding, *, imag_tol: float = IMAG_TOL,
                  det_tol: float = DET_TOL) -> KacWardSystem:
    if not model.is_zero_field:
        raise NonZeroField("Kac-Ward inference needs a zero-field model; extend it first")
    if emb.graph.n != model.n or emb.graph.edges != model.graph.edges:
        raise EmbeddingMismatch("embedding and model have different graphs")
    if emb.coords is None:
        raise EmbeddingMismatch("embedding has no straight-line coordinates")
    index = DirectedEdgeIndex.for_graph(model.graph)
    A = _angle_matrix(emb, index)
    A.setflags(write=False)
    theta = np.array(model.theta_edges)
    w = np.tanh(np.clip(theta, -THETA_CLAMP, THETA_CLAMP))
    return KacWardSystem(model.n, index, A, theta, w, imag_tol, det_tol)


def log_det_I_minus_W(sys: KacWardSystem) -> float:
    if len(sys.index) == 0:
        return 0.0
    sign, logabs = np.linalg.slogdet(sys.I_minus_W)
    if not np.isfinite(logabs):
        raise NumericalFailure("det(I - W) vanished")
    if abs(sign.imag) > sys.imag_tol:
        raise NumericalFailure(f"det(I - W) has relative imaginary part {sign.imag:.3g}; bad embedding?")
    if sign.real < 0 and np.exp(logabs) > sys.det_tol:
        raise NumericalFailure("det(I - W) is negative")
    return float(logabs)


def log_partition(sys: KacWardSystem) -> float:
    """log Z in nats."""
    return float(sys.n * np.log(2.0) + np.sum(log_cosh(sys.theta)) + 0.5 * log_det_I_minus_W(sys))


def _real(x: np.ndarray, tol: float, what: str) -> np.ndarray:
    scale = max(1.0, float(np.max(np.abs(x.real), initial=0.0)))
    if np.max(np.abs(x.imag), initial=0.0) > tol * scale:
        raise NumericalFailure(f"{what} has a non-negligible imaginary part")
    return np.ascontiguousarray(x.real)


def edge_moments(sys: KacWardSystem) -> np.ndarray:
    """E[x_i x_j] for every edge, aligned with the graph's edge order."""
    if len(sys.index) == 0:
        return np.zeros(0)
    d = np.diagonal(sys.S)
    s = d[0::2] + d[1::2]
    mu = sys.w - 0.5 * (1.0 - sys.w ** 2) * s
    return _real(mu, sys.imag_tol, "edge moments")


def hessian(sys: KacWardSystem, mu: Optional[np.ndarray] = None) -> np.ndarray:
    """Covariance matrix of the edge statistics x_i x_j."""
    m = len(sys.w)
    if m == 0:
        return np.zeros((0, 0))
    if mu is None:
        mu = edge_moments(sys)
    S = sys.S
    SS = S * S.T
    rev = sys.index.reverse
    T = SS + SS[rev, :] + SS[:, rev] + SS[np.ix_(rev, rev)]
    Tk = _real(T[0::2, 0::2], sys.imag_tol, "Hessian")
    g = 1.0 - sys.w ** 2
    H = -0.5 * g[:, None] * Tk * g[None, :]
    np.fill_diagonal(H, 1.0 - mu ** 2)
    return 0.5 * (H + H.T)


@dataclass(frozen=True)
class InferenceResult:
    logZ: float
    edge_moments: np.ndarray
    hessian: Optional[np.ndarray] = None


def infer(model: IsingModel, emb: Optional[PlanarEmbedding] = None, *, with_hessian: bool = False) -> InferenceResult:
    """Kac-Ward inference, drawing the graph first if no embedding is given."""
    if emb is None:
        emb = draw(model.graph)
    sys = build_kacward(model, emb)
    mu = edge_moments(sys)
    H = hessian(sys, mu) if with_hessian else None
    return InferenceResult(log_partition(sys), mu, H)


def general_log_partition(model: IsingModel, emb: Optional[PlanarEmbedding] = None) -> tuple[float, str]:
    """log Z of any model, returning the method used.

    Zero-field models go through Kac-Ward directly; models with fields are
    extended with an auxiliary vertex when the result is planar, and fall back
    to enumeration for small non-planar cases.
    """
    if model.is_zero_field:
        if emb is not None or is_planar(model.graph):
            return infer(model, emb).logZ, "kac-ward"
    else:
        ext = extend_zero_field(model)
        if is_planar(ext.graph):
            return infer(ext).logZ - np.log(2.0), "kac-ward-extended"
    if model.n <= BRUTE_FORCE_MAX_N:
        return enumerate_distribution(model)[2], "brute-force"
    raise NumericalFailure("model is neither planar nor small enough to enumerate")


def general_moments(model: IsingModel) -> tuple[float, np.ndarray, np.ndarray, str]:
    """(log Z, first moments, edge moments, method) for any model."""
    if model.is_zero_field and is_planar(model.graph):
        r = infer(model)
        return r.logZ, np.zeros(model.n), r.edge_moments, "kac-ward"
    if not model.is_zero_field:
        ext = extend_zero_field(model)
        if is_planar(ext.graph):
            r = infer(ext)
            mu_ext = dict(zip(ext.graph.edges, r.edge_moments))
            first = np.array([mu_ext.get((i, model.n), 0.0) for i in range(model.n)])
            edge = np.array([mu_ext[e] for e in model.graph.edges])
            return r.logZ - np.log(2.0), first, edge, "kac-ward-extended"
    logZ, ms = brute_force_inference(model)
    return logZ, ms.first.copy(), ms.on_edges(model.graph), "brute-force"


def enumerate_distribution(model: IsingModel) -> tuple[np.ndarray, np.ndarray, float]:
    """All 2^n states, their probabilities and log Z (brute force)."""
    n = model.n
    if n > BRUTE_FORCE_MAX_N:
        raise TooLarge(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    codes = np.arange(2 ** n, dtype=np.int64)
    states = (1 - 2 * ((codes[:, None] >> np.arange(n)) & 1)).astype(np.int8)
    energy = model.energy(states)
    top = energy.max() if energy.size else 0.0
    weights = np.exp(energy - top)
    total = weights.sum()
    return states, weights / total, float(top + np.log(total))


def brute_force_inference(model: IsingModel) -> tuple[float, MomentSet]:
    states, p, logZ = enumerate_distribution(model)
    n = model.n
    x = states.astype(float)
    first = p @ x
    second = x.T @ (p[:, None] * x) if n else np.zeros((0, 0))
    second = 0.5 * (second + second.T)
    return logZ, MomentSet(n, np.clip(first, -1, 1), np.clip(second, -1, 1))
