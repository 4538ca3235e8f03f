"""Ising models, moment sets, and conversions between representations.

Spin tables use index 0 for x = +1 and index 1 for x = -1, so a flattened
pair table reads (++, +-, -+, --).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import BadValue, InfiniteDivergence, NotRealizable
from .graph import Graph, canonical_pair

SPINS = np.array([1.0, -1.0])
REALIZABILITY_TOL = 1e-12
DEFAULT_MOMENT_CLAMP = 1e-6


def _frozen_array(a, shape=None) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if shape is not None:
        arr = arr.reshape(shape)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class IsingModel:
    """Ising model with edge couplings (aligned with ``graph.edges``) and node fields."""

    graph: Graph
    theta_edges: np.ndarray = field(default=None, compare=False)
    theta_nodes: np.ndarray = field(default=None, compare=False)
    aux_vertex: Optional[int] = None

    def __post_init__(self):
        g = self.graph
        te = np.zeros(g.m) if self.theta_edges is None else self.theta_edges
        tn = np.zeros(g.n) if self.theta_nodes is None else self.theta_nodes
        te = _frozen_array(te)
        tn = _frozen_array(tn)
        if te.shape != (g.m,):
            raise ValueError(f"expected {g.m} edge parameters, got shape {te.shape}")
        if tn.shape != (g.n,):
            raise ValueError(f"expected {g.n} node parameters, got shape {tn.shape}")
        if not (np.all(np.isfinite(te)) and np.all(np.isfinite(tn))):
            raise ValueError("parameters must be finite")
        if self.aux_vertex is not None and not 0 <= self.aux_vertex < g.n:
            raise ValueError("aux_vertex out of range")
        object.__setattr__(self, "theta_edges", te)
        object.__setattr__(self, "theta_nodes", tn)

    @classmethod
    def from_edges(cls, n: int, edge_thetas: dict, fields=None, aux_vertex=None) -> "IsingModel":
        canon = {canonical_pair(*e): float(t) for e, t in edge_thetas.items()}
        g = Graph(n, tuple(canon))
        return cls(g, np.array([canon[e] for e in g.edges]), fields, aux_vertex)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def is_zero_field(self) -> bool:
        return not np.any(self.theta_nodes)

    def theta(self, u: int, v: int) -> float:
        return float(self.theta_edges[self.graph.index_of(u, v)])

    def edge_dict(self) -> dict:
        return {e: float(t) for e, t in zip(self.graph.edges, self.theta_edges)}

    def with_edge_params(self, theta_edges) -> "IsingModel":
        return IsingModel(self.graph, theta_edges, self.theta_nodes, self.aux_vertex)

    def energy(self, states: np.ndarray) -> np.ndarray:
        """Unnormalised log-probability of each row of ``states``."""
        x = np.asarray(states, dtype=float)
        out = x @ self.theta_nodes
        if self.graph.m:
            e = np.array(self.graph.edges)
            out = out + (x[:, e[:, 0]] * x[:, e[:, 1]]) @ self.theta_edges
        return out


@dataclass(frozen=True)
class MomentSet:
    """First moments and the full symmetric matrix of pairwise moments."""

    n: int
    first: np.ndarray = field(default=None, compare=False)
    second: np.ndarray = field(default=None, compare=False)
    sample_count: Optional[int] = None

    def __post_init__(self):
        first = np.zeros(self.n) if self.first is None else self.first
        second = np.eye(self.n) if self.second is None else self.second
        first = np.array(first, dtype=float).reshape(self.n)
        second = np.array(second, dtype=float).reshape(self.n, self.n)
        if not np.allclose(second, second.T, atol=1e-12):
            raise ValueError("pairwise moment matrix must be symmetric")
        np.fill_diagonal(second, 1.0)
        if np.any(np.abs(first) > 1 + 1e-12) or np.any(np.abs(second) > 1 + 1e-12):
            raise ValueError("moments must lie in [-1, 1]")
        object.__setattr__(self, "first", _frozen_array(first))
        object.__setattr__(self, "second", _frozen_array(second))

    def pair(self, i: int, j: int) -> float:
        return float(self.second[i, j])

    def triple(self, i: int, j: int) -> tuple[float, float, float]:
        return float(self.first[i]), float(self.first[j]), float(self.second[i, j])

    def on_edges(self, g: Graph) -> np.ndarray:
        if not g.m:
            return np.zeros(0)
        e = np.array(g.edges)
        return self.second[e[:, 0], e[:, 1]].copy()

    def clamped(self, eps: float = DEFAULT_MOMENT_CLAMP) -> "MomentSet":
        """Copy with off-diagonal |mu_ij| and |mu_i| pulled inside 1 - eps."""
        lim = 1.0 - eps
        return MomentSet(self.n, np.clip(self.first, -lim, lim), np.clip(self.second, -lim, lim), self.sample_count)

    def zero_mean(self) -> "MomentSet":
        return MomentSet(self.n, np.zeros(self.n), self.second, self.sample_count)


@dataclass(frozen=True)
class PairwiseModel:
    """Log-domain potentials: ``node_pot[i, a]`` and ``edge_pot[k, a, b]`` with spin index a, b."""

    graph: Graph
    node_pot: np.ndarray = field(default=None, compare=False)
    edge_pot: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        g = self.graph
        npot = np.zeros((g.n, 2)) if self.node_pot is None else self.node_pot
        epot = np.zeros((g.m, 2, 2)) if self.edge_pot is None else self.edge_pot
        object.__setattr__(self, "node_pot", _frozen_array(npot, (g.n, 2)))
        object.__setattr__(self, "edge_pot", _frozen_array(epot, (g.m, 2, 2)))

    def log_weight(self, states: np.ndarray) -> np.ndarray:
        x = np.asarray(states)
        idx = (x < 0).astype(int)
        out = self.node_pot[np.arange(self.graph.n), idx].sum(axis=1)
        for k, (u, v) in enumerate(self.graph.edges):
            out = out + self.edge_pot[k, idx[:, u], idx[:, v]]
        return out


def pairwise_to_ising(pm: PairwiseModel) -> IsingModel:
    g = pm.graph
    theta_nodes = 0.5 * pm.node_pot @ SPINS
    theta_edges = np.zeros(g.m)
    outer = np.outer(SPINS, SPINS)
    for k, (u, v) in enumerate(g.edges):
        f = pm.edge_pot[k]
        theta_edges[k] = 0.25 * np.sum(outer * f)
        # f[a, b] is indexed by (x_u, x_v)
        theta_nodes[u] += 0.25 * np.sum(SPINS[:, None] * f)
        theta_nodes[v] += 0.25 * np.sum(SPINS[None, :] * f)
    return IsingModel(g, theta_edges, theta_nodes)


def moments_to_marginals(mu_i: float, mu_j: float, mu_ij: float, tol: float = REALIZABILITY_TOL) -> np.ndarray:
    """2x2 table P(x_i, x_j) = (1 + mu_i x_i + mu_j x_j + mu_ij x_i x_j) / 4."""
    xi = SPINS[:, None]
    xj = SPINS[None, :]
    table = 0.25 * (1.0 + mu_i * xi + mu_j * xj + mu_ij * xi * xj)
    if np.any(table < -tol):
        raise NotRealizable(f"moments ({mu_i}, {mu_j}, {mu_ij}) give a negative probability")
    return np.maximum(table, 0.0)


def pair_divergence(target, model) -> float:
    """KL divergence (nats) between the pair tables of two moment triples."""
    p = moments_to_marginals(*target).ravel()
    q = moments_to_marginals(*model).ravel()
    mask = p > 0
    if np.any(q[mask] <= 0):
        raise InfiniteDivergence("target has mass where the model has none")
    return float(max(np.sum(p[mask] * np.log(p[mask] / q[mask])), 0.0))


def empirical_moments(samples) -> MomentSet:
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise BadValue("samples must be a non-empty 2-D array")
    if not np.all((x == 1.0) | (x == -1.0)):
        raise BadValue("samples must contain only -1 and +1")
    s = x.shape[0]
    second = (x.T @ x) / s
    return MomentSet(x.shape[1], x.mean(axis=0), second, sample_count=s)


def extend_zero_field(model: IsingModel) -> IsingModel:
    """Zero-field model on n+1 vertices whose extra vertex carries the node fields.

    The auxiliary vertex gets id ``n``; fields equal to zero produce no edge.
    """
    n = model.n
    thetas = model.edge_dict()
    for i, h in enumerate(model.theta_nodes):
        if h != 0.0:
            thetas[(i, n)] = float(h)
    return IsingModel.from_edges(n + 1, thetas, aux_vertex=n)


def extend_moments(ms: MomentSet) -> MomentSet:
    """Zero-mean moments on n+1 vertices with mu_{i,aux} = mu_i."""
    n = ms.n
    second = np.eye(n + 1)
    second[:n, :n] = ms.second
    second[:n, n] = ms.first
    second[n, :n] = ms.first
    return MomentSet(n + 1, np.zeros(n + 1), second, ms.sample_count)


def _drop_vertex(aux: int, n_ext: int) -> np.ndarray:
    """Map from extended vertex ids to original ids (-1 for the auxiliary vertex)."""
    mapping = np.arange(n_ext)
    mapping[aux] = -1
    mapping[aux + 1:] -= 1
    return mapping


def restrict_extended(ext: Union[IsingModel, MomentSet], aux_vertex: Optional[int] = None):
    """Inverse of the zero-field extension, for either parameters or moments."""
    if isinstance(ext, IsingModel):
        aux = ext.aux_vertex if aux_vertex is None else aux_vertex
        if aux is None:
            raise ValueError("model has no auxiliary vertex")
        mapping = _drop_vertex(aux, ext.n)
        fields = np.zeros(ext.n - 1)
        thetas = {}
        for (u, v), t in ext.edge_dict().items():
            if u == aux or v == aux:
                other = v if u == aux else u
                fields[mapping[other]] = t
            else:
                thetas[(int(mapping[u]), int(mapping[v]))] = t
        return IsingModel.from_edges(ext.n - 1, thetas, fields)
    if aux_vertex is None:
        raise ValueError("aux_vertex is required for moment sets")
    keep = np.array([v for v in range(ext.n) if v != aux_vertex], dtype=int)
    first = ext.second[keep, aux_vertex]
    second = ext.second[np.ix_(keep, keep)]
    return MomentSet(ext.n - 1, first, second, ext.sample_count)
