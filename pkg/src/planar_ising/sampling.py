"""Gibbs sampling and synthetic model generators.

Random numbers come from numpy's PCG64 bit generator seeded with the config
seed, so output is bit-reproducible for a given numpy PCG64 implementation.
Independent chains are advanced together, one vectorised site update at a time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import Delaunay

from .errors import BadDims
from .graph import Graph, PlanarEmbedding, embedding_from_coords
from .ising import IsingModel


@dataclass(frozen=True)
class SampleConfig:
    num_samples: int
    burn_in: int = 1000
    thin: int = 10
    seed: int = 0
    chains: Optional[int] = None  # default: min(num_samples, 100)

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.burn_in < 0 or self.thin < 0:
            raise ValueError("burn_in and thin must be >= 0")
        if self.chains is not None and self.chains < 1:
            raise ValueError("chains must be >= 1")

    @property
    def num_chains(self) -> int:
        return min(self.num_samples, self.chains or 100)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def gibbs_sample(model: IsingModel, cfg: SampleConfig) -> np.ndarray:
    """``num_samples x n`` matrix of +-1 spins (int8).

    Each sweep updates vertices 0..n-1 in order with
    P(x_i = +1 | rest) = sigmoid(2 (theta_i + sum_j theta_ij x_j)).
    Between kept samples every chain runs ``max(thin, 1)`` sweeps.
    """
    n = model.n
    rng = _rng(cfg.seed)
    C = cfg.num_chains
    per_chain = -(-cfg.num_samples // C)
    nbrs = [np.array(a, dtype=int) for a in model.graph.adjacency]
    couplings = [np.array([model.theta(i, j) for j in nbrs[i]]) for i in range(n)]
    fields = model.theta_nodes

    x = np.where(rng.random((C, n)) < 0.5, 1.0, -1.0)

    def sweep():
        for i in range(n):
            h = fields[i] + (x[:, nbrs[i]] @ couplings[i] if len(nbrs[i]) else 0.0)
            p_up = 1.0 / (1.0 + np.exp(-2.0 * h))
            x[:, i] = np.where(rng.random(C) < p_up, 1.0, -1.0)

    for _ in range(cfg.burn_in):
        sweep()
    out = np.empty((per_chain, C, n), dtype=np.int8)
    for k in range(per_chain):
        for _ in range(max(cfg.thin, 1)):
            sweep()
        out[k] = x
    return out.reshape(per_chain * C, n)[: cfg.num_samples]


def _draw_params(rng: np.random.Generator, size: int, lo: float, hi: float, min_abs: float) -> np.ndarray:
    if hi < lo:
        raise BadDims("parameter range is empty")
    if max(abs(lo), abs(hi)) < min_abs:
        raise BadDims(f"no value in [{lo}, {hi}] has magnitude >= {min_abs}")
    out = np.empty(size)
    for k in range(size):
        while True:
            t = rng.uniform(lo, hi)
            if abs(t) >= min_abs:
                out[k] = t
                break
    return out


def grid_graph(rows: int, cols: int) -> tuple[Graph, np.ndarray]:
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    coords = np.array([(c, -r) for r in range(rows) for c in range(cols)], dtype=float)
    return Graph(rows * cols, tuple(edges)), coords


def _polygon_triangulation(rng: np.random.Generator, n: int) -> list[tuple[int, int]]:
    """Chords of a uniformly-split random triangulation of the convex n-gon."""
    chords = []
    stack = [(0, n - 1)]
    while stack:
        a, b = stack.pop()
        if b - a < 2:
            continue
        k = int(rng.integers(a + 1, b))
        for u, v in ((a, k), (k, b)):
            if v - u > 1 and not (u == 0 and v == n - 1):
                chords.append((u, v))
        stack.append((a, k))
        stack.append((k, b))
    return chords


def outerplanar_graph(rng: np.random.Generator, n: int, chord_prob: float = 0.5) -> tuple[Graph, np.ndarray]:
    """n-cycle plus a random subset of non-crossing chords, vertices on a circle."""
    edges = [(i, i + 1) for i in range(n - 1)]
    if n >= 3:
        edges.append((0, n - 1))
        edges += [c for c in _polygon_triangulation(rng, n) if rng.random() < chord_prob]
    ang = 2 * np.pi * np.arange(n) / max(n, 1)
    coords = np.column_stack([np.cos(ang), np.sin(ang)])
    return Graph(n, tuple(edges)), coords


def random_planar_graph(rng: np.random.Generator, n: int, keep_prob: float = 0.7) -> tuple[Graph, np.ndarray]:
    """Random subgraph of the Delaunay triangulation of uniform random points."""
    coords = rng.random((n, 2))
    if n < 3:
        return Graph(n, ((0, 1),) if n == 2 else ()), coords
    tri = Delaunay(coords)
    edges = set()
    for simplex in tri.simplices:
        for a in range(3):
            u, v = int(simplex[a]), int(simplex[(a + 1) % 3])
            edges.add((min(u, v), max(u, v)))
    kept = [e for e in sorted(edges) if rng.random() < keep_prob]
    return Graph(n, tuple(kept)), coords


KIND_PATTERN = re.compile(r"^(grid):(\d+)x(\d+)$|^(outerplanar|random-planar|random_planar):(\d+)$")


def parse_kind(text: str) -> tuple[str, tuple[int, ...]]:
    """Parse ``grid:RxC``, ``outerplanar:N`` or ``random-planar:N``."""
    m = KIND_PATTERN.match(text.strip().lower())
    if not m:
        raise BadDims(f"cannot parse model kind {text!r}")
    if m.group(1):
        return "grid", (int(m.group(2)), int(m.group(3)))
    return m.group(4).replace("-", "_"), (int(m.group(5)),)


def gen_model(kind: str, dims, param_range=(-1.0, 1.0), min_abs: float = 0.05,
              seed: int = 0) -> tuple[IsingModel, PlanarEmbedding]:
    """Random model of the given kind with its straight-line embedding.

    Grids are zero-field; outer-planar models also get node fields drawn from
    the same distribution as the couplings.
    """
    dims = tuple(int(d) for d in np.atleast_1d(dims))
    if any(d < 1 for d in dims):
        raise BadDims("dimensions must be >= 1")
    rng = _rng(seed)
    lo, hi = param_range
    fields = None
    if kind == "grid":
        if len(dims) != 2:
            raise BadDims("grid needs (rows, cols)")
        g, coords = grid_graph(*dims)
    elif kind == "outerplanar":
        g, coords = outerplanar_graph(rng, dims[0])
    elif kind == "random_planar":
        g, coords = random_planar_graph(rng, dims[0])
    else:
        raise BadDims(f"unknown model kind {kind!r}")
    theta = _draw_params(rng, g.m, lo, hi, min_abs)
    if kind == "outerplanar":
        fields = _draw_params(rng, g.n, lo, hi, min_abs)
    return IsingModel(g, theta, fields), embedding_from_coords(g, coords)
