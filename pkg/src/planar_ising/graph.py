"""Undirected graphs, planarity testing, planar embeddings and straight-line drawings.

Planarity testing and the combinatorial embedding use the left-right algorithm
from networkx; straight-line drawings use networkx's canonical-ordering shift
method on each connected component.

Orientation convention: coordinates are ordinary Cartesian (y grows upward).
A rotation lists the neighbours of a vertex in clockwise order, and the turning
angle phi(i, j, l) is the clockwise rotation from heading i->j to heading j->l,
in (-pi, pi].  Faces are traversed with the face on the left of each directed
edge, so every bounded face has total turning -2*pi and each outer face +2*pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Sequence

import networkx as nx
import numpy as np

from .errors import MissingEdge, NonPlanar

Pair = tuple[int, int]


def canonical_pair(u: int, v: int) -> Pair:
    return (u, v) if u < v else (v, u)


def max_planar_edges(n: int) -> int:
    """Edge count of a maximal planar graph on ``n`` vertices."""
    if n < 3:
        return n * (n - 1) // 2
    return 3 * n - 6


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    Edges are stored once, as ``(min, max)`` pairs sorted lexicographically;
    the position of an edge in ``edges`` is its index everywhere else in the
    package (parameter vectors, moment vectors, Hessian rows).
    """

    n: int
    edges: tuple[Pair, ...] = ()

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("vertex count must be non-negative")
        canon = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
            p = canonical_pair(u, v)
            if p in canon:
                raise ValueError(f"parallel edge {p}")
            canon.add(p)
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_index(self) -> dict[Pair, int]:
        return {e: k for k, e in enumerate(self.edges)}

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(a)) for a in nbrs)

    def has_edge(self, u: int, v: int) -> bool:
        return canonical_pair(u, v) in self.edge_index

    def index_of(self, u: int, v: int) -> int:
        try:
            return self.edge_index[canonical_pair(u, v)]
        except KeyError:
            raise MissingEdge(f"no edge {{{u}, {v}}}") from None

    def add_edges(self, pairs: Iterable[Pair]) -> "Graph":
        return Graph(self.n, self.edges + tuple(canonical_pair(*p) for p in pairs))

    def add_edge(self, u: int, v: int) -> "Graph":
        return self.add_edges([(u, v)])

    def non_edges(self) -> list[Pair]:
        idx = self.edge_index
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n) if (i, j) not in idx]

    def components(self) -> list[list[int]]:
        """Connected components as sorted vertex lists, ordered by smallest vertex."""
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            seen[s] = True
            stack, comp = [s], []
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in self.adjacency[v]:
                    if not seen[w]:
                        seen[w] = True
                        stack.append(w)
            comps.append(sorted(comp))
        return comps

    def to_networkx(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(range(self.n))
        G.add_edges_from(self.edges)
        return G

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, data: dict) -> "Graph":
        return cls(int(data["n"]), tuple(tuple(e) for e in data["edges"]))


@dataclass(frozen=True)
class PlanarEmbedding:
    """Rotation system plus (optionally) straight-line coordinates."""

    graph: Graph
    rotation: tuple[tuple[int, ...], ...]
    coords: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.rotation) != self.graph.n:
            raise ValueError("rotation must list every vertex")
        for v, rot in enumerate(self.rotation):
            if sorted(rot) != list(self.graph.adjacency[v]):
                raise ValueError(f"rotation at {v} does not match adjacency")
        if self.coords is not None:
            c = np.array(self.coords, dtype=float).reshape(self.graph.n, 2)
            c.setflags(write=False)
            object.__setattr__(self, "coords", c)

    def with_coords(self, coords) -> "PlanarEmbedding":
        return PlanarEmbedding(self.graph, self.rotation, coords)

    def next_in_face(self, u: int, v: int) -> Pair:
        """Successor of the directed edge u->v along the face on its left."""
        rot = self.rotation[v]
        k = rot.index(u)
        return (v, rot[(k + 1) % len(rot)])

    def faces(self) -> list[list[Pair]]:
        """Face boundaries as lists of directed edges (isolated vertices excluded)."""
        seen: set[Pair] = set()
        out = []
        for u, v in self.graph.edges:
            for start in ((u, v), (v, u)):
                if start in seen:
                    continue
                face, d = [], start
                while d not in seen:
                    seen.add(d)
                    face.append(d)
                    d = self.next_in_face(*d)
                out.append(face)
        return out

    def count_faces(self) -> int:
        """Face count with a single shared outer face, so V - E + F = 1 + C."""
        g = self.graph
        if g.n == 0:
            return 1
        comps = g.components()
        per_component = len(self.faces()) + sum(1 for c in comps if len(c) == 1)
        return per_component - (len(comps) - 1)


def is_planar(g: Graph) -> bool:
    if g.n >= 3 and g.m > 3 * g.n - 6:
        return False
    planar, _ = nx.check_planarity(g.to_networkx())
    return planar


def is_outer_planar(g: Graph) -> bool:
    """True iff adding one vertex adjacent to every vertex keeps ``g`` planar."""
    return is_planar(Graph(g.n + 1, g.edges + tuple((i, g.n) for i in range(g.n))))


def planar_embedding(g: Graph) -> PlanarEmbedding:
    """Combinatorial embedding (rotation only) of a planar graph."""
    planar, emb = nx.check_planarity(g.to_networkx())
    if not planar:
        raise NonPlanar(f"graph with {g.n} vertices and {g.m} edges is not planar")
    rotation = tuple(tuple(emb.neighbors_cw_order(v)) for v in range(g.n))
    return PlanarEmbedding(g, rotation)


def _cw_order_from_coords(coords: np.ndarray, v: int, nbrs: Sequence[int]) -> list[int]:
    x0, y0 = coords[v]
    return sorted(nbrs, key=lambda w: -math.atan2(coords[w][1] - y0, coords[w][0] - x0))


def _same_cyclic(a: Sequence[int], b: Sequence[int]) -> bool:
    if len(a) != len(b):
        return False
    if len(a) == 0:
        return True
    try:
        k = list(b).index(a[0])
    except ValueError:
        return False
    return list(a) == list(b[k:]) + list(b[:k])


def rotation_from_coords(g: Graph, coords) -> tuple[tuple[int, ...], ...]:
    coords = np.asarray(coords, dtype=float)
    return tuple(tuple(_cw_order_from_coords(coords, v, g.adjacency[v])) for v in range(g.n))


def _draw_component(emb: PlanarEmbedding, comp: list[int]) -> dict[int, tuple[float, float]]:
    if len(comp) == 1:
        return {comp[0]: (0.0, 0.0)}
    if len(comp) == 2:
        return {comp[0]: (0.0, 0.0), comp[1]: (1.0, 0.0)}
    if len(comp) == 3:
        return dict(zip(comp, [(0.0, 0.0), (2.0, 0.0), (1.0, 1.0)]))
    nx_emb = nx.PlanarEmbedding()
    nx_emb.set_data({v: list(emb.rotation[v]) for v in comp})
    pos = nx.combinatorial_embedding_to_pos(nx_emb)
    pos = {v: (float(p[0]), float(p[1])) for v, p in pos.items()}
    # networkx may realise the mirror image of the rotation; flip x if so.
    probe = max(comp, key=lambda v: len(emb.rotation[v]))
    if len(emb.rotation[probe]) >= 3:
        arr = np.zeros((emb.graph.n, 2))
        for v, p in pos.items():
            arr[v] = p
        drawn = _cw_order_from_coords(arr, probe, emb.rotation[probe])
        if not _same_cyclic(drawn, emb.rotation[probe]):
            pos = {v: (-x, y) for v, (x, y) in pos.items()}
    return pos


def straight_line_drawing(g: Graph, emb: Optional[PlanarEmbedding] = None) -> PlanarEmbedding:
    """Crossing-free integer-grid drawing realising ``emb``.

    Components are stacked in disjoint horizontal bands.  If ``emb`` is omitted
    one is computed with :func:`planar_embedding`.
    """
    if emb is None:
        emb = planar_embedding(g)
    elif emb.graph != g:
        raise ValueError("embedding belongs to a different graph")
    coords = np.zeros((g.n, 2))
    y_offset = 0.0
    for comp in g.components():
        pos = _draw_component(emb, comp)
        pts = np.array([pos[v] for v in comp])
        pts -= pts.min(axis=0)
        pts[:, 1] += y_offset
        coords[comp] = pts
        y_offset = pts[:, 1].max() + 2.0
    return emb.with_coords(coords)


def draw(g: Graph) -> PlanarEmbedding:
    """Embedding plus straight-line coordinates in one call."""
    return straight_line_drawing(g, planar_embedding(g))


def embedding_from_coords(g: Graph, coords) -> PlanarEmbedding:
    """Wrap caller-supplied straight-line coordinates (e.g. a lattice layout)."""
    return PlanarEmbedding(g, rotation_from_coords(g, coords), coords)


def turning_angle(emb: PlanarEmbedding, i: int, j: int, l: int) -> float:
    """Clockwise rotation from heading i->j to heading j->l, in (-pi, pi]."""
    g = emb.graph
    if not g.has_edge(i, j):
        raise MissingEdge(f"no edge {{{i}, {j}}}")
    if not g.has_edge(j, l):
        raise MissingEdge(f"no edge {{{j}, {l}}}")
    if emb.coords is None:
        raise ValueError("embedding has no coordinates")
    c = emb.coords
    d1 = c[j] - c[i]
    d2 = c[l] - c[j]
    cross = d1[0] * d2[1] - d1[1] * d2[0]
    dot = d1[0] * d2[0] + d1[1] * d2[1]
    phi = -math.atan2(cross, dot)
    if phi <= -math.pi:
        phi = math.pi
    return phi + 0.0


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if abs(v) < 1e-12 else (1 if v > 0 else -1)

    def on_seg(a, b, c):
        return min(a[0], b[0]) - 1e-12 <= c[0] <= max(a[0], b[0]) + 1e-12 and min(a[1], b[1]) - 1e-12 <= c[1] <= max(a[1], b[1]) + 1e-12

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    if o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4):
        return True
    # touching or collinear overlap between non-adjacent edges also breaks the drawing
    if o1 == 0 and on_seg(p1, p2, q1):
        return True
    if o2 == 0 and on_seg(p1, p2, q2):
        return True
    if o3 == 0 and on_seg(q1, q2, p1):
        return True
    if o4 == 0 and on_seg(q1, q2, p2):
        return True
    return False


def drawing_crossings(emb: PlanarEmbedding) -> list[tuple[Pair, Pair]]:
    """All pairs of vertex-disjoint edges whose segments meet."""
    c = emb.coords
    edges = emb.graph.edges
    bad = []
    for a in range(len(edges)):
        u1, v1 = edges[a]
        for b in range(a + 1, len(edges)):
            u2, v2 = edges[b]
            if len({u1, v1, u2, v2}) < 4:
                continue
            if _segments_cross(c[u1], c[v1], c[u2], c[v2]):
                bad.append((edges[a], edges[b]))
    return bad


def candidate_edges(g: Graph, pool: Optional[Iterable[Pair]] = None) -> list[Pair]:
    """Non-edges whose addition keeps ``g`` planar, in canonical order.

    ``pool`` restricts the pairs examined; since planarity is closed under
    edge deletion, a previous candidate set is a valid pool after adding edges.
    """
    pairs = g.non_edges() if pool is None else sorted(canonical_pair(*p) for p in pool if not g.has_edge(*p))
    if g.n >= 3 and g.m + 1 > 3 * g.n - 6:
        return []
    return [p for p in pairs if is_planar(g.add_edge(*p))]


def greedy_planar_augmentation(g: Graph, delta: Iterable[Pair]) -> list[Pair]:
    """Maximal subset of ``delta`` that can be added to ``g`` keeping it planar."""
    chosen: list[Pair] = []
    current = g
    limit = max_planar_edges(g.n)
    for p in sorted(canonical_pair(*q) for q in delta):
        if current.m >= limit:
            break
        if current.has_edge(*p):
            continue
        trial = current.add_edge(*p)
        if is_planar(trial):
            chosen.append(p)
            current = trial
    return chosen
