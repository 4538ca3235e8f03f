"""Reference computations that share no code with the library.

Everything here is plain enumeration over spin states or vertex subsets, kept
deliberately naive so it can serve as ground truth for small instances.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def states(n: int) -> np.ndarray:
    return np.array(list(itertools.product((1, -1), repeat=n)), dtype=float).reshape(-1, n)


def distribution(n: int, couplings: dict, fields=None) -> tuple[np.ndarray, np.ndarray, float]:
    """(states, probabilities, log Z) by summing exp(energy) over all 2^n states."""
    x = states(n)
    energy = np.zeros(len(x))
    for (i, j), t in couplings.items():
        energy += t * x[:, i] * x[:, j]
    if fields is not None:
        energy += x @ np.asarray(fields, dtype=float)
    top = energy.max() if len(energy) else 0.0
    weights = np.exp(energy - top)
    z = weights.sum()
    return x, weights / z, math.log(z) + top


def log_partition(n: int, couplings: dict, fields=None) -> float:
    return distribution(n, couplings, fields)[2]


def moments(n: int, couplings: dict, fields=None) -> tuple[np.ndarray, np.ndarray]:
    """(E[x_i], E[x_i x_j]) as a vector and a full matrix."""
    x, p, _ = distribution(n, couplings, fields)
    return p @ x, (x * p[:, None]).T @ x


def statistic_covariance(n: int, pairs, couplings: dict) -> np.ndarray:
    """Covariance matrix of the products x_i x_j over the listed pairs."""
    x, p, _ = distribution(n, couplings)
    f = np.column_stack([x[:, i] * x[:, j] for i, j in pairs])
    mean = p @ f
    return (f * p[:, None]).T @ f - np.outer(mean, mean)


# --- planarity by exhaustive Kuratowski subdivision search -----------------

def _route(adj, u, v, free, used):
    """Yield interior vertex sets of simple u-v paths whose interior avoids ``used``."""
    stack = [(u, ())]
    while stack:
        node, interior = stack.pop()
        for w in adj[node]:
            if w == v:
                yield frozenset(interior)
            elif w in free and w not in used and w not in interior:
                stack.append((w, interior + (w,)))


def _embed_paths(adj, required, free, used=frozenset()):
    if not required:
        return True
    (u, v), rest = required[0], required[1:]
    for interior in set(_route(adj, u, v, free, used)):
        if _embed_paths(adj, rest, free, used | interior):
            return True
    return False


def contains_kuratowski_subdivision(n: int, edges) -> bool:
    adj = {v: set() for v in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    vertices = range(n)
    for branch in itertools.combinations(vertices, 5):
        if any(len(adj[b]) < 4 for b in branch):
            continue
        free = set(vertices) - set(branch)
        if _embed_paths(adj, list(itertools.combinations(branch, 2)), free):
            return True
    for six in itertools.combinations(vertices, 6):
        if any(len(adj[b]) < 3 for b in six):
            continue
        free = set(vertices) - set(six)
        for left in itertools.combinations(six, 3):
            if six[0] not in left:
                continue  # each bipartition once
            right = [b for b in six if b not in left]
            if _embed_paths(adj, [(a, b) for a in left for b in right], free):
                return True
    return False
