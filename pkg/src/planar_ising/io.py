"""Readers and writers for model JSON, samples/moments/trace CSV, DOT and manifests.

Model JSON::

    {"n": 3, "mode": "zero_field" | "field",
     "edges": [{"u": 0, "v": 1, "theta": 0.5}, ...],
     "fields": [0.1, 0.0, -0.2],          # field mode only
     "aux_vertex": 3,                     # optional
     "positions": [[x, y], ...],          # optional straight-line drawing
     "names": ["a", "b", "c"]}            # optional vertex names

Samples CSV: a header of vertex names, then one row of +-1 values per sample.

Moments CSV: rows ``i,j,mu`` for pairwise moments and ``i,mu`` for first
moments; an optional header line is skipped.
"""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import BadValue, InvalidTargets
from .ising import IsingModel, MomentSet


def model_to_json(model: IsingModel, positions=None, names: Optional[Sequence[str]] = None) -> dict:
    data = {
        "n": model.n,
        "mode": "zero_field" if model.is_zero_field else "field",
        "edges": [{"u": u, "v": v, "theta": float(t)} for (u, v), t in zip(model.graph.edges, model.theta_edges)],
    }
    if not model.is_zero_field:
        data["fields"] = [float(h) for h in model.theta_nodes]
    if model.aux_vertex is not None:
        data["aux_vertex"] = int(model.aux_vertex)
    if positions is not None:
        data["positions"] = [[float(x), float(y)] for x, y in np.asarray(positions)]
    if names is not None:
        data["names"] = list(names)
    return data


def model_from_json(data: dict) -> tuple[IsingModel, Optional[np.ndarray], Optional[list[str]]]:
    n = int(data["n"])
    thetas = {(int(e["u"]), int(e["v"])): float(e["theta"]) for e in data.get("edges", [])}
    fields = data.get("fields")
    if data.get("mode", "zero_field") == "zero_field" and fields is not None and any(fields):
        raise ValueError("zero_field model carries non-zero fields")
    model = IsingModel.from_edges(n, thetas, fields, data.get("aux_vertex"))
    positions = np.array(data["positions"], dtype=float) if data.get("positions") is not None else None
    return model, positions, data.get("names")


def write_model(path, model: IsingModel, positions=None, names=None) -> None:
    Path(path).write_text(json.dumps(model_to_json(model, positions, names), indent=2) + "\n")


def read_model(path) -> tuple[IsingModel, Optional[np.ndarray], Optional[list[str]]]:
    return model_from_json(json.loads(Path(path).read_text()))


def write_samples(path, samples: np.ndarray, names: Optional[Sequence[str]] = None) -> None:
    samples = np.asarray(samples)
    if names is None:
        names = [f"x{i}" for i in range(samples.shape[1])]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        writer.writerows(samples.astype(int).tolist())


def read_samples(path, zero_one: bool = False) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise BadValue(f"{path}: empty samples file")
    names = [c.strip() for c in rows[0]]
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise BadValue(f"{path}: non-numeric sample value") from exc
    if data.size == 0:
        raise BadValue(f"{path}: no samples")
    if data.shape[1] != len(names):
        raise BadValue(f"{path}: rows do not match header width")
    if zero_one:
        if not np.all((data == 0) | (data == 1)):
            raise BadValue(f"{path}: --zero-one data must contain only 0 and 1")
        data = 2 * data - 1
    if not np.all((data == 1) | (data == -1)):
        raise BadValue(f"{path}: samples must contain only -1 and +1")
    return names, data.astype(np.int8)


def write_moments(path, ms: MomentSet, pairs=None, include_first: bool = True) -> None:
    """Write pairwise rows (all pairs by default) and first-moment rows."""
    if pairs is None:
        pairs = [(i, j) for i in range(ms.n) for j in range(i + 1, ms.n)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["i", "j", "mu"])
        for i, j in pairs:
            writer.writerow([i, j, repr(ms.pair(i, j))])
        if include_first:
            for i in range(ms.n):
                writer.writerow([i, repr(float(ms.first[i]))])


def read_moments(path, n: Optional[int] = None, sample_count: Optional[int] = None) -> MomentSet:
    """Read a moments CSV; every pair among ``n`` vertices must be present."""
    pair_rows: dict[tuple[int, int], float] = {}
    first_rows: dict[int, float] = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            row = [c.strip() for c in row]
            if not row or all(c == "" for c in row):
                continue
            try:
                if len(row) == 2 or (len(row) == 3 and row[1] == ""):
                    first_rows[int(row[0])] = float(row[-1])
                elif len(row) == 3:
                    i, j = int(row[0]), int(row[1])
                    pair_rows[(min(i, j), max(i, j))] = float(row[2])
                else:
                    raise ValueError
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise InvalidTargets(f"{path}:{lineno}: cannot parse {row}") from None
    ids = [i for p in pair_rows for i in p] + list(first_rows)
    if n is None:
        n = max(ids) + 1 if ids else 0
    second = np.eye(n)
    for (i, j), mu in pair_rows.items():
        if i == j:
            continue
        second[i, j] = second[j, i] = mu
    missing = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in pair_rows]
    if missing:
        raise InvalidTargets(f"{path}: missing pairwise moments, e.g. {missing[:3]}")
    first = np.zeros(n)
    for i, mu in first_rows.items():
        first[i] = mu
    if np.any(np.abs(second) > 1) or np.any(np.abs(first) > 1):
        raise InvalidTargets(f"{path}: moments must lie in [-1, 1]")
    return MomentSet(n, first, second, sample_count)


def write_dot(path, model: IsingModel, names: Optional[Sequence[str]] = None) -> None:
    lines = ["graph ising {"]
    for v in range(model.n):
        attrs = [f'label="{names[v] if names else v}"']
        if model.theta_nodes[v] != 0.0:
            attrs.append(f"field={model.theta_nodes[v]:.6f}")
        if model.aux_vertex == v:
            attrs.append("aux=true")
        lines.append(f"  {v} [{', '.join(attrs)}];")
    for (u, v), t in zip(model.graph.edges, model.theta_edges):
        lines.append(f"  {u} -- {v} [theta={t:.6f}];")
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_manifest(out_path, subcommand: str, flags: dict, *, seed=None, inputs=(), outputs=(),
                   started: float, notes=()) -> Path:
    manifest = {
        "subcommand": subcommand,
        "flags": flags,
        "seed": seed,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "wall_clock_seconds": round(time.time() - started, 6),
        "library_version": __version__,
        "notes": list(notes),
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    return path
