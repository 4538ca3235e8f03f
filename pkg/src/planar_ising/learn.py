"""Greedy planarity-preserving structure learning.

Each step scores every planarity-preserving candidate pair by the pairwise KL
divergence between the target pair marginal and the current model's pair
marginal (a lower bound on the likelihood gain of adding that edge), adds the
best one, and refits all couplings.  Candidate correlations under the current
model are computed exactly by adding as many zero-coupling candidate edges as
planarity allows and running Kac-Ward inference on the augmented graph.

Non-zero means are handled on the graph extended by one auxiliary vertex
(id ``n``).  ``outer_planar`` seeds the graph with every auxiliary edge;
``mixed`` lets auxiliary edges compete with ordinary ones.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

import numpy as np

from .errors import InvalidTargets
from .fit import FitConfig, FitResult, fit_parameters
from .graph import Graph, Pair, candidate_edges, draw, greedy_planar_augmentation, max_planar_edges
from .ising import IsingModel, MomentSet, extend_moments, pair_divergence, restrict_extended
from .kacward import infer

log = logging.getLogger(__name__)

MODES = ("zero_field_planar", "outer_planar", "mixed")


@dataclass(frozen=True)
class StopRule:
    kind: str = "maximal"  # maximal | threshold | aic | bic
    gamma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("maximal", "threshold", "aic", "bic"):
            raise ValueError(f"unknown stopping rule {self.kind!r}")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "StopRule":
        text = text.strip().lower()
        if text.startswith("gamma:"):
            return cls("threshold", float(text.split(":", 1)[1]))
        if text in ("maximal", "aic", "bic"):
            return cls(text)
        raise ValueError(f"unknown stopping rule {text!r}")

    def __str__(self) -> str:
        return f"gamma:{self.gamma!r}" if self.kind == "threshold" else self.kind

    def min_gain(self, sample_count: Optional[int]) -> float:
        """Smallest acceptable per-sample likelihood gain for one more edge."""
        if self.kind == "maximal":
            return -math.inf
        if self.kind == "threshold":
            return self.gamma
        if not sample_count:
            raise InvalidTargets(f"{self.kind.upper()} stopping needs a sample count")
        if self.kind == "aic":
            return 1.0 / sample_count
        return 0.5 * math.log(sample_count) / sample_count


@dataclass(frozen=True)
class LearnConfig:
    mode: str = "zero_field_planar"
    stop: StopRule = StopRule()
    max_edges: Optional[int] = None
    fit: FitConfig = FitConfig()
    seed: Optional[int] = None  # reserved for randomised tie-breaking; unused
    moment_clamp: float = 1e-6

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.max_edges is not None and self.max_edges < 0:
            raise ValueError("max_edges must be non-negative")


@dataclass(frozen=True)
class TraceStep:
    step: int
    edge: Pair
    bound_gain: float
    realized_gain: float
    avg_ll: float
    num_edges: int
    newton_iters: int
    rejected: bool = False


TRACE_FIELDS = ("step", "u", "v", "bound_gain", "realized_gain", "avg_ll", "num_edges", "newton_iters", "rejected")


@dataclass
class LearnTrace:
    steps: list[TraceStep] = field(default_factory=list)
    initial_ll: float = 0.0

    @property
    def accepted(self) -> list[TraceStep]:
        return [s for s in self.steps if not s.rejected]

    def rows(self) -> list[dict]:
        return [
            {
                "step": s.step, "u": s.edge[0], "v": s.edge[1],
                "bound_gain": repr(s.bound_gain), "realized_gain": repr(s.realized_gain),
                "avg_ll": repr(s.avg_ll), "num_edges": s.num_edges,
                "newton_iters": s.newton_iters, "rejected": int(s.rejected),
            }
            for s in self.steps
        ]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=TRACE_FIELDS)
            writer.writeheader()
            writer.writerows(self.rows())


@dataclass(frozen=True)
class LearnResult:
    model: IsingModel
    trace: LearnTrace
    extended: Optional[IsingModel] = None
    converged: bool = True

    def __iter__(self) -> Iterator:
        # allows ``model, trace = greedy_planar_select(...)``
        return iter((self.model, self.trace))


def candidate_correlations(current: IsingModel, delta) -> dict[Pair, float]:
    """E[x_i x_j] under ``current`` for every pair in ``delta``.

    Pairs are covered in batches: each batch is a maximal planar augmentation
    of the current graph by not-yet-covered pairs, carrying zero couplings.
    """
    remaining = sorted(set(delta))
    base = current.edge_dict()
    out: dict[Pair, float] = {}
    while remaining:
        batch = greedy_planar_augmentation(current.graph, remaining)
        if not batch:
            raise ValueError(f"pairs {remaining[:3]}... cannot be added while keeping the graph planar")
        thetas = dict(base)
        thetas.update({p: 0.0 for p in batch})
        aug = IsingModel.from_edges(current.n, thetas)
        mu = infer(aug).edge_moments
        for p in batch:
            out[p] = float(mu[aug.graph.index_of(*p)])
        covered = set(batch)
        remaining = [p for p in remaining if p not in covered]
    return out


def score_candidates(current: IsingModel, targets: MomentSet, delta) -> dict[Pair, float]:
    """Pairwise-KL lower bound on the likelihood gain of adding each pair.

    Only pairwise moments enter: both pair marginals are taken with zero
    means, which is what the zero-field family can represent.
    """
    mu_model = candidate_correlations(current, delta)
    return {
        p: pair_divergence((0.0, 0.0, targets.pair(*p)), (0.0, 0.0, mu_model[p]))
        for p in sorted(mu_model)
    }


TIE_RTOL = 1e-9
TIE_ATOL = 1e-14


def _argmax_with_ties(delta: list[Pair], bounds: dict[Pair, float]) -> Pair:
    """First pair in canonical order whose bound equals the maximum up to round-off."""
    top = max(bounds[p] for p in delta)
    cutoff = top - (TIE_RTOL * abs(top) + TIE_ATOL)
    return next(p for p in delta if bounds[p] >= cutoff)


def _fit(g: Graph, targets: MomentSet, cfg: FitConfig, warm: Optional[dict] = None) -> FitResult:
    if warm is not None:
        init = np.array([warm.get(e, 0.0) for e in g.edges])
        cfg = FitConfig(cfg.grad_tol, cfg.max_iters, cfg.alpha, cfg.beta, cfg.hessian_refresh_every, init)
    return fit_parameters(g, draw(g), targets.on_edges(g), cfg)


def _greedy(targets: MomentSet, init: Graph, cfg: LearnConfig, ll_offset: float = 0.0):
    """Greedy loop on zero-mean targets; returns (model, trace, converged)."""
    n = targets.n
    sample_count = targets.sample_count
    min_gain = cfg.stop.min_gain(sample_count)
    max_edges = max_planar_edges(n) if cfg.max_edges is None else cfg.max_edges
    const = n * math.log(2.0)

    g = init
    res = _fit(g, targets, cfg.fit)
    converged = res.converged
    model = IsingModel(g, res.theta)
    ll = res.objective - const
    trace = LearnTrace(initial_ll=ll + ll_offset)
    pool = None
    step = 0
    while g.m < max_edges:
        delta = candidate_edges(g, pool)
        pool = delta
        if not delta:
            break
        bounds = score_candidates(model, targets, delta)
        best = _argmax_with_ties(delta, bounds)
        if bounds[best] <= 0.0 and cfg.stop.kind != "maximal":
            log.info("all candidate bounds are zero; stopping at %d edges", g.m)
            break
        step += 1
        g_new = g.add_edge(*best)
        res = _fit(g_new, targets, cfg.fit, warm=model.edge_dict())
        ll_new = res.objective - const
        gain = ll_new - ll
        row = TraceStep(step, best, bounds[best], gain, ll_new + ll_offset, g_new.m, res.iterations)
        if gain < min_gain:
            trace.steps.append(replace(row, rejected=True))
            log.info("edge %s rejected: gain %.3g below %.3g", best, gain, min_gain)
            break
        converged = converged and res.converged
        if not res.converged:
            log.warning("refit after adding %s did not converge (grad %.3g)", best, res.grad_norm)
        trace.steps.append(row)
        g, ll = g_new, ll_new
        model = IsingModel(g, res.theta)
    return model, trace, converged


def _check_targets(targets: MomentSet) -> None:
    if np.any(np.abs(targets.second) > 1 + 1e-12) or np.any(np.abs(targets.first) > 1 + 1e-12):
        raise InvalidTargets("moments must lie in [-1, 1]")


def greedy_planar_select(targets: MomentSet, cfg: LearnConfig = LearnConfig()) -> LearnResult:
    """Zero-field planar model chosen greedily from pairwise moments."""
    _check_targets(targets)
    if np.any(np.abs(targets.first) > 0.1):
        log.warning("zero-field learning ignores first moments up to %.3f", float(np.max(np.abs(targets.first))))
    zt = targets.zero_mean().clamped(cfg.moment_clamp)
    model, trace, ok = _greedy(zt, Graph(targets.n), cfg)
    return LearnResult(model, trace, None, ok)


def _learn_extended(targets: MomentSet, cfg: LearnConfig, seed_aux: bool) -> LearnResult:
    _check_targets(targets)
    n = targets.n
    ext = extend_moments(targets).clamped(cfg.moment_clamp)
    init = Graph(n + 1, tuple((i, n) for i in range(n)) if seed_aux else ())
    model, trace, ok = _greedy(ext, init, cfg, ll_offset=math.log(2.0))
    model = IsingModel(model.graph, model.theta_edges, aux_vertex=n)
    return LearnResult(restrict_extended(model), trace, model, ok)


def learn_outer_planar(targets: MomentSet, cfg: LearnConfig = LearnConfig(mode="outer_planar")) -> LearnResult:
    """Outer-planar model with node fields; every variable keeps its mean."""
    return _learn_extended(targets, cfg, seed_aux=True)


def learn_mixed(targets: MomentSet, cfg: LearnConfig = LearnConfig(mode="mixed")) -> LearnResult:
    """Auxiliary edges compete with ordinary ones; only chosen vertices get fields."""
    return _learn_extended(targets, cfg, seed_aux=False)


def learn(targets: MomentSet, cfg: LearnConfig) -> LearnResult:
    if cfg.mode == "zero_field_planar":
        return greedy_planar_select(targets, cfg)
    if cfg.mode == "outer_planar":
        return learn_outer_planar(targets, cfg)
    return learn_mixed(targets, cfg)

