"""Maximum-likelihood edge parameters on a fixed planar graph.

Maximises the concave objective ``mu^T theta - Phi(theta)`` with Newton steps
``H^{-1} (mu - mu(theta))`` and Armijo backtracking.  The gradient of the
objective is ``mu - mu(theta)`` and its Hessian is ``-H``, so this step is an
ascent direction.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import NumericalFailure
from .graph import Graph, PlanarEmbedding, draw
from .ising import IsingModel, MomentSet, empirical_moments, extend_moments
from .kacward import (
    KacWardSystem,
    build_kacward,
    edge_moments,
    general_log_partition,
    hessian,
    log_cosh,
    log_det_I_minus_W,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FitConfig:
    grad_tol: float = 1e-8
    max_iters: int = 100
    alpha: float = 0.25
    beta: float = 0.5
    hessian_refresh_every: int = 1
    theta_init: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if not 0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.hessian_refresh_every < 1:
            raise ValueError("hessian_refresh_every must be >= 1")


@dataclass(frozen=True)
class FitResult:
    theta: np.ndarray
    objective: float
    iterations: int
    converged: bool
    grad_norm: float
    history: tuple[float, ...] = ()
    model_moments: Optional[np.ndarray] = None


def _objective(sys: KacWardSystem, target: np.ndarray) -> float:
    th = sys.theta
    return float(target @ th - np.sum(log_cosh(th)) - 0.5 * log_det_I_minus_W(sys))


def objective(g: Graph, emb: PlanarEmbedding, theta, target) -> float:
    """sum(mu_ij theta_ij - log cosh theta_ij) - 1/2 log det(I - W(theta)).

    Equals ``mu^T theta - log Z + n log 2``.
    """
    model = IsingModel(g, theta)
    return _objective(build_kacward(model, emb), np.asarray(target, dtype=float))


def _objective_increment(sys: KacWardSystem, new: KacWardSystem, target: np.ndarray) -> float:
    """f(new) - f(sys), accurate relative to the size of the step.

    Uses det(I - W') / det(I - W) = det(I - S diag(w' - w)) and
    log cosh(t + d) - log cosh(t) = log1p(2 sinh(d/2)^2 + tanh(t) sinh(d)).
    """
    delta = new.theta - sys.theta
    dlogcosh = np.log1p(2.0 * np.sinh(0.5 * delta) ** 2 + np.tanh(sys.theta) * np.sinh(delta))
    dw = np.repeat(new.w - sys.w, 2)
    M = np.eye(len(dw)) - sys.S * dw[None, :]
    sign, logabs = np.linalg.slogdet(M)
    if not np.isfinite(logabs) or sign.real <= 0 or abs(sign.imag) > sys.imag_tol:
        raise NumericalFailure("determinant ratio is not positive")
    return float(target @ delta - np.sum(dlogcosh) - 0.5 * logabs)


def _newton_direction(H: np.ndarray, grad: np.ndarray) -> np.ndarray:
    eps = 0.0
    m = len(grad)
    while True:
        try:
            L = np.linalg.cholesky(H + eps * np.eye(m))
            d = np.linalg.solve(L.T, np.linalg.solve(L, grad))
            if grad @ d > 0:
                return d
        except np.linalg.LinAlgError:
            pass
        eps = 1e-8 if eps == 0.0 else eps * 10.0
        if eps > 1e8:
            return grad.copy()


def fit_parameters(g: Graph, emb: Optional[PlanarEmbedding], target, cfg: FitConfig = FitConfig()) -> FitResult:
    """Newton maximum likelihood for zero-field couplings on ``g``.

    ``target`` holds E_P[x_i x_j] for each edge of ``g`` (in edge order);
    every entry must satisfy |mu| < 1.
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (g.m,):
        raise ValueError(f"expected {g.m} target moments, got shape {target.shape}")
    if np.any(np.abs(target) >= 1.0):
        raise ValueError("target moments must satisfy |mu| < 1; clamp them first")
    if emb is None:
        emb = draw(g)
    theta = np.zeros(g.m) if cfg.theta_init is None else np.array(cfg.theta_init, dtype=float)
    sys = build_kacward(IsingModel(g, theta), emb)
    f = _objective(sys, target)
    history = [f]
    if g.m == 0:
        return FitResult(theta, f, 0, True, 0.0, tuple(history), np.zeros(0))

    H = None
    converged = False
    it = 0
    mu = edge_moments(sys)
    grad = target - mu
    gnorm = float(np.max(np.abs(grad)))
    while it < cfg.max_iters:
        if gnorm <= cfg.grad_tol:
            converged = True
            break
        if H is None or it % cfg.hessian_refresh_every == 0:
            H = hessian(sys, mu)
        d = _newton_direction(H, grad)
        slope = float(grad @ d)
        t = 1.0
        accepted = None
        while t > 1e-14:
            trial = sys.with_theta(theta + t * d)
            try:
                gain = _objective_increment(sys, trial, target)
            except NumericalFailure:
                gain = -np.inf
            if gain >= cfg.alpha * t * slope:
                accepted = (trial, f + gain)
                break
            t *= cfg.beta
        if accepted is None:
            log.debug("line search stalled at iteration %d (grad %.3g)", it, gnorm)
            break
        sys, f = accepted
        theta = sys.theta
        history.append(f)
        it += 1
        mu = edge_moments(sys)
        grad = target - mu
        gnorm = float(np.max(np.abs(grad)))
    else:
        converged = gnorm <= cfg.grad_tol
    # history accumulates exact increments; report the directly evaluated value
    return FitResult(np.array(theta), _objective(sys, target), it, converged, gnorm, tuple(history), mu)


def average_log_likelihood(model: IsingModel, data: Union[MomentSet, np.ndarray],
                           emb: Optional[PlanarEmbedding] = None) -> float:
    """Average log-likelihood per sample (nats).

    ``data`` is a moment set or a sample matrix over the model's variables.  A
    model carrying an auxiliary vertex may be scored against data over the
    original variables; the result is then the likelihood of the original
    (non-zero-field) model.
    """
    ms = data if isinstance(data, MomentSet) else empirical_moments(data)
    correction = 0.0
    if model.aux_vertex is not None and ms.n == model.n - 1:
        if model.aux_vertex != model.n - 1:
            raise ValueError("auxiliary vertex must carry the highest index")
        ms = extend_moments(ms)
        correction = np.log(2.0)
    if ms.n != model.n:
        raise ValueError(f"data has {ms.n} variables, model has {model.n}")
    logZ, _ = general_log_partition(model, emb)
    ll = float(model.theta_nodes @ ms.first + model.theta_edges @ ms.on_edges(model.graph) - logZ)
    return ll + correction
