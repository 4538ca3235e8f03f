import math

import numpy as np
import pytest

import oracle
from instances import couplings, random_model
from planar_ising.errors import EmbeddingMismatch, NonZeroField, TooLarge
from planar_ising.graph import Graph, draw, embedding_from_coords
from planar_ising.ising import IsingModel
from planar_ising.kacward import (
    brute_force_inference,
    build_kacward,
    edge_moments,
    general_log_partition,
    general_moments,
    hessian,
    infer,
    log_cosh,
    log_partition,
)
from planar_ising.sampling import grid_graph

TRIANGLE = Graph(3, ((0, 1), (0, 2), (1, 2)))
EQUILATERAL = [[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]]


def system(model, emb=None):
    return build_kacward(model, emb or draw(model.graph))


def fd_moments(model, emb, h=1e-5):
    out = []
    for k in range(model.graph.m):
        up, down = model.theta_edges.copy(), model.theta_edges.copy()
        up[k] += h
        down[k] -= h
        f = lambda t: log_partition(build_kacward(IsingModel(model.graph, t), emb))
        out.append((f(up) - f(down)) / (2 * h))
    return np.array(out)


def test_log_cosh_is_stable():
    t = np.array([0.0, 0.3, -2.0, 40.0, -800.0])
    np.testing.assert_allclose(log_cosh(t[:3]), np.log(np.cosh(t[:3])), rtol=1e-14)
    assert log_cosh(t)[4] == pytest.approx(800 - math.log(2))


# --- matrix structure --------------------------------------------------------

def test_single_edge_has_no_transitions():
    sys = system(IsingModel(Graph(2, ((0, 1),)), [1.0]))
    assert not sys.A.any() and not sys.W.any()


def test_path_has_two_transitions():
    sys = system(IsingModel(Graph(3, ((0, 1), (1, 2))), [0.3, 0.4]))
    assert np.count_nonzero(sys.A) == 2


def test_triangle_phases_sum_to_pi_per_face():
    emb = embedding_from_coords(TRIANGLE, EQUILATERAL)
    sys = build_kacward(IsingModel(TRIANGLE, [0.5] * 3), emb)
    assert np.count_nonzero(sys.A) == 6
    lookup = sys.index.lookup
    for face in emb.faces():
        phase = sum(np.angle(sys.A[lookup[d], lookup[face[(k + 1) % 3]]]) for k, d in enumerate(face))
        assert abs(phase) == pytest.approx(math.pi)


def test_build_requires_zero_field_and_matching_embedding():
    with pytest.raises(NonZeroField):
        build_kacward(IsingModel(TRIANGLE, [0.1] * 3, [0.2, 0, 0]), draw(TRIANGLE))
    with pytest.raises(EmbeddingMismatch):
        build_kacward(IsingModel(TRIANGLE, [0.1] * 3), draw(Graph(3, ((0, 1),))))
    with pytest.raises(EmbeddingMismatch):
        build_kacward(IsingModel(TRIANGLE, [0.1] * 3), draw(TRIANGLE).with_coords(None))


# --- closed-form values ------------------------------------------------------

@pytest.mark.parametrize("g", [Graph(1), Graph(4), TRIANGLE, grid_graph(3, 3)[0]])
def test_zero_couplings(g):
    sys = system(IsingModel(g, np.zeros(g.m)))
    assert log_partition(sys) == pytest.approx(g.n * math.log(2), abs=1e-12)
    np.testing.assert_allclose(edge_moments(sys), 0.0, atol=1e-14)


def test_single_edge_values():
    sys = system(IsingModel(Graph(2, ((0, 1),)), [1.0]))
    assert log_partition(sys) == pytest.approx(math.log(4 * math.cosh(1)), rel=1e-14)
    assert log_partition(sys) == pytest.approx(1.820075, abs=1e-6)
    assert edge_moments(sys)[0] == pytest.approx(math.tanh(1), rel=1e-14)
    np.testing.assert_allclose(hessian(sys), [[1 - math.tanh(1) ** 2]], rtol=1e-14)
    assert hessian(sys)[0, 0] == pytest.approx(0.419974, abs=1e-6)


def test_triangle_values():
    model = IsingModel(TRIANGLE, [0.5] * 3)
    sys = build_kacward(model, embedding_from_coords(TRIANGLE, EQUILATERAL))
    z = 2 * math.exp(1.5) + 6 * math.exp(-0.5)
    assert log_partition(sys) == pytest.approx(math.log(z), rel=1e-13)
    assert log_partition(sys) == pytest.approx(2.533900, abs=1e-6)
    mu = (2 * math.exp(1.5) - 2 * math.exp(-0.5)) / z
    np.testing.assert_allclose(edge_moments(sys), mu, rtol=1e-13)
    assert mu == pytest.approx(0.614980, abs=1e-6)
    cov = oracle.statistic_covariance(3, TRIANGLE.edges, couplings(model))
    np.testing.assert_allclose(hessian(sys), cov, atol=1e-13)


def test_disjoint_edges_are_uncorrelated():
    H = hessian(system(IsingModel(Graph(4, ((0, 1), (2, 3))), [0.7, -1.2])))
    assert H[0, 1] == pytest.approx(0.0, abs=1e-14)


# --- brute force ---------------------------------------------------------------

def test_brute_force_single_spin_with_field():
    logZ, ms = brute_force_inference(IsingModel(Graph(1), [], [0.3]))
    assert logZ == pytest.approx(math.log(2 * math.cosh(0.3)), rel=1e-14)
    assert ms.first[0] == pytest.approx(math.tanh(0.3), rel=1e-14)


def test_brute_force_single_edge():
    logZ, ms = brute_force_inference(IsingModel(Graph(2, ((0, 1),)), [1.0]))
    assert logZ == pytest.approx(math.log(4 * math.cosh(1)), rel=1e-14)
    assert ms.pair(0, 1) == pytest.approx(math.tanh(1), rel=1e-14)


def test_brute_force_matches_kacward_on_four_cycle():
    g = Graph(4, ((0, 1), (1, 2), (2, 3), (0, 3)))
    model = IsingModel(g, [0.7] * 4)
    logZ, ms = brute_force_inference(model)
    r = infer(model)
    assert r.logZ == pytest.approx(logZ, abs=1e-10)
    np.testing.assert_allclose(r.edge_moments, ms.on_edges(g), atol=1e-10)


def test_brute_force_agrees_with_reference_enumeration():
    rng = np.random.default_rng(4)
    for _ in range(10):
        model = random_model(rng, int(rng.integers(1, 9)), fields=True)
        logZ, ms = brute_force_inference(model)
        first, second = oracle.moments(model.n, couplings(model), model.theta_nodes)
        assert logZ == pytest.approx(oracle.log_partition(model.n, couplings(model), model.theta_nodes), rel=1e-12)
        np.testing.assert_allclose(ms.first, first, atol=1e-12)
        np.testing.assert_allclose(ms.second, second, atol=1e-12)


def test_brute_force_size_limit():
    with pytest.raises(TooLarge):
        brute_force_inference(IsingModel(Graph(21), []))


# --- properties ---------------------------------------------------------------

@pytest.mark.parametrize("seed", range(25))
def test_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    model = random_model(rng, int(rng.integers(2, 11)))
    r = infer(model, with_hessian=True)
    ref = oracle.log_partition(model.n, couplings(model))
    _, second = oracle.moments(model.n, couplings(model))
    assert abs(r.logZ - ref) <= 1e-9 * max(1.0, abs(ref))
    np.testing.assert_allclose(r.edge_moments, [second[e] for e in model.graph.edges], atol=1e-9)
    if model.graph.m:
        cov = oracle.statistic_covariance(model.n, model.graph.edges, couplings(model))
        np.testing.assert_allclose(r.hessian, cov, atol=1e-9)


@pytest.mark.parametrize("seed", range(8))
def test_derivatives_match_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    model = random_model(rng, int(rng.integers(3, 10)), scale=1.5, density=0.8)
    emb = draw(model.graph)
    sys = build_kacward(model, emb)
    mu = edge_moments(sys)
    np.testing.assert_allclose(mu, fd_moments(model, emb), atol=1e-5)
    H = hessian(sys)
    h = 1e-5
    cols = []
    for k in range(model.graph.m):
        up, down = model.theta_edges.copy(), model.theta_edges.copy()
        up[k] += h
        down[k] -= h
        cols.append((edge_moments(sys.with_theta(up)) - edge_moments(sys.with_theta(down))) / (2 * h))
    if cols:
        np.testing.assert_allclose(H, np.column_stack(cols), atol=1e-4)
        np.testing.assert_array_equal(H, H.T)
        assert np.linalg.eigvalsh(H).min() >= -1e-8


def test_embedding_invariance():
    g, lattice = grid_graph(3, 4)
    model = IsingModel(g, np.random.default_rng(7).uniform(-1.5, 1.5, g.m))
    skewed = lattice + np.column_stack([0.3 * lattice[:, 1] ** 2, 0.2 * lattice[:, 0]])
    a = infer(model, embedding_from_coords(g, lattice))
    b = infer(model, embedding_from_coords(g, skewed))
    c = infer(model)  # computed drawing
    for other in (b, c):
        assert other.logZ == pytest.approx(a.logZ, abs=1e-9)
        np.testing.assert_allclose(other.edge_moments, a.edge_moments, atol=1e-9)


def test_gauge_flip_at_one_vertex():
    rng = np.random.default_rng(11)
    model = random_model(rng, 9, density=0.9)
    v = max(range(model.n), key=lambda u: len(model.graph.adjacency[u]))
    touched = np.array([v in e for e in model.graph.edges])
    flipped = IsingModel(model.graph, np.where(touched, -model.theta_edges, model.theta_edges))
    a, b = infer(model), infer(flipped)
    assert b.logZ == pytest.approx(a.logZ, abs=1e-10)
    np.testing.assert_allclose(b.edge_moments, np.where(touched, -a.edge_moments, a.edge_moments), atol=1e-10)


def test_factorisation_over_components():
    rng = np.random.default_rng(3)
    left, right = random_model(rng, 5, density=1.0), random_model(rng, 4, density=1.0)
    edges = left.graph.edges + tuple((u + 5, v + 5) for u, v in right.graph.edges)
    union = IsingModel(Graph(11, edges), np.concatenate([left.theta_edges, right.theta_edges]))  # 2 isolated
    expected = infer(left).logZ + infer(right).logZ + 2 * math.log(2)
    assert infer(union).logZ == pytest.approx(expected, abs=1e-10)


def test_saturated_couplings_stay_finite():
    g = Graph(3, ((0, 1), (0, 2), (1, 2)))
    r = infer(IsingModel(g, [40.0, 40.0, 0.5]))
    assert np.all(np.isfinite(r.edge_moments)) and math.isfinite(r.logZ)


# --- general routing ----------------------------------------------------------

def test_general_log_partition_routes():
    tri = IsingModel(TRIANGLE, [0.2, -0.4, 0.9])
    assert general_log_partition(tri)[1] == "kac-ward"
    fielded = IsingModel(TRIANGLE, [0.2, -0.4, 0.9], [0.3, 0.0, -0.5])
    logZ, method = general_log_partition(fielded)
    assert method == "kac-ward-extended"
    assert logZ == pytest.approx(oracle.log_partition(3, couplings(fielded), fielded.theta_nodes), abs=1e-10)
    k5 = IsingModel(Graph(5, tuple((i, j) for i in range(5) for j in range(i + 1, 5))), [0.1] * 10)
    assert general_log_partition(k5)[1] == "brute-force"


def test_general_moments_with_fields():
    rng = np.random.default_rng(21)
    model = random_model(rng, 7, scale=1.0, density=0.5, fields=True)
    logZ, first, edge, method = general_moments(model)
    ref_first, ref_second = oracle.moments(7, couplings(model), model.theta_nodes)
    assert method in ("kac-ward-extended", "brute-force")
    np.testing.assert_allclose(first, ref_first, atol=1e-10)
    np.testing.assert_allclose(edge, [ref_second[e] for e in model.graph.edges], atol=1e-10)
