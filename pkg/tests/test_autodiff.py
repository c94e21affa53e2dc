import numpy as np
import pytest

from crimegnn.autodiff import (
    AdamState,
    ModelParams,
    adam_step,
    collapse_penalty,
    finite_diff_check,
    gcn_forward,
    loss_and_grad,
    normalize_adjacency,
    numeric_gradient,
)
from crimegnn.graph import GraphError, build_graph
from crimegnn.graphio import FIXTURE_NAMES, fixture


def seeded(f, h, k, seed, depth=2):
    rng = np.random.default_rng(seed + 1000)
    p = ModelParams.glorot(f, h, k, depth=depth, seed=seed)
    for b in p.biases:
        b[:] = rng.uniform(-0.5, 0.5, b.shape)
    return p


def features(n, f, seed):
    return np.random.default_rng(seed + 2000).standard_normal((n, f))


def test_normalize_triangle():
    g, _ = fixture("triangle")
    assert np.allclose(normalize_adjacency(g).toarray(), 1 / 3, atol=1e-15)


def test_normalize_single_node():
    g = build_graph(1, [])
    assert normalize_adjacency(g).toarray().tolist() == [[1.0]]


def test_normalize_path2():
    g = build_graph(2, [(0, 1)])
    assert np.allclose(normalize_adjacency(g).toarray(), 0.5, atol=1e-15)


def test_normalize_symmetric_positive(rng):
    from oracles import random_graph

    g, _ = random_graph(rng, 30)
    a = normalize_adjacency(g)
    assert abs(a - a.T).max() <= 1e-15
    assert (a.data > 0).all()


def test_forward_zero_weights_uniform():
    g, _ = fixture("barbell6")
    p = ModelParams.zeros(4, 5, 3)
    s, tape = gcn_forward(normalize_adjacency(g), features(6, 4, 0), p)
    assert np.all(tape.hidden[-1] == 0)
    assert np.allclose(s, 1 / 3, atol=1e-15)


def test_forward_scalar():
    g = build_graph(1, [])
    p = ModelParams(weights=[np.ones((1, 1)), np.ones((1, 1))], biases=[np.zeros(1), np.zeros(1)], w_out=np.ones((1, 1)))
    s, _ = gcn_forward(normalize_adjacency(g), np.ones((1, 1)), p)
    assert s.tolist() == [[1.0]]


def test_forward_rows_sum_to_one(rng):
    g, _ = fixture("barbell6")
    for seed in range(5):
        p = seeded(4, 7, 3, seed)
        p.w_out *= 30  # push logits toward the clamp
        s, _ = gcn_forward(normalize_adjacency(g), 10 * features(6, 4, seed), p)
        assert np.max(np.abs(s.sum(axis=1) - 1)) <= 1e-12
        assert np.isfinite(s).all()


def test_forward_shape_mismatch():
    g, _ = fixture("triangle")
    with pytest.raises(GraphError):
        gcn_forward(normalize_adjacency(g), np.ones((3, 5)), ModelParams.zeros(4, 2, 2))


def test_loss_at_zero_params_is_penalty_only():
    g, _ = fixture("barbell6")
    res = loss_and_grad(g, features(6, 4, 0), ModelParams.zeros(4, 5, 2), lam=0.7)
    assert abs(res.soft_modularity) <= 1e-15
    assert res.loss == pytest.approx(0.7 * collapse_penalty(np.full((6, 2), 0.5)), abs=1e-15)


def test_loss_on_saturated_component_split():
    g, _ = fixture("two_triangles")
    x0 = np.zeros((6, 2))
    x0[:3, 0] = 1.0
    x0[3:, 1] = 1.0
    p = ModelParams(
        weights=[np.eye(2), np.eye(2)], biases=[np.zeros(2), np.zeros(2)], w_out=100.0 * np.eye(2)
    )
    res = loss_and_grad(g, x0, p, lam=0.0)
    assert res.loss == pytest.approx(-0.5, abs=1e-6)
    assert np.max(np.abs(res.grads.w_out)) <= 1e-12


@pytest.mark.parametrize("name", ["barbell6", "two_triangles"])
@pytest.mark.parametrize("seed", range(5))
def test_gradient_matches_finite_differences(name, seed):
    g, _ = fixture(name)
    err = finite_diff_check(g, features(6, 4, seed), seeded(4, 5, 2, seed), lam=1.0, step=1e-5)
    assert err <= 1e-5


@pytest.mark.parametrize("name", [n for n in FIXTURE_NAMES if n not in ("barbell6", "two_triangles")])
def test_gradient_other_fixtures(name):
    g, _ = fixture(name)
    for seed in range(5):
        err = finite_diff_check(g, features(g.n, 3, seed), seeded(3, 4, 3, seed, depth=3), lam=0.5)
        assert err <= 1e-5


def test_gradient_zero_on_symmetric_point():
    g, _ = fixture("triangle")
    x0 = np.ones((3, 3))
    p = seeded(3, 4, 2, 0)
    p.w_out[:] = 0.0
    res = loss_and_grad(g, x0, p, lam=0.0)
    assert np.max(np.abs(res.grads.w_out)) == 0.0
    num = numeric_gradient(g, x0, p, 0.0, 1e-5)
    assert np.max(np.abs(num.w_out)) <= 1e-7


def test_finite_difference_step_halving():
    g, _ = fixture("barbell6")
    x0, p = features(6, 4, 1), seeded(4, 5, 2, 1)
    # truncation-dominated regime so the O(step^2) behaviour is visible
    e1 = finite_diff_check(g, x0, p, 1.0, step=1e-3)
    e2 = finite_diff_check(g, x0, p, 1.0, step=5e-4)
    assert e2 <= 4 * e1


def test_adam_first_step_magnitude():
    p = ModelParams.zeros(2, 3, 2)
    g = ModelParams.from_tensors([np.full_like(t, v) for t, v in zip(p.tensors(), [0.5, -2.0, 3e-3, 1.0, -7.0])])
    new, state = adam_step(p, g, AdamState.zeros_like(p), lr=1e-3)
    assert state.t == 1
    for t in new.tensors():
        assert np.allclose(np.abs(t), 1e-3, rtol=1e-5)
    # negative gradient moves the parameter up
    assert np.all(new.w_out > 0)


def test_adam_zero_gradient_is_noop():
    p = seeded(2, 3, 2, 0)
    zero = ModelParams.from_tensors([np.zeros_like(t) for t in p.tensors()])
    state = AdamState.zeros_like(p)
    cur = p
    for _ in range(10):
        cur, state = adam_step(cur, zero, state)
    for a, b in zip(cur.tensors(), p.tensors()):
        assert np.array_equal(a, b)


def test_adam_constant_gradient_update_does_not_grow():
    p = ModelParams.zeros(2, 2, 2)
    g = ModelParams.from_tensors([np.full_like(t, 0.3) for t in p.tensors()])
    s0 = AdamState.zeros_like(p)
    p1, s1 = adam_step(p, g, s0)
    p2, _ = adam_step(p1, g, s1)
    for a, b, c in zip(p.tensors(), p1.tensors(), p2.tensors()):
        assert np.all(np.abs(c - b) <= np.abs(b - a) * (1 + 1e-9))


def test_adam_shape_mismatch():
    p = ModelParams.zeros(2, 3, 2)
    with pytest.raises(GraphError):
        adam_step(p, ModelParams.zeros(2, 4, 2), AdamState.zeros_like(p))


def test_loss_deterministic():
    g, _ = fixture("barbell6")
    a = loss_and_grad(g, features(6, 4, 3), seeded(4, 5, 2, 3), 1.0)
    b = loss_and_grad(g, features(6, 4, 3), seeded(4, 5, 2, 3), 1.0)
    assert a.loss == b.loss
    for x, y in zip(a.grads.tensors(), b.grads.tensors()):
        assert np.array_equal(x, y)


def test_loss_requires_edges():
    g = build_graph(3, [])
    with pytest.raises(GraphError):
        loss_and_grad(g, np.ones((3, 2)), ModelParams.zeros(2, 2, 2), 1.0)
