"""Tests for the separable-bound optimizers."""

import math

import numpy as np
import pytest

from spinmoments import sepbound as sb
from spinmoments import states
from spinmoments.errors import NoConvergence, OutOfRange
from spinmoments.moments import t_average


def test_triple_product_examples():
    assert sb.t_product_value(states.BlochVectorSet.from_vectors(np.eye(3))) == pytest.approx(1)
    same = states.BlochVectorSet.from_vectors(np.ones((4, 3)))
    assert sb.t_product_value(same) == pytest.approx(0, abs=1e-12)
    assert sb.t_product_value(sb.remark_angles(3)) == pytest.approx(1)
    with pytest.raises(OutOfRange):
        sb.t_product_value(states.BlochVectorSet.from_vectors(np.eye(2, 3)))


def test_product_value_matches_dense(rng):
    for n in (3, 4, 5):
        b = states.random_product_bloch(n, rng)
        assert sb.t_product_value(b) == pytest.approx(t_average(states.product_state(b)), abs=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_gradient_finite_differences(n, rng):
    h = 1e-5
    for _ in range(25):
        v = rng.normal(size=(n, 3))
        g = sb.triple_product_grad(v)
        fd = np.zeros_like(v)
        for i in range(n):
            for k in range(3):
                e = np.zeros_like(v)
                e[i, k] = h
                fd[i, k] = (sb.triple_product_sum(v + e) - sb.triple_product_sum(v - e)) / (2 * h)
        assert np.max(np.abs(fd - g)) <= 1e-6 * max(1.0, np.max(np.abs(g)))


def test_batched_gradient_matches_single(rng):
    v = rng.normal(size=(4, 5, 3))
    g = sb.triple_product_grad(v)
    for r in range(4):
        np.testing.assert_allclose(g[r], sb.triple_product_grad(v[r]))


@pytest.mark.parametrize("n", range(3, 8))
def test_candidate_angles_are_stationary(n):
    v = sb.remark_angles(n).vectors()
    assert np.linalg.norm(sb.tangential(v, sb.triple_product_grad(v))) <= 1e-8
    assert sb.t_product_value(sb.remark_angles(n)) == pytest.approx(sb.conjectured_bound(n), abs=1e-9)


def test_rotation_invariance(rng):
    b = states.random_product_bloch(5, rng)
    v = b.vectors()
    t0 = sb.triple_product_sum(v)
    for _ in range(20):
        q, r = np.linalg.qr(rng.normal(size=(3, 3)))
        q = q * np.sign(np.diag(r))
        if np.linalg.det(q) < 0:
            q[:, 0] *= -1
        assert abs(sb.triple_product_sum(v @ q.T) - t0) <= 1e-10


def test_conjectured_bound_values():
    assert sb.conjectured_bound(3) == pytest.approx(1)
    assert sb.conjectured_bound(4) == pytest.approx(16 / (3 * math.sqrt(3)))
    assert sb.conjectured_bound(6) == pytest.approx(12)
    assert sb.conjectured_bound(7) == pytest.approx(49 / math.tan(math.pi / 7) / (3 * math.sqrt(3)))


@pytest.mark.parametrize("n", [3, 4])
def test_optimizer_reaches_bound(n):
    res = sb.optimize_fully_sep_bound(n, restarts=40, seed=1)
    assert res.best_value == pytest.approx(sb.conjectured_bound(n), abs=1e-6)
    assert res.best_value <= sb.conjectured_bound(n) + 1e-6
    assert 0 < res.converged_fraction <= 1
    assert sb.t_product_value(res.best_angles) == pytest.approx(res.best_value, abs=1e-9)


def test_optimizer_is_deterministic():
    a = sb.optimize_fully_sep_bound(4, restarts=10, seed=5)
    b = sb.optimize_fully_sep_bound(4, restarts=10, seed=5)
    assert a == b


def test_optimizer_range():
    with pytest.raises(OutOfRange):
        sb.optimize_fully_sep_bound(9)
    with pytest.raises(OutOfRange):
        sb.optimize_fully_sep_bound(3, restarts=0)


def test_result_json():
    res = sb.optimize_fully_sep_bound(3, restarts=5, seed=0)
    out = res.to_json(seed=0)
    assert out["n"] == 3 and out["conjectured"] == pytest.approx(1)
    assert len(out["angles"]) == 3 and out["gap"] == pytest.approx(1 - res.best_value)


def test_bisep_state_is_normalized(rng):
    for single in range(3):
        psi = sb.bisep_state(rng.uniform(0, 6, 8), single)
        assert np.linalg.norm(psi) == pytest.approx(1)


def test_bisep_product_inputs_reduce_to_product_value(rng):
    for _ in range(10):
        x = rng.uniform(0, 6, 8)
        x[0] = 0.0
        assert abs(sb.bisep_value(x, 2)) <= 1 + 1e-9


def test_bisep_bound_reaches_two():
    res = sb.optimize_bisep_bound_3q(restarts=4, seed=0)
    assert res.best_value <= 2 + 1e-6
    assert res.best_value >= 2 - 1e-4


def test_bisep_degenerate_start():
    """All-zero angles give the state |000> where the objective is flat."""
    try:
        res = sb.optimize_bisep_bound_3q(restarts=1, initial=np.zeros(8))
    except NoConvergence:
        return
    assert res.best_value <= 2 + 1e-6
