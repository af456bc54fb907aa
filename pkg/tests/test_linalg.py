"""Tests for the dense linear-algebra helpers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinmoments import linalg
from spinmoments.errors import BadPartition, NonHermitianInput, ShapeMismatch


def random_hermitian(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


def test_kron_matches_numpy():
    a = np.arange(4).reshape(2, 2)
    b = np.eye(3)
    np.testing.assert_array_equal(linalg.kron(a, b), np.kron(a, b))
    assert linalg.kron().shape == (1, 1)


def test_embed_places_operator_on_site():
    z = np.diag([1.0, -1.0])
    op = linalg.embed(z, 1, 3)
    np.testing.assert_array_equal(op, np.kron(np.kron(np.eye(2), z), np.eye(2)))


@pytest.mark.parametrize("dim", [1, 2, 5, 16])
def test_jacobi_agrees_with_lapack(dim, rng):
    h = random_hermitian(dim, rng)
    w_j, v_j = linalg.hermitian_eig(h, method="jacobi")
    w_l = np.linalg.eigvalsh(h)
    np.testing.assert_allclose(w_j, w_l, atol=1e-10)
    np.testing.assert_allclose(v_j @ np.diag(w_j) @ v_j.conj().T, h, atol=1e-10)
    np.testing.assert_allclose(v_j.conj().T @ v_j, np.eye(dim), atol=1e-10)


def test_jacobi_handles_degenerate_spectrum():
    """A projector has a highly degenerate spectrum."""
    v = np.array([1, 1j, 0, 1]) / np.sqrt(3)
    w, _ = linalg.jacobi_eigh(np.outer(v, v.conj()))
    np.testing.assert_allclose(w, [0, 0, 0, 1], atol=1e-12)


def test_non_hermitian_rejected():
    with pytest.raises(NonHermitianInput):
        linalg.hermitian_eig(np.array([[0, 1], [0, 0]]))
    with pytest.raises(NonHermitianInput):
        linalg.hermitian_eigvals(np.array([[0, 1], [0, 0]]))


def test_hermitian_tolerance_is_relative():
    h = 1e6 * np.eye(2, dtype=complex)
    h[0, 1] = 1e-7
    assert linalg.is_hermitian(h)
    assert not linalg.is_hermitian(np.ones((2, 3)))


def test_partial_trace_of_product(rng):
    a = random_hermitian(2, rng)
    b = random_hermitian(4, rng)
    c = random_hermitian(2, rng)
    big = linalg.kron(a, b, c)
    np.testing.assert_allclose(linalg.partial_trace(big, [1, 2], 4), np.trace(a) * np.trace(c) * b, atol=1e-12)
    np.testing.assert_allclose(linalg.partial_trace(big, [0, 3], 4), np.trace(b) * np.kron(a, c), atol=1e-12)


def test_partial_trace_qutrits(rng):
    a = random_hermitian(3, rng)
    b = random_hermitian(3, rng)
    np.testing.assert_allclose(linalg.partial_trace(np.kron(a, b), [0], 2, d=3), np.trace(b) * a, atol=1e-12)


def test_partial_transpose_of_product(rng):
    a = rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 2))
    np.testing.assert_allclose(linalg.partial_transpose(np.kron(a, b), [1], 2), np.kron(a, b.T))


def test_partial_transpose_needs_proper_subset():
    with pytest.raises(BadPartition):
        linalg.partial_transpose(np.eye(4), [0, 1], 2)
    with pytest.raises(BadPartition):
        linalg.partial_transpose(np.eye(4), [], 2)
    with pytest.raises(BadPartition):
        linalg.partial_trace(np.eye(4), [2], 2)


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        linalg.partial_trace(np.eye(3), [0], 2)


def test_swap_operator_exchanges_factors(rng):
    a, b, c = (random_hermitian(2, rng) for _ in range(3))
    s = linalg.swap_operator(3, 0, 2)
    np.testing.assert_allclose(s @ linalg.kron(a, b, c) @ s, linalg.kron(c, b, a), atol=1e-12)
    p = linalg.symmetric_projector_pair(3, 0, 1)
    np.testing.assert_allclose(p @ p, p)


def test_matrix_json_round_trip(rng):
    m = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
    np.testing.assert_array_equal(linalg.matrix_from_json(linalg.matrix_to_json(m)), m)
    with pytest.raises(ShapeMismatch):
        linalg.matrix_from_json({"rows": 2, "cols": 2, "re": [1], "im": [0]})


@pytest.mark.parametrize("n,count", [(2, 1), (3, 3), (4, 7), (5, 15)])
def test_bipartition_count(n, count):
    parts = linalg.bipartitions(n)
    assert len(parts) == count == 2 ** (n - 1) - 1
    assert parts[0] == (0,)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_partial_trace_preserves_trace(n, seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(2**n, rng)
    keep = sorted(rng.choice(n, size=rng.integers(1, n + 1), replace=False))
    assert np.isclose(np.trace(linalg.partial_trace(h, keep, n)), np.trace(h))
