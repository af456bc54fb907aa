"""Dense complex matrix helpers: Kronecker products, Hermitian eigensolvers,
partial trace/transpose and party permutation operators.

Parties are indexed from 0 and party 0 is the most significant digit of the
computational basis index.
"""

from __future__ import annotations

from functools import reduce
from itertools import combinations
from typing import Iterable

import numpy as np

from .errors import BadPartition, NonHermitianInput, ShapeMismatch

HERMITIAN_TOL = 1e-12


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of matrices, left to right."""
    if not ops:
        return np.ones((1, 1), dtype=complex)
    return reduce(np.kron, ops)


def embed(op: np.ndarray, site: int, n: int, d: int = 2) -> np.ndarray:
    """Place a single-party operator on ``site`` of an ``n``-party register."""
    return embed_many({site: op}, n, d)


def embed_many(ops: dict[int, np.ndarray], n: int, d: int = 2) -> np.ndarray:
    eye = np.eye(d, dtype=complex)
    return kron(*(ops.get(i, eye) for i in range(n)))


def is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(h), initial=0.0)))
    return bool(np.max(np.abs(h - h.conj().T), initial=0.0) <= tol * scale)


def _check_hermitian(h: np.ndarray, tol: float) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h, tol):
        raise NonHermitianInput("matrix is not Hermitian within tolerance")
    return h


def hermitian_eig(
    h: np.ndarray, method: str = "lapack", tol: float = HERMITIAN_TOL
) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns real eigenvalues in ascending order and the matching eigenvectors
    as columns. ``method="jacobi"`` uses the cyclic Jacobi solver below; the
    default delegates to LAPACK through numpy.
    """
    h = _check_hermitian(h, tol)
    if method == "jacobi":
        return jacobi_eigh(h)
    if method != "lapack":
        raise ValueError(f"unknown eigensolver method {method!r}")
    return np.linalg.eigh(h)


def hermitian_eigvals(h: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    return np.linalg.eigvalsh(_check_hermitian(h, tol))


def jacobi_eigh(
    h: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigensolver for complex Hermitian matrices.

    Each pivot (p, q) is first phase-rotated so the off-diagonal entry is real
    and then annihilated by a real Givens rotation. Sweeps stop once the
    off-diagonal Frobenius norm drops below ``tol`` times the full norm.
    """
    a = np.array(h, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a) or 1.0
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                mag = abs(b)
                if mag <= 1e-300:
                    continue
                phase = b / mag
                theta = 0.5 * np.arctan2(2.0 * mag, a[q, q].real - a[p, p].real)
                c, s = np.cos(theta), np.sin(theta)
                rot = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ rot
                a[p, q] = a[q, p] = 0.0
    evals = np.diag(a).real.copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], v[:, order]


def _check_parties(parties: Iterable[int], n: int, *, proper: bool) -> list[int]:
    parties = sorted(set(int(p) for p in parties))
    if not parties:
        raise BadPartition("party set must be nonempty")
    if parties[0] < 0 or parties[-1] >= n:
        raise BadPartition(f"party index out of range for {n} parties: {parties}")
    if proper and len(parties) == n:
        raise BadPartition("party set must be a proper subset")
    return parties


def _check_square(rho: np.ndarray, n: int, d: int) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (d**n, d**n):
        raise ShapeMismatch(f"expected shape {(d**n, d**n)}, got {rho.shape}")
    return rho


def partial_trace(rho: np.ndarray, keep: Iterable[int], n: int, d: int = 2) -> np.ndarray:
    """Reduced operator on the parties in ``keep`` (kept in ascending order)."""
    keep = _check_parties(keep, n, proper=False)
    rho = _check_square(rho, n, d)
    traced = [i for i in range(n) if i not in keep]
    t = rho.reshape([d] * (2 * n))
    # trace the highest index first so the remaining axis numbers stay valid
    for i in reversed(traced):
        m = t.ndim // 2
        t = np.trace(t, axis1=i, axis2=i + m)
    k = len(keep)
    return t.reshape(d**k, d**k)


def partial_transpose(rho: np.ndarray, subset: Iterable[int], n: int, d: int = 2) -> np.ndarray:
    subset = _check_parties(subset, n, proper=True)
    rho = _check_square(rho, n, d)
    perm = list(range(2 * n))
    for s in subset:
        perm[s], perm[s + n] = perm[s + n], perm[s]
    return rho.reshape([d] * (2 * n)).transpose(perm).reshape(d**n, d**n)


def swap_operator(n: int, a: int, b: int, d: int = 2) -> np.ndarray:
    """Permutation matrix exchanging parties ``a`` and ``b``."""
    if a == b or not (0 <= a < n and 0 <= b < n):
        raise BadPartition(f"invalid pair ({a}, {b}) for {n} parties")
    dim = d**n
    perm = list(range(n))
    perm[a], perm[b] = perm[b], perm[a]
    idx = np.arange(dim).reshape([d] * n).transpose(perm).reshape(dim)
    out = np.zeros((dim, dim), dtype=complex)
    out[np.arange(dim), idx] = 1.0
    return out


def symmetric_projector_pair(n: int, a: int, b: int, d: int = 2) -> np.ndarray:
    """Projector (1 + SWAP_ab)/2 onto states symmetric in parties a and b."""
    return 0.5 * (np.eye(d**n, dtype=complex) + swap_operator(n, a, b, d))


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    flat = m.reshape(-1)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "re": flat.real.tolist(),
        "im": flat.imag.tolist(),
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    re, im = np.asarray(obj["re"], float), np.asarray(obj["im"], float)
    if re.size != rows * cols or im.size != rows * cols:
        raise ShapeMismatch("entry count does not match rows*cols")
    return (re + 1j * im).reshape(rows, cols)


def bipartitions(n: int) -> list[tuple[int, ...]]:
    """Nontrivial bipartitions, one side each; complements are skipped.

    The listed side is the lexicographically smaller of the pair.
    """
    out = []
    parties = range(n)
    for k in range(1, n // 2 + 1):
        for side in combinations(parties, k):
            comp = tuple(i for i in parties if i not in side)
            if len(side) == len(comp) and comp < side:
                continue
            out.append(side)
    return out

