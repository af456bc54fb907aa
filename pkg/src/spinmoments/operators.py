"""Collective spin observables and the permutation-(anti)symmetric
three-body operators built from Pauli strings.

Operators are dense numpy arrays. Constructors that depend only on
(label, N, d) are memoized; cached arrays are marked read-only.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations, permutations
from typing import Sequence

import numpy as np

from . import linalg
from .errors import BadDirection, OutOfRange, ShapeMismatch

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SX, SY, SZ)
AXES = "xyz"

MAX_FULL_QUBITS = 10
MAX_EXPECT_QUBITS = 12


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for (a, b, c), sign in _PERM_SIGNS.items():
        eps[a, b, c] = sign
    return eps


_PERM_SIGNS = {
    (0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1,
    (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1,
}


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def pauli_string(labels: dict[int, int], n: int) -> np.ndarray:
    """Dense matrix of a Pauli string; ``labels`` maps site -> 0/1/2 (x/y/z).

    Each column has a single nonzero entry, so the matrix is filled in
    O(2^n) instead of by repeated Kronecker products.
    """
    dim = 2**n
    idx = np.arange(dim)
    flip = 0
    phase = np.ones(dim, dtype=complex)
    for site, lab in labels.items():
        bit = (idx >> (n - 1 - site)) & 1
        if lab == 0:
            flip |= 1 << (n - 1 - site)
        elif lab == 1:
            flip |= 1 << (n - 1 - site)
            phase = phase * np.where(bit == 0, 1j, -1j)
        else:
            phase = phase * np.where(bit == 0, 1.0, -1.0)
    out = np.zeros((dim, dim), dtype=complex)
    out[idx ^ flip, idx] = phase
    return out


def _check_qubits(n: int, lo: int = 1, hi: int = MAX_EXPECT_QUBITS) -> None:
    if not lo <= n <= hi:
        raise OutOfRange(f"N={n} outside [{lo}, {hi}]")


@lru_cache(maxsize=None)
def spin_axes(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(J_x, J_y, J_z) for n qubits."""
    _check_qubits(n)
    out = []
    for lab in range(3):
        j = sum(pauli_string({i: lab}, n) for i in range(n)) / 2
        out.append(_frozen(j))
    return tuple(out)


def unit_direction(direction: Sequence[float], tol: float = 1e-10) -> np.ndarray:
    u = np.asarray(direction, dtype=float).reshape(-1)
    if u.size != 3 or abs(np.linalg.norm(u) - 1.0) > tol:
        raise BadDirection(f"direction must be a unit 3-vector, got {direction}")
    return u


def collective_j(n: int, direction: Sequence[float]) -> np.ndarray:
    """J_u = (1/2) sum_i u . sigma^(i)."""
    u = unit_direction(direction)
    jx, jy, jz = spin_axes(n)
    return u[0] * jx + u[1] * jy + u[2] * jz


def gell_mann(d: int) -> list[np.ndarray]:
    """Generalized Gell-Mann matrices normalized to tr(l_k l_m) = d delta_km.

    Order: for each pair j<k the symmetric then antisymmetric element, then
    the d-1 diagonal elements; for d=2 this is (sigma_x, sigma_y, sigma_z).
    """
    if d < 2:
        raise OutOfRange("local dimension must be >= 2")
    mats = []
    for j, k in combinations(range(d), 2):
        s = np.zeros((d, d), dtype=complex)
        s[j, k] = s[k, j] = 1
        a = np.zeros((d, d), dtype=complex)
        a[j, k], a[k, j] = -1j, 1j
        mats += [s, a]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1
        diag[l] = -l
        mats.append(np.diag(np.sqrt(2 / (l * (l + 1))) * diag).astype(complex))
    scale = np.sqrt(d / 2)
    return [scale * m for m in mats]


@lru_cache(maxsize=None)
def collective_lambdas(n: int, d: int) -> tuple[np.ndarray, ...]:
    """Lambda_l = (1/d) sum_i lambda_l^(i) for l = 1..d^2-1 (returned 0-based)."""
    if d**n > 4096:
        raise OutOfRange(f"d^N = {d**n} exceeds 4096")
    out = []
    for lam in gell_mann(d):
        total = sum(linalg.embed(lam, i, n, d) for i in range(n)) / d
        out.append(_frozen(total))
    return tuple(out)


def collective_lambda(n: int, d: int, l: int) -> np.ndarray:
    """Collective Gell-Mann operator; ``l`` is 1-based as in 1..d^2-1."""
    if not 1 <= l <= d * d - 1:
        raise OutOfRange(f"l={l} outside [1, {d * d - 1}]")
    return collective_lambdas(n, d)[l - 1]


def _three_body(n: int, signed: bool) -> np.ndarray:
    if not 3 <= n <= MAX_FULL_QUBITS:
        raise OutOfRange(f"N={n} outside [3, {MAX_FULL_QUBITS}]")
    dim = 2**n
    out = np.zeros((dim, dim), dtype=complex)
    for i, j, k in combinations(range(n), 3):
        for labs, sign in _PERM_SIGNS.items():
            w = sign if signed else 1
            out += w * pauli_string({i: labs[0], j: labs[1], k: labs[2]}, n)
    return out


@lru_cache(maxsize=None)
def build_o_s(n: int) -> np.ndarray:
    """Sum over triples of the label-symmetrized sigma_x sigma_y sigma_z."""
    return _frozen(_three_body(n, signed=False))


@lru_cache(maxsize=None)
def build_o_a(n: int) -> np.ndarray:
    """Sum over triples i<j<k of eps_lmn sigma_l^(i) sigma_m^(j) sigma_n^(k)."""
    return _frozen(_three_body(n, signed=True))


def o_s_from_collective(n: int) -> np.ndarray:
    """(8/3!) times the symmetrized product of J_x, J_y, J_z."""
    js = spin_axes(n)
    total = sum(js[a] @ js[b] @ js[c] for a, b, c in permutations(range(3)))
    return (8 / 6) * total


def build_w_s(w: np.ndarray, s: Sequence[np.ndarray]) -> np.ndarray:
    """W_S = sum_ijk w_ijk s_i (x) s_j (x) s_k on three parties."""
    w = np.asarray(w, dtype=float)
    s = [np.asarray(m, dtype=complex) for m in s]
    if not s:
        raise ShapeMismatch("need at least one local matrix")
    d = s[0].shape[0]
    if any(m.shape != (d, d) for m in s):
        raise ShapeMismatch("local matrices must be square with equal dimensions")
    if w.shape != (len(s),) * 3:
        raise ShapeMismatch(f"tensor shape {w.shape} does not match {len(s)} matrices")
    if any(np.allclose(m, np.eye(d)) for m in s):
        raise ShapeMismatch("local matrices must not be the identity")
    out = np.zeros((d**3, d**3), dtype=complex)
    for i, j, k in zip(*np.nonzero(w)):
        out += w[i, j, k] * linalg.kron(s[i], s[j], s[k])
    return out


def two_ensemble_j(n: int, axis: str | int, sign: int, axis_b: str | int | None = None) -> np.ndarray:
    """J_{l,A} (x) 1 + sign * 1 (x) J_{l',B} on 2n qubits (A = first n).

    ``axis_b`` defaults to ``axis``; a different value gives the mixed-axis
    combination J_{k,A} +/- J_{l,B}.
    """
    _check_qubits(2 * n, 2)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    la = AXES.index(axis) if isinstance(axis, str) else int(axis)
    lb = la if axis_b is None else (AXES.index(axis_b) if isinstance(axis_b, str) else int(axis_b))
    ja = sum(pauli_string({i: la}, 2 * n) for i in range(n)) / 2
    jb = sum(pauli_string({n + i: lb}, 2 * n) for i in range(n)) / 2
    return ja + sign * jb
