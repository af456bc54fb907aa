"""State containers and constructors for the state families used throughout.

Qubit basis: |0> is the +1 eigenvector of sigma_z, |1> is an "excitation".
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Iterable, Sequence

import numpy as np

from . import linalg
from .errors import OddN, OutOfRange, ShapeMismatch

MAX_QUBITS = 12
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray
    n_parties: int
    local_dim: int = 2

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = self.local_dim**self.n_parties
        if m.shape != (dim, dim):
            raise ShapeMismatch(f"density matrix must be {dim}x{dim}, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.local_dim**self.n_parties

    def validate(self) -> "DensityMatrix":
        """Raise ``ValueError`` unless Hermitian, unit trace and PSD."""
        if not linalg.is_hermitian(self.matrix):
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(self.matrix).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} != 1")
        if linalg.hermitian_eigvals(self.matrix)[0] < -PSD_TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        return self

    def expect(self, op: np.ndarray) -> float:
        return float(np.real(np.einsum("ij,ji->", self.matrix, op)))

    def reduce(self, keep: Iterable[int]) -> "DensityMatrix":
        keep = sorted(set(keep))
        red = linalg.partial_trace(self.matrix, keep, self.n_parties, self.local_dim)
        return DensityMatrix(red, len(keep), self.local_dim)

    def conjugate_by(self, u: np.ndarray) -> "DensityMatrix":
        """Apply the same single-party unitary ``u`` to every party."""
        big = linalg.kron(*([u] * self.n_parties))
        return DensityMatrix(big @ self.matrix @ big.conj().T, self.n_parties, self.local_dim)

    def to_json(self) -> dict:
        out = linalg.matrix_to_json(self.matrix)
        out.update(n_parties=self.n_parties, local_dim=self.local_dim)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "DensityMatrix":
        return cls(linalg.matrix_from_json(obj), int(obj["n_parties"]), int(obj.get("local_dim", 2)))


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray
    n_parties: int
    local_dim: int = 2

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if v.size != self.local_dim**self.n_parties:
            raise ShapeMismatch("amplitude count does not match party structure")
        norm = np.linalg.norm(v)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state is not normalized (norm {norm})")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    def density(self) -> DensityMatrix:
        v = self.amplitudes
        return DensityMatrix(np.outer(v, v.conj()), self.n_parties, self.local_dim)

    def to_json(self) -> dict:
        return {
            "re": self.amplitudes.real.tolist(),
            "im": self.amplitudes.imag.tolist(),
            "n_parties": self.n_parties,
            "local_dim": self.local_dim,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PureState":
        amps = np.asarray(obj["re"], float) + 1j * np.asarray(obj["im"], float)
        return cls(amps, int(obj["n_parties"]), int(obj.get("local_dim", 2)))


@dataclass(frozen=True)
class BlochVectorSet:
    """Per-particle angles (theta, phi) with Bloch vector
    (cos theta, sin theta cos phi, sin theta sin phi) in (x, y, z) order."""

    angles: tuple[tuple[float, float], ...]

    @classmethod
    def from_arrays(cls, theta: Sequence[float], phi: Sequence[float]) -> "BlochVectorSet":
        return cls(tuple((float(t), float(p)) for t, p in zip(theta, phi)))

    @classmethod
    def from_vectors(cls, vecs: np.ndarray) -> "BlochVectorSet":
        vecs = np.asarray(vecs, float)
        vecs = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
        theta = np.arccos(np.clip(vecs[:, 0], -1.0, 1.0))
        phi = np.arctan2(vecs[:, 2], vecs[:, 1])
        return cls.from_arrays(theta, phi)

    @property
    def n(self) -> int:
        return len(self.angles)

    def vectors(self) -> np.ndarray:
        a = np.asarray(self.angles, float).reshape(-1, 2)
        th, ph = a[:, 0], a[:, 1]
        return np.stack([np.cos(th), np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph)], axis=1)


def as_density(state: DensityMatrix | PureState) -> DensityMatrix:
    return state.density() if isinstance(state, PureState) else state


def _check_n(n: int, lo: int = 1, hi: int = MAX_QUBITS) -> None:
    if not (lo <= n <= hi):
        raise OutOfRange(f"N={n} outside [{lo}, {hi}]")


def basis_state(bits: str | Sequence[int]) -> PureState:
    bits = [int(b) for b in bits]
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int("".join(map(str, bits)), 2) if bits else 0] = 1.0
    return PureState(v, len(bits))


def dicke(n: int, m: int) -> PureState:
    """|D_{n,m}>: uniform superposition of all basis states with m ones."""
    _check_n(n)
    if not 0 <= m <= n:
        raise OutOfRange(f"m={m} outside [0, {n}]")
    v = np.zeros(2**n, dtype=complex)
    for ones in combinations(range(n), m):
        v[sum(1 << (n - 1 - k) for k in ones)] = 1.0
    return PureState(v / np.sqrt(comb(n, m)), n)


def phased_dicke(n: int, flipped: bool = False) -> PureState:
    """Single-excitation state with phase exp(2 pi i k / n) on the excitation
    at party k (1-based); ``flipped`` applies sigma_x on every qubit."""
    _check_n(n, 3)
    v = np.zeros(2**n, dtype=complex)
    for k in range(1, n + 1):
        v[1 << (n - k)] = np.exp(2j * np.pi * k / n) / np.sqrt(n)
    if flipped:
        v = v[::-1].copy()  # sigma_x on all qubits reverses the basis order
    return PureState(v, n)


def ghz(n: int) -> PureState:
    _check_n(n, 2)
    v = np.zeros(2**n, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return PureState(v, n)


def maximally_mixed(n: int, d: int = 2) -> DensityMatrix:
    return DensityMatrix(np.eye(d**n, dtype=complex) / d**n, n, d)


def mixed_family(n: int, x: float, y: float) -> DensityMatrix:
    """x|zeta><zeta| + y|zeta~><zeta~| + (1-x-y) I/2^n."""
    if x < 0 or y < 0 or x + y > 1 + 1e-12:
        raise OutOfRange(f"weights (x={x}, y={y}) must be nonnegative with x+y<=1")
    z = phased_dicke(n).density().matrix
    zt = phased_dicke(n, flipped=True).density().matrix
    rho = x * z + y * zt + (1 - x - y) * np.eye(2**n) / 2**n
    return DensityMatrix(rho, n)


SINGLET_PAIR = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)


def _matching_state(n: int, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    psi = SINGLET_PAIR.reshape(2, 2)
    t = np.ones((), dtype=complex)
    order = []
    for a, b in pairs:
        t = np.multiply.outer(t, psi)
        order += [a, b]
    # axis j of t belongs to party order[j]; move it to position order[j]
    t = np.moveaxis(t, list(range(n)), order)
    return t.reshape(-1)


def random_matching(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    perm = rng.permutation(n)
    return [(int(perm[2 * i]), int(perm[2 * i + 1])) for i in range(n // 2)]


def singlet_state(n: int, pairings: int = 1, seed: int | None = 0) -> DensityMatrix:
    """Uniform mixture of ``pairings`` random products of two-qubit singlets.

    Every term has zero total spin, so the mixture is invariant under any
    collective unitary. The first matching is always (0,1), (2,3), ...
    """
    if n % 2:
        raise OddN(f"many-body singlet needs an even number of qubits, got {n}")
    _check_n(n, 2)
    if pairings < 1:
        raise OutOfRange("pairings must be >= 1")
    rng = np.random.default_rng(seed)
    rho = np.zeros((2**n, 2**n), dtype=complex)
    for k in range(pairings):
        pairs = [(2 * i, 2 * i + 1) for i in range(n // 2)] if k == 0 else random_matching(n, rng)
        v = _matching_state(n, pairs)
        rho += np.outer(v, v.conj())
    return DensityMatrix(rho / pairings, n)


def depolarize(rho: DensityMatrix | PureState, lam: float) -> DensityMatrix:
    """(1 - lam) rho + lam I/dim; ``lam`` is the weight of white noise."""
    if not 0 <= lam <= 1:
        raise OutOfRange(f"noise weight {lam} outside [0, 1]")
    rho = as_density(rho)
    mixed = np.eye(rho.dim, dtype=complex) / rho.dim
    return DensityMatrix((1 - lam) * rho.matrix + lam * mixed, rho.n_parties, rho.local_dim)


def rho_p(n: int, p: float, pairings: int = 1, seed: int | None = 0) -> DensityMatrix:
    """Noisy singlet (1-p) rho_singlet + p I/2^n."""
    return depolarize(singlet_state(n, pairings, seed), p)


def qubit_from_bloch(theta: float, phi: float) -> np.ndarray:
    """Pure qubit with <sx>=cos theta, <sy>=sin theta cos phi, <sz>=sin theta sin phi."""
    r = np.array([np.cos(theta), np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi)])
    return qubit_from_vector(r)


def qubit_from_vector(r: np.ndarray) -> np.ndarray:
    x, y, z = np.asarray(r, float) / np.linalg.norm(r)
    pol = np.arccos(np.clip(z, -1.0, 1.0))
    az = np.arctan2(y, x)
    return np.array([np.cos(pol / 2), np.exp(1j * az) * np.sin(pol / 2)])


def product_state(bloch: BlochVectorSet) -> PureState:
    vecs = [qubit_from_bloch(t, p) for t, p in bloch.angles]
    return PureState(linalg.kron(*[v.reshape(-1, 1) for v in vecs]).reshape(-1), bloch.n)


def is_permutationally_symmetric(rho: DensityMatrix | PureState, tol: float = SYMMETRY_TOL) -> bool:
    """True iff P_ab rho = rho P_ab = rho for every pair of parties."""
    rho = as_density(rho)
    m = rho.matrix
    for a, b in combinations(range(rho.n_parties), 2):
        p = linalg.symmetric_projector_pair(rho.n_parties, a, b, rho.local_dim)
        if np.max(np.abs(p @ m - m)) > tol or np.max(np.abs(m @ p - m)) > tol:
            return False
    return True


def is_permutationally_invariant(rho: DensityMatrix | PureState, tol: float = SYMMETRY_TOL) -> bool:
    """True iff SWAP_ab rho SWAP_ab = rho for every pair of parties."""
    rho = as_density(rho)
    m = rho.matrix
    for a, b in combinations(range(rho.n_parties), 2):
        s = linalg.swap_operator(rho.n_parties, a, b, rho.local_dim)
        if np.max(np.abs(s @ m @ s - m)) > tol:
            return False
    return True


# random states used by tests, sweeps and the acceptance suite


def random_pure(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(n: int, rng: np.random.Generator, d: int = 2, rank: int | None = None) -> DensityMatrix:
    dim = d**n
    g = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real, n, d)


def dicke_basis(n: int) -> np.ndarray:
    """Columns are |D_{n,0}>, ..., |D_{n,n}>."""
    return np.stack([dicke(n, m).amplitudes for m in range(n + 1)], axis=1)


def random_symmetric(n: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random state supported on the symmetric subspace."""
    small = random_density(1, rng, d=n + 1, rank=rank).matrix
    b = dicke_basis(n)
    return DensityMatrix(b @ small @ b.conj().T, n)


def random_product_bloch(n: int, rng: np.random.Generator) -> BlochVectorSet:
    v = rng.normal(size=(n, 3))
    return BlochVectorSet.from_vectors(v)


def random_fully_separable(n: int, rng: np.random.Generator, terms: int = 8) -> DensityMatrix:
    k = int(rng.integers(1, terms + 1))
    w = rng.dirichlet(np.ones(k))
    rho = sum(wi * product_state(random_product_bloch(n, rng)).density().matrix for wi in w)
    return DensityMatrix(rho, n)
