"""Random-rotation moments of collective spin statistics.

A collective rotation U^{(x)N} enters f_U only through the rotated axis
u = R(U) z, so the default Monte Carlo path draws u uniformly on the sphere
and evaluates f as a quadratic form in u built from the state's first and
second spin moments. The "unitary" mode draws Haar U and conjugates densely;
it is slower and kept as an independent check.

Reproducibility: samples are split into fixed-size chunks; chunk ``i`` draws
from ``np.random.default_rng(SeedSequence(seed, spawn_key=(i,)))``. The
SeedSequence hash is the 64-bit mixing step, so results do not depend on how
many threads evaluate the chunks.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .errors import BadArity, InsufficientDesignStrength, NotSymmetric, OutOfRange
from .operators import PAULIS, build_o_a, collective_j, collective_lambdas, gell_mann, levi_civita, spin_axes
from .states import DensityMatrix, PureState, as_density, is_permutationally_invariant, is_permutationally_symmetric

CHUNK = 2048


@dataclass(frozen=True)
class MomentSpec:
    alpha: float
    beta: float
    gamma: float
    order: int = 1

    def __post_init__(self):
        if self.order < 1:
            raise OutOfRange("moment order must be >= 1")

    def with_order(self, r: int) -> "MomentSpec":
        return MomentSpec(self.alpha, self.beta, self.gamma, r)

    @classmethod
    def obs1(cls, n: int, order: int = 1) -> "MomentSpec":
        """Parameters making f_U equal the rotated pair covariance.

        With <J_u^2> = N/4 + N(N-1)/4 t_uu and <J_u> = (N/2) a_u these give
        f_U = t_uu - a_u^2 exactly.
        """
        if n < 2:
            raise OutOfRange("need N >= 2")
        n2 = n * (n - 1)
        return cls(4 / n2, 4 / (n * n2), -1 / (n - 1), order)

    @classmethod
    def obs2(cls, order: int = 1) -> "MomentSpec":
        return cls(3.0, 0.0, 0.0, order)

    @classmethod
    def obs4(cls, n: int, order: int = 1) -> "MomentSpec":
        return cls(0.0, 12 / n**2, 0.0, order)

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "r": self.order}


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    std_error: float
    samples: int
    mode: str

    def to_json(self, spec: MomentSpec | None = None, seed: int | None = None) -> dict:
        out = asdict(self)
        if spec is not None:
            out["spec"] = spec.to_json()
        out["seed"] = seed
        return out


# random numbers


def task_rng(seed: int | None, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def default_threads() -> int:
    env = os.environ.get("SPINMOMENTS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def chunked_samples(
    draw: Callable[[np.random.Generator, int], np.ndarray],
    samples: int,
    seed: int | None,
    threads: int | None = None,
) -> np.ndarray:
    """Concatenate ``draw(rng_i, count_i)`` over fixed chunks in index order."""
    counts = [min(CHUNK, samples - s) for s in range(0, samples, CHUNK)]
    jobs = [(i, c) for i, c in enumerate(counts)]
    threads = threads or default_threads()
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: draw(task_rng(seed, job[0]), job[1]), jobs))
    else:
        parts = [draw(task_rng(seed, i), c) for i, c in jobs]
    return np.concatenate(parts)


def _estimate(values: np.ndarray, mode: str) -> MomentEstimate:
    n = values.size
    std = float(np.std(values, ddof=1)) if n > 1 else 0.0
    return MomentEstimate(float(np.mean(values)), float(std / np.sqrt(n)), n, mode)


def sample_directions(rng: np.random.Generator, count: int) -> np.ndarray:
    v = rng.normal(size=(count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def sample_haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random d x d unitary: QR of a complex Ginibre matrix with the
    phases of R's diagonal moved into Q."""
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def sample_haar_su2(rng: np.random.Generator) -> np.ndarray:
    return sample_haar_unitary(2, rng)


def rotated_axis(u: np.ndarray) -> np.ndarray:
    """Unit vector n with U sigma_z U^dag = n . sigma."""
    rot = u @ PAULIS[2] @ u.conj().T
    return np.array([0.5 * np.trace(p @ rot).real for p in PAULIS])


# closed-form ingredients


def spin_moments(rho: DensityMatrix | PureState) -> tuple[np.ndarray, np.ndarray]:
    """First moments <J_l> and symmetrized second moments <{J_l, J_m}>/2."""
    rho = as_density(rho)
    js = spin_axes(rho.n_parties)
    a = np.array([rho.expect(j) for j in js])
    m = np.empty((3, 3))
    for i in range(3):
        for k in range(i, 3):
            m[i, k] = m[k, i] = rho.expect(0.5 * (js[i] @ js[k] + js[k] @ js[i]))
    return a, m


def spin_covariance(rho: DensityMatrix | PureState) -> np.ndarray:
    a, m = spin_moments(rho)
    return m - np.outer(a, a)


def _f_quadratic(a: np.ndarray, m: np.ndarray, dirs: np.ndarray, spec: MomentSpec) -> np.ndarray:
    mean = dirs @ a
    second = np.einsum("si,ij,sj->s", dirs, m, dirs)
    return spec.alpha * (second - mean**2) + spec.beta * mean**2 + spec.gamma


def f_value(rho: DensityMatrix | PureState, direction: Sequence[float], spec: MomentSpec) -> float:
    """alpha Var(J_u) + beta <J_u>^2 + gamma, with J_u built densely."""
    rho = as_density(rho)
    ju = collective_j(rho.n_parties, direction)
    mean = rho.expect(ju)
    var = rho.expect(ju @ ju) - mean**2
    return spec.alpha * var + spec.beta * mean**2 + spec.gamma


def f_value_unitary(rho: DensityMatrix | PureState, u: np.ndarray, spec: MomentSpec) -> float:
    """f_U evaluated by conjugating J_z with U^{(x)N}."""
    rho = as_density(rho)
    big = linalg.kron(*([u] * rho.n_parties))
    jz = big @ spin_axes(rho.n_parties)[2] @ big.conj().T
    mean = rho.expect(jz)
    var = rho.expect(jz @ jz) - mean**2
    return spec.alpha * var + spec.beta * mean**2 + spec.gamma


def moment_mc(
    rho: DensityMatrix | PureState,
    spec: MomentSpec,
    samples: int,
    seed: int | None = 0,
    mode: str = "direction",
    threads: int | None = None,
) -> MomentEstimate:
    """Monte Carlo estimate of the Haar average of f_U^r."""
    if samples < 2:
        raise OutOfRange("need at least 2 samples")
    rho = as_density(rho)
    r = spec.order
    if mode == "direction":
        a, m = spin_moments(rho)

        def draw(rng, count):
            return _f_quadratic(a, m, sample_directions(rng, count), spec) ** r

    elif mode == "unitary":

        def draw(rng, count):
            return np.array([f_value_unitary(rho, sample_haar_su2(rng), spec) ** r for _ in range(count)])

    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    return _estimate(chunked_samples(draw, samples, seed, threads), mode)


# sphere integrals of O^(i) = tr(sigma_i U sigma_z U^dag) = 2 n_i


def _pairings(idx: Sequence[int]):
    if not idx:
        yield []
        return
    first, rest = idx[0], idx[1:]
    for k in range(len(rest)):
        for tail in _pairings(rest[:k] + rest[k + 1:]):
            yield [(first, rest[k])] + tail


def haar_integral_identities(indices: Sequence[str | int]) -> float:
    """Haar average of a product of 2, 4 or 6 factors O^(i).

    Equals 4/3, 16/15 or 64/105 times the sum over perfect pairings of
    Kronecker deltas.
    """
    idx = [("xyz".index(i) if isinstance(i, str) else int(i)) for i in indices]
    prefactor = {2: 4 / 3, 4: 16 / 15, 6: 64 / 105}.get(len(idx))
    if prefactor is None:
        raise BadArity(f"expected 2, 4 or 6 indices, got {len(idx)}")
    total = sum(all(idx[a] == idx[b] for a, b in p) for p in _pairings(list(range(len(idx)))))
    return prefactor * total


def j1_closed_form(rho: DensityMatrix | PureState) -> float:
    """Sum of Var(J_l) over l = x, y, z."""
    return float(np.trace(spin_covariance(rho)))


def lambda_covariance(rho: DensityMatrix | PureState, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Means and covariance matrix of the collective Gell-Mann operators."""
    rho = as_density(rho)
    lams = collective_lambdas(rho.n_parties, d)
    mean = np.array([rho.expect(l) for l in lams])
    k = len(lams)
    cov = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            cov[i, j] = cov[j, i] = rho.expect(0.5 * (lams[i] @ lams[j] + lams[j] @ lams[i])) - mean[i] * mean[j]
    return mean, cov


def d_closed_form(rho: DensityMatrix | PureState, d: int) -> float:
    """Sum of Var(Lambda_l) over the d^2-1 collective Gell-Mann operators."""
    return float(np.trace(lambda_covariance(rho, d)[1]))


def d_moment_mc(
    rho: DensityMatrix | PureState,
    d: int,
    samples: int,
    seed: int | None = 0,
    l: int = 1,
    mode: str = "coefficients",
    threads: int | None = None,
) -> MomentEstimate:
    """Monte Carlo estimate of (d^2-1) * Haar average of Var(U Lambda_l U^dag).

    ``coefficients`` expands U lambda_l U^dag in the Gell-Mann basis and uses
    the precomputed covariance; ``dense`` conjugates the N-party operator.
    """
    rho = as_density(rho)
    gm = gell_mann(d)
    lam = gm[l - 1]
    k = d * d - 1
    if mode == "coefficients":
        _, cov = lambda_covariance(rho, d)
        basis = np.stack(gm)

        def one(u):
            c = np.einsum("kij,ji->k", basis, u @ lam @ u.conj().T).real / d
            return k * c @ cov @ c

    elif mode == "dense":
        n = rho.n_parties

        def one(u):
            loc = u @ lam @ u.conj().T / d
            op = sum(linalg.embed(loc, i, n, d) for i in range(n))
            mean = rho.expect(op)
            return k * (rho.expect(op @ op) - mean**2)

    else:
        raise ValueError(f"unknown mode {mode!r}")

    def draw(rng, count):
        return np.array([one(sample_haar_unitary(d, rng)) for _ in range(count)])

    return _estimate(chunked_samples(draw, samples, seed, threads), f"qudit-{mode}")


def t_average(rho: DensityMatrix | PureState) -> float:
    """tr(rho O_A)."""
    rho = as_density(rho)
    if rho.n_parties < 3:
        raise OutOfRange("need N >= 3")
    return rho.expect(build_o_a(rho.n_parties))


def three_body_correlations(rho: DensityMatrix | PureState, parties: tuple[int, int, int]) -> np.ndarray:
    """xi_abc = <sigma_a (x) sigma_b (x) sigma_c> on the given three parties."""
    red = as_density(rho).reduce(parties).matrix
    out = np.empty((3, 3, 3))
    for a in range(3):
        for b in range(3):
            for c in range(3):
                op = linalg.kron(PAULIS[a], PAULIS[b], PAULIS[c])
                out[a, b, c] = np.real(np.einsum("ij,ji->", red, op))
    return out


def t_correlation_sum(rho: DensityMatrix | PureState) -> float:
    """Levi-Civita weighted three-body correlations summed over triples."""
    rho = as_density(rho)
    eps = levi_civita()
    return float(sum(np.sum(eps * three_body_correlations(rho, t)) for t in combinations(range(rho.n_parties), 3)))


def pair_covariance(
    rho: DensityMatrix | PureState, a: int = 0, b: int = 1
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(C, T, a_vec, b_vec) with T_ij = <sigma_i^a sigma_j^b>, C = T - a b^T."""
    rho = as_density(rho)
    red = rho.reduce((a, b)).matrix
    if a > b:  # reduce() orders parties ascending
        red = linalg.swap_operator(2, 0, 1) @ red @ linalg.swap_operator(2, 0, 1)
    t = np.array([[np.real(np.einsum("ij,ji->", red, np.kron(p, q))) for q in PAULIS] for p in PAULIS])
    ra = linalg.partial_trace(red, [0], 2)
    rb = linalg.partial_trace(red, [1], 2)
    av = np.array([np.real(np.trace(ra @ p)) for p in PAULIS])
    bv = np.array([np.real(np.trace(rb @ p)) for p in PAULIS])
    return t - np.outer(av, bv), t, av, bv


def covariance_moments(c: np.ndarray) -> tuple[float, float, float]:
    """Sphere moments of Cov_u = n^T C n for r = 1, 2, 3 (general C)."""
    ct = c.T
    tr = np.trace
    m1 = tr(c) / 3
    m2 = (tr(c) ** 2 + tr(c @ ct) + tr(c @ c)) / 15
    m3 = (
        tr(c) * (tr(c) ** 2 + 3 * tr(c @ c) + 3 * tr(c @ ct))
        + 4 * tr(c @ c @ ct)
        + 2 * tr(c @ ct @ ct)
        + 2 * tr(c @ c @ c)
    ) / 105
    return float(m1), float(m2), float(m3)


def obs1_moments(rho: DensityMatrix | PureState) -> tuple[float, float, float]:
    """Closed-form first three moments for a permutationally symmetric state."""
    rho = as_density(rho)
    if not is_permutationally_symmetric(rho):
        raise NotSymmetric("state is not permutationally symmetric")
    c, *_ = pair_covariance(rho, 0, 1)
    return covariance_moments(0.5 * (c + c.T))


# two ensembles


@dataclass(frozen=True)
class TwoEnsembleTerms:
    value: float
    eta_form: float
    covariance: np.ndarray
    a: np.ndarray
    b: np.ndarray
    g2: float
    j_a: float
    j_b: float


def _check_ensemble_marginals(rho: DensityMatrix, n: int, strict: bool) -> None:
    check = is_permutationally_symmetric if strict else is_permutationally_invariant
    for side in (range(n), range(n, 2 * n)):
        if not check(rho.reduce(side)):
            raise NotSymmetric("ensemble marginal is not permutationally " + ("symmetric" if strict else "invariant"))


def two_ensemble_terms(
    rho_ab: DensityMatrix | PureState, n: int, strict: bool = False, check_pairs: int = 3, seed: int = 0
) -> TwoEnsembleTerms:
    """G^(2) + J_A^(1) + J_B^(1) - J_A^(1) J_B^(1) for two n-qubit ensembles.

    Evaluated from the (A_1, B_1) cross-pair covariance and cross-checked
    against the collective-variance form built from J_{p,A} +/- J_{q,B}.
    Marginals must be permutationally invariant (``strict`` requires the
    stronger symmetric-subspace condition); a few random cross pairs are
    spot-checked against (A_1, B_1).
    """
    rho = as_density(rho_ab)
    if rho.n_parties != 2 * n:
        raise OutOfRange(f"state has {rho.n_parties} qubits, expected {2 * n}")
    if 2 * n > 12:
        raise OutOfRange("2N must not exceed 12")
    _check_ensemble_marginals(rho, n, strict)
    c, _, av, bv = pair_covariance(rho, 0, n)
    rng = np.random.default_rng(seed)
    for _ in range(check_pairs if n > 1 else 0):
        i, j = int(rng.integers(n)), int(n + rng.integers(n))
        if np.max(np.abs(pair_covariance(rho, i, j)[0] - c)) > 1e-9:
            raise NotSymmetric(f"cross pair ({i}, {j}) differs from (0, {n})")
    sa, sb = float(av @ av), float(bv @ bv)
    g2 = float(np.sum(c**2))
    value = g2 + sa + sb - sa * sb
    eta = _eta_form(rho, n)
    if abs(eta - value) > 1e-9:
        raise ArithmeticError(f"covariance form {value} and variance form {eta} disagree")
    return TwoEnsembleTerms(value, eta, c, av, bv, g2, sa, sb)


def _ensemble_ops(n: int):
    from .operators import two_ensemble_j

    plus = [[two_ensemble_j(n, p, 1, q) for q in range(3)] for p in range(3)]
    minus = [[two_ensemble_j(n, p, -1, q) for q in range(3)] for p in range(3)]
    return plus, minus


def _var(rho: DensityMatrix, op: np.ndarray) -> float:
    m = rho.expect(op)
    return rho.expect(op @ op) - m**2


def _eta_form(rho: DensityMatrix, n: int) -> float:
    """(1/N^4){sum eta_pq^2 + 4N^2 sum(<J_pA>^2+<J_pB>^2) - 16 sum <J_pA>^2<J_qB>^2}
    with eta_pq = Var(J_{p,A} + J_{q,B}) - Var(J_{p,A} - J_{q,B})."""
    plus, minus = _ensemble_ops(n)
    eta = np.array([[_var(rho, plus[p][q]) - _var(rho, minus[p][q]) for q in range(3)] for p in range(3)])
    ja = np.array([rho.expect(0.5 * (plus[p][p] + minus[p][p])) for p in range(3)])
    jb = np.array([rho.expect(0.5 * (plus[p][p] - minus[p][p])) for p in range(3)])
    total = np.sum(eta**2) + 4 * n**2 * (ja @ ja + jb @ jb) - 16 * np.sum(np.outer(ja**2, jb**2))
    return float(total / n**4)


def two_ensemble_eta_same_axis(rho_ab: DensityMatrix | PureState, n: int) -> float:
    """The variance form with eta_pq = Var(J_p^+) - Var(J_q^-) using the
    same-axis combinations J_l^+/- = J_{l,A} +/- J_{l,B} for both entries.

    Agrees with ``two_ensemble_lhs`` only when the cross covariance is
    diagonal with equal single-ensemble variances; kept for comparison.
    """
    rho = as_density(rho_ab)
    plus, minus = _ensemble_ops(n)
    vp = [_var(rho, plus[p][p]) for p in range(3)]
    vm = [_var(rho, minus[p][p]) for p in range(3)]
    eta = np.subtract.outer(vp, vm)
    ja = np.array([rho.expect(0.5 * (plus[p][p] + minus[p][p])) for p in range(3)])
    jb = np.array([rho.expect(0.5 * (plus[p][p] - minus[p][p])) for p in range(3)])
    total = np.sum(eta**2) + 4 * n**2 * (ja @ ja + jb @ jb) - 16 * np.sum(np.outer(ja**2, jb**2))
    return float(total / n**4)


def two_ensemble_lhs(rho_ab: DensityMatrix | PureState, n: int, strict: bool = False) -> float:
    return two_ensemble_terms(rho_ab, n, strict).value


def two_ensemble_mc(
    rho_ab: DensityMatrix | PureState, n: int, samples: int, seed: int | None = 0, threads: int | None = None
) -> dict:
    """Monte Carlo of g E[eta_U^2] and beta E[<J_u>^2] on each ensemble.

    Uses the dense cross covariance of the collective operators directly, so
    it needs no symmetry assumption.
    """
    rho = as_density(rho_ab)
    from .operators import two_ensemble_j

    ja_ops = [0.5 * (two_ensemble_j(n, p, 1) + two_ensemble_j(n, p, -1)) for p in range(3)]
    jb_ops = [0.5 * (two_ensemble_j(n, p, 1) - two_ensemble_j(n, p, -1)) for p in range(3)]
    ma = np.array([rho.expect(o) for o in ja_ops])
    mb = np.array([rho.expect(o) for o in jb_ops])
    k = np.array([[rho.expect(ja_ops[p] @ jb_ops[q]) - ma[p] * mb[q] for q in range(3)] for p in range(3)])
    g = (3 / n**2) ** 2
    beta = 12 / n**2

    def draw(rng, count):
        u = sample_directions(rng, count)
        v = sample_directions(rng, count)
        eta = 4 * np.einsum("sp,pq,sq->s", u, k, v)
        return np.stack([g * eta**2, beta * (u @ ma) ** 2, beta * (v @ mb) ** 2], axis=1)

    vals = chunked_samples(draw, samples, seed, threads)
    means = vals.mean(axis=0)
    errs = vals.std(axis=0, ddof=1) / np.sqrt(samples)
    g2, ja, jb = means
    lhs = g2 + ja + jb - ja * jb
    # first-order error propagation, treating the three averages as independent
    err = float(np.sqrt(errs[0] ** 2 + ((1 - jb) * errs[1]) ** 2 + ((1 - ja) * errs[2]) ** 2))
    return {"g2": float(g2), "j_a": float(ja), "j_b": float(jb), "value": float(lhs), "std_error": err, "samples": samples}


# spherical designs

_GOLDEN = (1 + np.sqrt(5)) / 2


def design_points(design: str) -> tuple[np.ndarray, int]:
    """Unit vectors of a spherical design and its strength."""
    if design == "octahedron":
        pts = np.vstack([np.eye(3), -np.eye(3)])
        return pts, 3
    if design == "icosahedron":
        base = []
        for s1 in (1, -1):
            for s2 in (1, -1):
                v = np.array([0.0, s1, s2 * _GOLDEN])
                base += [v, np.roll(v, 1), np.roll(v, 2)]
        pts = np.array(base)
        return pts / np.linalg.norm(pts, axis=1, keepdims=True), 5
    raise ValueError(f"unknown design {design!r}")


def design_quadrature_moment(rho: DensityMatrix | PureState, spec: MomentSpec, design: str = "octahedron") -> float:
    """Average of f^r over a spherical design; exact when strength >= 2r."""
    pts, strength = design_points(design)
    if strength < 2 * spec.order:
        raise InsufficientDesignStrength(f"{design} has strength {strength} < {2 * spec.order}")
    a, m = spin_moments(rho)
    return float(np.mean(_f_quadratic(a, m, pts, spec) ** spec.order))
