"""Numerical separable bounds for the antisymmetric three-body observable.

For product states the expectation of O_A reduces to the sum of scalar
triple products of Bloch vectors over ordered triples i<j<k, which is
maximized by multi-start projected-gradient ascent on a product of spheres.
The three-qubit biseparable bound is found with Nelder-Mead over pure
two-qubit (x) one-qubit states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import minimize

from .errors import NoConvergence, OutOfRange
from .moments import task_rng
from .operators import build_o_a
from .states import BlochVectorSet, qubit_from_bloch

STEP_INIT = 0.1
ARMIJO_C = 1e-4
BACKTRACK = 0.5
MAX_ITER = 2000
MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class OptimizationResult:
    best_value: float
    best_angles: BlochVectorSet | None
    restarts: int
    converged_fraction: float
    n: int = 3
    best_params: tuple[float, ...] = ()

    def to_json(self, seed: int | None = None) -> dict:
        conj = conjectured_bound(self.n)
        out = {
            "n": self.n,
            "best_value": self.best_value,
            "conjectured": conj,
            "gap": conj - self.best_value,
            "angles": [list(a) for a in self.best_angles.angles] if self.best_angles else [],
            "restarts": self.restarts,
            "converged_fraction": self.converged_fraction,
        }
        if self.best_params:
            out["params"] = list(self.best_params)
        if seed is not None:
            out["seed"] = seed
        return out


def conjectured_bound(n: int) -> float:
    """N^2 cot(pi/N) / (3 sqrt 3)."""
    if n < 3:
        raise OutOfRange("need N >= 3")
    return n**2 / math.tan(math.pi / n) / (3 * math.sqrt(3))


def _triples(n: int) -> np.ndarray:
    return np.array(list(combinations(range(n), 3)))


def triple_product_sum(v: np.ndarray) -> np.ndarray:
    """Sum over i<j<k of v_i . (v_j x v_k); ``v`` has shape (..., N, 3)."""
    t = _triples(v.shape[-2])
    a, b, c = v[..., t[:, 0], :], v[..., t[:, 1], :], v[..., t[:, 2], :]
    return np.einsum("...tk,...tk->...", a, np.cross(b, c))


def triple_product_grad(v: np.ndarray) -> np.ndarray:
    """Euclidean gradient with respect to each Bloch vector.

    The triple product is cyclic, so the derivative in the first, middle and
    last slot is v_j x v_k, v_k x v_i and v_i x v_j respectively.
    """
    t = _triples(v.shape[-2])
    a, b, c = v[..., t[:, 0], :], v[..., t[:, 1], :], v[..., t[:, 2], :]
    g = np.zeros_like(v)
    for slot, term in ((0, np.cross(b, c)), (1, np.cross(c, a)), (2, np.cross(a, b))):
        idx = t[:, slot]
        for col in range(v.shape[-2]):
            mask = idx == col
            if mask.any():
                g[..., col, :] += term[..., mask, :].sum(axis=-2)
    return g


def tangential(v: np.ndarray, g: np.ndarray) -> np.ndarray:
    return g - np.sum(g * v, axis=-1, keepdims=True) * v


def t_product_value(bloch: BlochVectorSet) -> float:
    if bloch.n < 3:
        raise OutOfRange("need N >= 3")
    return float(triple_product_sum(bloch.vectors()))


def remark_angles(n: int) -> BlochVectorSet:
    """Candidate maximizer: common polar angle arccos(1/sqrt 3) around x,
    azimuths 2 pi i / N."""
    theta = 2 * math.atan(math.sqrt(2 - math.sqrt(3)))
    return BlochVectorSet.from_arrays([theta] * n, [2 * math.pi * i / n for i in range(1, n + 1)])


def default_restarts(n: int) -> int:
    return 200 if n <= 5 else 500


def _random_starts(n: int, restarts: int, seed: int | None) -> np.ndarray:
    out = np.empty((restarts, n, 3))
    for r in range(restarts):
        x = task_rng(seed, r).normal(size=(n, 3))
        out[r] = x / np.linalg.norm(x, axis=1, keepdims=True)
    return out


def ascend(v: np.ndarray, tol: float = 1e-9, max_iter: int = MAX_ITER) -> tuple[np.ndarray, np.ndarray]:
    """Projected-gradient ascent with Armijo backtracking, batched over restarts.

    The first trial step is STEP_INIT; later iterations start from twice the
    last accepted step (capped at 1). Returns final vectors and a converged mask.
    """
    v = v.copy()
    r = v.shape[0]
    step = np.full(r, STEP_INIT)
    f = triple_product_sum(v)
    done = np.zeros(r, dtype=bool)
    for _ in range(max_iter):
        g = tangential(v, triple_product_grad(v))
        gn2 = np.sum(g**2, axis=(1, 2))
        done |= np.sqrt(gn2) <= tol
        act = ~done
        if not act.any():
            break
        s = step.copy()
        pending = act.copy()
        for _ in range(MAX_BACKTRACKS):
            idx = np.flatnonzero(pending)
            if idx.size == 0:
                break
            cand = v[idx] + s[idx, None, None] * g[idx]
            cand /= np.linalg.norm(cand, axis=2, keepdims=True)
            fc = triple_product_sum(cand)
            ok = fc >= f[idx] + ARMIJO_C * s[idx] * gn2[idx]
            acc = idx[ok]
            v[acc], f[acc] = cand[ok], fc[ok]
            pending[acc] = False
            s[idx[~ok]] *= BACKTRACK
        # restarts whose line search failed sit at a numerical stationary point
        done |= pending
        step = np.where(act, np.minimum(2 * s, 1.0), step)
    g = tangential(v, triple_product_grad(v))
    converged = np.sqrt(np.sum(g**2, axis=(1, 2))) <= max(tol, 1e-7)
    return v, converged


def optimize_fully_sep_bound(
    n: int, restarts: int | None = None, seed: int | None = 0, tol: float = 1e-9
) -> OptimizationResult:
    """Multi-start maximization of the triple-product sum over product states."""
    if not 3 <= n <= 8:
        raise OutOfRange("need 3 <= N <= 8")
    restarts = default_restarts(n) if restarts is None else restarts
    if restarts < 1:
        raise OutOfRange("restarts must be >= 1")
    v, conv = ascend(_random_starts(n, restarts, seed), tol)
    if not conv.any():
        raise NoConvergence("no restart reached the gradient tolerance")
    vals = triple_product_sum(v)
    vals = np.where(conv, vals, -np.inf)
    best = int(np.argmax(vals))  # first index among equal maxima
    return OptimizationResult(
        float(vals[best]), BlochVectorSet.from_vectors(v[best]), restarts, float(conv.mean()), n
    )


# three-qubit biseparable states


def _frame(theta: float, phi: float) -> tuple[np.ndarray, np.ndarray]:
    a = qubit_from_bloch(theta, phi)
    return a, np.array([-a[1].conjugate(), a[0].conjugate()])


def bisep_state(params: np.ndarray, single: int) -> np.ndarray:
    """Pure (pair) (x) (qubit ``single``) three-qubit vector.

    params = (omega, chi, theta_a, phi_a, theta_b, phi_b, theta, phi): Schmidt
    angle and phase, local frames of the pair, and the single-qubit Bloch angles.
    """
    om, chi, ta, pa, tb, pb, t, p = params
    a0, a1 = _frame(ta, pa)
    b0, b1 = _frame(tb, pb)
    pair = math.cos(om) * np.kron(a0, b0) + np.exp(1j * chi) * math.sin(om) * np.kron(a1, b1)
    psi = np.kron(pair, qubit_from_bloch(t, p)).reshape(2, 2, 2)
    order = [q for q in range(3) if q != single] + [single]
    return np.moveaxis(psi, [0, 1, 2], order).reshape(8)


def bisep_value(params: np.ndarray, single: int) -> float:
    psi = bisep_state(params, single)
    return float(np.real(psi.conj() @ build_o_a(3) @ psi))


def optimize_bisep_bound_3q(
    restarts: int = 20, seed: int | None = 0, tol: float = 1e-10, initial: np.ndarray | None = None
) -> OptimizationResult:
    """Maximize |<O_A>| over pure biseparable three-qubit states.

    Each restart runs Nelder-Mead once per choice of the single qubit. Passing
    ``initial`` replaces the random start of every restart.
    """
    if restarts < 1:
        raise OutOfRange("restarts must be >= 1")
    best, best_params, n_conv, total = -np.inf, None, 0, 0
    for r in range(restarts):
        rng = task_rng(seed, r)
        for single in range(3):
            x0 = np.asarray(initial, float) if initial is not None else rng.uniform(0, 2 * np.pi, 8)
            res = minimize(
                lambda x: -abs(bisep_value(x, single)),
                x0,
                method="Nelder-Mead",
                options={"xatol": tol, "fatol": tol, "maxiter": 8000, "maxfev": 16000},
            )
            total += 1
            if res.success:
                n_conv += 1
                if -res.fun > best:
                    best, best_params = -res.fun, (single, *map(float, res.x))
    if n_conv == 0:
        raise NoConvergence("Nelder-Mead did not converge from any start")
    return OptimizationResult(float(best), None, restarts, n_conv / total, 3, best_params)
