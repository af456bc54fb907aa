"""Entanglement decisions built on the moments module.

Every check returns a :class:`CriterionVerdict`. ``margin`` is the signed
distance past the separable bound: positive means the bound is violated.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from . import linalg
from .errors import ComplexRoots, OutOfRange, ShapeMismatch
from .moments import (
    MomentEstimate,
    d_closed_form,
    j1_closed_form,
    t_average,
    two_ensemble_terms,
)
from .states import DensityMatrix, PureState, as_density, dicke, depolarize, mixed_family

DEFAULT_TOL = 1e-9
PPT_TOL = 1e-9
Z_THRESHOLD = 5.0


@dataclass(frozen=True)
class CriterionVerdict:
    criterion: str
    value: float
    bound: float
    violated: bool
    margin: float
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "criterion": self.criterion,
            "value": self.value,
            "bound": self.bound,
            "violated": self.violated,
            "margin": self.margin,
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _verdict(name, value, bound, margin, tol, std_error=None, **diag) -> CriterionVerdict:
    diag["tol"] = tol
    if std_error is not None:
        diag["std_error"] = std_error
        z = margin / std_error if std_error > 0 else math.copysign(math.inf, margin) if margin else 0.0
        diag["z_score"] = z
        diag["statistically_violated"] = bool(z >= Z_THRESHOLD)
    return CriterionVerdict(name, float(value), float(bound), bool(margin > tol), float(margin), diag)


# Obs. 1: covariance eigenvalues from three moments


def covariance_traces(m1: float, m2: float, m3: float) -> tuple[float, float, float]:
    """(tr C, tr C^2, tr C^3) of a symmetric C from its sphere moments."""
    t1 = 3 * m1
    t2 = (15 * m2 - t1**2) / 2
    t3 = (105 * m3 - t1 * (t1**2 + 6 * t2)) / 8
    return t1, t2, t3


def _cubic_roots(e1: float, e2: float, e3: float, tol: float) -> np.ndarray:
    """Real roots of l^3 - e1 l^2 + e2 l - e3 by the trigonometric method."""
    shift = e1 / 3
    p = e2 - e1**2 / 3
    q = -2 * e1**3 / 27 + e1 * e2 / 3 - e3
    scale = max(1.0, abs(e1), abs(e2) ** 0.5, abs(e3) ** (1 / 3))
    if p > tol * scale**2:
        raise ComplexRoots(f"depressed cubic has p={p:.3e} > 0: moments are inconsistent")
    if abs(p) <= 1e-15 * scale**2:
        t = np.full(3, -np.cbrt(q))
    else:
        r = 2 * math.sqrt(-p / 3)
        arg = 3 * q / (p * r)
        if abs(arg) > 1 + tol:
            raise ComplexRoots(f"cubic has non-real roots (arccos argument {arg:.6g})")
        phi = math.acos(max(-1.0, min(1.0, arg)))
        t = r * np.cos(phi / 3 - 2 * np.pi * np.arange(3) / 3)
    roots = t + shift

    def poly(x):
        return ((x - e1) * x + e2) * x - e3

    for i, x in enumerate(roots):  # Newton polish; keep a step only if it helps
        for _ in range(3):
            d = (3 * x - 2 * e1) * x + e2
            if d == 0:
                break
            nx = x - poly(x) / d
            if abs(poly(nx)) >= abs(poly(x)):
                break
            x = nx
        roots[i] = x
    return np.sort(roots)


def obs1_eigenvalues(m1: float, m2: float, m3: float, root_tol: float = 1e-6) -> np.ndarray:
    t1, t2, t3 = covariance_traces(m1, m2, m3)
    e2 = 0.5 * (t1**2 - t2)
    e3 = (t1**3 - 3 * t1 * t2 + 2 * t3) / 6
    return _cubic_roots(t1, e2, e3, root_tol)


def obs1_decide(
    m1: float,
    m2: float,
    m3: float,
    tol: float = DEFAULT_TOL,
    std_error: float | None = None,
    root_tol: float = 1e-6,
) -> CriterionVerdict:
    """Spin-squeezing entanglement iff the smallest covariance eigenvalue is
    negative. ``std_error`` (from MC inputs) adds a z-score to diagnostics."""
    c = obs1_eigenvalues(m1, m2, m3, root_tol)
    return _verdict("obs1", c[0], 0.0, -c[0], tol, std_error, eigenvalues=c.tolist(), moments=[m1, m2, m3])


MC_ROOT_TOL = 0.5


def obs1_decide_estimates(
    estimates: Sequence[MomentEstimate], tol: float = DEFAULT_TOL, root_tol: float = MC_ROOT_TOL
) -> CriterionVerdict:
    """obs1_decide on Monte Carlo moments; the eigenvalue error is propagated
    numerically from the moment standard errors.

    Sampling noise can push a (near) double eigenvalue slightly into the
    complex region; ``root_tol`` bounds how far the trigonometric solution
    may be clamped back before ComplexRoots is raised.
    """
    m = np.array([e.mean for e in estimates])
    se = np.array([e.std_error for e in estimates])
    base = obs1_eigenvalues(*m, root_tol=root_tol)[0]
    var = 0.0
    for i in range(3):
        h = max(1e-7, 1e-4 * abs(m[i]))
        dm = m.copy()
        dm[i] += h
        try:
            var += ((obs1_eigenvalues(*dm, root_tol=root_tol)[0] - base) / h * se[i]) ** 2
        except ComplexRoots:
            pass
    return obs1_decide(*m, tol=tol, std_error=float(np.sqrt(var)), root_tol=root_tol)


def obs1_check(rho: DensityMatrix | PureState, tol: float = DEFAULT_TOL) -> CriterionVerdict:
    """Closed-form moments of the (1,2) pair covariance fed to obs1_decide."""
    from .moments import obs1_moments

    return obs1_decide(*obs1_moments(rho), tol=tol)


# Obs. 2 and the qudit generalization


def obs2_check(
    rho: DensityMatrix | PureState, tol: float = DEFAULT_TOL, estimate: MomentEstimate | None = None
) -> CriterionVerdict:
    """Sum of collective variances against N/2; pass ``estimate`` to decide
    from a Monte Carlo value instead of the closed form."""
    rho = as_density(rho)
    n = rho.n_parties
    value = estimate.mean if estimate is not None else j1_closed_form(rho)
    se = estimate.std_error if estimate is not None else None
    return _verdict("obs2", value, n / 2, n / 2 - value, tol, se)


def obs2_qudit_check(rho: DensityMatrix | PureState, d: int | None = None, tol: float = DEFAULT_TOL) -> CriterionVerdict:
    rho = as_density(rho)
    d = d or rho.local_dim
    bound = rho.n_parties * (d - 1) / d
    value = d_closed_form(rho, d)
    return _verdict("obs2-qudit", value, bound, bound - value, tol, d=d)


# Obs. 3


def p_fs(n: int) -> float:
    """N^2 cot(pi/N) / (3 sqrt 3)."""
    if n < 3:
        raise OutOfRange("need N >= 3")
    return n**2 / math.tan(math.pi / n) / (3 * math.sqrt(3))


BISEP_BOUND_3Q = 2.0


def obs3_check(rho: DensityMatrix | PureState, tol: float = DEFAULT_TOL) -> CriterionVerdict:
    rho = as_density(rho)
    n = rho.n_parties
    if n < 3:
        raise OutOfRange("need N >= 3")
    value = abs(t_average(rho))
    bound = p_fs(n)
    diag = {}
    if n == 3:
        diag["gme_bound"] = BISEP_BOUND_3Q
        diag["gme"] = bool(value > BISEP_BOUND_3Q + tol)
    return _verdict("obs3", value, bound, value - bound, tol, **diag)


# Obs. 4 and its m-ensemble average


def obs4_check(rho_ab: DensityMatrix | PureState, n: int, tol: float = DEFAULT_TOL, strict: bool = False) -> CriterionVerdict:
    t = two_ensemble_terms(rho_ab, n, strict=strict)
    return _verdict(
        "obs4",
        t.value,
        1.0,
        t.value - 1.0,
        tol,
        g2=t.g2,
        j_a=t.j_a,
        j_b=t.j_b,
        variance_form=t.eta_form,
        cross_covariance=t.covariance.tolist(),
    )


def _ensemble_pair_state(rho: DensityMatrix, x: int, y: int, n: int) -> DensityMatrix:
    keep = list(range(x * n, (x + 1) * n)) + list(range(y * n, (y + 1) * n))
    return rho.reduce(keep)


def multi_ensemble_check(
    rho: DensityMatrix | PureState, m: int, n: int, tol: float = DEFAULT_TOL, strict: bool = False
) -> CriterionVerdict:
    """Average of the two-ensemble quantity over all pairs of m ensembles of n qubits."""
    rho = as_density(rho)
    if m < 2:
        raise OutOfRange("need at least two ensembles")
    if m * n > 12 or rho.n_parties != m * n:
        raise OutOfRange(f"expected m*N = {m * n} <= 12 qubits, state has {rho.n_parties}")
    pairs = {}
    for x, y in combinations(range(m), 2):
        pairs[f"{x},{y}"] = two_ensemble_terms(_ensemble_pair_state(rho, x, y, n), n, strict=strict).value
    value = 2 / (m * (m - 1)) * sum(pairs.values())
    return _verdict("multi-ensemble", value, 1.0, value - 1.0, tol, pairs=pairs)


def dicke_two_ensemble_analytic(n: int, p: float = 1.0) -> tuple[float, float]:
    """Closed-form two-ensemble value of the depolarized |D_{2N,N}> and the
    critical noise p*(N) = N(2N-1)/sqrt(6N^4 - 2N^3 + 1).

    These are the printed closed forms; ``dicke_two_ensemble_dense`` gives
    the value obtained by evaluating the criterion on the state itself.
    """
    if n < 1:
        raise OutOfRange("need N >= 1")
    q = 6 * n**4 - 2 * n**3 + 1
    value = q * p**2 / ((1 - 2 * n) ** 2 * n**2)
    return value, n * (2 * n - 1) / math.sqrt(q)


def dicke_two_ensemble_dense(n: int, p: float = 1.0) -> float:
    """two_ensemble_lhs of p|D_{2N,N}><D_{2N,N}| + (1-p) I/4^N, split N|N."""
    return two_ensemble_terms(depolarize(dicke(2 * n, n), 1 - p), n).value


# PPT and Lemma bounds


def ppt_classify(rho: DensityMatrix | PureState, tol: float = PPT_TOL) -> dict:
    """Minimum eigenvalue of the partial transpose for every bipartition."""
    rho = as_density(rho)
    n = rho.n_parties
    if n > 10:
        raise OutOfRange("N must be <= 10")
    mins = {}
    for side in linalg.bipartitions(n):
        pt = linalg.partial_transpose(rho.matrix, side, n, rho.local_dim)
        mins[side] = float(linalg.hermitian_eigvals(pt)[0])
    return {"min_eigenvalues": mins, "ppt_all": all(v >= -tol for v in mins.values())}


@dataclass(frozen=True)
class LemmaBounds:
    value: float
    fs_bound: float
    bisep_bound: float


_ROLES = ((0, 1, 2), (1, 0, 2), (2, 0, 1))  # (X, Y, Z) party order; X is contracted alone


def lemma_bounds(rho_abc: DensityMatrix | PureState, w: np.ndarray, s: Sequence[np.ndarray]) -> LemmaBounds:
    """State-dependent fully separable and biseparable bounds on <W_S>."""
    from .operators import build_w_s

    rho = as_density(rho_abc)
    w = np.asarray(w, dtype=float)
    s = [np.asarray(m, dtype=complex) for m in s]
    op = build_w_s(w, s)
    d = s[0].shape[0]
    if rho.n_parties != 3 or rho.local_dim != d:
        raise ShapeMismatch("state must have three parties with the operators' local dimension")
    value = rho.expect(op)
    local = [np.array([rho.reduce([x]).expect(m) for m in s]) for x in range(3)]
    fs = 0.0
    bisep = 0.0
    for x, y, z in _ROLES:
        wt = np.transpose(w, (x, y, z))  # w indexed by parties (x, y, z)
        v = np.einsum("ijk,j,k->i", wt, local[y], local[z])
        fs = max(fs, float(np.linalg.norm(local[x]) * np.linalg.norm(v)))
        # bipartition (y z) | x: pair correlations of y, z and contraction over x
        pair = rho.reduce(sorted((y, z)))
        yz = (y, z) if y < z else (z, y)
        corr = np.array([[pair.expect(np.kron(s[a], s[b])) for b in range(len(s))] for a in range(len(s))])
        if (y, z) != yz:
            corr = corr.T
        zstar = np.einsum("ijk,i->jk", wt, local[x])
        sv_s = np.linalg.svd(corr, compute_uv=False)
        sv_z = np.linalg.svd(zstar, compute_uv=False)
        bisep = max(bisep, float(np.sum(sv_s * sv_z)))
    return LemmaBounds(float(value), fs, bisep)


# Fig. 2 style region scans

REGIONS = ("sep-undetected", "detected", "bound-entangled-detected")
SCAN_HEADER = ("x", "y", "t_abs", "fs_bound", "bisep_bound", "ppt_all", "region")


@dataclass(frozen=True)
class ScanRow:
    x: float
    y: float
    t_abs: float
    fs_bound: float
    bisep_bound: float
    ppt_all: bool
    region: str


def grid_points(step: float) -> list[tuple[float, float]]:
    """Feasible (x, y) lattice points with x + y <= 1, row-major in x then y."""
    if step <= 0:
        raise OutOfRange("grid step must be positive")
    k = int(math.floor(1 / step + 1e-9))
    pts = []
    for i in range(k + 1):
        for j in range(k + 1 - i):
            x, y = round(i * step, 12), round(j * step, 12)
            if x + y <= 1 + 1e-12:
                pts.append((x, y))
    return pts


def scan_point(n: int, x: float, y: float, tol: float = DEFAULT_TOL) -> ScanRow:
    rho = mixed_family(n, x, y)
    t_abs = abs(t_average(rho))
    fs = p_fs(n)
    ppt = ppt_classify(rho)["ppt_all"]
    detected = t_abs > fs + tol
    region = REGIONS[0] if not detected else REGIONS[2] if ppt else REGIONS[1]
    return ScanRow(x, y, t_abs, fs, BISEP_BOUND_3Q if n == 3 else math.nan, ppt, region)


def scan_regions(n: int, step: float, threads: int | None = None) -> list[ScanRow]:
    if not 3 <= n <= 6:
        raise OutOfRange("scan supports 3 <= N <= 6")
    pts = grid_points(step)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda p: scan_point(n, *p), pts))
    return [scan_point(n, *p) for p in pts]


def scan_to_csv(rows: Sequence[ScanRow]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(SCAN_HEADER)
    for r in rows:
        wr.writerow([repr(r.x), repr(r.y), repr(r.t_abs), repr(r.fs_bound), repr(r.bisep_bound), str(r.ppt_all).lower(), r.region])
    return buf.getvalue()
