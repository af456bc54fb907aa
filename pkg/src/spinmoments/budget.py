"""Finite-shot estimation of the first moment and measurement budgets.

For each random setting, K projective measurements of the rotated J_z give
outcomes in {-N/2, ..., N/2}; three times their Bessel-corrected sample
variance is an unbiased estimate of 3 Var(J_u). The one-sided
Chebyshev-Cantelli inequality converts the estimator variance into the
number of settings M needed to certify a violation at a given confidence.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import OutOfRange, TooFewShots
from .moments import sample_directions, task_rng
from .operators import unit_direction
from .states import DensityMatrix, PureState, as_density, qubit_from_vector, rho_p
from . import linalg

P_SEP = 2 / 3


@dataclass(frozen=True)
class ShotBatch:
    direction: tuple[float, float, float]
    outcomes: tuple[float, ...]
    n: int

    def __post_init__(self):
        for x in self.outcomes:
            k = (self.n - 2 * x) / 2
            if abs(k - round(k)) > 1e-12 or not 0 <= round(k) <= self.n:
                raise OutOfRange(f"outcome {x} is not an eigenvalue of J_z for N={self.n}")

    @property
    def k(self) -> int:
        return len(self.outcomes)


def _rotation_to_z(u: np.ndarray) -> np.ndarray:
    """Single-qubit unitary V with V (u . sigma) V^dag = sigma_z."""
    plus = qubit_from_vector(u)
    minus = np.array([-plus[1].conjugate(), plus[0].conjugate()])
    return np.vstack([plus.conj(), minus.conj()])


@lru_cache(maxsize=None)
def _hamming_weights(n: int) -> np.ndarray:
    return np.array([bin(i).count("1") for i in range(2**n)])


def outcome_distribution(rho: DensityMatrix | PureState, direction: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues m = (N-2k)/2 of J_u and their probabilities.

    The state is rotated so that u maps to z; the probability of m sums the
    diagonal over basis states with k excitations.
    """
    rho = as_density(rho)
    n = rho.n_parties
    v = linalg.kron(*([_rotation_to_z(unit_direction(direction))] * n))
    diag = np.real(np.sum((v @ rho.matrix) * v.conj(), axis=1))
    probs = np.clip(np.bincount(_hamming_weights(n), weights=diag, minlength=n + 1), 0.0, None)
    probs /= probs.sum()
    values = (n - 2 * np.arange(n + 1)) / 2
    return values, probs


def simulate_shots(
    rho: DensityMatrix | PureState, direction: Sequence[float], k: int, seed: int | None = 0
) -> ShotBatch:
    if k < 1:
        raise TooFewShots("need at least one shot")
    values, probs = outcome_distribution(rho, direction)
    rng = np.random.default_rng(seed)
    out = rng.choice(values, size=k, p=probs)
    return ShotBatch(tuple(map(float, direction)), tuple(map(float, out)), as_density(rho).n_parties)


def f1_estimates(outcomes: np.ndarray) -> np.ndarray:
    """3 x sample variance along the last axis (K >= 2)."""
    if outcomes.shape[-1] < 2:
        raise TooFewShots("need K >= 2 shots per setting")
    return 3 * np.var(outcomes, axis=-1, ddof=1)


def unbiased_f1(batch: ShotBatch) -> float:
    return float(f1_estimates(np.asarray(batch.outcomes, float)))


def c_coeffs(k: int) -> tuple[Fraction, ...]:
    """Weights of <J^4>, <J^3><J>, <J^2>^2, <J^2><J>^2, <J>^4 in E[(f1~)^2]/9."""
    if k < 2:
        raise TooFewShots("need K >= 2")
    kk = Fraction(k)
    den = kk * (kk - 1)
    return (
        1 / kk,
        -4 / kk,
        ((kk - 1) ** 2 + 2) / den,
        -2 * (kk - 2) * (kk - 3) / den,
        (kk - 2) * (kk - 3) / den,
    )


def _raw_moments(rho, direction) -> np.ndarray:
    values, probs = outcome_distribution(rho, direction)
    return np.array([probs @ values**j for j in range(5)])


def expected_f1_squared(rho: DensityMatrix | PureState, direction: Sequence[float], k: int) -> float:
    c = [float(x) for x in c_coeffs(k)]
    m = _raw_moments(rho, direction)
    return 9 * (c[0] * m[4] + c[1] * m[3] * m[1] + c[2] * m[2] ** 2 + c[3] * m[2] * m[1] ** 2 + c[4] * m[1] ** 4)


def estimator_variance_rho_p(n: int, p: float, k: int, m: int) -> float:
    """Variance of the M-setting average of f1~ for the noisy singlet."""
    if k < 2:
        raise TooFewShots("need K >= 2")
    if m < 1:
        raise OutOfRange("need M >= 1")
    return 9 * n * p * (3 * n * (p - 1) + 2 - k * (n * (p - 3) + 2)) / (16 * (k - 1) * k * m)


def cantelli_delta(variance: float, gamma_cl: float) -> float:
    """Error delta at which P(X - E X >= delta) <= 1 - gamma_cl."""
    return math.sqrt(gamma_cl / (1 - gamma_cl) * variance)


def cantelli_confidence(variance: float, delta: float) -> float:
    """1 - Var/(Var + delta^2)."""
    return delta**2 / (variance + delta**2)


def delta_for_noise(n: int, p: float) -> float:
    """Distance of the expected first moment 3Np/4 from the bound N/2."""
    return n / 2 - 3 * n * p / 4


@dataclass(frozen=True)
class MeasurementBudget:
    n: int
    gamma_cl: float
    p: float
    K: int
    M: int
    M_tot: int
    delta_error: float

    def row(self) -> list:
        return [self.K, self.M, self.M_tot, repr(self.delta_error), repr(self.gamma_cl), self.n, repr(self.p)]


def _check_budget_args(k: int, gamma_cl: float, delta_error: float) -> None:
    if k < 2:
        raise TooFewShots("need K >= 2")
    if not 0 < gamma_cl < 1:
        raise OutOfRange("confidence must lie in (0, 1)")
    if not delta_error > 0:
        raise OutOfRange("error must be positive")


def settings_continuous(n: int, gamma_cl: float, k: int, delta_error: float) -> float:
    """Worst-case (p = 1) number of settings before rounding."""
    _check_budget_args(k, gamma_cl, delta_error)
    return 9 * gamma_cl * n * (k * (n - 1) + 1) / (8 * (1 - gamma_cl) * (k - 1) * k * delta_error**2)


def budget(n: int, gamma_cl: float, k: int, delta_error: float, p: float = math.nan) -> MeasurementBudget:
    """Settings M (rounded up) and total shots M*K for the stated confidence."""
    m = max(1, math.ceil(settings_continuous(n, gamma_cl, k, delta_error) - 1e-12))
    return MeasurementBudget(n, gamma_cl, p, k, m, m * k, delta_error)


@dataclass(frozen=True)
class BudgetCurve:
    rows: list[MeasurementBudget]
    argmin_k: int
    asymptote: float
    continuous_m_tot: list[float]


def m_tot_asymptote(n: int, gamma_cl: float, delta_error: float) -> float:
    return 9 * gamma_cl * n * (n - 1) / (8 * (1 - gamma_cl) * delta_error**2)


def budget_curve(n: int, gamma_cl: float, p: float, k_range: Iterable[int]) -> BudgetCurve:
    if not p < P_SEP:
        raise OutOfRange(f"p={p} >= 2/3: the noisy singlet does not violate the bound")
    if p < 0:
        raise OutOfRange("p must be nonnegative")
    ks = list(k_range)
    if not ks or min(ks) < 2:
        raise OutOfRange("K range must be nonempty with K >= 2")
    delta = delta_for_noise(n, p)
    rows = [budget(n, gamma_cl, k, delta, p) for k in ks]
    cont = [k * settings_continuous(n, gamma_cl, k, delta) for k in ks]
    best = min(rows, key=lambda r: (r.M_tot, r.K))
    return BudgetCurve(rows, best.K, m_tot_asymptote(n, gamma_cl, delta), cont)


BUDGET_HEADER = ("K", "M", "M_tot", "delta_error", "gamma_cl", "N", "p")


def budget_to_csv(rows: Sequence[MeasurementBudget]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(BUDGET_HEADER)
    for r in rows:
        wr.writerow(r.row())
    return buf.getvalue()


def p_star(n: int) -> float:
    """N(2N-1)/sqrt(6N^4 - 2N^3 + 1)."""
    if n < 1:
        raise OutOfRange("need N >= 1")
    return n * (2 * n - 1) / math.sqrt(6 * n**4 - 2 * n**3 + 1)


def p_star_csv(n_max: int) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(("N", "p_star"))
    for n in range(1, n_max + 1):
        wr.writerow((n, repr(p_star(n))))
    return buf.getvalue()


# simulation of the full protocol


def sample_batches(values: np.ndarray, probs: np.ndarray, k: int, batches: int, rng: np.random.Generator) -> np.ndarray:
    """``batches`` x ``k`` outcome array drawn from one setting's distribution."""
    return rng.choice(values, size=(batches, k), p=probs)


def pipeline_estimate(rho: DensityMatrix | PureState, m: int, k: int, seed: int | None, trial: int = 0) -> float:
    """Average of f1~ over M random settings with K shots each."""
    rng = task_rng(seed, trial)
    dirs = sample_directions(rng, m)
    est = np.empty(m)
    for i, u in enumerate(dirs):
        values, probs = outcome_distribution(rho, u)
        est[i] = f1_estimates(sample_batches(values, probs, k, 1, rng))[0]
    return float(np.mean(est))


@dataclass(frozen=True)
class CoverageResult:
    trials: int
    failures: int
    failure_rate: float
    budget: MeasurementBudget

    def to_json(self) -> dict:
        out = asdict(self)
        out["budget"] = asdict(self.budget)
        return out


def coverage(
    n: int, p: float, gamma_cl: float = 0.95, k: int = 2, trials: int = 1000, seed: int | None = 0
) -> CoverageResult:
    """Run the budgeted protocol on the noisy singlet; a trial fails when the
    estimate does not fall below the separable bound N/2."""
    plan = budget(n, gamma_cl, k, delta_for_noise(n, p), p)
    rho = rho_p(n, p)
    fails = sum(pipeline_estimate(rho, plan.M, k, seed, t) >= n / 2 for t in range(trials))
    return CoverageResult(trials, fails, fails / trials, plan)
