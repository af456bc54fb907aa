"""Acceptance suite: one test per acceptance criterion.

Each test prints a single ``ACn PASS|FAIL: ...`` line (bypassing output
capture) and then asserts the same condition. Tolerances are the pinned
values from the criteria; sub-check details are included in the line.
"""

import math
import time

import numpy as np
from spinmoments import budget as bd
from spinmoments import criteria as cr
from spinmoments import moments as mo
from spinmoments import sepbound as sb
from spinmoments import states
from spinmoments.errors import ComplexRoots
from spinmoments.operators import PAULIS, build_o_a, levi_civita


def report(capsys, number, checks):
    """Print one line for the criterion; ``checks`` maps label -> (ok, detail)."""
    ok = all(c[0] for c in checks.values())
    parts = "; ".join(f"{k}={'ok' if v[0] else 'FAIL'} ({v[1]})" for k, v in checks.items())
    with capsys.disabled():
        print(f"\nAC{number} {'PASS' if ok else 'FAIL'}: {parts}")
    return ok


def test_ac1_obs2_pipeline(capsys):
    """MC first moment of the noisy singlet and the p = 2/3 flip."""
    checks = {}
    step = 0.01
    for n in (4, 6, 8):
        t0 = time.perf_counter()
        agree = True
        for p in (0.0, 0.3, 0.9):
            est = mo.moment_mc(states.rho_p(n, p), mo.MomentSpec.obs2(), 10_000, seed=n)
            # the noisy singlet is rotation invariant, so the sample spread is
            # at rounding level; an absolute floor of 1e-9 covers it
            agree &= abs(est.mean - 3 * n * p / 4) <= 3 * est.std_error + 1e-9
        grid = np.round(np.arange(0, 1 + step / 2, step), 10)
        verdicts = []
        for p in grid:
            est = mo.moment_mc(states.rho_p(n, p), mo.MomentSpec.obs2(), 10_000, seed=n)
            verdicts.append(cr.obs2_check(states.rho_p(n, p), estimate=est).violated)
        flips = [grid[i] for i in range(1, len(grid)) if verdicts[i] != verdicts[i - 1]]
        flip_ok = len(flips) == 1 and abs(flips[0] - 2 / 3) <= step and verdicts[0] and not verdicts[-1]
        elapsed = time.perf_counter() - t0
        checks[f"N={n}"] = (agree and flip_ok and elapsed <= 10, f"flip at {[float(f) for f in flips]}, {elapsed:.1f}s")
    assert report(capsys, 1, checks)


def test_ac2_obs1_inversion(capsys):
    rng = np.random.default_rng(2024)
    worst = 0.0
    mismatches = considered = 0
    for i in range(100):
        n = 3 + i % 4
        rho = states.random_symmetric(n, rng)
        c, *_ = mo.pair_covariance(rho)
        direct = np.linalg.eigvalsh(0.5 * (c + c.T))
        closed = cr.obs1_decide(*mo.obs1_moments(rho))
        worst = max(worst, float(np.max(np.abs(np.array(closed.diagnostics["eigenvalues"]) - direct))))
        if abs(direct[0]) > 0.05:
            considered += 1
            ests = [mo.moment_mc(rho, mo.MomentSpec.obs1(n, r), 100_000, seed=1000 + i) for r in (1, 2, 3)]
            try:
                verdict = cr.obs1_decide_estimates(ests).violated
            except ComplexRoots:
                verdict = None
            mismatches += verdict != (direct[0] < 0)
    checks = {
        "eigenvalues": (worst <= 1e-8, f"max error {worst:.2e}"),
        "mc-verdicts": (mismatches == 0, f"{mismatches} mismatches of {considered}"),
    }
    assert report(capsys, 2, checks)


def test_ac3_o_a_spectrum(capsys):
    t0 = time.perf_counter()
    w = np.linalg.eigvalsh(build_o_a(3))
    r3 = 2 * math.sqrt(3)
    expected = np.array([-r3, -r3, 0, 0, 0, 0, r3, r3])
    err = float(np.max(np.abs(w - expected)))
    ranks = [int(np.sum(np.abs(np.linalg.eigvalsh(build_o_a(n))) > 1e-9)) for n in (4, 5, 6)]
    elapsed = time.perf_counter() - t0
    checks = {
        "N=3 spectrum": (err <= 1e-9, f"max error {err:.1e}"),
        "ranks": (ranks == [6, 24, 38], f"{ranks}"),
        "runtime": (elapsed <= 60, f"{elapsed:.1f}s"),
    }
    assert report(capsys, 3, checks)


def test_ac4_fully_separable_bound(capsys):
    checks = {}
    for n in range(3, 8):
        res = sb.optimize_fully_sep_bound(n, seed=n)  # default restarts: 200 or 500
        gap = abs(res.best_value - sb.conjectured_bound(n))
        checks[f"opt N={n}"] = (gap <= 1e-6 and res.restarts <= 500, f"gap {gap:.1e}")
    grad = max(
        float(np.linalg.norm(sb.tangential(v, sb.triple_product_grad(v))))
        for v in (sb.remark_angles(n).vectors() for n in range(3, 8))
    )
    checks["stationary"] = (grad <= 1e-8, f"max tangential gradient {grad:.1e}")
    rng = np.random.default_rng(4)
    worst = 0.0
    for n in range(3, 7):
        for _ in range(100):
            v = rng.normal(size=(n, 3))
            g = sb.triple_product_grad(v)
            fd = np.empty_like(v)
            for i in range(n):
                for k in range(3):
                    e = np.zeros_like(v)
                    e[i, k] = 1e-5
                    fd[i, k] = (sb.triple_product_sum(v + e) - sb.triple_product_sum(v - e)) / 2e-5
            worst = max(worst, float(np.max(np.abs(fd - g)) / max(1.0, np.max(np.abs(g)))))
    checks["gradient"] = (worst <= 1e-6, f"max relative error {worst:.1e}")
    assert report(capsys, 4, checks)


def test_ac5_region_scan(capsys):
    t0 = time.perf_counter()
    step = 0.01
    rows = cr.scan_regions(3, step)
    elapsed = time.perf_counter() - t0
    edge = 1 / (2 * math.sqrt(3))
    detected = [r.x + r.y for r in rows if r.region != "sep-undetected"]
    undetected = [r.x + r.y for r in rows if r.region == "sep-undetected"]
    lo, hi = min(detected), max(undetected)
    bound_ent = sum(r.region == "bound-entangled-detected" for r in rows)
    checks = {
        "boundary": (edge <= lo <= edge + step and edge - step <= hi <= edge, f"detected from x+y={lo:.2f}, edge {edge:.4f}"),
        "bound-entangled": (bound_ent > 0, f"{bound_ent} points"),
        "runtime": (elapsed <= 300, f"{elapsed:.1f}s"),
    }
    assert report(capsys, 5, checks)


def _dense_threshold(n: int) -> float | None:
    """Smallest p where the dense two-ensemble value of the depolarized
    |D_{2N,N}> exceeds 1, or None if it never does on [0, 1]."""
    f = lambda p: cr.dicke_two_ensemble_dense(n, p) - 1
    if f(1.0) <= 1e-12:
        return None
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if f(mid) > 0 else (mid, hi)
    return hi


def test_ac6_two_ensembles(capsys):
    value = mo.two_ensemble_lhs(states.dicke(4, 2), 2)
    thr = _dense_threshold(2)
    analytic_pstar = cr.dicke_two_ensemble_analytic(2)[1]
    limit = cr.dicke_two_ensemble_analytic(10**6)[1]
    rng = np.random.default_rng(6)
    worst = 0.0
    for n in (2, 3):
        samples = [states.dicke(2 * n, n), states.depolarize(states.dicke(2 * n, n), 0.3)]
        for _ in range(3):
            a = states.random_symmetric(n, rng).matrix
            b = states.random_symmetric(n, rng).matrix
            mix = 0.5 * np.kron(a, b) + 0.5 * states.dicke(2 * n, n - 1).density().matrix
            samples.append(states.DensityMatrix(mix, 2 * n))
        for rho in samples:
            t = mo.two_ensemble_terms(rho, n)
            worst = max(worst, abs(t.value - t.eta_form))
    checks = {
        "D42 value": (abs(value - 81 / 36) <= 1e-9, f"dense {value:.12f} vs 2.25"),
        "dense threshold": (thr is not None and abs(thr - 2 / 3) <= 1e-9, f"dense crossing {thr}"),
        "p*(2) formula": (abs(analytic_pstar - 2 / 3) <= 1e-9, f"{analytic_pstar:.12f}"),
        "p* limit": (abs(limit - math.sqrt(2 / 3)) <= 1e-6, f"{limit:.9f}"),
        "eta vs covariance": (worst <= 1e-9, f"max diff {worst:.1e}"),
    }
    assert report(capsys, 6, checks)


def _random_product_qutrits(rng, mixed: bool):
    def one():
        if mixed:
            return states.random_density(1, rng, d=3).matrix
        v = states.random_pure(3, rng)
        return np.outer(v, v.conj())

    return states.DensityMatrix(np.kron(one(), one()), 2, 3)


def test_ac7_qudit(capsys):
    rng = np.random.default_rng(7)
    outside = 0
    for i in range(20):
        rho = states.random_density(2, rng, d=3)
        est = mo.d_moment_mc(rho, 3, 10_000, seed=700 + i)
        outside += abs(est.mean - mo.d_closed_form(rho, 3)) > 3 * est.std_error
    violations = 0
    worst = -math.inf
    for i in range(500):
        v = cr.obs2_qudit_check(_random_product_qutrits(rng, mixed=i % 2 == 1))
        violations += v.violated
        worst = max(worst, v.margin)
    checks = {
        "mc vs closed form": (outside == 0, f"{outside}/20 outside 3 sigma"),
        "product soundness": (violations == 0, f"{violations} violations, max margin {worst:.1e}"),
    }
    assert report(capsys, 7, checks)


def test_ac8_finite_statistics(capsys):
    from fractions import Fraction

    checks = {}
    c2 = bd.c_coeffs(2)
    checks["c_coeffs(2)"] = (c2 == (Fraction(1, 2), Fraction(-2), Fraction(3, 2), Fraction(0), Fraction(0)), str(tuple(map(str, c2))))
    rng = np.random.default_rng(8)
    rho = states.rho_p(4, 0.5)
    u = mo.sample_directions(rng, 1)[0]
    values, probs = bd.outcome_distribution(rho, u)
    for k in (2, 4, 16):
        f = bd.f1_estimates(bd.sample_batches(values, probs, k, 100_000, rng))
        exact = bd.expected_f1_squared(rho, u, k)
        rel = abs(np.mean(f**2) - exact) / exact
        checks[f"E[f^2] K={k}"] = (rel <= 0.02, f"rel diff {rel:.3%}")
    plan = bd.budget(100, 0.95, 2, 50)
    checks["budget"] = ((plan.M, plan.M_tot) == (86, 172), f"M={plan.M}, M_tot={plan.M_tot}")
    cov = bd.coverage(6, 0.0, gamma_cl=0.95, k=2, trials=1000, seed=8)
    checks["coverage"] = (cov.failure_rate <= 0.05, f"failure rate {cov.failure_rate:.3f} with M={cov.budget.M}")
    assert report(capsys, 8, checks)


def _separable_components(n, rng, terms=8):
    k = int(rng.integers(1, terms + 1))
    w = rng.dirichlet(np.ones(k))
    comps = [states.product_state(states.random_product_bloch(n, rng)).density() for _ in range(k)]
    rho = states.DensityMatrix(sum(wi * c.matrix for wi, c in zip(w, comps)), n)
    return rho, comps


def test_ac9_invariance_and_soundness(capsys):
    rng = np.random.default_rng(9)
    drift = 0.0
    spec2 = mo.MomentSpec(1.0, 0.4, -0.3, order=2)
    for n in (3, 4):
        for rho in (states.random_density(n, rng), states.random_symmetric(n, rng)):
            base = [mo.j1_closed_form(rho), mo.design_quadrature_moment(rho, spec2, "icosahedron"), mo.t_average(rho)]
            if states.is_permutationally_symmetric(rho):
                base += list(mo.obs1_moments(rho))
            for _ in range(20):
                rot = rho.conjugate_by(mo.sample_haar_su2(rng))
                now = [mo.j1_closed_form(rot), mo.design_quadrature_moment(rot, spec2, "icosahedron"), mo.t_average(rot)]
                if len(base) > 3:
                    now += list(mo.obs1_moments(rot))
                drift = max(drift, float(np.max(np.abs(np.array(now) - base))))
    worst_z = 0.0
    for n in (2, 3):
        rho = states.random_density(n, rng)
        spec = mo.MomentSpec(1.0, 0.5, 0.2, order=2)
        a = mo.moment_mc(rho, spec, 20_000, seed=90 + n)
        b = mo.moment_mc(rho, spec, 2_000, seed=95 + n, mode="unitary")
        worst_z = max(worst_z, abs(a.mean - b.mean) / math.hypot(a.std_error, b.std_error))
    false = 0
    eps = levi_civita()
    for i in range(1000):
        n = 3 + i % 2
        rho, comps = _separable_components(n, rng)
        false += cr.obs2_check(rho).violated
        false += cr.obs3_check(rho).violated
        if n == 3:
            # the mixture obeys the largest component bound by convexity
            lbs = [cr.lemma_bounds(c, eps, PAULIS) for c in comps]
            false += any(abs(lb.value) > lb.fs_bound + 1e-9 for lb in lbs)
            false += abs(cr.lemma_bounds(rho, eps, PAULIS).value) > max(lb.fs_bound for lb in lbs) + 1e-9
        qd = states.DensityMatrix(
            sum(w * _random_product_qutrits(rng, False).matrix for w in rng.dirichlet(np.ones(3))), 2, 3
        )
        false += cr.obs2_qudit_check(qd).violated
    checks = {
        "closed-form drift": (drift <= 1e-9, f"{drift:.1e}"),
        "direction vs unitary": (worst_z <= 4, f"max |z| {worst_z:.2f}"),
        "soundness": (false == 0, f"{false} false violations over 1000 separable samples"),
    }
    assert report(capsys, 9, checks)
