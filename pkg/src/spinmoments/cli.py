"""Command-line entry point.

Exit codes: 0 success, 1 computation error, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, budget as bud, criteria, moments, sepbound, states
from .errors import OutOfRange

EXIT_OK, EXIT_ERROR, EXIT_INPUT = 0, 1, 2

FAMILIES = ("dicke", "phased-dicke", "ghz", "singlet", "mixed-family", "product", "depolarized")


def resolve_threads(flag: int | None) -> int:
    env = os.environ.get("SPINMOMENTS_THREADS")
    if env:
        return max(1, int(env))
    return flag or os.cpu_count() or 1


def _config(args: argparse.Namespace) -> dict:
    skip = {"func", "threads"}  # thread count never changes results
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _envelope(args, payload: dict) -> dict:
    return {"tool_version": __version__, "config": _config(args), **payload}


def _dump_json(obj: dict, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _write_csv(text: str, out: str | None, args) -> None:
    """CSV goes to ``out`` (with a .meta.json sidecar holding version and
    config) or to stdout."""
    if out:
        Path(out).write_text(text)
        Path(out + ".meta.json").write_text(json.dumps(_envelope(args, {}), indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)


def load_state(path: str) -> states.DensityMatrix:
    obj = json.loads(Path(path).read_text())
    if "rows" in obj:
        return states.DensityMatrix.from_json(obj)
    return states.PureState.from_json(obj).density()


def _parse_angles(text: str) -> states.BlochVectorSet:
    pairs = [tuple(float(v) for v in item.split(",")) for item in text.split(";") if item.strip()]
    if any(len(p) != 2 for p in pairs):
        raise ValueError("angles must look like 'theta,phi;theta,phi;...'")
    return states.BlochVectorSet(tuple(pairs))


def build_state(args) -> states.DensityMatrix | states.PureState:
    fam = args.family
    if fam == "dicke":
        return states.dicke(args.n, args.m)
    if fam == "phased-dicke":
        return states.phased_dicke(args.n, args.flipped)
    if fam == "ghz":
        return states.ghz(args.n)
    if fam == "singlet":
        return states.singlet_state(args.n, args.pairings, args.seed)
    if fam == "mixed-family":
        return states.mixed_family(args.n, args.x, args.y)
    if fam == "product":
        if args.angles:
            return states.product_state(_parse_angles(args.angles))
        return states.product_state(states.random_product_bloch(args.n, np.random.default_rng(args.seed)))
    if fam == "depolarized":
        if not args.input:
            raise ValueError("depolarized needs --input STATE.json")
        return states.depolarize(load_state(args.input), args.lam)
    raise ValueError(f"unknown family {fam}")


def cmd_state(args) -> int:
    st = build_state(args)
    _dump_json(_envelope(args, st.to_json()), args.out)
    return EXIT_OK


def _moment_spec(args, n: int) -> moments.MomentSpec:
    if args.spec == "custom":
        return moments.MomentSpec(args.alpha, args.beta, args.gamma, args.r)
    if args.spec == "obs1":
        return moments.MomentSpec.obs1(n, args.r)
    if args.spec == "obs2":
        return moments.MomentSpec.obs2(args.r)
    return moments.MomentSpec.obs4(n, args.r)


def cmd_moment(args) -> int:
    rho = load_state(args.state)
    spec = _moment_spec(args, rho.n_parties)
    if args.mode == "analytic":
        if args.spec == "obs1" and args.r <= 3 and states.is_permutationally_symmetric(rho):
            value, how = moments.obs1_moments(rho)[args.r - 1], "closed-form"
        else:
            # icosahedron averages are exact up to r = 2
            value, how = moments.design_quadrature_moment(rho, spec, "icosahedron"), "design"
        payload = {"mean": value, "std_error": 0.0, "mode": how, "spec": spec.to_json(), "seed": args.seed}
    else:
        est = moments.moment_mc(rho, spec, args.samples, args.seed, args.mode, resolve_threads(args.threads))
        payload = est.to_json(spec, args.seed)
    _dump_json(_envelope(args, payload), args.out)
    return EXIT_OK


def cmd_criterion(args) -> int:
    rho = load_state(args.state)
    threads = resolve_threads(args.threads)
    if args.obs == "1":
        if args.mode == "analytic":
            verdict = criteria.obs1_check(rho)
        else:
            n = rho.n_parties
            ests = [
                moments.moment_mc(rho, moments.MomentSpec.obs1(n, r), args.samples, args.seed, threads=threads)
                for r in (1, 2, 3)
            ]
            verdict = criteria.obs1_decide_estimates(ests)
    elif args.obs == "2":
        est = None
        if args.mode == "mc":
            est = moments.moment_mc(rho, moments.MomentSpec.obs2(), args.samples, args.seed, threads=threads)
        verdict = criteria.obs2_check(rho, estimate=est)
    elif args.obs == "2q":
        verdict = criteria.obs2_qudit_check(rho)
    elif args.obs == "3":
        verdict = criteria.obs3_check(rho)
    elif args.obs == "4":
        verdict = criteria.obs4_check(rho, args.ensemble_size or rho.n_parties // 2)
    else:
        m = args.ensembles
        verdict = criteria.multi_ensemble_check(rho, m, args.ensemble_size or rho.n_parties // m)
    _dump_json(_envelope(args, verdict.to_json()), args.out)
    return EXIT_OK


def cmd_scan(args) -> int:
    if not 3 <= args.n <= 6:
        raise OutOfRange(f"scan supports 3 <= N <= 6, got {args.n}")
    rows = criteria.scan_regions(args.n, args.step, resolve_threads(args.threads))
    _write_csv(criteria.scan_to_csv(rows), args.out, args)
    return EXIT_OK


def cmd_bound(args) -> int:
    if args.bisep:
        res = sepbound.optimize_bisep_bound_3q(args.restarts or 20, args.seed)
        payload = res.to_json(args.seed)
        payload["conjectured"] = criteria.BISEP_BOUND_3Q
        payload["gap"] = criteria.BISEP_BOUND_3Q - res.best_value
    else:
        res = sepbound.optimize_fully_sep_bound(args.n, args.restarts, args.seed)
        payload = res.to_json(args.seed)
    _dump_json(_envelope(args, payload), args.out)
    return EXIT_OK


def cmd_budget(args) -> int:
    curve = bud.budget_curve(args.n, args.gamma, args.p, range(args.kmin, args.kmax + 1))
    _write_csv(bud.budget_to_csv(curve.rows), args.out, args)
    if args.pstar_max:
        table = bud.p_star_csv(args.pstar_max)
        if args.out:
            Path(_pstar_path(args.out)).write_text(table)
        else:
            sys.stdout.write("\n" + table)
    sys.stderr.write(f"argmin K = {curve.argmin_k}; large-K asymptote of M_tot = {curve.asymptote:.6g}\n")
    return EXIT_OK


def _pstar_path(out: str) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + "_pstar" + (p.suffix or ".csv")))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spinmoments", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--threads", type=int, default=None, help="worker threads (env SPINMOMENTS_THREADS wins)")
        if seed:
            p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("state", help="write a state JSON")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--m", type=int, default=1, help="excitations for dicke")
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--y", type=float, default=0.0)
    p.add_argument("--flipped", action="store_true", help="phased-dicke with all qubits flipped")
    p.add_argument("--pairings", type=int, default=1, help="singlet matchings in the mixture")
    p.add_argument("--angles", help="product state angles 'theta,phi;...' (random if omitted)")
    p.add_argument("--input", help="base state for depolarized")
    p.add_argument("--lam", type=float, default=0.0, help="white-noise weight for depolarized")
    common(p)
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("moment", help="moment of f_U over random collective rotations")
    p.add_argument("--state", required=True)
    p.add_argument("--spec", choices=("obs1", "obs2", "obs4", "custom"), default="obs2")
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--mode", choices=("direction", "unitary", "analytic"), default="direction")
    common(p)
    p.set_defaults(func=cmd_moment)

    p = sub.add_parser("criterion", help="evaluate an entanglement criterion")
    p.add_argument("--obs", choices=("1", "2", "2q", "3", "4", "multi"), required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--mode", choices=("analytic", "mc"), default="analytic")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--ensemble-size", type=int, default=None, help="qubits per ensemble (obs 4, multi)")
    p.add_argument("--ensembles", type=int, default=2, help="number of ensembles (multi)")
    common(p)
    p.set_defaults(func=cmd_criterion)

    p = sub.add_parser("scan", help="region CSV over the mixed (x, y) family")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--step", type=float, default=0.01)
    common(p, seed=False)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("bound", help="optimize the fully separable (or 3-qubit biseparable) bound")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--restarts", type=int, default=None)
    p.add_argument("--bisep", action="store_true")
    common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("budget", help="measurement budget CSV versus shots per setting K")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--gamma", type=float, default=0.95)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--kmin", type=int, default=2)
    p.add_argument("--kmax", type=int, default=1000)
    p.add_argument("--pstar-max", type=int, default=None, help="also write p*(N) for N = 1..this")
    common(p, seed=False)
    p.set_defaults(func=cmd_budget)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError) as exc:  # includes input-class SpinMomentsErrors
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_INPUT
    except (ArithmeticError, RuntimeError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR
