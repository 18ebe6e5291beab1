"""Command line entry point: ``saarb solve|bounds|mc|verify``.

Exit codes: 0 success, 1 property or dominance failure, 2 configuration or
domain error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import bounds as B
from . import config as C
from . import harness as H
from .dist import EmpiricalDistribution, make_rng, sample
from .errors import ConfigurationError, DivergenceError, DomainError, SaarbError
from .saa import solve_empirical

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
CORRUPTION = 10.0  # offset injected into a check by --corrupt

BOUNDS_HEADER = (
    "n", "eps", "t", "status", "bound", "threshold_eps", "min_n", "remainder", "exp", "exp_p",
    "remainder_A", "remainder_B", "J_quarter", "J_small", "eta", "x_l", "x_u", "norm_composite",
)


def _clean(obj):
    """Replace non-finite floats by ``None`` so the JSON stays strict."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True)


def _out_dir(args) -> Path:
    out = Path(args.out or "saarb-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- solve ----------------------------------------------------------------------

def cmd_solve(cfg: dict, args) -> int:
    problem = C.build_problem(cfg)
    n, seed = C.sample_size(cfg), int(cfg["mc"]["seed"])
    zs = sample(problem.source, n, seed, (n, 0))
    points = cfg["grids"].get("points_per_dim")
    res = solve_empirical(problem, zs, points, int(cfg["grids"]["refinements"]))
    out = {"name": cfg.get("name", "problem"), "n": n, "seed": seed, "risk": problem.risk.label, **res.to_dict()}
    if problem.true_optimum is not None:
        out["true_value"] = problem.true_optimum()
    print(_dump(out))
    if args.out:
        (_out_dir(args) / "solve.json").write_text(_dump(out) + "\n")
    return EXIT_OK


# -- bounds ---------------------------------------------------------------------

def _bound_rows(exp: H.ExperimentConfig):
    fn = H.bound_function(exp.problem.risk.variant)
    base = H.bound_inputs(exp, exp.n_list[0], exp.eps_list[0])
    rows = []
    for n in exp.n_list:
        for eps in exp.eps_list:
            for t in exp.t_grid:
                inp = base.with_n(n).with_eps(eps).with_t(t)
                res = fn(inp)
                comp = dict(res.components)
                if exp.problem.risk.variant == "expectation":
                    comp["eta"] = B.eta_threshold(t, n, inp.norm_xi_2, comp["J_quarter"])
                rows.append({"n": n, "eps": eps, "t": t, "status": res.status, "bound": res.bound_value, **comp})
    return rows


def cmd_bounds(cfg: dict, args) -> int:
    exp = C.build_experiment(cfg)
    jd = [float(d) for d in cfg["bounds"].get("j_deltas", [])]
    summary = {
        "name": cfg.get("name", "problem"),
        "risk": exp.problem.risk.label,
        "J": {str(d): exp.J(d) for d in jd},
        "norm_xi_2": H.bound_inputs(exp, exp.n_list[0], exp.eps_list[0]).norm_xi_2,
    }
    if exp.problem.risk.variant == "expectation" and 0.5 in jd:
        summary["expected_error_bound"] = {
            str(n): B.expected_error_bound(n, summary["norm_xi_2"], exp.J(0.5)) for n in exp.n_list
        }
    setup = H.bound_inputs(exp, exp.n_list[0], exp.eps_list[0]).divergence
    if setup is not None:
        summary["interval"] = {"x_l": setup.interval.x_l, "x_u": setup.interval.x_u,
                               "x0": setup.interval.x0, "delta": setup.interval.delta}
        summary["norm_composite"] = setup.composite.L2
    rows = _bound_rows(exp)
    best = {}
    for (n, eps), res in H.compute_bounds(exp).items():
        best[f"n={n},eps={H.fmt(eps)}"] = {"status": res.status, "bound": res.bound_value, "t": res.t,
                                             "threshold_eps": res.threshold_eps}
    summary["optimized"] = best
    if args.out:
        out = _out_dir(args)
        H._write_csv(out / "bounds.csv", BOUNDS_HEADER, ([r.get(k) for k in BOUNDS_HEADER] for r in rows))
        (out / "bounds.json").write_text(_dump(summary) + "\n")
    print(_dump(summary))
    return EXIT_OK


# -- mc -------------------------------------------------------------------------

def cmd_mc(cfg: dict, args) -> int:
    exp = C.build_experiment(cfg)
    rs = H.run_replications(exp)
    comparison = H.compare_bounds(rs, H.compute_bounds(exp))
    out = _out_dir(args)
    H.write_replications_csv(out / "replications.csv", rs)
    H.write_tails_csv(out / "tails.csv", comparison)
    ns, q = H.tightness_quantiles(rs)
    H.write_tightness_csv(out / "tightness.csv", ns, q)
    try:
        report = H.tightness_diagnostic(rs)
        tight = {"passed": report.passed, "ratios": report.ratios.tolist()}
    except ConfigurationError as exc:
        tight = {"passed": None, "skipped": str(exc)}
    verdicts = {}
    for row in comparison.rows:
        verdicts[row.verdict] = verdicts.get(row.verdict, 0) + 1
    summary = {
        "name": cfg.get("name", "problem"),
        "risk": exp.problem.risk.label,
        "n_list": exp.n_list,
        "replications": exp.replications,
        "seed": exp.seed,
        "true_value": rs.true_value,
        "verdicts": verdicts,
        "tightness": tight,
        "flag_B_rate": float(np.mean(rs.flag_B)),
    }
    exceptions = 0
    if rs.interval is not None:
        exceptions = int(np.sum(rs.flag_A & ~rs.x_in))
        summary["interval"] = {"x_l": rs.interval.x_l, "x_u": rs.interval.x_u}
        summary["flag_A_rate"] = float(np.mean(rs.flag_A))
        summary["membership_exceptions"] = exceptions
    H.write_summary_json(out / "summary.json", _clean(summary))
    print(_dump(summary))
    violated = verdicts.get(H.VIOLATED, 0)
    if violated or exceptions:
        print(f"FAIL: {violated} violated cells, {exceptions} interval exceptions", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# -- verify ---------------------------------------------------------------------

def _check_entropy_integral(bump):
    from .entropy import entropy_integral_lhs, entropy_integral_upper

    worst = -math.inf
    for v in (1.0, 2.0, 4.0, 8.0):
        for K in (math.e, math.e**2, 10.0):
            worst = max(worst, entropy_integral_lhs(v, K) + bump - entropy_integral_upper(v, K))
    return worst <= 0.0, f"max(lhs - upper) = {worst:.6g}"


def _check_oce_avar(bump):
    from .risk import PhiFamily, avar_closed_form, oce_value

    rng = make_rng(12345, (1,))
    worst = 0.0
    for alpha in (0.1, 0.5, 0.9):
        phi = PhiFamily.avar(alpha)
        for _ in range(100):
            ed = EmpiricalDistribution(rng.normal(size=int(rng.integers(1, 60))))
            lo, hi = ed.values[0], ed.values[-1]
            val, _ = oce_value(ed, phi, (-hi - 1.0, -lo + 1.0))
            worst = max(worst, abs(val + bump - avar_closed_form(ed, alpha)))
    return worst <= 1e-8, f"max |oce - closed form| = {worst:.3g}"


def _check_entropic(bump):
    from .risk import PhiFamily, RiskFunctional, apply

    rng = make_rng(12345, (2,))
    risk = RiskFunctional.divergence(PhiFamily.entropic())
    worst = 0.0
    for _ in range(200):
        v = rng.normal(size=int(rng.integers(1, 60)))
        exact = float(np.log(np.mean(np.exp(v))))
        worst = max(worst, abs(apply(risk, EmpiricalDistribution(v)) + bump - exact))
    return worst <= 1e-9, f"max |oce - ln mean exp| = {worst:.3g}"


def _check_semideviation(bump):
    from .risk import SemideviationParams, mean_upper_semideviation

    rng = make_rng(12345, (3,))
    worst = 0.0
    for _ in range(200):
        v = rng.normal(size=int(rng.integers(1, 60)))
        p, a = float(rng.uniform(1, 4)), float(rng.uniform(0.01, 1))
        m = math.fsum(v) / len(v)
        brute = m + a * (math.fsum(max(x - m, 0.0) ** p for x in v) / len(v)) ** (1 / p)
        got = mean_upper_semideviation(EmpiricalDistribution(v), SemideviationParams(p, a))
        worst = max(worst, abs(got + bump - brute))
    return worst <= 1e-10, f"max |semideviation - definition| = {worst:.3g}"


def _check_envelopes(bump):
    from .goal import NAMED_GOALS, ParamBox, build_envelope_hoelder

    rng = make_rng(12345, (4,))
    worst = -math.inf
    for name, make in NAMED_GOALS.items():
        box = ParamBox((-1.0,), (2.0,))
        goal = make(box)
        xi = build_envelope_hoelder(goal, box)
        th = box.random(200, rng)
        zs = rng.uniform(-3, 3, size=(500, 1))
        worst = max(worst, float(np.max(np.abs(goal.grid(th, zs)) + bump - xi(zs)[None, :])))
    return worst <= 1e-12, f"max(|G| - xi) = {worst:.3g}"


def _check_vc(bump):
    from .entropy import j_vc, vc_majorant

    worst = -math.inf
    for V in (2, 3, 4):
        for d in (0.25, 0.5):
            worst = max(worst, j_vc(V, d).value + bump - vc_majorant(V, d))
    return worst <= 0.0, f"max(J_vc - majorant) = {worst:.3g}"


def _check_regressions(bump):
    from .entropy import j_hoelder, j_pl, vc_covering_bound

    pairs = [
        (j_hoelder(1, 1, 0.5).value + bump, math.sqrt(6 * math.log(2))),
        (j_pl(1, [1], 1.0).value, 2 * math.sqrt(40 * math.log(2) + 4)),
        (vc_covering_bound(2, 0.5), 128 * math.e**2),
        (_divergence_chain(), 3 * math.sqrt(145)),
    ]
    worst = max(abs(a - b) / max(1.0, abs(b)) for a, b in pairs)
    return worst <= 1e-12, f"max relative deviation = {worst:.3g}"


def _divergence_chain():
    from .dist import SourceDistribution
    from .goal import EnvelopeSpec
    from .risk import PhiFamily

    setup = B.divergence_setup(PhiFamily.avar(0.5, 1.5), 1.5, 1.0, EnvelopeSpec.const(1.0),
                               SourceDistribution.uniform(-1, 1))
    return setup.composite.L2


def _check_kernels(bump):
    from . import _kernels

    if _kernels.COMPILED is None:
        return True, "compiled kernels not built; skipped"
    rng = make_rng(12345, (5,))
    M = rng.normal(size=(50, 101))
    worst = 0.0
    for name, args in (("row_mean", ()), ("row_semideviation", (1.5, 0.7)), ("row_avar", (0.3, 31))):
        a = getattr(_kernels.PYTHON, name)(M, *args)
        b = getattr(_kernels.COMPILED, name)(M, *args)
        worst = max(worst, float(np.max(np.abs(a + bump - b))))
    return worst <= 1e-12, f"max backend difference = {worst:.3g}"


CHECKS = {
    "entropy-integral": _check_entropy_integral,
    "oce-avar": _check_oce_avar,
    "entropic-oce": _check_entropic,
    "semideviation": _check_semideviation,
    "envelope-domination": _check_envelopes,
    "vc-dominance": _check_vc,
    "regressions": _check_regressions,
    "kernels": _check_kernels,
}


def cmd_verify(args) -> int:
    names = list(CHECKS) if args.checks is None else [c for c in args.checks.split(",") if c.strip()]
    unknown = [c for c in names + ([args.corrupt] if args.corrupt else []) if c not in CHECKS]
    if unknown:
        raise ConfigurationError(f"unknown checks {unknown}; known: {sorted(CHECKS)}")
    if not names:
        print("warning: empty check list, nothing verified", file=sys.stderr)
        return EXIT_OK
    failed = 0
    for name in names:
        ok, detail = CHECKS[name](CORRUPTION if name == args.corrupt else 0.0)
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_FAIL if failed else EXIT_OK


# -- entry point ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="saarb", description="SAA optimal values under risk: solvers, bounds, Monte Carlo.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("solve", "bounds", "mc", "verify"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=name != "verify", help="JSON config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", dest="overrides")
        if name == "verify":
            p.add_argument("--checks", help=f"comma-separated subset of: {', '.join(CHECKS)}")
            p.add_argument("--corrupt", help="perturb the named check (self-test fixture)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        cfg = C.apply_overrides(C.load(args.config), args.overrides)
        cfg = C.normalize(cfg)
        C.check_mc(cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return {"solve": cmd_solve, "bounds": cmd_bounds, "mc": cmd_mc}[args.command](cfg, args)
    except (ConfigurationError, DomainError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SaarbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
