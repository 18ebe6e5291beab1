"""Replicated Monte Carlo experiments: error tails, bound dominance and sqrt(n) tightness."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import bounds as B
from .dist import envelope_moments, sample
from .errors import ConfigurationError
from .saa import SAAProblem, solve_empirical, solve_true

DOMINATED = "dominated"
VIOLATED = "violated"
NOT_APPLICABLE = "bound-not-applicable"

TIGHTNESS_LEVELS = (0.5, 0.9, 0.99)
TIGHTNESS_FACTOR = 3.0
TIGHTNESS_FLOOR = 1e-9

REPLICATION_HEADER = ("n", "rep", "value", "error", "theta", "flag_B", "flag_A", "x_star", "x_in_interval")
TAILS_HEADER = ("n", "eps", "p_hat", "se", "bound", "status", "verdict", "t", "threshold_eps", "min_n", "remainder")
TIGHTNESS_HEADER = ("n", "q50", "q90", "q99")


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.12g" % (float(x) + 0.0)  # +0.0 folds negative zero


def thread_count() -> int:
    raw = os.environ.get("SAARB_THREADS")
    if raw is None:
        return min(8, os.cpu_count() or 1)
    try:
        k = int(raw)
    except ValueError:
        raise ConfigurationError(f"SAARB_THREADS must be an integer, got {raw!r}") from None
    if k < 1:
        raise ConfigurationError("SAARB_THREADS must be >= 1")
    return k


@dataclass
class ExperimentConfig:
    problem: SAAProblem
    n_list: Sequence[int]
    replications: int
    eps_list: Sequence[float]
    envelope: object
    J: Callable[[float], float]
    seed: int = 0
    t_grid: Sequence[float] = B.DEFAULT_T_GRID
    delta: float = 1.0
    remainder: str = "bounded"
    points: Optional[int] = None
    refinements: int = 2
    scale: float = 1.0

    def __post_init__(self):
        self.n_list = [int(n) for n in self.n_list]
        self.eps_list = [float(e) for e in self.eps_list]
        if self.replications < 1:
            raise ConfigurationError("replications must be >= 1")
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ConfigurationError("n_list must be nonempty with every n >= 1")
        if self.n_list != sorted(set(self.n_list)):
            raise ConfigurationError("n_list must be strictly ascending")
        if any(not e > 0 for e in self.eps_list):
            raise ConfigurationError("eps values must be positive")
        if not self.delta > 0:
            raise ConfigurationError("delta must be positive")


@dataclass
class ReplicationSet:
    n: np.ndarray
    rep: np.ndarray
    value: np.ndarray
    error: np.ndarray
    theta: np.ndarray
    flag_B: np.ndarray
    flag_A: Optional[np.ndarray] = None
    x_star: Optional[np.ndarray] = None
    x_in: Optional[np.ndarray] = None
    true_value: float = 0.0
    interval: Optional[B.CompactInterval] = None

    def errors_for(self, n: int) -> np.ndarray:
        return self.error[self.n == n]

    @property
    def n_values(self) -> list:
        return sorted(set(int(x) for x in self.n))


@dataclass
class TailRow:
    n: int
    eps: float
    p_hat: float
    se: float
    bound: B.TailBoundResult
    verdict: str


@dataclass
class TailComparison:
    rows: list = field(default_factory=list)

    @property
    def violated(self) -> list:
        return [r for r in self.rows if r.verdict == VIOLATED]

    def applicable(self) -> list:
        return [r for r in self.rows if r.verdict != NOT_APPLICABLE]


@dataclass
class TightnessReport:
    n: list
    quantiles: np.ndarray
    ratios: np.ndarray
    passed: bool


def _envelope_stats(config: ExperimentConfig):
    problem = config.problem
    mom = envelope_moments(config.envelope, problem.source)
    setup = None
    if problem.risk.variant == "divergence":
        phi = problem.risk.phi
        setup = B.divergence_setup(phi, phi.x0, config.delta, config.envelope, problem.source)
    return mom, setup


def _replicate(config, n, reps, v_star, mom, setup):
    problem = config.problem
    out = []
    phi = problem.risk.phi
    for r in reps:
        zs = sample(problem.source, n, config.seed, (n, r))
        res = solve_empirical(problem, zs, config.points, config.refinements)
        xi = config.envelope(zs)
        flag_b = float(np.mean(xi * xi)) <= 2.0 * mom.mean_sq
        flag_a = x_in = None
        if setup is not None:
            ph = np.asarray(phi.phi_star(xi), dtype=float)
            flag_a = (float(np.mean(xi)) <= mom.mean + config.delta) and (
                float(np.mean(ph)) <= setup.phi_xi_mean + config.delta
            )
            x_in = bool(setup.interval.contains(res.x_star))
        out.append((r, res.value, abs(res.value - v_star), float(res.theta_star[0]), flag_b, flag_a, res.x_star, x_in))
    return n, out


def run_replications(config: ExperimentConfig, threads: Optional[int] = None) -> ReplicationSet:
    """``R`` independent SAA solves per sample size.

    Replication ``(n, r)`` draws from its own stream keyed by ``(seed, n, r)``,
    so the result does not depend on the number of worker threads.
    """
    v_star = solve_true(config.problem)
    mom, setup = _envelope_stats(config)
    threads = thread_count() if threads is None else int(threads)
    R = config.replications
    block = max(1, min(50, R // max(threads, 1) or 1))
    tasks = [(n, range(s, min(s + block, R))) for n in config.n_list for s in range(0, R, block)]

    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda task: _replicate(config, task[0], task[1], v_star, mom, setup), tasks))

    rows = {}
    for n, chunk in results:
        for row in chunk:
            rows[(n, row[0])] = row
    keys = sorted(rows)
    get = lambda i: [rows[k][i] for k in keys]  # noqa: E731
    div = setup is not None
    return ReplicationSet(
        n=np.array([k[0] for k in keys], dtype=int),
        rep=np.array([k[1] for k in keys], dtype=int),
        value=np.array(get(1)),
        error=np.array(get(2)),
        theta=np.array(get(3)),
        flag_B=np.array(get(4), dtype=bool),
        flag_A=np.array(get(5), dtype=bool) if div else None,
        x_star=np.array(get(6), dtype=float) if div else None,
        x_in=np.array(get(7), dtype=bool) if div else None,
        true_value=v_star,
        interval=setup.interval if div else None,
    )


def empirical_tail(errors, eps: float) -> tuple[float, float]:
    """Fraction of replications with error at least ``eps`` and its binomial standard error."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ConfigurationError("errors must be nonempty")
    p = float(np.mean(errors >= eps))
    return p, math.sqrt(p * (1.0 - p) / errors.size)


def bound_inputs(config: ExperimentConfig, n: int, eps: float, t: float = 1.0) -> B.BoundInputs:
    mom, setup = _envelope_stats(config)
    risk = config.problem.risk
    kw = {}
    if risk.variant == "semideviation":
        kw = dict(
            p=risk.semidev.p,
            a=risk.semidev.a,
            moments_p=B.semidev_envelope_moments(config.envelope, config.problem.source, risk.semidev.p),
        )
    return B.BoundInputs(n, t, eps, mom, config.J, config.remainder, divergence=setup, scale=config.scale, **kw)


def bound_function(risk_variant: str) -> Callable[[B.BoundInputs], B.TailBoundResult]:
    return {
        "expectation": B.risk_neutral_tail_bound,
        "semideviation": B.semidev_tail_bound,
        "divergence": B.divergence_tail_bound,
    }[risk_variant]


def compute_bounds(config: ExperimentConfig) -> dict:
    """Tail bound per ``(n, eps)`` with ``t`` optimized on the configured grid."""
    fn = bound_function(config.problem.risk.variant)
    base = bound_inputs(config, config.n_list[0], config.eps_list[0])
    out = {}
    for n in config.n_list:
        for eps in config.eps_list:
            inp = base.with_n(n).with_eps(eps)
            _, res = B.optimize_t(lambda t: fn(inp.with_t(t)), config.t_grid)
            out[(n, eps)] = res
    return out


def compare_bounds(rep_set: ReplicationSet, bound_results: dict, slack: float = 0.0) -> TailComparison:
    """Verdict per cell: dominated iff ``p_hat <= bound + 3 SE + slack`` where the bound applies."""
    rows = []
    for (n, eps), res in sorted(bound_results.items()):
        errs = rep_set.errors_for(n)
        if errs.size == 0:
            raise ConfigurationError(f"no replications at n={n}")
        p, se = empirical_tail(errs, eps)
        if not res.applicable:
            verdict = NOT_APPLICABLE
        else:
            verdict = DOMINATED if p <= res.bound_value + 3.0 * se + slack else VIOLATED
        rows.append(TailRow(int(n), float(eps), p, se, res, verdict))
    return TailComparison(rows)


def tightness_quantiles(rep_set: ReplicationSet) -> tuple[list, np.ndarray]:
    ns = rep_set.n_values
    q = np.array([np.quantile(math.sqrt(n) * rep_set.errors_for(n), TIGHTNESS_LEVELS) for n in ns])
    return ns, q


def tightness_diagnostic(rep_set: ReplicationSet) -> TightnessReport:
    """Quantiles of ``sqrt(n) |error|`` per ``n``; passes when each varies by less than a factor 3.

    Quantiles are floored at 1e-9 before taking ratios, so identically zero
    errors pass.
    """
    ns = rep_set.n_values
    if len(ns) < 3:
        raise ConfigurationError("tightness needs at least three sample sizes")
    if min(rep_set.errors_for(n).size for n in ns) < 500:
        raise ConfigurationError("tightness needs at least 500 replications per sample size")
    ns, q = tightness_quantiles(rep_set)
    qf = np.maximum(q, TIGHTNESS_FLOOR)
    ratios = qf.max(axis=0) / qf.min(axis=0)
    return TightnessReport(ns, q, ratios, bool(np.all(ratios < TIGHTNESS_FACTOR)))


# -- report files ---------------------------------------------------------------

def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def write_replications_csv(path, rs: ReplicationSet):
    def rows():
        for i in range(rs.n.size):
            yield (
                rs.n[i], rs.rep[i], rs.value[i], rs.error[i], rs.theta[i], bool(rs.flag_B[i]),
                None if rs.flag_A is None else bool(rs.flag_A[i]),
                None if rs.x_star is None else rs.x_star[i],
                None if rs.x_in is None else bool(rs.x_in[i]),
            )

    _write_csv(path, REPLICATION_HEADER, rows())


def write_tails_csv(path, comparison: TailComparison):
    _write_csv(path, TAILS_HEADER, (
        (r.n, r.eps, r.p_hat, r.se, r.bound.bound_value, r.bound.status, r.verdict, r.bound.t,
         r.bound.threshold_eps, r.bound.min_n, r.bound.remainder)
        for r in comparison.rows
    ))


def write_tightness_csv(path, ns, q):
    _write_csv(path, TIGHTNESS_HEADER, ((n, *row) for n, row in zip(ns, q)))


def write_summary_json(path, summary: dict):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=False, default=_json_default)
        fh.write("\n")


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x).__name__)
