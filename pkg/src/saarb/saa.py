"""Grid-based minimization of empirical and population risk objectives over a box."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import _kernels
from .dist import SourceDistribution
from .errors import ConfigurationError, UnsupportedProblemError
from .goal import ConstantGoal, HoelderGoal, ParamBox
from .risk import RiskFunctional, evaluate_rows

REFINE_POINTS = 33
MAX_DIM = 3
CHUNK_ELEMENTS = 4_000_000


def default_points(m: int) -> int:
    if m > MAX_DIM:
        raise ConfigurationError(f"parameter dimension {m} exceeds the supported maximum of {MAX_DIM}")
    return 1025 if m <= 2 else 65


def tol_opt(value: float) -> float:
    return 1e-6 * (1.0 + abs(value))


@dataclass
class SAAProblem:
    goal: object
    box: ParamBox
    source: SourceDistribution
    risk: RiskFunctional
    true_optimum: Optional[Callable[[], float]] = None
    name: str = "problem"

    def __post_init__(self):
        if self.box.m > MAX_DIM:
            raise ConfigurationError(f"parameter dimension {self.box.m} exceeds the supported maximum of {MAX_DIM}")
        if getattr(self.goal, "m", self.box.m) != self.box.m:
            raise ConfigurationError("goal and box dimensions differ")
        if getattr(self.goal, "d", self.source.d) != self.source.d:
            raise ConfigurationError("goal and source dimensions differ")


@dataclass
class SolveResult:
    theta_star: np.ndarray
    value: float
    grid_resolution: float
    refinement_depth: int
    x_star: Optional[float] = None
    at_boundary: bool = False

    def to_dict(self) -> dict:
        out = {
            "theta_star": [float(x) for x in self.theta_star],
            "value": float(self.value),
            "grid_resolution": float(self.grid_resolution),
            "refinement_depth": int(self.refinement_depth),
        }
        if self.x_star is not None:
            out["x_star"] = float(self.x_star)
            out["x_at_boundary"] = bool(self.at_boundary)
        return out


def _grid(lower, upper, points: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, points) for lo, hi in zip(lower, upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def _scan(problem: SAAProblem, thetas: np.ndarray, zs: np.ndarray, backend, bracket):
    """First (lexicographically smallest) minimizer over the candidate list."""
    n = zs.shape[0]
    chunk = max(1, CHUNK_ELEMENTS // max(n, 1))
    best = (math.inf, -1, None)
    for start in range(0, thetas.shape[0], chunk):
        vals = problem.goal.grid(thetas[start:start + chunk], zs)
        res = evaluate_rows(problem.risk, vals, backend, bracket)
        i = int(np.argmin(res.values))
        if res.values[i] < best[0]:
            x = None
            if res.x is not None:
                x = (float(res.x[i]), float(res.lo[i]), float(res.hi[i]))
            best = (float(res.values[i]), start + i, x)
    return best


def _solve(problem, samples, points, refinements, backend, bracket) -> SolveResult:
    zs = np.asarray(samples, dtype=float)
    if zs.ndim == 1:
        zs = zs[:, None]
    if zs.shape[0] == 0:
        raise ConfigurationError("samples must be nonempty")
    box = problem.box
    points = default_points(box.m) if points is None else int(points)
    if points < 2:
        raise ConfigurationError("grid needs at least 2 points per dimension")
    lower, upper = np.array(box.lower), np.array(box.upper)
    thetas = _grid(lower, upper, points)
    value, idx, x = _scan(problem, thetas, zs, backend, bracket)
    theta = thetas[idx]
    h = (upper - lower) / (points - 1)
    for _ in range(int(refinements)):
        lo = np.maximum(theta - h, lower)
        hi = np.minimum(theta + h, upper)
        cand = _grid(lo, hi, REFINE_POINTS)
        v2, i2, x2 = _scan(problem, cand, zs, backend, bracket)
        if v2 < value:
            value, theta, x = v2, cand[i2], x2
        h = 2.0 * h / (REFINE_POINTS - 1)
    x_star, at_boundary = None, False
    if x is not None:
        x_star = x[0]
        at_boundary = x_star <= x[1] or x_star >= x[2]
    return SolveResult(theta.copy(), value, float(np.max(h)) if h.size else 0.0, int(refinements), x_star, at_boundary)


def solve_empirical(problem: SAAProblem, samples, points: Optional[int] = None, refinements: int = 2,
                    backend=None) -> SolveResult:
    """Minimize the empirical risk of ``G(theta, Z_j)`` over the box.

    Dense grid, then ``refinements`` rounds of a 33-point grid on
    ``[theta* - h, theta* + h]`` with ``h`` the previous spacing. Divergence
    risks get a per-parameter OCE bracket from the sample itself.
    """
    return _solve(problem, samples, points, refinements, backend or _kernels.BACKEND, None)


def solve_oce_joint(problem: SAAProblem, samples, interval, points: Optional[int] = None, refinements: int = 2,
                    backend=None) -> SolveResult:
    """Joint minimization over ``(theta, x)`` of ``mean(phi*(G(theta, Z_j) + x) - x)`` with ``x`` in ``interval``.

    ``at_boundary`` flags a minimizing shift pinned at an interval endpoint.
    """
    if problem.risk.variant != "divergence":
        raise ConfigurationError("joint OCE solve needs a divergence risk")
    lo, hi = (interval.x_l, interval.x_u) if hasattr(interval, "x_l") else interval
    return _solve(problem, samples, points, refinements, backend or _kernels.BACKEND, (float(lo), float(hi)))


def solve_true(problem: SAAProblem) -> float:
    if problem.true_optimum is None:
        raise UnsupportedProblemError(f"no population oracle for problem {problem.name!r}")
    return float(problem.true_optimum())


# -- population oracles --------------------------------------------------------

_QUAD = dict(epsabs=0.0, epsrel=1e-12, limit=200)


def _uniform_risk(risk: RiskFunctional, lo: float, hi: float) -> Optional[float]:
    """Risk of ``U(lo, hi)`` (a point mass when ``lo == hi``)."""
    if hi == lo:
        return lo
    w = hi - lo
    if risk.variant == "expectation":
        return 0.5 * (lo + hi)
    if risk.variant == "semideviation":
        p, a = risk.semidev.p, risk.semidev.a
        return 0.5 * (lo + hi) + a * (0.5 * w) * (1.0 / (2.0 * (p + 1.0))) ** (1.0 / p)
    phi = risk.phi
    if phi.name == "avar":
        return lo + w * (1.0 + phi.alpha) / 2.0
    if phi.name == "entropic":
        return hi + math.log(-math.expm1(-w) / w)
    return None


def _radial_risk(risk: RiskFunctional, w: float, power: float) -> Optional[float]:
    """Risk of ``V^power`` for ``V ~ U(0, w)``."""
    if risk.variant == "expectation":
        return w**power / (power + 1.0)
    if risk.variant == "semideviation":
        p, a = risk.semidev.p, risk.semidev.a
        m = w**power / (power + 1.0)
        knee = m ** (1.0 / power)
        dev, _ = integrate.quad(lambda v: (v**power - m) ** p, knee, w, **_QUAD)
        return m + a * (dev / w) ** (1.0 / p)
    phi = risk.phi
    if phi.name == "avar":
        al = phi.alpha
        return w**power * (1.0 - al ** (power + 1.0)) / ((power + 1.0) * (1.0 - al))
    if phi.name == "entropic":
        top = w**power
        integral, _ = integrate.quad(lambda v: math.exp(v**power - top), 0.0, w, **_QUAD)
        return top + math.log(integral / w)
    return None


def closed_form_oracle(problem: SAAProblem) -> Optional[Callable[[], float]]:
    """Exact population optimum for the bundled one-dimensional problems, else ``None``."""
    goal, box, src, risk = problem.goal, problem.box, problem.source, problem.risk
    if isinstance(goal, ConstantGoal):
        return lambda: float(goal.value)
    if box.m != 1 or src.d != 1 or src.kind != "uniform" or not isinstance(goal, HoelderGoal):
        return None
    lo, hi = src.params
    a, b = box.lower[0], box.upper[0]
    if goal.name == "bilinear":
        # the objective is convex in theta with a kink at 0, so the optimum sits at a, b or 0
        cands = [a, b] + ([0.0] if a < 0.0 < b else [])

        def bilinear():
            vals = [_uniform_risk(risk, min(t * lo, t * hi), max(t * lo, t * hi)) for t in cands]
            return min(vals) + 0.0  # no negative zero

        return bilinear if _uniform_risk(risk, lo, hi) is not None else None
    mid = 0.5 * (lo + hi)
    if goal.name in ("quadratic", "abs") and a <= mid <= b:
        # |theta - Z| is stochastically smallest at the centre of a symmetric law
        power = 2.0 if goal.name == "quadratic" else 1.0
        if _radial_risk(risk, 1.0, power) is None:
            return None
        return lambda: _radial_risk(risk, 0.5 * (hi - lo), power)
    return None


def quadrature_oracle(problem: SAAProblem, nodes: int = 20_000, points: Optional[int] = None) -> Callable[[], float]:
    """Population optimum from midpoint quantile nodes ``F^{-1}((i - 1/2) / N)`` (one-dimensional sources)."""
    if problem.source.d != 1:
        raise UnsupportedProblemError("quantile-node oracle needs a one-dimensional source")

    def oracle():
        u = (np.arange(nodes) + 0.5) / nodes
        zs = problem.source.ppf(u)[:, None]
        return solve_empirical(problem, zs, points=points).value

    return oracle
