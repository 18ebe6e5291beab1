"""Parameterized goal functions G(theta, z), their envelopes and structural checks.

Every goal exposes ``grid(thetas, zs)`` returning the ``(k, n)`` matrix
``G(thetas[i], zs[j])``; this is what the SAA solver consumes.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from .dist import SourceDistribution, make_rng
from .errors import ConfigurationError, DomainError

POSITIVITY_FLOOR = 1e-12


@dataclass(frozen=True)
class ParamBox:
    """Compact parameter set: a box in R^m."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(x) for x in np.atleast_1d(self.lower))
        hi = tuple(float(x) for x in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or not lo:
            raise ConfigurationError("box bounds must be nonempty and of equal length")
        if any(not (math.isfinite(a) and math.isfinite(b)) or a > b for a, b in zip(lo, hi)):
            raise ConfigurationError(f"box requires finite lower <= upper, got {lo} / {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def m(self) -> int:
        return len(self.lower)

    @property
    def diameter(self) -> float:
        return math.dist(self.lower, self.upper)

    def corners(self) -> np.ndarray:
        return np.array(list(itertools.product(*zip(self.lower, self.upper))), dtype=float)

    def contains(self, theta, tol: float = 0.0) -> bool:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.m,):
            return False
        return bool(np.all(theta >= np.array(self.lower) - tol) and np.all(theta <= np.array(self.upper) + tol))

    def max_norm(self) -> float:
        """``sup ||theta||_2`` over the box."""
        return float(np.max(np.linalg.norm(self.corners(), axis=1)))

    def random(self, k: int, rng: np.random.Generator) -> np.ndarray:
        lo, hi = np.array(self.lower), np.array(self.upper)
        return lo + (hi - lo) * rng.random((k, self.m))


@dataclass(frozen=True)
class EnvelopeSpec:
    """Strictly positive map dominating ``sup_theta |G(theta, .)|``.

    ``func`` maps an ``(n, d)`` array to ``(n,)`` values. ``constant`` is set
    when the envelope is a known constant, which enables closed-form moments.
    """

    func: Callable[[np.ndarray], np.ndarray]
    provenance: str = "user"
    constant: Optional[float] = None

    def __post_init__(self):
        if self.constant is not None and not self.constant > 0:
            raise ConfigurationError("a constant envelope must be strictly positive")

    def __call__(self, zs) -> np.ndarray:
        zs = np.asarray(zs, dtype=float)
        if zs.ndim == 1:
            zs = zs[:, None]
        if self.constant is not None:
            return np.full(zs.shape[0], self.constant)
        return np.maximum(np.asarray(self.func(zs), dtype=float), POSITIVITY_FLOOR)

    @classmethod
    def const(cls, value: float) -> "EnvelopeSpec":
        value = float(value)
        return cls(lambda zs: np.full(np.asarray(zs).shape[0], value), "user", value)


def _as_points(x, dim: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, dim) if dim > 1 else arr[:, None]
    return arr


@dataclass(frozen=True)
class HoelderGoal:
    """Goal with ``|G(theta,z) - G(theta',z)| <= C(z) |theta - theta'|^beta``.

    ``evaluator(thetas, zs)`` and ``hoelder_coeff(zs)`` are vectorized over
    ``(k, m)`` parameters and ``(n, d)`` realizations.
    """

    beta: float
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    hoelder_coeff: Callable[[np.ndarray], np.ndarray]
    base_point: tuple
    m: int = 1
    d: int = 1
    name: str = "custom"

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ConfigurationError(f"Hoelder exponent must lie in (0, 1], got {self.beta}")
        object.__setattr__(self, "base_point", tuple(float(x) for x in np.atleast_1d(self.base_point)))

    def grid(self, thetas, zs) -> np.ndarray:
        return np.asarray(self.evaluator(_as_points(thetas, self.m), _as_points(zs, self.d)), dtype=float)

    def coeff(self, zs) -> np.ndarray:
        return np.maximum(np.asarray(self.hoelder_coeff(_as_points(zs, self.d)), dtype=float), POSITIVITY_FLOOR)


@dataclass(frozen=True)
class PLCell:
    """One summand of a piecewise-linear goal.

    ``constraints`` lists ``(L, a, closed)``: the cell is active when every
    ``L . (T theta + z) + a`` lies in ``[0, inf)`` (closed) or ``(0, inf)`` (open).
    """

    Lambda: tuple
    b: float
    constraints: tuple

    def __post_init__(self):
        object.__setattr__(self, "Lambda", tuple(float(x) for x in np.atleast_1d(self.Lambda)))
        object.__setattr__(self, "b", float(self.b))
        cons = tuple(
            (tuple(float(x) for x in np.atleast_1d(L)), float(a), bool(closed)) for L, a, closed in self.constraints
        )
        if not cons:
            raise ConfigurationError("every PL cell needs at least one constraint")
        object.__setattr__(self, "constraints", cons)


@dataclass(frozen=True)
class PLGoal:
    """``G(theta, z) = sum_i f_i(theta, z) * (Lambda_i (T theta + z) + b_i)``."""

    cells: tuple
    T: np.ndarray
    name: str = "pl"

    def __post_init__(self):
        T = np.atleast_2d(np.asarray(self.T, dtype=float))
        T.flags.writeable = False
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "cells", tuple(self.cells))
        if not self.cells:
            raise ConfigurationError("a PL goal needs at least one cell")
        for cell in self.cells:
            if len(cell.Lambda) != self.d or any(len(L) != self.d for L, _, _ in cell.constraints):
                raise ConfigurationError("PL linear maps must act on R^d with d = rows of T")

    @property
    def m(self) -> int:
        return self.T.shape[1]

    @property
    def d(self) -> int:
        return self.T.shape[0]

    @property
    def r(self) -> int:
        return len(self.cells)

    @property
    def s(self) -> list[int]:
        return [len(c.constraints) for c in self.cells]

    def indicators(self, thetas, zs) -> np.ndarray:
        """Cell indicators as an ``(r, k, n)`` boolean array."""
        shift = _as_points(thetas, self.m) @ self.T.T
        zs = _as_points(zs, self.d)
        out = []
        for cell in self.cells:
            active = None
            for L, a, closed in cell.constraints:
                L = np.asarray(L)
                arg = (shift @ L)[:, None] + (zs @ L)[None, :] + a
                ok = arg >= 0.0 if closed else arg > 0.0
                active = ok if active is None else active & ok
            out.append(active)
        return np.stack(out)

    def grid(self, thetas, zs) -> np.ndarray:
        shift = _as_points(thetas, self.m) @ self.T.T
        zs = _as_points(zs, self.d)
        ind = self.indicators(thetas, zs)
        total = np.zeros(ind.shape[1:])
        for f, cell in zip(ind, self.cells):
            lam = np.asarray(cell.Lambda)
            affine = (shift @ lam)[:, None] + (zs @ lam)[None, :] + cell.b
            total += np.where(f, affine, 0.0)
        return total


@dataclass(frozen=True)
class ConstantGoal:
    """``G == c``; Hoelder with any exponent."""

    value: float
    m: int = 1
    d: int = 1
    beta: float = 1.0
    name: str = "constant"

    def grid(self, thetas, zs) -> np.ndarray:
        return np.full((_as_points(thetas, self.m).shape[0], _as_points(zs, self.d).shape[0]), float(self.value))

    def coeff(self, zs) -> np.ndarray:
        return np.full(_as_points(zs, self.d).shape[0], POSITIVITY_FLOOR)

    @property
    def base_point(self):
        return (0.0,) * self.m


def evaluate(goal, theta, z, box: Optional[ParamBox] = None) -> float:
    """Single evaluation ``G(theta, z)``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if box is not None and not box.contains(theta):
        raise DomainError(f"theta={theta.tolist()} lies outside the parameter box")
    val = float(goal.grid(theta[None, :], np.atleast_1d(np.asarray(z, dtype=float))[None, :])[0, 0])
    if not math.isfinite(val):
        raise DomainError("goal evaluated to a non-finite value")
    return val


# -- named Hoelder families --------------------------------------------------

def bilinear_goal(box: ParamBox) -> HoelderGoal:
    """``G(theta, z) = <theta, z>`` with ``C(z) = ||z||``."""
    m = box.m
    return HoelderGoal(
        beta=1.0,
        evaluator=lambda th, zs: th @ zs.T,
        hoelder_coeff=lambda zs: np.linalg.norm(zs, axis=1),
        base_point=box.lower,
        m=m,
        d=m,
        name="bilinear",
    )


def quadratic_goal(box: ParamBox) -> HoelderGoal:
    """``G(theta, z) = ||theta - z||^2`` with ``C(z) = 2 (sup ||theta|| + ||z||)``."""
    m = box.m
    bound = box.max_norm()

    def evaluator(th, zs):
        if m == 1:
            return (th - zs.T) ** 2
        return np.sum((th[:, None, :] - zs[None, :, :]) ** 2, axis=2)

    return HoelderGoal(
        beta=1.0,
        evaluator=evaluator,
        hoelder_coeff=lambda zs: 2.0 * (bound + np.linalg.norm(zs, axis=1)),
        base_point=box.lower,
        m=m,
        d=m,
        name="quadratic",
    )


def abs_goal(box: ParamBox) -> HoelderGoal:
    """``G(theta, z) = ||theta - z||`` with ``C == 1``."""
    m = box.m

    def evaluator(th, zs):
        return np.linalg.norm(th[:, None, :] - zs[None, :, :], axis=2) if m > 1 else np.abs(th - zs.T)

    return HoelderGoal(1.0, evaluator, lambda zs: np.ones(zs.shape[0]), box.lower, m, m, "abs")


def sqrt_abs_goal(box: ParamBox) -> HoelderGoal:
    """``G(theta, z) = sqrt|theta - z|`` (m = d = 1), Hoelder of order 1/2 with ``C == 1``."""
    if box.m != 1:
        raise ConfigurationError("sqrt-abs goal is one-dimensional")
    return HoelderGoal(0.5, lambda th, zs: np.sqrt(np.abs(th - zs.T)), lambda zs: np.ones(zs.shape[0]), box.lower, 1, 1, "sqrt-abs")


NAMED_GOALS = {
    "bilinear": bilinear_goal,
    "quadratic": quadratic_goal,
    "abs": abs_goal,
    "sqrt-abs": sqrt_abs_goal,
}


# -- envelopes ----------------------------------------------------------------

def build_envelope_hoelder(goal, box: ParamBox) -> EnvelopeSpec:
    """``xi(z) = C(z) diam(box)^beta + |G(base_point, z)|`` floored at 1e-12."""
    base = np.asarray(goal.base_point, dtype=float)
    if not box.contains(base):
        raise DomainError("Hoelder base point must lie inside the box")
    scale = box.diameter**goal.beta

    if isinstance(goal, ConstantGoal):
        return EnvelopeSpec(lambda zs: np.full(np.asarray(zs).shape[0], POSITIVITY_FLOOR * scale + abs(goal.value)),
                            "hoelder-built", max(POSITIVITY_FLOOR * scale + abs(goal.value), POSITIVITY_FLOOR))

    def xi(zs):
        return goal.coeff(zs) * scale + np.abs(goal.grid(base[None, :], zs)[0])

    return EnvelopeSpec(xi, "hoelder-built")


def pl_eta(goal: PLGoal, box: ParamBox) -> np.ndarray:
    """``sup_theta |Lambda_i(T theta) + b_i|`` per cell, replaced by 1 where it vanishes."""
    corners = box.corners() @ goal.T.T
    etas = []
    for cell in goal.cells:
        sup = float(np.max(np.abs(corners @ np.asarray(cell.Lambda) + cell.b)))
        etas.append(sup + (1.0 if sup == 0.0 else 0.0))
    return np.array(etas)


def build_envelope_pl(goal: PLGoal, box: ParamBox) -> EnvelopeSpec:
    """``xi(z) = sum_i (|Lambda_i z| + eta_i)`` using the unit bound of the cell indicators."""
    etas = pl_eta(goal, box)
    lams = np.array([cell.Lambda for cell in goal.cells])

    def xi(zs):
        return np.sum(np.abs(np.asarray(zs) @ lams.T) + etas[None, :], axis=1)

    const = float(etas.sum()) if not np.any(lams) else None
    return EnvelopeSpec(xi, "pl-built", const)


# -- PL validation ------------------------------------------------------------

@dataclass
class ValidationReport:
    passed: bool
    n_probes: int
    overlaps: list = field(default_factory=list)
    gaps: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return self.overlaps + self.gaps


def validate_pl(goal: PLGoal, probes: Sequence, max_report: int = 20) -> ValidationReport:
    """Check disjointness and partition of unity of the cell indicators on probe pairs.

    ``probes`` is a sequence of ``(theta, z)`` pairs.
    """
    if len(probes) == 0:
        raise ConfigurationError("validate_pl needs at least one probe")
    thetas = np.array([np.atleast_1d(np.asarray(t, dtype=float)) for t, _ in probes])
    zs = np.array([np.atleast_1d(np.asarray(z, dtype=float)) for _, z in probes])
    shift = thetas @ goal.T.T
    counts = np.zeros(len(probes), dtype=int)
    for cell in goal.cells:
        active = np.ones(len(probes), dtype=bool)
        for L, a, closed in cell.constraints:
            L = np.asarray(L)
            arg = (shift @ L) + (zs @ L) + a
            active &= arg >= 0.0 if closed else arg > 0.0
        counts += active
    over = np.flatnonzero(counts > 1)
    gap = np.flatnonzero(counts == 0)
    pick = lambda idx: [(thetas[i].tolist(), zs[i].tolist()) for i in idx[:max_report]]
    return ValidationReport(over.size == 0 and gap.size == 0, len(probes), pick(over), pick(gap))


def default_probes(goal: PLGoal, box: ParamBox, dist: SourceDistribution, n: int = 10_000, seed: int = 0) -> list:
    """Sobol and random probes over box x support, plus probes projected onto cell boundaries."""
    rng = make_rng(seed, (7,))
    lo, hi = dist.support
    dim = goal.m + goal.d
    log2 = max(int(math.log2(max(n // 2, 1))), 0)
    n_sobol = 2**log2
    sob = qmc.Sobol(dim, scramble=True, seed=rng).random_base2(log2)
    unif = rng.random((n - n_sobol, dim))
    pts = np.vstack([sob, unif])
    blo = np.array(box.lower + (lo,) * goal.d)
    bhi = np.array(box.upper + (hi,) * goal.d)
    pts = blo + (bhi - blo) * pts
    thetas, zs = pts[:, : goal.m], pts[:, goal.m :]
    extra = []
    constraints = [c for cell in goal.cells for c in cell.constraints]
    for L, a, _ in constraints:
        L = np.asarray(L)
        nrm = float(L @ L)
        if nrm == 0.0:
            continue
        k = max(1, n // (10 * len(constraints)))
        th = box.random(k, rng)
        z = lo + (hi - lo) * rng.random((k, goal.d))
        resid = (th @ goal.T.T + z) @ L + a
        z = z - resid[:, None] * L[None, :] / nrm
        extra.extend(zip(th, z))
    return list(zip(thetas, zs)) + extra


def check_boundary_atoms(goal: PLGoal, box: ParamBox, dist: SourceDistribution) -> list:
    """Warn when an atom of a discrete source can sit on a closed cell boundary.

    Boundary null-set conditions are assumed for non-atomic sources.
    """
    if not dist.is_atomic:
        return []
    corners = box.corners() @ goal.T.T
    atoms = np.array(list(itertools.product(dist.params[0], repeat=dist.d)), dtype=float)
    hits = []
    for i, cell in enumerate(goal.cells):
        for L, a, closed in cell.constraints:
            if not closed:
                continue
            L = np.asarray(L)
            images = -(corners @ L) - a
            lo, hi = images.min(), images.max()
            lz = atoms @ L
            if np.any((lz >= lo) & (lz <= hi)):
                hits.append((i, L.tolist(), a))
    if hits:
        warnings.warn(
            f"atoms of the discrete source can hit closed cell boundaries {hits}; "
            "the solver's measurability assumptions may fail",
            RuntimeWarning,
            stacklevel=2,
        )
    return hits
