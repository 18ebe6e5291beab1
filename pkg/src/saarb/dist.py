"""Source distributions, empirical distributions and envelope moments."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate, stats

from .errors import ConfigurationError, DivergenceError, DomainError

KINDS = ("uniform", "discrete", "truncated-normal")

MC_SAMPLES = 10**6
QUAD_RTOL = 1e-10


@dataclass(frozen=True)
class SourceDistribution:
    """Law of the random vector Z with independent, identically distributed coordinates.

    ``params`` holds ``lo, hi`` for uniform, ``points, weights`` for discrete and
    ``mu, sigma, lo, hi`` for truncated-normal.
    """

    kind: str
    params: tuple
    d: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown distribution kind {self.kind!r}")
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ConfigurationError(f"dimension must be a positive integer, got {self.d!r}")
        if self.kind == "uniform":
            lo, hi = self.params
            if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
                raise ConfigurationError(f"uniform requires finite lo < hi, got ({lo}, {hi})")
        elif self.kind == "discrete":
            points, weights = self.params
            if len(points) == 0 or len(points) != len(weights):
                raise ConfigurationError("discrete needs equally many points and weights")
            if any(w < 0 for w in weights) or abs(math.fsum(weights) - 1.0) > 1e-12:
                raise ConfigurationError("discrete weights must be nonnegative and sum to 1")
            if not all(math.isfinite(p) for p in points):
                raise ConfigurationError("discrete points must be finite")
        else:
            mu, sigma, lo, hi = self.params
            if not sigma > 0:
                raise ConfigurationError("truncated-normal requires sigma > 0")
            if not lo < hi:
                raise ConfigurationError(f"truncated-normal requires lo < hi, got ({lo}, {hi})")

    @classmethod
    def uniform(cls, lo: float, hi: float, d: int = 1) -> "SourceDistribution":
        return cls("uniform", (float(lo), float(hi)), d)

    @classmethod
    def discrete(cls, points, weights, d: int = 1) -> "SourceDistribution":
        return cls("discrete", (tuple(float(p) for p in points), tuple(float(w) for w in weights)), d)

    @classmethod
    def truncated_normal(cls, mu, sigma, lo, hi, d: int = 1) -> "SourceDistribution":
        return cls("truncated-normal", (float(mu), float(sigma), float(lo), float(hi)), d)

    @property
    def support(self) -> tuple[float, float]:
        """Bounds of the (coordinatewise) support."""
        if self.kind == "uniform":
            return self.params
        if self.kind == "discrete":
            return min(self.params[0]), max(self.params[0])
        return self.params[2], self.params[3]

    @property
    def is_atomic(self) -> bool:
        return self.kind == "discrete"

    def _truncnorm(self):
        mu, sigma, lo, hi = self.params
        return stats.truncnorm((lo - mu) / sigma, (hi - mu) / sigma, loc=mu, scale=sigma)

    def ppf(self, u: np.ndarray) -> np.ndarray:
        """Coordinatewise left-continuous quantile function."""
        u = np.asarray(u, dtype=float)
        if self.kind == "uniform":
            lo, hi = self.params
            return lo + (hi - lo) * u
        if self.kind == "truncated-normal":
            return self._truncnorm().ppf(u)
        points, weights = self.params
        order = np.argsort(points, kind="stable")
        pts = np.asarray(points)[order]
        cdf = np.cumsum(np.asarray(weights)[order])
        idx = np.searchsorted(cdf, u, side="left")
        return pts[np.minimum(idx, len(pts) - 1)]

    def pdf(self, z: np.ndarray) -> np.ndarray:
        if self.kind == "uniform":
            lo, hi = self.params
            return np.where((z >= lo) & (z <= hi), 1.0 / (hi - lo), 0.0)
        if self.kind == "truncated-normal":
            return self._truncnorm().pdf(z)
        raise ConfigurationError("discrete distributions have no density")

    def to_dict(self) -> dict:
        names = {
            "uniform": ("lo", "hi"),
            "discrete": ("points", "weights"),
            "truncated-normal": ("mu", "sigma", "lo", "hi"),
        }[self.kind]
        out = {"kind": self.kind, "d": int(self.d)}
        out.update({k: (list(v) if isinstance(v, tuple) else v) for k, v in zip(names, self.params)})
        return out

    @classmethod
    def from_dict(cls, spec: dict) -> "SourceDistribution":
        try:
            kind = spec["kind"]
            d = int(spec.get("d", 1))
            if kind == "uniform":
                return cls.uniform(spec["lo"], spec["hi"], d)
            if kind == "discrete":
                return cls.discrete(spec["points"], spec["weights"], d)
            if kind in ("truncated-normal", "truncated_normal"):
                return cls.truncated_normal(spec["mu"], spec["sigma"], spec["lo"], spec["hi"], d)
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"bad distribution spec {spec!r}: {exc}") from None
        raise ConfigurationError(f"unknown distribution kind {spec.get('kind')!r}")


def make_rng(seed: int, stream: Sequence[int] = ()) -> np.random.Generator:
    """Counter-based Philox generator keyed by ``(seed, *stream)``.

    The key is a hash of the seed and the stream path, so stream ``(n, r)`` is
    the same whichever worker draws it.
    """
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def sample(dist: SourceDistribution, n: int, seed: int, stream: Sequence[int] = ()) -> np.ndarray:
    """Draw ``n`` i.i.d. copies of Z as an ``(n, d)`` array."""
    if n < 1:
        raise ConfigurationError(f"sample size must be >= 1, got {n}")
    rng = make_rng(seed, stream)
    shape = (int(n), int(dist.d))
    if dist.kind == "uniform":
        lo, hi = dist.params
        return lo + (hi - lo) * rng.random(shape)
    if dist.kind == "discrete":
        points, weights = dist.params
        return rng.choice(np.asarray(points), size=shape, p=np.asarray(weights))
    return dist.ppf(rng.random(shape))


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Sorted sample with left-continuous quantile access."""

    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size == 0:
            raise DomainError("empirical distribution needs at least one value")
        if not np.all(np.isfinite(v)):
            raise DomainError("empirical distribution values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def quantile(self, u: float) -> float:
        return quantile(self, u)


def quantile(ed: EmpiricalDistribution, u: float) -> float:
    """``inf{t : F(t) >= u}`` for the empirical distribution function F."""
    if not 0.0 < u < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {u}")
    # exact rational arithmetic: float rounding of u*n must not move the index
    k = math.ceil(Fraction(u) * ed.n) - 1
    return float(ed.values[k])


@dataclass(frozen=True)
class MomentTable:
    """Norms ``||xi||_{P^Z, p} = E[xi(Z)^p]^(1/p)`` of a positive envelope."""

    L1: float
    L2: float
    L4: float
    Lp: dict = field(default_factory=dict)
    method: str = "closed-form"
    stderr: dict = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return self.L1

    @property
    def mean_sq(self) -> float:
        return self.L2**2

    @property
    def var(self) -> float:
        return max(self.L2**2 - self.L1**2, 0.0)

    @property
    def var_sq(self) -> float:
        """``Var[xi(Z)^2]``."""
        return max(self.L4**4 - self.L2**4, 0.0)

    @property
    def is_constant(self) -> bool:
        return self.method == "closed-form" and self.L1 == self.L4

    @classmethod
    def constant(cls, value: float, orders: Iterable[float] = ()) -> "MomentTable":
        v = float(value)
        return cls(v, v, v, {float(o): v for o in orders}, "closed-form")


def _product_points(dist: SourceDistribution):
    points, weights = dist.params
    if len(points) ** dist.d > 10**6:
        return None
    zs = np.array(list(itertools.product(points, repeat=dist.d)), dtype=float)
    ws = np.prod(np.array(list(itertools.product(weights, repeat=dist.d))), axis=1)
    return zs, ws


def expectation(
    f: Callable[[np.ndarray], np.ndarray],
    dist: SourceDistribution,
    *,
    mc_samples: int = MC_SAMPLES,
    seed: int = 0,
) -> tuple[float, float, str]:
    """``E[f(Z)]`` for a vectorized ``f`` mapping ``(k, d)`` points to ``(k,)`` values.

    Returns ``(value, standard_error, method)``. Discrete laws are summed
    exactly, one-dimensional continuous laws integrated adaptively, and the
    rest estimated by Monte Carlo.
    """
    if dist.kind == "discrete":
        prod = _product_points(dist)
        if prod is not None:
            zs, ws = prod
            vals = np.asarray(f(zs), dtype=float)
            if not np.all(np.isfinite(vals)):
                raise DivergenceError("integrand is not finite on the support")
            return float(math.fsum(ws * vals)), 0.0, "closed-form"
    elif dist.d == 1:
        lo, hi = dist.support

        def integrand(z):
            return float(f(np.array([[z]]))[0]) * float(dist.pdf(np.array(z)))

        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _err = integrate.quad(integrand, lo, hi, epsabs=0.0, epsrel=QUAD_RTOL, limit=500)
            except (integrate.IntegrationWarning, ZeroDivisionError, OverflowError) as exc:
                raise DivergenceError(f"quadrature did not converge: {exc}") from None
        if not math.isfinite(val):
            raise DivergenceError("expectation is infinite")
        return float(val), 0.0, "quadrature"
    z = sample(dist, mc_samples, seed)
    vals = np.asarray(f(z), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise DivergenceError("integrand is not finite on sampled points")
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(mc_samples)), f"monte-carlo(N={mc_samples}, seed={seed})"


def envelope_moments(xi, dist: SourceDistribution, orders: Iterable[float] = ()) -> MomentTable:
    """Moment table of an envelope (anything with ``.constant`` and ``.__call__``)."""
    extra = sorted({float(o) for o in orders})
    if any(o < 1 for o in extra):
        raise DomainError("moment orders must be >= 1")
    const = getattr(xi, "constant", None)
    if const is not None:
        return MomentTable.constant(const, extra)
    norms, errs, method = {}, {}, "closed-form"
    for order in sorted({1.0, 2.0, 4.0, *extra}):
        val, se, method = expectation(lambda z, o=order: np.abs(xi(z)) ** o, dist)
        if not math.isfinite(val):
            raise DivergenceError(f"moment of order {order} is infinite")
        norms[order] = val ** (1.0 / order)
        if se:
            errs[order] = se
    return MomentTable(
        norms[1.0], norms[2.0], norms[4.0], {o: norms[o] for o in extra}, method, errs
    )
