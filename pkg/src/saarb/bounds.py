"""Nonasymptotic deviation bounds for SAA optimal values.

Every tail bound has the shape ``exponential term(s) + remainder`` and is
only valid above an ``eps`` threshold and a minimum sample size; the result
records which condition failed when it is not applicable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .dist import MomentTable, SourceDistribution, envelope_moments, expectation
from .errors import ConfigurationError, DomainError

APPLICABLE = "applicable"
BELOW_THRESHOLD = "below-threshold"
N_TOO_SMALL = "n-too-small"

SQRT2 = math.sqrt(2.0)
DEFAULT_T_GRID = tuple(float(t) for t in np.logspace(-1.0, 2.0, 20))

JSource = Union[Mapping[float, float], Callable[[float], float]]


@dataclass(frozen=True)
class CompactInterval:
    x_l: float
    x_u: float
    x0: float
    delta: float

    def __post_init__(self):
        if not self.x_l <= self.x_u:
            raise DomainError(f"empty interval [{self.x_l}, {self.x_u}]")

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x >= self.x_l) & (x <= self.x_u)


@dataclass(frozen=True)
class DivergenceSetup:
    """Envelope quantities for the divergence bound, derived from the base envelope."""

    interval: CompactInterval
    phi_xi_mean: float
    phi_xi_var: float
    composite: MomentTable


@dataclass(frozen=True)
class BoundInputs:
    """Inputs shared by the tail bounds.

    ``moments`` describes the envelope xi; ``J`` maps a radius ``delta`` to an
    entropy-integral bound for the goal class. ``scale`` multiplies both the
    bound and its threshold (a test fixture for forcing violations).
    """

    n: int
    t: float
    eps: float
    moments: MomentTable
    J: JSource
    remainder: str = "bounded"
    p: Optional[float] = None
    a: Optional[float] = None
    moments_p: Optional[MomentTable] = None
    divergence: Optional[DivergenceSetup] = None
    scale: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")
        if not self.t > 0:
            raise ConfigurationError(f"t must be positive, got {self.t}")
        if not self.eps > 0:
            raise ConfigurationError(f"eps must be positive, got {self.eps}")
        if not self.moments.L2 > 0:
            raise ConfigurationError("envelope norm must be positive")
        if self.remainder not in ("bounded", "chebyshev"):
            raise ConfigurationError(f"unknown remainder mode {self.remainder!r}")

    @property
    def norm_xi_2(self) -> float:
        return self.moments.L2

    def j(self, delta: float) -> float:
        if callable(self.J):
            return float(self.J(delta))
        for key, val in self.J.items():
            if math.isclose(float(key), delta, rel_tol=1e-12):
                return float(val)
        raise ConfigurationError(f"no entropy bound supplied at delta={delta}")

    def with_t(self, t: float) -> "BoundInputs":
        return _replace(self, t=float(t))

    def with_eps(self, eps: float) -> "BoundInputs":
        return _replace(self, eps=float(eps))

    def with_n(self, n: int) -> "BoundInputs":
        return _replace(self, n=int(n))


def _replace(obj, **kw):
    from dataclasses import replace

    return replace(obj, **kw)


@dataclass(frozen=True)
class TailBoundResult:
    status: str
    bound_value: float
    threshold_eps: float
    min_n: float
    remainder: float
    components: dict = field(default_factory=dict)
    t: Optional[float] = None

    @property
    def applicable(self) -> bool:
        return self.status == APPLICABLE


def _finish(inputs: BoundInputs, exps: dict, remainder: float, threshold: float, min_n: float, extra: dict) -> TailBoundResult:
    threshold *= inputs.scale
    if inputs.n < min_n:
        status = N_TOO_SMALL
    elif not inputs.eps > threshold:
        status = BELOW_THRESHOLD
    else:
        status = APPLICABLE
    raw = (math.fsum(exps.values()) + remainder) * inputs.scale
    value = min(max(raw, 0.0), 1.0) if status == APPLICABLE else math.nan
    comps = {**exps, "remainder": remainder, "threshold_eps": threshold, "min_n": min_n, **extra}
    return TailBoundResult(status, value, threshold, min_n, remainder, comps, inputs.t)


def expected_error_bound(n: int, norm_xi_2: float, J_half: float) -> float:
    """Bound on the expected absolute deviation of the SAA value (risk-neutral case)."""
    return 16.0 * SQRT2 * norm_xi_2 * J_half / math.sqrt(n)


def eta_threshold(t: float, n: int, norm_xi_2: float, J_quarter: float) -> float:
    """Smallest ``eps`` at which the risk-neutral tail bound applies."""
    return norm_xi_2 / math.sqrt(n) + 32.0 * SQRT2 * (1.0 + t) * norm_xi_2 * J_quarter / math.sqrt(n)


def remainder_prob(moments: Optional[MomentTable], n: int, mode: str = "bounded") -> float:
    """Probability that the empirical second moment of the envelope exceeds twice its mean.

    ``bounded`` mode applies to a constant envelope, where the event is empty;
    ``chebyshev`` uses ``Var[xi^2] / (n E[xi^2]^2)``.
    """
    if mode == "bounded":
        if moments is not None and moments.var_sq > 1e-12 * moments.mean_sq**2:
            raise ConfigurationError("bounded remainder mode needs a constant envelope; use chebyshev")
        return 0.0
    if mode != "chebyshev":
        raise ConfigurationError(f"unknown remainder mode {mode!r}")
    if moments is None or moments.L4 is None or not math.isfinite(moments.L4):
        raise ConfigurationError("chebyshev remainder needs the fourth moment of the envelope")
    return min(max(moments.var_sq / (n * moments.mean_sq**2), 0.0), 1.0)


def a_event_remainder(xi_var: float, phi_xi_var: float, n: int, delta: float) -> float:
    """Union of one-sided Chebyshev bounds for the two sample means defining the good event."""
    return min(max((xi_var + phi_xi_var) / (n * delta * delta), 0.0), 1.0)


def risk_neutral_tail_bound(inputs: BoundInputs) -> TailBoundResult:
    t, n, eps = inputs.t, inputs.n, inputs.eps
    nx = inputs.norm_xi_2
    j4 = inputs.j(0.25)
    eta = eta_threshold(t, n, nx, j4)
    expo = math.exp(-t * t * math.sqrt(n) * eps / (8.0 * (t + 1.0) * (t + 28.0) * nx))
    rem = remainder_prob(inputs.moments, n, inputs.remainder)
    return _finish(inputs, {"exp": expo}, rem, eta, nx * nx / 2.0, {"J_quarter": j4})


def semidev_threshold(t: float, n: int, p: float, a: float, norm_xi_p_2: float, J_small: float) -> float:
    bracket = 1.0 + math.sqrt(p + 6.0) + 2.0 ** (p + 3) * J_small
    return (
        2.0 * (1.0 + a) * 32.0 ** (1.0 / p) * (t + 1.0) ** (1.0 / p) * norm_xi_p_2 ** (1.0 / p)
        / n ** (1.0 / (2.0 * p)) * bracket ** (1.0 / p)
    )


def semidev_tail_bound(inputs: BoundInputs) -> TailBoundResult:
    if inputs.p is None or inputs.a is None:
        raise ConfigurationError("semideviation bound needs p and a")
    if inputs.moments_p is None:
        raise ConfigurationError("semideviation bound needs the moments of the lifted envelope")
    t, n, eps, p, a = inputs.t, inputs.n, inputs.eps, inputs.p, inputs.a
    nx, nxp = inputs.norm_xi_2, inputs.moments_p.L2
    j4 = inputs.j(0.25)
    j_small = inputs.j(2.0 ** -(p + 4))
    thr = semidev_threshold(t, n, p, a, nxp, j_small)
    min_n = max(nxp * nxp / 2.0, (1.0 + 32.0 * SQRT2 * j4) ** 2)
    d = (t + 1.0) * (t + 28.0)
    exps = {
        "exp": math.exp(-t * t * math.sqrt(n) * eps / (16.0 * d * nx)),
        "exp_p": math.exp(-t * t * math.sqrt(n) * eps**p / (2.0 ** (p + 3) * a**p * d * nxp)),
    }
    rem = remainder_prob(inputs.moments, n, inputs.remainder) + remainder_prob(inputs.moments_p, n, inputs.remainder)
    return _finish(inputs, exps, rem, thr, min_n, {"J_quarter": j4, "J_small": j_small})


def semidev_envelope_moments(xi, dist: SourceDistribution, p: float) -> MomentTable:
    """Moments of the lifted envelope ``[xi + max(E xi, 1)]^(p+1)``."""
    base = envelope_moments(xi, dist)
    shift = max(base.mean, 1.0)
    const = getattr(xi, "constant", None)
    if const is not None:
        return MomentTable.constant((const + shift) ** (p + 1))

    class _Lifted:
        constant = None

        def __call__(self, z):
            return (xi(z) + shift) ** (p + 1)

    return envelope_moments(_Lifted(), dist)


def interval_endpoints(phi, x0: float, xi_mean, phi_xi_mean, delta: float):
    """Compactification endpoints; array inputs broadcast."""
    phi0 = phi.phi(0.0)
    phix0 = phi.phi(x0)
    if not math.isfinite(phix0):
        raise ConfigurationError(f"phi(x0) is infinite at x0={x0}")
    if not x0 > 1.0:
        raise ConfigurationError(f"x0 must exceed 1, got {x0}")
    x_l = -phi0 - delta - phi_xi_mean
    x_u = (phix0 + (1.0 + x0) * delta + phi_xi_mean + x0 * xi_mean) / (x0 - 1.0) + phi0
    return x_l, x_u


def compactification_interval(phi, x0: float, xi_mean: float, phi_xi_mean: float, delta: float) -> CompactInterval:
    """Interval guaranteed to hold every empirical OCE minimizer on the good sample event."""
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    x_l, x_u = interval_endpoints(phi, x0, xi_mean, phi_xi_mean, delta)
    return CompactInterval(float(x_l), float(x_u), float(x0), float(delta))


def divergence_setup(phi, x0: float, delta: float, xi, dist: SourceDistribution) -> DivergenceSetup:
    """Evaluate the interval and composite envelope ``[phi*'(xi + x_u) + 1] sqrt(xi^2 + x_u^2)``."""
    base = envelope_moments(xi, dist)
    const = getattr(xi, "constant", None)
    if const is not None:
        ph = float(phi.phi_star(np.array([const]))[0])
        ph_mean, ph_var = ph, 0.0
    else:
        ph_mean, _, _ = expectation(lambda z: phi.phi_star(xi(z)), dist)
        ph_sq, _, _ = expectation(lambda z: phi.phi_star(xi(z)) ** 2, dist)
        ph_var = max(ph_sq - ph_mean**2, 0.0)
    interval = compactification_interval(phi, x0, base.mean, ph_mean, delta)
    xu = interval.x_u

    def comp(v):
        v = np.asarray(v, dtype=float)
        return (np.asarray(phi.phi_star_rightderiv(v + xu), dtype=float) + 1.0) * np.sqrt(v * v + xu * xu)

    if const is not None:
        composite = MomentTable.constant(float(comp(np.array([const]))[0]))
    else:

        class _Composite:
            constant = None

            def __call__(self, z):
                return comp(xi(z))

        composite = envelope_moments(_Composite(), dist)
    return DivergenceSetup(interval, float(ph_mean), float(ph_var), composite)


def divergence_threshold(t: float, n: int, norm_comp: float, J_quarter: float) -> float:
    return norm_comp / math.sqrt(n) * (2.0 + 32.0 * (t + 1.0) * (4.0 * J_quarter + 5.0 * math.sqrt(math.log(2.0))))


def divergence_tail_bound(inputs: BoundInputs) -> TailBoundResult:
    setup = inputs.divergence
    if setup is None:
        raise ConfigurationError("divergence bound needs the compactification setup")
    x0 = setup.interval.x0
    if not 1.0 < x0 < 2.0:
        raise ConfigurationError(f"the divergence tail bound needs x0 in (1, 2), got {x0}")
    t, n, eps = inputs.t, inputs.n, inputs.eps
    nc = setup.composite.L2
    j4 = inputs.j(0.25)
    thr = divergence_threshold(t, n, nc, j4)
    expo = math.exp(-t * t * math.sqrt(n) * eps / (16.0 * (t + 1.0) * (t + 28.0) * nc))
    delta = setup.interval.delta
    rem_a = a_event_remainder(inputs.moments.var, setup.phi_xi_var, n, delta)
    rem_b = remainder_prob(setup.composite, n, "chebyshev" if inputs.remainder == "chebyshev" else "bounded")
    extra = {
        "J_quarter": j4,
        "remainder_A": rem_a,
        "remainder_B": rem_b,
        "x_l": setup.interval.x_l,
        "x_u": setup.interval.x_u,
        "norm_composite": nc,
    }
    return _finish(inputs, {"exp": expo}, rem_a + rem_b, thr, 2.0 * nc * nc, extra)


def optimize_t(bound_fn: Callable[[float], TailBoundResult], t_grid: Sequence[float] = DEFAULT_T_GRID):
    """Grid search for the ``t`` giving the smallest applicable bound.

    Returns ``(t_star, result)``. When no grid point applies, ``t_star`` is the
    point with the smallest threshold and the result carries its status.
    """
    if len(t_grid) == 0:
        raise ConfigurationError("t grid must be nonempty")
    results = [(float(t), bound_fn(float(t))) for t in t_grid]
    applicable = [(t, r) for t, r in results if r.applicable]
    if applicable:
        return min(applicable, key=lambda tr: tr[1].bound_value)
    statuses = {r.status for _, r in results}
    pool = [(t, r) for t, r in results if r.status == BELOW_THRESHOLD] if BELOW_THRESHOLD in statuses else results
    return min(pool, key=lambda tr: tr[1].threshold_eps)
