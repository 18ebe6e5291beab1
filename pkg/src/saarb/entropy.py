"""Entropy-integral bounds and covering-number bounds.

Each ``j_*`` function returns an :class:`EntropyBound` on the uniform entropy
integral ``J(delta) = int_0^delta sup_Q sqrt(ln 2N(eps ||C||_Q, F, L2(Q))) d eps``
for a particular class of goal functions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

from scipy import integrate

from .errors import DivergenceError, DomainError

NUMERIC_RTOL = 1e-8
LN2 = math.log(2.0)


@dataclass(frozen=True)
class EntropyBound:
    delta: float
    value: float
    provenance: str

    def __float__(self) -> float:
        return self.value


def _check_delta(delta: float, hi: float, closed: bool = True, name: str = "delta") -> float:
    delta = float(delta)
    ok = 0.0 < delta <= hi if closed else 0.0 < delta < hi
    if not ok:
        rng = f"(0, {hi:g}]" if closed else f"(0, {hi:g})"
        raise DomainError(f"{name} must lie in {rng}, got {delta}")
    return delta


def j_hoelder(m: int, beta: float, delta: float) -> EntropyBound:
    """Entropy bound for goals Hoelder continuous of order ``beta`` in an ``m``-dimensional parameter."""
    if int(m) != m or m < 1:
        raise DomainError(f"m must be a positive integer, got {m}")
    if not 0.0 < beta <= 1.0:
        raise DomainError(f"beta must lie in (0, 1], got {beta}")
    delta = _check_delta(delta, 0.5)
    val = 2.0 * delta * math.sqrt((3 * m + 1) * LN2 + (m / beta) * math.log(2.0 / delta))
    return EntropyBound(delta, val, f"hoelder(m={m}, beta={beta:g})")


def j_pl(r: int, s: Sequence[int], delta: float) -> EntropyBound:
    """Entropy bound for piecewise linear goals with ``r`` cells, cell ``i`` cut by ``s[i]`` half-spaces."""
    if int(r) != r or r < 1:
        raise DomainError(f"r must be a positive integer, got {r}")
    s = [int(x) for x in s]
    if len(s) != r or any(x < 1 for x in s):
        raise DomainError(f"s must list r={r} counts, each >= 1, got {s}")
    delta = _check_delta(delta, 1.0)
    ssum = sum(s)
    inner = (
        math.fsum(math.log(x + 1) for x in s)
        + (8 * ssum + 30 * r + 1) * LN2
        + 2 * (ssum + 3 * r) * (0.5 + math.log(r / delta))
    )
    return EntropyBound(delta, 2.0 * delta * math.sqrt(inner), f"pl(r={r}, s={s})")


def j_semidev_transform(base_j: Callable[[float], float], p: float, delta: float) -> EntropyBound:
    """Entropy bound for the class ``G_p`` built from the base class, given the base ``J`` as a function."""
    if not p >= 1.0:
        raise DomainError(f"p must be >= 1, got {p}")
    delta = _check_delta(delta, 1.0, closed=False)
    scale = 2.0 ** (p + 2)
    base = float(base_j(delta / scale))
    val = math.sqrt(2.0) * scale * base + math.sqrt(2.0) * delta * (
        math.sqrt(LN2) + 2.0 * math.sqrt(math.log(2.0 ** (p + 4) / delta))
    )
    return EntropyBound(delta, val, f"semidev-transform(p={p:g})")


def j_divergence_transform(base_j_at_delta: float, delta: float) -> EntropyBound:
    """Entropy bound for the OCE-lifted class over a compact shift interval."""
    delta = _check_delta(delta, math.exp(-1.0))
    if base_j_at_delta < 0:
        raise DomainError("base J must be nonnegative")
    val = (
        math.sqrt(2.0) * base_j_at_delta
        + 4.0 * delta * math.sqrt(math.log(1.0 / delta))
        + math.sqrt(2.0 * LN2) * delta
    )
    return EntropyBound(delta, val, "divergence-transform")


def vc_covering_bound(V: int, eps: float) -> float:
    """Uniform L2 covering-number bound ``e V (4 sqrt(e) / eps)^(2(V-1))`` for a VC-subgraph class."""
    if int(V) != V or V < 2:
        raise DomainError(f"VC index must be an integer >= 2, got {V}")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    return math.e * V * (4.0 * math.sqrt(math.e) / eps) ** (2 * (V - 1))


def vc_log_covering(V: int) -> Callable[[float], float]:
    """``eps -> ln(2 N(eps))`` for the VC bound, computed in log space."""
    if int(V) != V or V < 2:
        raise DomainError(f"VC index must be an integer >= 2, got {V}")
    head = math.log(2.0 * math.e * V)
    base = math.log(4.0 * math.sqrt(math.e))

    def log_bound(eps: float) -> float:
        return head + 2 * (V - 1) * (base - math.log(eps))

    return log_bound


def haussler_l1_bound(V: int, eps: float) -> float:
    """L1 covering-number bound ``e V (2e / eps)^(V-1)``; kept as a reference helper."""
    if int(V) != V or V < 1:
        raise DomainError(f"VC index must be a positive integer, got {V}")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    return math.e * V * (2.0 * math.e / eps) ** (V - 1)


def j_numeric(covering_log_bound: Callable[[float], float], delta: float, provenance: str = "numeric") -> EntropyBound:
    """Quadrature of ``int_0^delta sqrt(covering_log_bound(eps)) d eps``.

    Substituting ``eps = delta u^2`` turns a logarithmic singularity at 0 into
    a bounded integrand ``2 delta u sqrt(L(delta u^2))``.
    """
    delta = _check_delta(delta, 1.0)

    def integrand(u: float) -> float:
        if u == 0.0:
            return 0.0
        val = covering_log_bound(delta * u * u)
        if val < 0:
            raise DomainError("covering log bound must be nonnegative")
        return 2.0 * delta * u * math.sqrt(val)

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=NUMERIC_RTOL, limit=200)
        except integrate.IntegrationWarning as exc:
            raise DivergenceError(f"entropy quadrature did not converge: {exc}") from None
    if not math.isfinite(val):
        raise DivergenceError("entropy quadrature is not finite")
    return EntropyBound(delta, float(val), provenance)


def j_vc(V: int, delta: float) -> EntropyBound:
    return j_numeric(vc_log_covering(V), delta, f"vc(V={V})")


def entropy_integral_upper(v: float, K: float) -> float:
    """Closed-form majorant ``2 sqrt(v ln K)`` of ``int_0^1 sqrt(v ln(K/eps)) d eps``."""
    if not v >= 1.0:
        raise DomainError(f"v must be >= 1, got {v}")
    if not K >= math.e * (1.0 - 1e-15):
        raise DomainError(f"K must be >= e, got {K}")
    return 2.0 * math.sqrt(v * math.log(K))


def entropy_integral_lhs(v: float, K: float) -> float:
    """Quadrature of ``int_0^1 sqrt(v ln(K/eps)) d eps``."""
    return j_numeric(lambda e: v * (math.log(K) - math.log(e)), 1.0).value


def vc_matched_params(V: int) -> tuple[float, float]:
    """``(v, K)`` with ``ln 2N(eps) = v ln(K / eps)`` for the VC covering bound."""
    v = 2.0 * (V - 1)
    K = 4.0 * math.sqrt(math.e) * (2.0 * math.e * V) ** (1.0 / v)
    return v, K


def vc_majorant(V: int, delta: float) -> float:
    """Upper bound on the VC entropy integral up to ``delta``.

    Rescaling ``eps = delta t`` gives ``delta int_0^1 sqrt(v ln((K/delta)/t)) dt``,
    bounded by ``delta * entropy_integral_upper(v, K / delta)``.
    """
    delta = _check_delta(delta, 1.0)
    v, K = vc_matched_params(V)
    return delta * entropy_integral_upper(v, K / delta)
