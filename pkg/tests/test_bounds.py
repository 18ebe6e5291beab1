import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as O
from saarb import bounds as B
from saarb import entropy as E
from saarb.dist import MomentTable, SourceDistribution
from saarb.errors import ConfigurationError, DomainError
from saarb.goal import EnvelopeSpec
from saarb.risk import PhiFamily

UNIT = MomentTable.constant(1.0)
J_EXAMPLE = {0.25: 2.03934}


def hoelder_j(d):
    return E.j_hoelder(1, 1.0, d).value


def rn_inputs(**kw):
    base = dict(n=100, t=1.0, eps=20.0, moments=UNIT, J=J_EXAMPLE)
    base.update(kw)
    return B.BoundInputs(**base)


def semidev_inputs(**kw):
    base = dict(n=10**6, t=1.0, eps=1.0, moments=UNIT, J=hoelder_j, p=1.0, a=1.0, moments_p=UNIT)
    base.update(kw)
    return B.BoundInputs(**base)


def avar_setup(alpha=0.5, x0=1.5, delta=1.0):
    phi = PhiFamily.avar(alpha, x0)
    return phi, B.divergence_setup(phi, x0, delta, EnvelopeSpec.const(1.0), SourceDistribution.uniform(0, 1))


def div_inputs(setup, **kw):
    base = dict(n=2700, t=1.0, eps=1.0, moments=UNIT, J=hoelder_j, divergence=setup)
    base.update(kw)
    return B.BoundInputs(**base)


class TestRiskNeutral:
    def test_expected_error_bound(self):
        assert B.expected_error_bound(100, 1.0, 2.03934) == pytest.approx(O.EXPECTED_ERROR_N100_J203934, rel=1e-14)
        assert B.expected_error_bound(100, 1.0, 0.0) == 0.0
        assert B.expected_error_bound(400, 1.0, 2.0) == pytest.approx(B.expected_error_bound(100, 1.0, 2.0) / 2)

    def test_eta(self):
        assert B.eta_threshold(1.0, 100, 1.0, 2.03934) == pytest.approx(O.ETA_T1_N100_J203934, rel=1e-14)
        assert B.eta_threshold(1.0, 100, 1.0, 0.0) == pytest.approx(0.1)
        assert B.eta_threshold(1e-12, 100, 1.0, 2.0) == pytest.approx(0.1 + 32 * math.sqrt(2) * 2.0 / 10, rel=1e-10)

    def test_example_applicable(self):
        res = B.risk_neutral_tail_bound(rn_inputs())
        assert res.status == B.APPLICABLE and res.applicable
        assert res.bound_value == pytest.approx(O.RISK_NEUTRAL_EPS20, rel=1e-14)
        assert res.threshold_eps == pytest.approx(O.ETA_T1_N100_J203934)
        assert res.remainder == 0.0 and res.min_n == 0.5 and res.t == 1.0

    def test_example_below_threshold(self):
        res = B.risk_neutral_tail_bound(rn_inputs(eps=10.0))
        assert res.status == B.BELOW_THRESHOLD and math.isnan(res.bound_value)

    def test_n_too_small(self):
        mom = MomentTable.constant(5.0)  # min_n = 12.5
        res = B.risk_neutral_tail_bound(rn_inputs(n=10, moments=mom, eps=1e6))
        assert res.status == B.N_TOO_SMALL

    def test_missing_j(self):
        with pytest.raises(ConfigurationError):
            B.risk_neutral_tail_bound(rn_inputs(J={0.5: 1.0}))

    @pytest.mark.parametrize("kw", [dict(n=0), dict(t=0.0), dict(eps=-1.0), dict(remainder="huh"),
                                    dict(moments=MomentTable.constant(0.0))])
    def test_input_validation(self, kw):
        with pytest.raises(ConfigurationError):
            rn_inputs(**kw)

    @given(st.floats(19.0, 1e4), st.floats(19.0, 1e4))
    def test_monotone_in_eps(self, e1, e2):
        lo, hi = sorted((e1, e2))
        a, b = B.risk_neutral_tail_bound(rn_inputs(eps=lo)), B.risk_neutral_tail_bound(rn_inputs(eps=hi))
        assert b.bound_value <= a.bound_value

    @given(st.integers(100, 10**7), st.integers(100, 10**7))
    def test_monotone_in_n(self, n1, n2):
        lo, hi = sorted((n1, n2))
        a, b = B.risk_neutral_tail_bound(rn_inputs(n=lo)), B.risk_neutral_tail_bound(rn_inputs(n=hi))
        assert b.bound_value <= a.bound_value
        assert b.threshold_eps <= a.threshold_eps

    @given(st.floats(0.01, 100.0), st.integers(1, 10**6), st.floats(0.01, 1e4))
    def test_status_consistency(self, t, n, eps):
        res = B.risk_neutral_tail_bound(rn_inputs(t=t, n=n, eps=eps))
        if res.applicable:
            assert eps > res.threshold_eps and n >= res.min_n
            assert 0.0 <= res.bound_value <= 1.0
        else:
            assert math.isnan(res.bound_value)

    def test_scale_multiplies_bound_and_threshold(self):
        base = B.risk_neutral_tail_bound(rn_inputs())
        scaled = B.risk_neutral_tail_bound(rn_inputs(scale=0.5))
        assert scaled.threshold_eps == pytest.approx(base.threshold_eps / 2)
        assert scaled.bound_value == pytest.approx(base.bound_value / 2)


class TestRemainder:
    def test_bounded(self):
        assert B.remainder_prob(UNIT, 10, "bounded") == 0.0

    def test_bounded_rejects_random_envelope(self):
        mom = MomentTable(1.0, 1.2, 1.5)
        with pytest.raises(ConfigurationError):
            B.remainder_prob(mom, 10, "bounded")

    def test_chebyshev(self):
        # E xi^2 = 1 and E xi^4 = 2 give Var xi^2 = 1
        mom = MomentTable(1.0, 1.0, 2.0**0.25)
        assert B.remainder_prob(mom, 100, "chebyshev") == pytest.approx(0.01)

    def test_chebyshev_clamped(self):
        mom = MomentTable(1.0, 1.0, 6.0**0.25)  # Var/E^2 = 5
        assert B.remainder_prob(mom, 1, "chebyshev") == 1.0

    def test_chebyshev_needs_fourth_moment(self):
        with pytest.raises(ConfigurationError):
            B.remainder_prob(MomentTable(1.0, 1.0, math.inf), 10, "chebyshev")
        with pytest.raises(ConfigurationError):
            B.remainder_prob(UNIT, 10, "mystery")

    def test_a_event(self):
        assert B.a_event_remainder(0.5, 0.5, 100, 0.1) == pytest.approx(1.0)
        assert B.a_event_remainder(0.5, 0.5, 1000, 0.1) == pytest.approx(0.1)
        assert B.a_event_remainder(0.0, 0.0, 10, 1.0) == 0.0


class TestSemideviation:
    def test_example(self):
        j32 = E.j_hoelder(1, 1.0, 1 / 32).value
        thr = B.semidev_threshold(1.0, 10**6, 1.0, 1.0, 1.0, j32)
        assert thr == pytest.approx(O.SEMIDEV_THRESHOLD_N1E6, rel=1e-13)
        res = B.semidev_tail_bound(semidev_inputs(eps=1.5 * thr))
        assert res.status == B.APPLICABLE
        assert res.bound_value == pytest.approx(O.SEMIDEV_BOUND_N1E6, rel=1e-12)
        assert res.min_n == pytest.approx(O.SEMIDEV_MIN_N_UNIT, rel=1e-13)
        assert set(res.components) >= {"exp", "exp_p", "J_quarter", "J_small"}

    def test_large_eps_leaves_remainders(self):
        mom = MomentTable(1.0, 1.0, 2.0**0.25)
        res = B.semidev_tail_bound(semidev_inputs(eps=1e9, moments=mom, moments_p=mom, remainder="chebyshev"))
        assert res.bound_value == pytest.approx(2e-6, rel=1e-9)

    def test_n_too_small(self):
        res = B.semidev_tail_bound(semidev_inputs(n=2584, eps=1e9))
        assert res.status == B.N_TOO_SMALL
        assert B.semidev_tail_bound(semidev_inputs(n=2585, eps=1e9)).applicable

    def test_missing_parameters(self):
        with pytest.raises(ConfigurationError):
            B.semidev_tail_bound(semidev_inputs(p=None))
        with pytest.raises(ConfigurationError):
            B.semidev_tail_bound(semidev_inputs(moments_p=None))

    def test_lifted_envelope_moments(self):
        src = SourceDistribution.uniform(0, 1)
        const = B.semidev_envelope_moments(EnvelopeSpec.const(1.0), src, 1.0)
        assert const.L2 == 4.0  # (1 + 1)^2
        lin = B.semidev_envelope_moments(EnvelopeSpec(lambda z: 2 * z[:, 0] + 1e-300), src, 1.0)
        # E xi = 1, so xi_p = (2Z + 1)^2 and E xi_p^2 = int_0^1 (2z+1)^4 dz = 242 / 10
        assert lin.L2 == pytest.approx(math.sqrt(24.2), rel=1e-9)

    @given(st.floats(1.0, 3.0), st.floats(0.05, 1.0), st.integers(10, 10**8))
    def test_threshold_shrinks_with_n(self, p, a, n):
        assert B.semidev_threshold(1.0, 4 * n, p, a, 1.0, 0.1) < B.semidev_threshold(1.0, n, p, a, 1.0, 0.1)


class TestCompactification:
    def test_avar_example(self):
        phi = PhiFamily.avar(0.5, 1.5)
        iv = B.compactification_interval(phi, 1.5, 1.0, float(phi.phi_star(np.array([1.0]))[0]), 1.0)
        assert (iv.x_l, iv.x_u) == (-3.0, 12.0)
        assert iv.contains(0.0) and not iv.contains(12.5)
        np.testing.assert_array_equal(iv.contains([-3.0, 12.0, -3.1]), [True, True, False])

    def test_degenerate(self):
        phi = PhiFamily.avar(0.5, 1.5)
        x_l, _ = B.interval_endpoints(phi, 1.5, 0.0, 0.0, 0.0)
        assert x_l == 0.0

    def test_entropic_x0_two(self):
        phi = PhiFamily.entropic(2.0)
        assert phi.phi(2.0) == pytest.approx(2 * math.log(2) - 1)
        iv = B.compactification_interval(phi, 2.0, 1.0, float(phi.phi_star(np.array([1.0]))[0]), 1.0)
        assert math.isfinite(iv.x_l) and math.isfinite(iv.x_u) and iv.x_l < iv.x_u

    def test_errors(self):
        phi = PhiFamily.avar(0.5, 1.5)
        with pytest.raises(DomainError):
            B.compactification_interval(phi, 1.5, 1.0, 2.0, 0.0)
        with pytest.raises(ConfigurationError):
            B.compactification_interval(phi, 1.0, 1.0, 2.0, 1.0)
        with pytest.raises(ConfigurationError):
            B.compactification_interval(phi, 3.0, 1.0, 2.0, 1.0)  # phi(3) is infinite for alpha = 1/2
        with pytest.raises(DomainError):
            B.CompactInterval(1.0, 0.0, 1.5, 1.0)

    def test_endpoints_broadcast(self):
        phi = PhiFamily.avar(0.5, 1.5)
        x_l, x_u = B.interval_endpoints(phi, 1.5, np.array([1.0, 2.0]), np.array([2.0, 4.0]), 1.0)
        np.testing.assert_allclose(x_l, [-3.0, -5.0])
        np.testing.assert_allclose(x_u, [12.0, 19.0])


class TestDivergence:
    def test_composite_envelope_chain(self):
        _, setup = avar_setup()
        assert setup.interval.x_u == 12.0
        assert setup.composite.L2 == pytest.approx(O.XI_COMPOSITE_AVAR_HALF, rel=1e-14)
        res = B.divergence_tail_bound(div_inputs(setup, eps=1e9))
        assert res.min_n == pytest.approx(2 * 9 * 145)

    @pytest.mark.parametrize("alpha", [0.1, 0.5, 0.9])
    @pytest.mark.parametrize("level", [0.5, 1.0, 3.0])
    def test_composite_matches_avar_formula(self, alpha, level):
        phi = PhiFamily.avar(alpha)
        setup = B.divergence_setup(phi, phi.x0, 1.0, EnvelopeSpec.const(level), SourceDistribution.uniform(0, 1))
        xu = setup.interval.x_u
        assert setup.composite.L2 == pytest.approx((2 - alpha) * math.hypot(level, xu) / (1 - alpha), rel=1e-13)

    def test_example_bound(self):
        _, setup = avar_setup()
        thr = B.divergence_threshold(1.0, 2700, setup.composite.L2, hoelder_j(0.25))
        assert thr == pytest.approx(O.DIVERGENCE_THRESHOLD_N2700, rel=1e-13)
        res = B.divergence_tail_bound(div_inputs(setup, eps=1.05 * thr))
        assert res.status == B.APPLICABLE
        assert res.bound_value == pytest.approx(O.DIVERGENCE_BOUND_N2700, rel=1e-12)
        assert res.components["remainder_A"] == 0.0 and res.components["remainder_B"] == 0.0
        assert (res.components["x_l"], res.components["x_u"]) == (-3.0, 12.0)

    def test_large_eps_vanishes(self):
        _, setup = avar_setup()
        assert B.divergence_tail_bound(div_inputs(setup, eps=1e12)).bound_value == 0.0

    def test_n_too_small(self):
        _, setup = avar_setup()
        assert B.divergence_tail_bound(div_inputs(setup, n=2609, eps=1e9)).status == B.N_TOO_SMALL

    def test_random_envelope_a_event(self):
        phi = PhiFamily.avar(0.5, 1.5)
        src = SourceDistribution.uniform(0, 1)
        xi = EnvelopeSpec(lambda z: 1.0 + z[:, 0])
        setup = B.divergence_setup(phi, 1.5, 1.0, xi, src)
        assert setup.phi_xi_mean == pytest.approx(3.0) and setup.phi_xi_var == pytest.approx(4 / 12)
        from saarb.dist import envelope_moments

        mom = envelope_moments(xi, src)
        res = B.divergence_tail_bound(div_inputs(setup, moments=mom, remainder="chebyshev", eps=1e9))
        assert res.components["remainder_A"] == pytest.approx((1 / 12 + 4 / 12) / 2700)
        assert res.components["remainder_B"] > 0

    @pytest.mark.parametrize("x0", [1.0, 2.0, 2.5])
    def test_x0_range(self, x0):
        setup = B.DivergenceSetup(B.CompactInterval(-1.0, 1.0, x0, 1.0), 1.0, 0.0, UNIT)
        with pytest.raises(ConfigurationError):
            B.divergence_tail_bound(div_inputs(setup))

    def test_missing_setup(self):
        with pytest.raises(ConfigurationError):
            B.divergence_tail_bound(div_inputs(None))


class TestOptimizeT:
    def test_single_point(self):
        t, res = B.optimize_t(lambda t: B.risk_neutral_tail_bound(rn_inputs(t=t)), [1.0])
        assert t == 1.0 and res.t == 1.0

    def test_exhaustive_argmin(self):
        grid = [0.5, 1.0, 2.0]
        inp = rn_inputs(eps=100.0)
        t, res = B.optimize_t(lambda t: B.risk_neutral_tail_bound(inp.with_t(t)), grid)
        vals = {g: B.risk_neutral_tail_bound(inp.with_t(g)).bound_value for g in grid}
        assert t == min(vals, key=vals.get) and res.bound_value == min(vals.values())

    def test_skips_below_threshold_points(self):
        # at eps = 30 only small t clear the threshold
        inp = rn_inputs(eps=30.0)
        t, res = B.optimize_t(lambda t: B.risk_neutral_tail_bound(inp.with_t(t)), [0.5, 1.0, 5.0])
        assert res.applicable and t in (0.5, 1.0)

    def test_none_applicable(self):
        t, res = B.optimize_t(lambda t: B.risk_neutral_tail_bound(rn_inputs(t=t, eps=1.0)), [0.1, 1.0, 10.0])
        assert res.status == B.BELOW_THRESHOLD and t == 0.1

    def test_empty_grid(self):
        with pytest.raises(ConfigurationError):
            B.optimize_t(lambda t: None, [])

    def test_default_grid(self):
        assert len(B.DEFAULT_T_GRID) == 20
        assert B.DEFAULT_T_GRID[0] == pytest.approx(0.1) and B.DEFAULT_T_GRID[-1] == pytest.approx(100.0)
