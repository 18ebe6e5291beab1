"""Regenerate the frozen high-precision reference values in ``oracles.py``.

Run ``python3 tests/_generate_oracles.py > tests/oracles.py``; the values are
computed with mpmath at 50 significant digits, independently of the package.
"""

from mpmath import e, exp, gammainc, log, mp, mpf, quad, sqrt

mp.dps = 50
ln2 = log(2)


def j_hoelder(m, beta, d):
    return 2 * d * sqrt((3 * m + 1) * ln2 + (mpf(m) / beta) * log(2 / d))


def j_pl(r, s, d):
    ss = sum(s)
    return 2 * d * sqrt(sum(log(x + 1) for x in s) + (8 * ss + 30 * r + 1) * ln2 + 2 * (ss + 3 * r) * (mpf(1) / 2 + log(r / d)))


def semidev_transform(base, p, d):
    return sqrt(2) * 2 ** (p + 2) * base + sqrt(2) * d * (sqrt(ln2) + 2 * sqrt(log(2 ** (p + 4) / d)))


def divergence_transform(base, d):
    return sqrt(2) * base + 4 * d * sqrt(log(1 / d)) + sqrt(2 * ln2) * d


def lhs_eq(v, K):
    # int_0^1 sqrt(v ln(K/eps)) d eps = sqrt(v) K Gamma(3/2, ln K)
    return sqrt(v) * K * gammainc(mpf(3) / 2, log(K))


def eta(t, n, nx, j):
    return nx / sqrt(n) + 32 * sqrt(2) * (1 + t) * nx * j / sqrt(n)


def semidev_threshold(t, n, p, a, nxp, j):
    return 2 * (1 + a) * mpf(32) ** (mpf(1) / p) * (t + 1) ** (mpf(1) / p) * nxp ** (mpf(1) / p) / mpf(n) ** (mpf(1) / (2 * p)) * (1 + sqrt(p + 6) + 2 ** (p + 3) * j) ** (mpf(1) / p)


vals = {}
vals["J_HOELDER_1_1_HALF"] = j_hoelder(1, 1, mpf(1) / 2)
vals["J_HOELDER_1_1_QUARTER"] = j_hoelder(1, 1, mpf(1) / 4)
vals["J_HOELDER_1_1_1_16"] = j_hoelder(1, 1, mpf(1) / 16)
vals["J_HOELDER_1_1_1_32"] = j_hoelder(1, 1, mpf(1) / 32)
vals["J_PL_1_1_ONE"] = j_pl(1, [1], mpf(1))
vals["J_PL_1_1_HALF"] = j_pl(1, [1], mpf(1) / 2)
vals["SEMIDEV_TRANSFORM_ZERO_P1_HALF"] = semidev_transform(0, 1, mpf(1) / 2)
vals["SEMIDEV_TRANSFORM_HOELDER_P1_HALF"] = semidev_transform(j_hoelder(1, 1, mpf(1) / 16), 1, mpf(1) / 2)
vals["DIVERGENCE_TRANSFORM_ZERO_INV_E"] = divergence_transform(0, 1 / e)
vals["DIVERGENCE_TRANSFORM_ONE_QUARTER"] = divergence_transform(1, mpf(1) / 4)
vals["VC_2_HALF"] = 128 * e**2
vals["VC_2_LIMIT_ONE"] = 32 * e**2
vals["EXPECTED_ERROR_N100_J203934"] = 16 * sqrt(2) * mpf("2.03934") / 10
vals["ETA_T1_N100_J203934"] = eta(1, 100, 1, mpf("2.03934"))
vals["RISK_NEUTRAL_EPS20"] = exp(mpf(-200) / 464)
vals["QUAD_SQRT_ONE_MINUS_LOG"] = quad(lambda x: sqrt(1 - log(x)), [0, 1])
vals["QUAD_SQRT_LN2_PLUS_ONE_MINUS_LOG"] = quad(lambda x: sqrt(ln2 + 1 - log(x)), [0, 1])
vals["SQRT_LN2"] = sqrt(ln2)
for v in (1, 2, 4, 8):
    for name, K in (("E", e), ("E2", e**2), ("10", mpf(10))):
        vals[f"LHS_V{v}_K{name}"] = lhs_eq(v, K)
vals["XI_COMPOSITE_AVAR_HALF"] = 3 * sqrt(145)
# semideviation bound example: n = 10^6, t = 1, p = a = 1, unit norms
j32, j4 = j_hoelder(1, 1, mpf(1) / 32), j_hoelder(1, 1, mpf(1) / 4)
thr = semidev_threshold(1, 10**6, 1, 1, 1, j32)
vals["SEMIDEV_THRESHOLD_N1E6"] = thr
eps = mpf("1.5") * thr
vals["SEMIDEV_BOUND_N1E6"] = exp(-1000 * eps / (16 * 2 * 29)) + exp(-1000 * eps / (16 * 2 * 29))
vals["SEMIDEV_MIN_N_UNIT"] = (1 + 32 * sqrt(2) * j4) ** 2
# divergence bound example: AVaR(1/2), xi = 1, delta = 1, x0 = 3/2, t = 1, n = 2700
nc = 3 * sqrt(145)
dthr = nc / sqrt(2700) * (2 + 64 * (4 * j4 + 5 * sqrt(ln2)))
vals["DIVERGENCE_THRESHOLD_N2700"] = dthr
vals["DIVERGENCE_BOUND_N2700"] = exp(-sqrt(2700) * mpf("1.05") * dthr / (16 * 2 * 29 * nc))
# population optima of the quadratic goal, Z ~ U(0, 1), theta* = 1/2, W = V^2 with V ~ U(0, 1/2)
w = mpf(1) / 2
m = w**2 / 3
vals["QUADRATIC_EXPECTATION"] = m
vals["QUADRATIC_AVAR_HALF"] = w**2 * (1 - mpf(1) / 8) / (3 * (1 - mpf(1) / 2))
vals["QUADRATIC_SEMIDEV_P1_A1"] = m + quad(lambda v: v**2 - m, [sqrt(m), w]) / w
vals["QUADRATIC_SEMIDEV_P2_A05"] = m + mpf(1) / 2 * sqrt(quad(lambda v: (v**2 - m) ** 2, [sqrt(m), w]) / w)
vals["QUADRATIC_ENTROPIC"] = log(quad(lambda v: exp(v**2), [0, w]) / w)

print('"""Frozen high-precision reference values (generated by ``_generate_oracles.py``)."""')
print()
for k, v in vals.items():
    print(f"{k} = {mp.nstr(v, 20)}")
