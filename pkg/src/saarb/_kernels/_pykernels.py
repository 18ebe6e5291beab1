"""Reference numpy implementations of the row-wise empirical risk kernels.

Each kernel takes a C-contiguous ``(k, n)`` float64 matrix whose rows are
samples ``G(theta_i, Z_1..Z_n)`` and reduces every row to one number.
"""

import math

import numpy as np

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def row_mean(M):
    return M.mean(axis=1)


def row_semideviation(M, p, a):
    mean = M.mean(axis=1)
    dev = np.maximum(M - mean[:, None], 0.0)
    if p == 1.0:
        spread = dev.mean(axis=1)
    else:
        spread = np.mean(dev**p, axis=1) ** (1.0 / p)
    return mean + a * spread


def row_avar(M, alpha, k):
    """Tail average with fractional weight on the ``k``-th order statistic, ``k = ceil(alpha n)``."""
    n = M.shape[1]
    S = np.sort(M, axis=1)
    tail = S[:, k:].sum(axis=1) / n
    return ((k / n - alpha) * S[:, k - 1] + tail) / (1.0 - alpha)


def _h_avar(M, x, alpha):
    return np.maximum(M + x[:, None], 0.0).sum(axis=1) / (M.shape[1] * (1.0 - alpha)) - x


def row_oce_avar(M, alpha, c, lo, hi):
    """Minimize ``h(x) = mean((v + x)^+) / (1 - alpha) - x`` over ``[lo, hi]`` by kink enumeration.

    ``c`` is unused here (the order-statistic shortcut lives in the compiled
    kernel); all kinks ``x = -v_j`` inside the bracket and both bracket ends
    are evaluated and the leftmost minimizer is returned.
    """
    k, n = M.shape
    S = np.sort(M, axis=1)
    # suffix[i] = sum of S[i+1:]
    suffix = np.concatenate([np.cumsum(S[:, ::-1], axis=1)[:, ::-1][:, 1:], np.zeros((k, 1))], axis=1)
    above = (n - 1 - np.arange(n))[None, :]
    kink_vals = (suffix - above * S) / (n * (1.0 - alpha)) + S
    # candidates ordered by x ascending: x = -S[:, n-1], ..., -S[:, 0]
    xs = -S[:, ::-1]
    hv = kink_vals[:, ::-1]
    inside = (xs >= lo[:, None]) & (xs <= hi[:, None])
    hv = np.where(inside, hv, np.inf)
    xs = np.concatenate([lo[:, None], xs, hi[:, None]], axis=1)
    hv = np.concatenate([_h_avar(M, lo, alpha)[:, None], hv, _h_avar(M, hi, alpha)[:, None]], axis=1)
    best = hv.min(axis=1)
    near = hv <= best[:, None] + 1e-12 * (1.0 + np.abs(best[:, None]))
    idx = np.argmax(near, axis=1)
    rows = np.arange(k)
    return hv[rows, idx], xs[rows, idx]


def row_oce_golden(M, phi_star, lo, hi, tol):
    """Golden-section search of ``h(x) = mean(phi_star(v + x)) - x`` on each row's bracket."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)

    def h(x):
        with np.errstate(over="ignore", invalid="ignore"):
            val = np.mean(phi_star(M + x[:, None]), axis=1) - x
        return np.where(np.isnan(val), np.inf, val)

    a, b = lo.copy(), hi.copy()
    width = float(np.max(b - a)) if a.size else 0.0
    steps = 0 if width <= tol else int(math.ceil(math.log(tol / width) / math.log(INV_PHI)))
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = h(c), h(d)
    for _ in range(steps):
        left = fc <= fd
        a, b = np.where(left, a, c), np.where(left, d, b)
        new_c = np.where(left, b - INV_PHI * (b - a), d)
        new_d = np.where(left, c, a + INV_PHI * (b - a))
        f_new = h(np.where(left, new_c, new_d))
        fc, fd = np.where(left, f_new, fd), np.where(left, fc, f_new)
        c, d = new_c, new_d
    mid = 0.5 * (a + b)
    cand_x = np.stack([lo, mid, hi], axis=1)
    cand_h = np.stack([h(lo), h(mid), h(hi)], axis=1)
    best = cand_h.min(axis=1)
    near = cand_h <= best[:, None] + 1e-12 * (1.0 + np.abs(best[:, None]))
    idx = np.argmax(near, axis=1)
    rows = np.arange(M.shape[0])
    return cand_h[rows, idx], cand_x[rows, idx]


def row_oce_entropic(M, lo, hi, tol):
    """Minimize ``mean(exp(v + x)) - 1 - x`` per row via the clipped closed-form minimizer ``-ln mean(exp(v))``."""
    m = M.max(axis=1)
    s = np.exp(M - m[:, None]).mean(axis=1)
    lme = m + np.log(s)
    x = np.clip(-lme, lo, hi)
    vals = np.where(x == -lme, lme, np.exp(x + m) * s - 1.0 - x)
    return vals, x

