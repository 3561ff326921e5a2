"""Independent brute-force references used to check the closed-form code."""

import numpy as np

# frozen from mpmath (40 digits) before the implementation was run
CUBIC_ROOT = 0.5  # 4 y**3 + y - 1 = 0
HALF_SQUARE_VS_ORIGIN_50 = 0.4171895195341666990183566194097985471575
QUARTIC_ENVELOPE_SUP_BALL1 = 0.1875


def brute_envelope(f, x, radius=40.0, n=400_001):
    """``min_y f(y) + (y - x)**2/2`` on a dense grid, then parabolic polish."""
    ys = np.linspace(x - radius, x + radius, n)
    special = [float(e) for e in getattr(f, "edges", ()) if np.isfinite(float(e))]
    ys = np.unique(np.concatenate([ys, special]))
    n = len(ys)
    vals = f(ys) + 0.5 * (ys - x) ** 2
    j = int(np.argmin(vals))
    if np.isinf(vals[max(j - 1, 0)]) and np.isinf(vals[min(j + 1, n - 1)]):
        return float(vals[j]), float(ys[j])
    lo, hi = ys[max(j - 1, 0)], ys[min(j + 1, n - 1)]
    fine = np.linspace(lo, hi, 20_001)
    fv = f(fine) + 0.5 * (fine - x) ** 2
    k = int(np.argmin(fv))
    return float(fv[k]), float(fine[k])


def brute_conjugate(f, v, radius=50.0, n=1_000_001):
    """``sup_x v x - f(x)`` over a bounded grid (valid when the sup is attained inside)."""
    xs = np.linspace(-radius, radius, n)
    return float(np.max(v * xs - f(xs)))
