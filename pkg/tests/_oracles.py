"""Independent brute-force oracles used to cross-check the library.

Nothing here shares code with the implementations under test: distances are
two explicit loops, Rips complexes come from a subset scanner, the ball
intersection value from a grid search, and the bottleneck distance from
exhaustive assignment enumeration.
"""

import itertools
import math

import numpy as np


def brute_distance_matrix(points):
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for c in range(pts.shape[1]):
                s += (pts[i, c] - pts[j, c]) ** 2
            out[i, j] = math.sqrt(s)
    return out


def brute_rips_simplices(points, weights, max_dim, t_max):
    """All simplices (as sorted tuples) with max pairwise entry time <= t_max."""
    pts = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float)
    n = len(pts)
    entry = {}
    for k in range(0, max_dim + 1):
        for combo in itertools.combinations(range(n), k + 1):
            scale = 0.0
            for i, j in itertools.combinations(combo, 2):
                d = math.dist(pts[i], pts[j])
                scale = max(scale, d / (w[i] + w[j]))
            if scale <= t_max:
                entry[combo] = scale
    return entry


def grid_min_ratio(points, weights, step=1e-3, refinements=3):
    """Grid search for min over y of max_j ||p_j - y|| / w_j (2-d only)."""
    pts = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float)
    assert pts.shape[1] == 2
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    if np.all(hi - lo < 1e-12):
        return 0.0
    best_y = None
    best = math.inf
    span = float(max(hi - lo))
    cur_step = max(step, span / 400)
    center, half = (lo + hi) / 2, span / 2 + cur_step

    for _ in range(refinements + 1):
        xs = np.arange(center[0] - half, center[0] + half + cur_step, cur_step)
        ys = np.arange(center[1] - half, center[1] + half + cur_step, cur_step)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
        diff = grid[:, None, :] - pts[None, :, :]
        vals = np.max(np.sqrt(np.sum(diff * diff, axis=-1)) / w, axis=1)
        k = int(np.argmin(vals))
        if vals[k] < best:
            best = float(vals[k])
            best_y = grid[k]
        center, half = best_y, 3 * cur_step
        cur_step /= 10
    return best


def exhaustive_bottleneck(bars_a, bars_b):
    """Minimal over all matchings of the max cost; diagonal allowed (<=6 bars)."""
    a = [tuple(map(float, p)) for p in bars_a]
    b = [tuple(map(float, p)) for p in bars_b]

    def linf(p, q):
        return max(abs(p[0] - q[0]), abs(p[1] - q[1]))

    def diag(p):
        return (p[1] - p[0]) / 2

    best = math.inf

    def recurse(i, used, cost):
        nonlocal best
        if cost >= best:
            return
        if i == len(a):
            rest = max((diag(b[j]) for j in range(len(b)) if j not in used), default=0.0)
            best = min(best, max(cost, rest))
            return
        recurse(i + 1, used, max(cost, diag(a[i])))
        for j in range(len(b)):
            if j not in used:
                recurse(i + 1, used | {j}, max(cost, linf(a[i], b[j])))

    recurse(0, frozenset(), 0.0)
    return best


def euler_characteristic(simplex_scales, t):
    """Alternating simplex-count sum of the complex at scale <= t."""
    chi = 0
    for simplex, scale in simplex_scales.items():
        if scale <= t:
            chi += (-1) ** (len(simplex) - 1)
    return chi
