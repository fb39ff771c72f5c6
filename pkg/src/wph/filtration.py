"""Weighted Vietoris-Rips and Cech filtrations, plus the ball-intersection solver."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Affine,
    Linear,
    PointCloud,
    linear_radii,
    weighted_distance_matrix,
)

__all__ = [
    "DEFAULT_SIMPLEX_CAP",
    "FiltrationSizeError",
    "CechSolverError",
    "Filtration",
    "edge_entry_time",
    "build_weighted_rips",
    "build_weighted_cech",
    "cech_membership_value",
    "verify_vr_lemma",
    "VrLemmaReport",
    "VrLemmaViolation",
]

DEFAULT_SIMPLEX_CAP = 10_000_000


class FiltrationSizeError(RuntimeError):
    """A requested complex would exceed the configured simplex cap."""


class CechSolverError(RuntimeError):
    """The ball-intersection solver could not certify a membership value."""


@dataclass(frozen=True)
class Filtration:
    """Ordered simplex list with entry scales.

    Rows are sorted by (entry scale, dimension, lexicographic vertex list),
    which is a total order with every face preceding its cofaces.  ``verts``
    rows are padded with -1 past the simplex's own vertex count.
    """

    n_points: int
    max_dim: int
    t_max: float
    flavor: str
    dims: np.ndarray
    scales: np.ndarray
    verts: np.ndarray

    def __len__(self):
        return int(self.dims.shape[0])

    def simplex(self, i: int) -> tuple[int, ...]:
        k = int(self.dims[i])
        return tuple(int(v) for v in self.verts[i, : k + 1])

    def __iter__(self):
        for i in range(len(self)):
            yield self.simplex(i), float(self.scales[i])

    def rows_of_dim(self, k: int):
        """(positions, vertex rows, scales) of the dimension-k simplices."""
        pos = np.nonzero(self.dims == k)[0]
        return pos, self.verts[pos][:, : k + 1], self.scales[pos]

    def prefix(self, t: float) -> "Filtration":
        """Sub-filtration of simplices with entry scale <= t."""
        cut = int(np.searchsorted(self.scales, t, side="right"))
        return Filtration(
            n_points=self.n_points,
            max_dim=self.max_dim,
            t_max=min(self.t_max, float(t)),
            flavor=self.flavor,
            dims=self.dims[:cut],
            scales=self.scales[:cut],
            verts=self.verts[:cut],
        )

    def validate(self):
        """Check the filtration invariants; raises ValueError on violation."""
        dims, scales, verts = self.dims, self.scales, self.verts
        m = len(self)
        if np.any(scales > self.t_max):
            raise ValueError("entry scale exceeds t_max")
        key_prev = None
        for i in range(m):
            k = int(dims[i])
            row = tuple(int(v) for v in verts[i, : k + 1])
            if any(row[a] >= row[a + 1] for a in range(k)):
                raise ValueError(f"vertices not strictly increasing at row {i}")
            if row[0] < 0 or row[-1] >= self.n_points:
                raise ValueError(f"vertex out of bounds at row {i}")
            key = (float(scales[i]), k, row)
            if key_prev is not None and key < key_prev:
                raise ValueError(f"rows {i - 1}, {i} out of filtration order")
            key_prev = key
        position = {self.simplex(i): i for i in range(m)}
        for i in range(m):
            k = int(dims[i])
            if k == 0:
                continue
            row = self.simplex(i)
            for face in itertools.combinations(row, k):
                j = position.get(face)
                if j is None:
                    raise ValueError(f"face {face} of {row} missing")
                if scales[j] > scales[i]:
                    raise ValueError(f"face {face} enters after {row}")


def _assemble(n_points, rows_by_dim, scales_by_dim, max_dim, t_max, flavor) -> Filtration:
    """Pad, concatenate and sort per-dimension simplex arrays into a Filtration."""
    width = max_dim + 1
    all_dims, all_scales, all_verts = [], [], []
    for k, (rows, scales) in enumerate(zip(rows_by_dim, scales_by_dim)):
        rows = np.asarray(rows, dtype=np.int32).reshape(-1, k + 1)
        scales = np.asarray(scales, dtype=float).reshape(-1)
        padded = np.full((rows.shape[0], width), -1, dtype=np.int32)
        padded[:, : k + 1] = rows
        all_dims.append(np.full(rows.shape[0], k, dtype=np.int32))
        all_scales.append(scales)
        all_verts.append(padded)
    dims = np.concatenate(all_dims) if all_dims else np.zeros(0, np.int32)
    scales = np.concatenate(all_scales) if all_scales else np.zeros(0, float)
    verts = (
        np.concatenate(all_verts)
        if all_verts
        else np.zeros((0, width), np.int32)
    )
    # np.lexsort: last key is primary; pack dimension and vertex columns into
    # one int64 key when they fit, which is much faster on large filtrations
    base = int(n_points) + 2
    if base ** width * (width + 1) < 2 ** 62:
        powers = base ** np.arange(width - 1, -1, -1, dtype=np.int64)
        vkey = (verts.astype(np.int64) + 1) @ powers
        vkey += dims.astype(np.int64) * (base ** width)
        order = np.lexsort((vkey, scales))
    else:
        keys = [verts[:, c] for c in range(width - 1, -1, -1)] + [dims, scales]
        order = np.lexsort(tuple(keys))
    return Filtration(
        n_points=int(n_points),
        max_dim=int(max_dim),
        t_max=float(t_max),
        flavor=flavor,
        dims=dims[order],
        scales=scales[order],
        verts=verts[order],
    )


def edge_entry_time(
    cloud: PointCloud,
    radii,
    i: int,
    j: int,
    tol: float = 1e-10,
) -> float:
    """Smallest t with d(x_i, x_j) <= r_i(t) + r_j(t).

    Closed form for linear/affine growth; otherwise bisection on the strictly
    increasing map t -> r_i(t) + r_j(t) to absolute tolerance ``tol``.
    """
    if i == j:
        raise ValueError("edge endpoints must differ")
    d = float(np.linalg.norm(cloud.points[i] - cloud.points[j]))
    ri, rj = radii[i], radii[j]
    if d <= ri(0.0) + rj(0.0):
        return 0.0
    if isinstance(ri, (Linear, Affine)) and isinstance(rj, (Linear, Affine)):
        a = getattr(ri, "offset", 0.0) + getattr(rj, "offset", 0.0)
        return max(0.0, (d - a) / (ri.rate + rj.rate))
    lo, hi = 0.0, 1.0
    while ri(hi) + rj(hi) < d:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise ValueError("radius functions never reach the edge length")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ri(mid) + rj(mid) < d:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _edge_time_matrix(cloud: PointCloud, radii) -> np.ndarray:
    """Matrix of pairwise edge entry times (diagonal 0)."""
    n = len(cloud)
    if all(isinstance(r, Linear) for r in radii):
        rates = np.array([r.rate for r in radii])
        if np.allclose(rates, cloud.weights):
            return weighted_distance_matrix(cloud)
        scaled = PointCloud(cloud.points, rates)
        return weighted_distance_matrix(scaled)
    if all(isinstance(r, (Linear, Affine)) for r in radii):
        rates = np.array([r.rate for r in radii])
        offs = np.array([getattr(r, "offset", 0.0) for r in radii])
        diff = cloud.points[:, None, :] - cloud.points[None, :, :]
        d = np.sqrt(np.sum(diff * diff, axis=-1))
        m = np.maximum(d - (offs[:, None] + offs[None, :]), 0.0) / (
            rates[:, None] + rates[None, :]
        )
        np.fill_diagonal(m, 0.0)
        return m
    m = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            m[i, j] = m[j, i] = edge_entry_time(cloud, radii, i, j)
    return m


def build_weighted_rips(
    cloud: PointCloud,
    radii=None,
    *,
    max_dim: int,
    t_max: float = math.inf,
    cap: int = DEFAULT_SIMPLEX_CAP,
) -> Filtration:
    """Weighted Vietoris-Rips filtration up to ``max_dim`` and scale ``t_max``.

    A simplex enters at the largest entry time of its edges (vertices enter at
    0), and only simplices with entry scale <= t_max are kept.  Raises
    :class:`FiltrationSizeError` once more than ``cap`` simplices would be
    produced.
    """
    if max_dim < 0:
        raise ValueError("max_dim must be nonnegative")
    if t_max < 0:
        raise ValueError("t_max must be nonnegative")
    if radii is None:
        radii = linear_radii(cloud)
    n = len(cloud)
    if len(radii) != n:
        raise ValueError("need one radius function per point")
    rows_by_dim = [np.arange(n, dtype=np.int32).reshape(-1, 1)]
    scales_by_dim = [np.zeros(n)]
    count = n
    if count > cap:
        raise FiltrationSizeError(f"simplex cap exceeded: {count} > {cap} (vertices)")
    if max_dim >= 1 and n >= 2:
        et = _edge_time_matrix(cloud, radii)
        iu, ju = np.triu_indices(n, 1)
        keep = et[iu, ju] <= t_max
        e_rows = np.column_stack([iu[keep], ju[keep]]).astype(np.int32)
        e_scales = et[iu, ju][keep]
        count += e_rows.shape[0]
        if count > cap:
            raise FiltrationSizeError(f"simplex cap exceeded: {count} > {cap} (edges)")
        rows_by_dim.append(e_rows)
        scales_by_dim.append(e_scales)
        adj = et <= t_max
        np.fill_diagonal(adj, False)
        if max_dim >= 2:
            t_rows, t_scales = _expand_triangles(et, adj, t_max, cap, count)
            count += t_rows.shape[0]
            rows_by_dim.append(t_rows)
            scales_by_dim.append(t_scales)
            prev_rows, prev_scales = t_rows, t_scales
            for k in range(3, max_dim + 1):
                prev_rows, prev_scales = _expand_dim(
                    et, adj, prev_rows, prev_scales, cap, count
                )
                count += prev_rows.shape[0]
                rows_by_dim.append(prev_rows)
                scales_by_dim.append(prev_scales)
    width_dims = len(rows_by_dim) - 1
    return _assemble(
        n, rows_by_dim, scales_by_dim, max(max_dim, width_dims), t_max, "rips"
    )


def _expand_triangles(et, adj, t_max, cap, count):
    n = adj.shape[0]
    rows, scales = [], []
    total = 0
    for i in range(n - 2):
        nb = np.nonzero(adj[i, i + 1 :])[0] + i + 1
        if nb.size < 2:
            continue
        su, sv = np.triu_indices(nb.size, 1)
        jj, kk = nb[su], nb[sv]
        ok = et[jj, kk] <= t_max
        jj, kk = jj[ok], kk[ok]
        if jj.size == 0:
            continue
        sc = np.maximum(np.maximum(et[i, jj], et[i, kk]), et[jj, kk])
        rows.append(np.column_stack([np.full(jj.size, i, np.int32), jj, kk]))
        scales.append(sc)
        total += jj.size
        if count + total > cap:
            raise FiltrationSizeError(
                f"simplex cap exceeded: more than {cap} simplices (triangles)"
            )
    if not rows:
        return np.zeros((0, 3), np.int32), np.zeros(0)
    return np.concatenate(rows).astype(np.int32), np.concatenate(scales)


def _expand_dim(et, adj, prev_rows, prev_scales, cap, count):
    """Extend (k-1)-simplices by one vertex above their last index."""
    rows, scales = [], []
    total = 0
    for row, sc in zip(prev_rows, prev_scales):
        last = int(row[-1])
        if last + 1 >= adj.shape[0]:
            continue
        mask = np.all(adj[row][:, last + 1 :], axis=0)
        cands = np.nonzero(mask)[0] + last + 1
        if cands.size == 0:
            continue
        new_sc = np.maximum(sc, et[np.ix_(row, cands)].max(axis=0))
        block = np.empty((cands.size, row.size + 1), np.int32)
        block[:, :-1] = row
        block[:, -1] = cands
        rows.append(block)
        scales.append(new_sc)
        total += cands.size
        if count + total > cap:
            raise FiltrationSizeError(
                f"simplex cap exceeded: more than {cap} simplices (dim {row.size})"
            )
    if not rows:
        return np.zeros((0, prev_rows.shape[1] + 1), np.int32), np.zeros(0)
    return np.concatenate(rows), np.concatenate(scales)


# ---------------------------------------------------------------------------
# Ball-intersection minimax: t*(S) = min_y max_{j in S} ||x_j - y|| / w_j
# ---------------------------------------------------------------------------


def _dedup_points(pts, w):
    """Drop coordinate-duplicate points, keeping the smallest weight."""
    order = np.lexsort(pts.T[::-1])
    keep = []
    i = 0
    while i < len(order):
        j = i
        best = order[i]
        while j + 1 < len(order) and np.array_equal(pts[order[j + 1]], pts[order[i]]):
            j += 1
            if w[order[j]] < w[best]:
                best = order[j]
        keep.append(best)
        i = j + 1
    keep = np.sort(np.asarray(keep))
    return pts[keep], w[keep]


def _min_ratio_ball(pts: np.ndarray, w: np.ndarray):
    """Solve min over y of max_j ||p_j - y|| / w_j exactly.

    Enumerates candidate active sets of size 2..d+1; each yields a closed-form
    equal-ratio center (a small linear solve plus one quadratic root).  Any
    candidate that covers all points is an upper bound, and the optimum's own
    active set always appears, so the feasible minimum is the exact value.
    Returns (value, center).
    """
    pts = np.asarray(pts, dtype=float)
    w = np.asarray(w, dtype=float)
    pts, w = _dedup_points(pts, w)
    m, d = pts.shape
    if m == 1:
        return 0.0, pts[0].copy()
    w2 = w * w
    best_t, best_y = math.inf, None
    for k in range(2, min(m, d + 1) + 1):
        for S in itertools.combinations(range(m), k):
            p0 = pts[S[0]]
            rest = np.asarray(S[1:])
            M = pts[rest] - p0
            g = np.sum(M * M, axis=1)
            h = w2[rest] - w2[S[0]]
            G = 2.0 * (M @ M.T)
            try:
                sol = np.linalg.solve(G, np.column_stack([g, h]))
            except np.linalg.LinAlgError:
                continue
            z0 = M.T @ sol[:, 0]
            z1 = M.T @ sol[:, 1]
            a = float(z1 @ z1)
            b_lin = 2.0 * float(z0 @ z1) + w2[S[0]]
            c = float(z0 @ z0)
            roots = []
            if a <= 1e-300:
                if b_lin > 1e-300:
                    roots.append(c / b_lin)
            else:
                disc = b_lin * b_lin - 4.0 * a * c
                if disc >= 0.0:
                    sq = math.sqrt(disc)
                    roots.extend(((b_lin - sq) / (2 * a), (b_lin + sq) / (2 * a)))
            for v in roots:
                if not math.isfinite(v) or v < -1e-12:
                    continue
                v = max(v, 0.0)
                y = p0 + z0 - v * z1
                diff = pts - y
                r2max = float(np.max(np.sum(diff * diff, axis=1) / w2))
                if r2max <= v * (1.0 + 1e-9) + 1e-15:
                    t = math.sqrt(v)
                    if t < best_t:
                        best_t, best_y = t, y
    if best_y is not None:
        return best_t, best_y
    return _subgradient_ball(pts, w)


def _subgradient_ball(pts, w, iters=20000):
    """Diminishing-step subgradient fallback for degenerate configurations."""
    w2 = w * w
    y = pts.mean(axis=0)
    spread = float(np.max(np.linalg.norm(pts - y, axis=1)))
    step0 = max(spread, 1e-12)
    best_t, best_y = math.inf, y.copy()
    for it in range(1, iters + 1):
        diff = pts - y
        r2 = np.sum(diff * diff, axis=1) / w2
        j = int(np.argmax(r2))
        t = math.sqrt(r2[j])
        if t < best_t:
            best_t, best_y = t, y.copy()
        grad = 2.0 * (y - pts[j]) / w2[j]
        norm = float(np.linalg.norm(grad))
        if norm == 0.0:
            break
        y = y - (step0 / math.sqrt(it)) * grad / norm
    diff = pts - best_y
    r2 = np.sort(np.sum(diff * diff, axis=1) / w2)
    spread = math.sqrt(r2[-1]) - (math.sqrt(r2[-2]) if len(r2) > 1 else 0.0)
    if spread > 1e-6 * max(1.0, best_t):
        raise CechSolverError(
            f"minimax solver failed to certify a value (residual {spread:.3e})"
        )
    return best_t, best_y


def cech_membership_value(cloud: PointCloud, subset, weights=None) -> float:
    """Smallest t at which the balls of ``subset`` have a common point.

    Under linear growth this is min over y of max_j ||x_j - y|| / w_j, whose
    minimizer lies in the convex hull of the subset.  For a pair it equals the
    Rips edge entry time; for a single vertex it is 0.
    """
    idx = sorted(set(int(v) for v in subset))
    if not idx:
        raise ValueError("subset must be nonempty")
    if idx[0] < 0 or idx[-1] >= len(cloud):
        raise ValueError("subset indices out of bounds")
    w = cloud.weights if weights is None else np.asarray(weights, dtype=float)
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    t, _ = _min_ratio_ball(cloud.points[idx], w[idx])
    return t


def build_weighted_cech(
    cloud: PointCloud,
    weights=None,
    *,
    max_dim: int,
    t_max: float = math.inf,
    cap: int = DEFAULT_SIMPLEX_CAP,
) -> Filtration:
    """Weighted Cech filtration (linear growth only), desk-scale instances.

    Entry scale of a simplex is the ball-intersection value of its vertex set.
    Candidates are taken from the Rips filtration at the same scale, which
    always contains the Cech complex.
    """
    w = cloud.weights if weights is None else np.asarray(weights, dtype=float)
    base = PointCloud(cloud.points, w)
    rips = build_weighted_rips(base, max_dim=max_dim, t_max=t_max, cap=cap)
    rows_by_dim, scales_by_dim = [], []
    scale_of: dict[tuple, float] = {}
    for k in range(max_dim + 1):
        _, rows, scales = rips.rows_of_dim(k)
        if k >= 2 and rows.shape[0]:
            vals = []
            for r in rows:
                v = _min_ratio_ball(base.points[r], w[r])[0]
                # the solver is exact to roundoff; clamp so facet scales never
                # exceed coface scales under that roundoff
                simplex = tuple(int(x) for x in r)
                for c in range(k + 1):
                    v = max(v, scale_of[simplex[:c] + simplex[c + 1 :]])
                vals.append(v)
            vals = np.asarray(vals)
            keep = vals <= t_max
            rows, scales = rows[keep], vals[keep]
        for r, sc in zip(rows, scales):
            scale_of[tuple(int(x) for x in r)] = float(sc)
        rows_by_dim.append(rows)
        scales_by_dim.append(scales)
    return _assemble(len(cloud), rows_by_dim, scales_by_dim, max_dim, t_max, "cech")


# ---------------------------------------------------------------------------
# Weighted Vietoris-Rips lemma audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VrLemmaViolation:
    simplex: tuple[int, ...]
    containment: str
    rips_scale: float
    cech_scale: float
    threshold: float


@dataclass
class VrLemmaReport:
    holds: bool
    t: float
    t_prime: float
    ambient_dim: int
    n_checked: int
    violations: list = field(default_factory=list)
    near_boundary: list = field(default_factory=list)

    def summary(self) -> str:
        state = "holds" if self.holds else f"violated ({len(self.violations)} witnesses)"
        return (
            f"VR sandwich at t={self.t:.6g} (t'={self.t_prime:.6g}, d={self.ambient_dim}): "
            f"{state}, {self.n_checked} simplices checked, "
            f"{len(self.near_boundary)} near the scale boundary"
        )


def verify_vr_lemma(
    cloud: PointCloud,
    t: float,
    *,
    max_dim: int,
    weights=None,
    tol: float = 1e-7,
    cap: int = DEFAULT_SIMPLEX_CAP,
) -> VrLemmaReport:
    """Audit the sandwich VR(t') <= Cech(t) <= VR(t) with t' = t*sqrt((d+1)/(2d)).

    Both containments are checked simplex by simplex up to ``max_dim``:
    every Rips simplex at scale t' must have ball-intersection value <= t, and
    every vertex set with intersection value <= t must satisfy the pairwise
    Rips condition at t.  Simplices within ``tol`` of the scale boundary are
    reported separately rather than judged.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if len(cloud) == 0:
        return VrLemmaReport(True, t, t, max(cloud.dim, 1), 0)
    d = max(cloud.dim, 1)
    t_prime = t * math.sqrt((d + 1) / (2.0 * d))
    w = cloud.weights if weights is None else np.asarray(weights, dtype=float)
    base = PointCloud(cloud.points, w)
    full = build_weighted_rips(base, max_dim=max_dim, t_max=math.inf, cap=cap)
    report = VrLemmaReport(True, t, t_prime, d, 0)
    for k in range(1, max_dim + 1):
        _, rows, scales = full.rows_of_dim(k)
        for row, rips_scale in zip(rows, scales):
            cech_scale = _min_ratio_ball(base.points[row], w[row])[0]
            report.n_checked += 1
            simplex = tuple(int(v) for v in row)
            if rips_scale <= t_prime and cech_scale > t + tol:
                report.violations.append(
                    VrLemmaViolation(simplex, "vr_tprime_in_cech_t", float(rips_scale), cech_scale, t + tol)
                )
            if cech_scale <= t - tol and rips_scale > t:
                report.violations.append(
                    VrLemmaViolation(simplex, "cech_t_in_vr_t", float(rips_scale), cech_scale, t)
                )
            if abs(cech_scale - t) <= tol:
                report.near_boundary.append((simplex, cech_scale))
    report.holds = not report.violations
    return report
