"""Entry functions, perturbation bounds, and the bottleneck distance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .filtration import build_weighted_cech
from .geometry import Linear, PointCloud, Region
from .persistence import PersistenceDiagram, boundary_matrix, diagram, reduce

__all__ = [
    "Relation",
    "StabilityBound",
    "entry_function",
    "entry_function_grid",
    "entry_sup_distance",
    "stability_bound",
    "bottleneck_distance",
    "verify_diagram_stability",
    "DiagramStabilityReport",
]


@dataclass(frozen=True)
class Relation:
    """Covering correspondence between two index sets.

    Every index of either side must appear in at least one pair; the norm is
    the largest distance between related points.
    """

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "pairs", tuple((int(a), int(b)) for a, b in self.pairs)
        )

    def validate(self, n_x: int, n_y: int):
        left = {a for a, _ in self.pairs}
        right = {b for _, b in self.pairs}
        if left != set(range(n_x)):
            raise ValueError("relation does not cover every point of X")
        if right != set(range(n_y)):
            raise ValueError("relation does not cover every point of Y")

    def norm(self, x: PointCloud, y: PointCloud) -> float:
        if not self.pairs:
            return 0.0
        return max(
            float(np.linalg.norm(x.points[a] - y.points[b])) for a, b in self.pairs
        )

    @staticmethod
    def identity(n: int) -> "Relation":
        return Relation(tuple((i, i) for i in range(n)))

    @staticmethod
    def mutual_nearest(x: PointCloud, y: PointCloud) -> "Relation":
        """Each point related to its nearest neighbor on the other side."""
        diff = x.points[:, None, :] - y.points[None, :, :]
        d = np.sqrt(np.sum(diff * diff, axis=-1))
        pairs = {(i, int(np.argmin(d[i]))) for i in range(len(x))}
        pairs |= {(int(np.argmin(d[:, j])), j) for j in range(len(y))}
        return Relation(tuple(sorted(pairs)))

    @staticmethod
    def default(x: PointCloud, y: PointCloud) -> "Relation":
        if len(x) == len(y):
            return Relation.identity(len(x))
        return Relation.mutual_nearest(x, y)


@dataclass(frozen=True)
class StabilityBound:
    """Upper bound D + ||eta|| * max(S_r, S_s) on the entry-function gap."""

    d_term: float
    s_r: float
    s_s: float
    eta_norm: float
    total: float

    def __post_init__(self):
        expected = self.d_term + self.eta_norm * max(self.s_r, self.s_s)
        if math.isfinite(expected) and abs(expected - self.total) > 1e-9 * max(
            1.0, abs(expected)
        ):
            raise ValueError("inconsistent stability bound components")


def entry_function(cloud: PointCloud, radii, y) -> float:
    """Scale at which the point y is first covered by some growing ball.

    Minimum over the cloud of the inverse growth function applied to the
    distance; f(y) <= t exactly when y lies in a closed ball at scale t.
    """
    return float(entry_function_grid(cloud, radii, np.asarray(y, float)[None, :])[0])


def entry_function_grid(cloud: PointCloud, radii, points: np.ndarray) -> np.ndarray:
    """Vectorized entry function over an (m, d) array of query points."""
    if len(cloud) == 0:
        raise ValueError("entry function needs a nonempty cloud")
    pts = np.asarray(points, dtype=float)
    diff = pts[:, None, :] - cloud.points[None, :, :]
    dists = np.sqrt(np.sum(diff * diff, axis=-1))
    vals = np.empty_like(dists)
    for i, r in enumerate(radii):
        vals[:, i] = r.inverse_array(dists[:, i])
    return vals.min(axis=1)


def entry_sup_distance(
    x: PointCloud, r, y: PointCloud, s, region: Region
) -> float:
    """Max of |f_X - f_Y| over the region's grid (a lower bound on the sup)."""
    if any(res < 2 for res in region.resolution):
        raise ValueError("grid needs at least 2 points per axis")
    if not (region.contains(x.points) and region.contains(y.points)):
        raise ValueError("region must contain both clouds")
    grid = region.grid()
    fx = entry_function_grid(x, r, grid)
    fy = entry_function_grid(y, s, grid)
    return float(np.max(np.abs(fx - fy)))


def stability_bound(
    x: PointCloud,
    r,
    y: PointCloud,
    s,
    eta: Relation,
    region: Region,
    grid_points: int = 1024,
) -> StabilityBound:
    """Perturbation bound on the entry-function gap over the region.

    The D term is the largest sup-distance of inverse growth functions over
    related pairs on [0, diam]; exact in closed form when both functions are
    linear, otherwise evaluated on a 1-d grid.  The S terms are exact
    per-family suprema of the inverse derivative.
    """
    eta.validate(len(x), len(y))
    if not (region.contains(x.points) and region.contains(y.points)):
        raise ValueError("region must contain both clouds")
    diam = region.diameter()
    d_term = 0.0
    ss = None
    for ix, iy in eta.pairs:
        rx, sy = r[ix], s[iy]
        if isinstance(rx, Linear) and isinstance(sy, Linear):
            val = diam * abs(1.0 / rx.rate - 1.0 / sy.rate)
        else:
            if ss is None:
                ss = np.linspace(0.0, diam, grid_points)
            val = float(np.max(np.abs(rx.inverse_array(ss) - sy.inverse_array(ss))))
        d_term = max(d_term, val)
    s_r = max(f.sup_inverse_derivative(diam) for f in r)
    s_s = max(f.sup_inverse_derivative(diam) for f in s)
    eta_norm = eta.norm(x, y)
    return StabilityBound(
        d_term=d_term,
        s_r=s_r,
        s_s=s_s,
        eta_norm=eta_norm,
        total=d_term + eta_norm * max(s_r, s_s),
    )


# ---------------------------------------------------------------------------
# Bottleneck distance
# ---------------------------------------------------------------------------


def bottleneck_distance(a: PersistenceDiagram, b: PersistenceDiagram, dim: int) -> float:
    """Exact bottleneck distance between the dimension-``dim`` parts.

    Finite points may match each other (L-infinity cost) or the diagonal
    (half the bar length); infinite-death points only match each other, and a
    mismatch in their counts gives +inf.  Solved by a binary search over the
    candidate costs with a perfect-matching feasibility test.
    """
    pa = a.in_dim(dim)
    pb = b.in_dim(dim)
    fin_a = pa[np.isfinite(pa[:, 1])]
    fin_b = pb[np.isfinite(pb[:, 1])]
    inf_a = np.sort(pa[~np.isfinite(pa[:, 1]), 0])
    inf_b = np.sort(pb[~np.isfinite(pb[:, 1]), 0])
    if inf_a.shape[0] != inf_b.shape[0]:
        return math.inf
    inf_part = float(np.max(np.abs(inf_a - inf_b))) if inf_a.size else 0.0
    return max(inf_part, _bottleneck_finite(fin_a, fin_b))


def _bottleneck_finite(pa: np.ndarray, pb: np.ndarray) -> float:
    na, nb = pa.shape[0], pb.shape[0]
    if na == 0 and nb == 0:
        return 0.0
    diag_a = 0.5 * (pa[:, 1] - pa[:, 0]) if na else np.zeros(0)
    diag_b = 0.5 * (pb[:, 1] - pb[:, 0]) if nb else np.zeros(0)
    if na and nb:
        cross = np.maximum(
            np.abs(pa[:, 0][:, None] - pb[:, 0][None, :]),
            np.abs(pa[:, 1][:, None] - pb[:, 1][None, :]),
        )
    else:
        cross = np.zeros((na, nb))
    candidates = np.unique(np.concatenate([cross.ravel(), diag_a, diag_b, [0.0]]))
    lo, hi = 0, len(candidates) - 1
    # the largest candidate is always feasible (everything within reach)
    while lo < hi:
        mid = (lo + hi) // 2
        if _matching_feasible(cross, diag_a, diag_b, float(candidates[mid])):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def _matching_feasible(cross, diag_a, diag_b, delta) -> bool:
    """Perfect matching test: left = A + B-diagonal slots, right = B + A-diagonal slots."""
    na, nb = cross.shape
    n_left = na + nb
    n_right = nb + na
    match_right = np.full(n_right, -1, dtype=int)

    def neighbors(u):
        if u < na:
            for j in range(nb):
                if cross[u, j] <= delta:
                    yield j
            if diag_a[u] <= delta:
                yield nb + u
        else:
            j = u - na
            if diag_b[j] <= delta:
                yield j
            yield from range(nb, n_right)

    def try_augment(u, seen):
        for v in neighbors(u):
            if seen[v]:
                continue
            seen[v] = True
            if match_right[v] < 0 or try_augment(match_right[v], seen):
                match_right[v] = u
                return True
        return False

    for u in range(n_left):
        if not try_augment(u, np.zeros(n_right, dtype=bool)):
            return False
    return True


# ---------------------------------------------------------------------------
# Diagram stability audit
# ---------------------------------------------------------------------------


@dataclass
class DiagramStabilityReport:
    holds: bool
    bound: StabilityBound
    distances: list = field(default_factory=list)  # (dim, d_B, holds)

    def summary(self) -> str:
        lines = [
            f"bound total {self.bound.total:.9g} "
            f"(D {self.bound.d_term:.9g}, ||eta|| {self.bound.eta_norm:.9g}, "
            f"max S {max(self.bound.s_r, self.bound.s_s):.9g})"
        ]
        for dim, dist, ok in self.distances:
            lines.append(
                f"dim {dim}: d_B {dist:.9g} {'<=' if ok else '>'} bound"
            )
        return "\n".join(lines)


def verify_diagram_stability(
    x: PointCloud,
    r,
    y: PointCloud,
    s,
    eta: Relation | None = None,
    region: Region | None = None,
    max_dim: int = 1,
    tol: float = 1e-9,
) -> DiagramStabilityReport:
    """Check d_B(diagram_n(X), diagram_n(Y)) <= D + ||eta|| max(S) per dimension.

    Diagrams are computed from weighted Cech filtrations (the sublevel
    filtration of the entry function), which requires linear growth here.
    """
    if not all(isinstance(f, Linear) for f in list(r) + list(s)):
        raise ValueError("diagram stability audit requires linear growth functions")
    if eta is None:
        eta = Relation.default(x, y)
    if region is None:
        region = Region.bounding(np.vstack([x.points, y.points]), resolution=2)
    bound = stability_bound(x, r, y, s, eta, region)
    dgm_x = _cech_diagram(x, r, max_dim)
    dgm_y = _cech_diagram(y, s, max_dim)
    report = DiagramStabilityReport(holds=True, bound=bound)
    for n in range(max_dim + 1):
        dist = bottleneck_distance(dgm_x, dgm_y, n)
        ok = dist <= bound.total + tol
        report.distances.append((n, dist, ok))
        report.holds = report.holds and ok
    return report


def _cech_diagram(cloud: PointCloud, radii, max_dim: int) -> PersistenceDiagram:
    rates = np.array([f.rate for f in radii])
    filt = build_weighted_cech(cloud, rates, max_dim=max_dim + 1)
    return diagram(filt, reduce(boundary_matrix(filt)))
