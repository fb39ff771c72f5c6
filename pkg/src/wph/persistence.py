"""Z/2 simplicial persistence: boundary matrices, twist reduction, diagrams.

The reduction follows the standard left-to-right column algorithm with the
clearing optimization (dimensions processed in decreasing order).  A numba
kernel accelerates large filtrations; a pure-Python twin with identical output
is kept both as a fallback and as a cross-check target.  ``betti_at`` is an
independent dense rank computation used as a test oracle; it shares no code
with the reduction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .filtration import Filtration

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

__all__ = [
    "BoundaryMatrix",
    "Pairing",
    "PersistenceDiagram",
    "Barcode",
    "boundary_matrix",
    "reduce",
    "diagram",
    "betti_at",
]


@dataclass(frozen=True)
class BoundaryMatrix:
    """Sparse Z/2 boundary matrix in filtration order (CSC with sorted rows)."""

    col_ptr: np.ndarray
    col_rows: np.ndarray
    dims: np.ndarray

    @property
    def m(self) -> int:
        return int(self.dims.shape[0])

    def column(self, j: int) -> np.ndarray:
        return self.col_rows[self.col_ptr[j] : self.col_ptr[j + 1]]


def _face_positions(rows_k, rows_prev, pos_prev, n_points):
    """Map each facet of each dim-k row to its global filtration position."""
    mk, width = rows_k.shape
    k = width - 1
    faces = np.stack(
        [np.delete(rows_k, c, axis=1) for c in range(width)], axis=1
    ).reshape(-1, k)
    base = n_points + 1
    if base ** k * base < 2 ** 62:
        powers = base ** np.arange(k - 1, -1, -1, dtype=np.int64)
        prev_keys = (rows_prev.astype(np.int64) + 1) @ powers
        face_keys = (faces.astype(np.int64) + 1) @ powers
        order = np.argsort(prev_keys, kind="stable")
        idx = np.searchsorted(prev_keys[order], face_keys)
        if np.any(idx >= len(order)) or np.any(prev_keys[order][np.minimum(idx, len(order) - 1)] != face_keys):
            raise ValueError("boundary construction found a missing face")
        local = order[idx]
    else:
        lookup = {tuple(int(v) for v in row): i for i, row in enumerate(rows_prev)}
        local = np.empty(faces.shape[0], dtype=np.int64)
        for i, row in enumerate(faces):
            j = lookup.get(tuple(int(v) for v in row))
            if j is None:
                raise ValueError("boundary construction found a missing face")
            local[i] = j
    return pos_prev[local].reshape(mk, width)


def boundary_matrix(filt: Filtration) -> BoundaryMatrix:
    """Z/2 boundary matrix of a filtration; no signs, rows sorted per column."""
    dims = filt.dims.astype(np.int32)
    m = len(filt)
    counts = np.where(dims > 0, dims + 1, 0).astype(np.int64)
    col_ptr = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(counts, out=col_ptr[1:])
    col_rows = np.empty(int(col_ptr[-1]), dtype=np.int64)
    max_d = int(dims.max()) if m else 0
    n = filt.n_points
    pos0, rows0, _ = filt.rows_of_dim(0)
    # vertices normally occupy positions 0..n-1 in vertex order, and edges can
    # then be resolved through a dense (n, n) position table
    plain_vertices = (
        rows0.shape[0] == n
        and np.array_equal(pos0, np.arange(n))
        and np.array_equal(rows0[:, 0], np.arange(n))
    )
    for k in range(1, max_d + 1):
        pos_k, rows_k, _ = filt.rows_of_dim(k)
        if rows_k.shape[0] == 0:
            continue
        if k == 1 and plain_vertices:
            face_pos = rows_k.astype(np.int64)
        elif k == 2 and plain_vertices and n * n <= 8_000_000:
            pos_e, rows_e, _ = filt.rows_of_dim(1)
            table = np.full(n * n, -1, dtype=np.int64)
            table[rows_e[:, 0].astype(np.int64) * n + rows_e[:, 1]] = pos_e
            r = rows_k.astype(np.int64)
            face_pos = np.column_stack(
                [
                    table[r[:, 1] * n + r[:, 2]],
                    table[r[:, 0] * n + r[:, 2]],
                    table[r[:, 0] * n + r[:, 1]],
                ]
            )
            if np.any(face_pos < 0):
                raise ValueError("boundary construction found a missing face")
        else:
            pos_prev, rows_prev, _ = filt.rows_of_dim(k - 1)
            face_pos = _face_positions(rows_k, rows_prev, pos_prev, n)
        face_pos = np.sort(face_pos, axis=1)
        starts = col_ptr[pos_k]
        flat = starts[:, None] + np.arange(k + 1)
        col_rows[flat] = face_pos
    return BoundaryMatrix(col_ptr=col_ptr, col_rows=col_rows, dims=dims)


@dataclass(frozen=True)
class Pairing:
    """Reduction result: birth/death column index pairs plus essential columns."""

    births: np.ndarray
    deaths: np.ndarray
    essential: np.ndarray

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(int(b), int(d)) for b, d in zip(self.births, self.deaths)]


def _reduce_py(col_ptr, col_rows, dims, max_d):
    m = dims.shape[0]
    low_to_col = {}
    reduced = {}
    cleared = bytearray(m)
    is_death = bytearray(m)
    births, deaths = [], []
    for dim in range(max_d, 0, -1):
        for j in np.nonzero(dims == dim)[0]:
            j = int(j)
            if cleared[j]:
                continue
            col = list(col_rows[col_ptr[j] : col_ptr[j + 1]])
            while col:
                low = col[-1]
                k = low_to_col.get(low)
                if k is None:
                    break
                col = _sym_diff(col, reduced[k])
            if not col:
                continue
            low = int(col[-1])
            low_to_col[low] = j
            reduced[j] = col
            cleared[low] = 1
            is_death[j] = 1
            births.append(low)
            deaths.append(j)
    essential = [i for i in range(m) if not cleared[i] and not is_death[i]]
    return (
        np.asarray(births, dtype=np.int64),
        np.asarray(deaths, dtype=np.int64),
        np.asarray(essential, dtype=np.int64),
    )


def _sym_diff(a, b):
    out = []
    ia = ib = 0
    na, nb = len(a), len(b)
    while ia < na and ib < nb:
        va, vb = a[ia], b[ib]
        if va == vb:
            ia += 1
            ib += 1
        elif va < vb:
            out.append(va)
            ia += 1
        else:
            out.append(vb)
            ib += 1
    out.extend(a[ia:])
    out.extend(b[ib:])
    return out


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _scatter_desc_nb(perp_col, perp_row, perp_ptr):  # pragma: no cover - jitted
        out = np.empty(perp_col.size, np.int64)
        fill = perp_ptr[1:].copy()
        for e in range(perp_col.size):
            c = perp_col[e]
            fill[c] -= 1
            out[fill[c]] = perp_row[e]
        return out

    @numba.njit(cache=True)
    def _reduce_nb(col_ptr, col_rows, dims, max_d):  # pragma: no cover - jitted
        m = dims.shape[0]
        low_to_col = np.full(m, -1, np.int64)
        cleared = np.zeros(m, np.uint8)
        is_death = np.zeros(m, np.uint8)
        red_start = np.full(m, -1, np.int64)
        red_len = np.zeros(m, np.int64)
        buf = np.empty(col_rows.shape[0] * 2 + 64, np.int64)
        used = 0
        work = np.empty(m, np.int64)
        tmp = np.empty(m, np.int64)
        births = np.empty(m, np.int64)
        deaths = np.empty(m, np.int64)
        n_pairs = 0
        for dim in range(max_d, 0, -1):
            for j in range(m):
                if dims[j] != dim or cleared[j] == 1:
                    continue
                wlen = 0
                for r in range(col_ptr[j], col_ptr[j + 1]):
                    work[wlen] = col_rows[r]
                    wlen += 1
                while wlen > 0:
                    low = work[wlen - 1]
                    k = low_to_col[low]
                    if k < 0:
                        break
                    a = 0
                    b = red_start[k]
                    bend = b + red_len[k]
                    t = 0
                    while a < wlen and b < bend:
                        va = work[a]
                        vb = buf[b]
                        if va == vb:
                            a += 1
                            b += 1
                        elif va < vb:
                            tmp[t] = va
                            t += 1
                            a += 1
                        else:
                            tmp[t] = vb
                            t += 1
                            b += 1
                    while a < wlen:
                        tmp[t] = work[a]
                        t += 1
                        a += 1
                    while b < bend:
                        tmp[t] = buf[b]
                        t += 1
                        b += 1
                    for q in range(t):
                        work[q] = tmp[q]
                    wlen = t
                if wlen == 0:
                    continue
                low = work[wlen - 1]
                low_to_col[low] = j
                cleared[low] = 1
                is_death[j] = 1
                if used + wlen > buf.shape[0]:
                    newcap = buf.shape[0] * 2
                    while newcap < used + wlen:
                        newcap *= 2
                    grown = np.empty(newcap, np.int64)
                    grown[:used] = buf[:used]
                    buf = grown
                red_start[j] = used
                red_len[j] = wlen
                for q in range(wlen):
                    buf[used + q] = work[q]
                used += wlen
                births[n_pairs] = low
                deaths[n_pairs] = j
                n_pairs += 1
        essential = np.empty(m, np.int64)
        n_ess = 0
        for i in range(m):
            if cleared[i] == 0 and is_death[i] == 0:
                essential[n_ess] = i
                n_ess += 1
        return births[:n_pairs].copy(), deaths[:n_pairs].copy(), essential[:n_ess].copy()


def _antitranspose(bm: BoundaryMatrix):
    """Coboundary form: reverse both index orders and transpose.

    Reducing this matrix (persistent cohomology) yields the same pairing as
    reducing the boundary matrix directly, but the mass of zero-reductions
    turns into free empty columns, which is dramatically faster on clique
    filtrations.
    """
    m = bm.m
    counts = np.diff(bm.col_ptr)
    entry_cols = np.repeat(np.arange(m, dtype=np.int64), counts)
    perp_col = m - 1 - bm.col_rows
    perp_row = m - 1 - entry_cols
    perp_ptr = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(np.bincount(perp_col, minlength=m), out=perp_ptr[1:])
    # counting-sort scatter: original CSC order visits each perp column with
    # perp rows descending, so fill every column from its end
    if HAVE_NUMBA and perp_col.size > 10_000:
        perp_rows = _scatter_desc_nb(perp_col, perp_row, perp_ptr)
    else:
        perp_rows = np.empty(perp_col.size, dtype=np.int64)
        fill = perp_ptr[1:].copy()
        for e in range(perp_col.size):
            c = perp_col[e]
            fill[c] -= 1
            perp_rows[fill[c]] = perp_row[e]
    max_d = int(bm.dims.max()) if m else 0
    perp_dims = (max_d - bm.dims[::-1]).astype(np.int64)
    return perp_ptr, perp_rows, perp_dims, max_d


def reduce(
    bm: BoundaryMatrix, accelerate: bool | None = None, cohomology: bool = True
) -> Pairing:
    """Reduce a boundary matrix; (i, j) paired iff reduced column j has low i.

    The pairing of a filtration is algorithm-independent, so by default the
    reduction runs on the anti-transpose (cohomology), which is far faster on
    flag filtrations; ``cohomology=False`` forces the direct column reduction
    used as a cross-check.  Deterministic for a fixed input.
    """
    if accelerate is None:
        accelerate = HAVE_NUMBA
    if bm.m == 0:
        empty = np.zeros(0, dtype=np.int64)
        return Pairing(births=empty, deaths=empty.copy(), essential=empty.copy())
    if cohomology:
        ptr, rows, dims64, max_d = _antitranspose(bm)
    else:
        ptr, rows, max_d = bm.col_ptr, bm.col_rows, int(bm.dims.max())
        dims64 = bm.dims.astype(np.int64)
    if accelerate and HAVE_NUMBA:
        births, deaths, essential = _reduce_nb(ptr, rows, dims64, max_d)
    else:
        births, deaths, essential = _reduce_py(ptr, rows, dims64, max_d)
    if cohomology:
        m = bm.m
        births, deaths = m - 1 - deaths, m - 1 - births
        essential = np.sort(m - 1 - essential)
    order = np.argsort(births, kind="stable")
    return Pairing(
        births=births[order], deaths=deaths[order], essential=np.sort(essential)
    )


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of (dimension, birth, death) points; death may be +inf.

    Zero-length points are retained here and filtered out of barcodes.
    """

    dims: np.ndarray
    births: np.ndarray
    deaths: np.ndarray

    def __post_init__(self):
        dims = np.asarray(self.dims, dtype=np.int32).reshape(-1)
        births = np.asarray(self.births, dtype=float).reshape(-1)
        deaths = np.asarray(self.deaths, dtype=float).reshape(-1)
        if not (dims.shape == births.shape == deaths.shape):
            raise ValueError("dims, births and deaths must have equal length")
        if np.any(births > deaths):
            raise ValueError("birth after death in persistence diagram")
        order = np.lexsort((deaths, births, dims))
        for name, arr in (("dims", dims[order]), ("births", births[order]), ("deaths", deaths[order])):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return int(self.dims.shape[0])

    @classmethod
    def from_points(cls, points) -> "PersistenceDiagram":
        pts = list(points)
        if not pts:
            return cls(np.zeros(0, np.int32), np.zeros(0), np.zeros(0))
        d, b, dd = zip(*pts)
        return cls(np.asarray(d), np.asarray(b), np.asarray(dd))

    @property
    def points(self) -> list[tuple[int, float, float]]:
        return [
            (int(d), float(b), float(dt))
            for d, b, dt in zip(self.dims, self.births, self.deaths)
        ]

    def in_dim(self, k: int) -> np.ndarray:
        """(n_k, 2) array of (birth, death) in dimension k."""
        mask = self.dims == k
        return np.column_stack([self.births[mask], self.deaths[mask]])

    def barcode(self) -> "Barcode":
        keep = self.deaths > self.births
        return Barcode(
            dims=self.dims[keep].copy(),
            births=self.births[keep].copy(),
            deaths=self.deaths[keep].copy(),
        )


@dataclass(frozen=True)
class Barcode:
    """Positive-length bars of a diagram, grouped by dimension on demand."""

    dims: np.ndarray
    births: np.ndarray
    deaths: np.ndarray

    def __len__(self):
        return int(self.dims.shape[0])

    def in_dim(self, k: int) -> list[tuple[float, float]]:
        mask = self.dims == k
        return [
            (float(b), float(d)) for b, d in zip(self.births[mask], self.deaths[mask])
        ]

    def max_dim(self) -> int:
        return int(self.dims.max()) if len(self) else -1


def diagram(filt: Filtration, pairing: Pairing) -> PersistenceDiagram:
    """Persistence diagram from a reduction pairing on ``filt``."""
    sc = filt.scales
    dm = filt.dims
    dims = np.concatenate([dm[pairing.births], dm[pairing.essential]])
    births = np.concatenate([sc[pairing.births], sc[pairing.essential]])
    deaths = np.concatenate(
        [sc[pairing.deaths], np.full(pairing.essential.shape[0], math.inf)]
    )
    return PersistenceDiagram(dims=dims, births=births, deaths=deaths)


# ---------------------------------------------------------------------------
# Independent Betti oracle: dense GF(2) rank on the sub-complex at scale <= t
# ---------------------------------------------------------------------------


def betti_at(filt: Filtration, t: float, dim: int, size_guard: int = 2000) -> int:
    """Betti number of the sub-complex at scale <= t via dense GF(2) ranks.

    beta_k = (#k-simplices) - rank(boundary_k) - rank(boundary_{k+1}); used as
    a test oracle against diagram-derived counts, so it deliberately shares no
    code with the reduction.
    """
    if dim < 0:
        raise ValueError("dimension must be nonnegative")
    cut = int(np.searchsorted(filt.scales, t, side="right"))
    if cut > size_guard:
        raise ValueError(
            f"sub-complex has {cut} simplices; Betti oracle is capped at {size_guard}"
        )
    dims = filt.dims[:cut]
    verts = filt.verts[:cut]
    rows_of = {
        int(k): verts[dims == k][:, : int(k) + 1] for k in np.unique(dims)
    }
    n_k = rows_of.get(dim, np.zeros((0, 1))).shape[0]
    if n_k == 0:
        return 0
    n = filt.n_points
    return (
        n_k
        - _boundary_rank(rows_of, dim, n)
        - _boundary_rank(rows_of, dim + 1, n)
    )


def _boundary_rank(rows_of, k, n_points):
    """Rank over GF(2) of the boundary map from k-simplices to (k-1)-simplices."""
    cols = rows_of.get(k)
    rows = rows_of.get(k - 1)
    if k == 0 or cols is None or rows is None or not len(cols) or not len(rows):
        return 0
    base = n_points + 1
    if base ** k < 2 ** 62:
        powers = base ** np.arange(k - 1, -1, -1, dtype=np.int64)
        row_keys = rows.astype(np.int64) @ powers
        order = np.argsort(row_keys, kind="stable")
        sorted_keys = row_keys[order]
        mat = np.zeros((len(cols), len(rows)), dtype=np.uint8)
        for drop in range(k + 1):
            faces = np.delete(cols, drop, axis=1).astype(np.int64) @ powers
            idx = np.searchsorted(sorted_keys, faces)
            if np.any(idx >= len(order)) or np.any(sorted_keys[np.minimum(idx, len(order) - 1)] != faces):
                raise ValueError("sub-complex is missing a face")
            mat[np.arange(len(cols)), order[idx]] = 1
    else:
        index = {tuple(int(v) for v in r): i for i, r in enumerate(rows)}
        mat = np.zeros((len(cols), len(rows)), dtype=np.uint8)
        for j, simplex in enumerate(cols):
            for face in itertools.combinations(tuple(int(v) for v in simplex), k):
                mat[j, index[face]] = 1
    packed = np.packbits(mat, axis=1)
    if HAVE_NUMBA:
        return int(_gf2_rank_nb(packed))
    return _gf2_rank_py(packed)


def _gf2_rank_py(packed):
    pivots = []
    rank = 0
    for row in packed:
        val = int.from_bytes(row.tobytes(), "big")
        for lead, pivot in pivots:
            if val >> lead & 1:
                val ^= pivot
        if val:
            pivots.append((val.bit_length() - 1, val))
            pivots.sort(reverse=True)
            rank += 1
    return rank


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _gf2_rank_nb(packed):  # pragma: no cover - jitted
        r, w = packed.shape
        piv_rows = np.zeros((r, w), np.uint8)
        piv_of_lead = np.full(w * 8, -1, np.int64)
        n_piv = 0
        rank = 0
        for i in range(r):
            cur = packed[i].copy()
            while True:
                lead = -1
                for word in range(w):
                    if cur[word] != 0:
                        v = cur[word]
                        bit = 7
                        while bit >= 0:
                            if v >> bit & 1:
                                break
                            bit -= 1
                        lead = word * 8 + (7 - bit)
                        break
                if lead < 0:
                    break
                hit = piv_of_lead[lead]
                if hit < 0:
                    piv_rows[n_piv] = cur
                    piv_of_lead[lead] = n_piv
                    n_piv += 1
                    rank += 1
                    break
                for word in range(w):
                    cur[word] ^= piv_rows[hit, word]
        return rank
