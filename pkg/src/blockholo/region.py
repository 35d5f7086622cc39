"""Geometry layer: block structure, grid regions, sup-norm metric, projections,
slices, compact exhaustion pieces and dense point enumeration.

Conventions used throughout the toolkit:

* A region over blocks of complex dimensions ``(l_1, ..., l_n)`` lives on a
  uniform Cartesian grid in the ``2 * sum(l_j)`` real coordinates.  Scalar
  complex coordinate ``k`` occupies real axes ``2k`` (real part) and ``2k+1``
  (imaginary part).
* Cells are half-open and lower-inclusive: cell ``i`` on an axis covers
  ``[origin + i*h, origin + (i+1)*h)``.  Grid points are cell centers.
* The norm is the max over scalar complex coordinates of the modulus
  ("sup-norm").  Between two cell centers the squared sup-norm distance is
  ``h**2 * max_k(di_k**2 + dj_k**2)`` with integer index deltas, so distance
  comparisons between grid points are exact integer arithmetic.
* The complement of a region is every grid cell not marked inside plus
  everything outside the bounding box.  Regions are built with at least one
  cell of complement margin on every axis, so the in-grid complement always
  realizes the minimum distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    DimensionLimitError,
    EmptyRegionError,
    OffGridError,
    PointNotInRegionError,
    RecipeError,
    ShapeMismatchError,
)

DIM_LIMIT_DEFAULT = 3
AXIS_CELL_LIMIT_DEFAULT = 64

_BIG = np.int64(2**62)


@dataclass(frozen=True)
class BlockShape:
    """Block structure of the ambient space: n blocks of complex dims l_1..l_n."""

    dims: tuple[int, ...]
    dim_limit: int = field(default=DIM_LIMIT_DEFAULT, compare=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) < 1:
            raise DimensionLimitError("need at least one block")
        if any(d < 1 for d in dims):
            raise DimensionLimitError("every block dimension must be >= 1")
        if sum(dims) > self.dim_limit:
            raise DimensionLimitError(
                f"total complex dimension {sum(dims)} exceeds limit {self.dim_limit}"
            )

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def total(self) -> int:
        """Total number of scalar complex coordinates."""
        return sum(self.dims)

    @property
    def offsets(self) -> tuple[int, ...]:
        """Starting scalar-coordinate index of each block."""
        out, acc = [], 0
        for d in self.dims:
            out.append(acc)
            acc += d
        return tuple(out)

    def block_coords(self, j: int) -> range:
        """Scalar complex coordinate indices of block j (1-based)."""
        self._check_block(j)
        off = self.offsets[j - 1]
        return range(off, off + self.dims[j - 1])

    def block_of_coord(self, k: int) -> int:
        """1-based block index owning scalar coordinate k (0-based)."""
        for j in range(self.n):
            if k < self.offsets[j] + self.dims[j]:
                return j + 1
        raise IndexError(k)

    def coord_axes(self, k: int) -> tuple[int, int]:
        """Real axes (re, im) of scalar coordinate k."""
        return 2 * k, 2 * k + 1

    def block_axes(self, j: int) -> tuple[int, ...]:
        """Real axes of block j (1-based)."""
        return tuple(a for k in self.block_coords(j) for a in self.coord_axes(k))

    def _check_block(self, j: int):
        if not 1 <= j <= self.n:
            raise IndexError(f"block index {j} out of range 1..{self.n}")


@dataclass(frozen=True)
class PointZ:
    """A point of the ambient space: one complex number per scalar coordinate."""

    shape: BlockShape
    coords: tuple[complex, ...]

    def __post_init__(self):
        coords = tuple(complex(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        if len(coords) != self.shape.total:
            raise ShapeMismatchError(
                f"expected {self.shape.total} coordinates, got {len(coords)}"
            )

    def block(self, j: int) -> tuple[complex, ...]:
        return tuple(self.coords[k] for k in self.shape.block_coords(j))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=complex)

    def as_real(self) -> np.ndarray:
        out = np.empty(2 * self.shape.total)
        arr = self.as_array()
        out[0::2] = arr.real
        out[1::2] = arr.imag
        return out


def sup_norm(a: PointZ, b: PointZ) -> float:
    """Max over scalar complex coordinates of |a_k - b_k|."""
    if a.shape != b.shape:
        raise ShapeMismatchError("sup_norm arguments have different block shapes")
    return float(max(abs(x - y) for x, y in zip(a.coords, b.coords)))


def sup_norm_array(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized sup-norm over the last axis of complex coordinate arrays."""
    return np.abs(np.asarray(a) - np.asarray(b)).max(axis=-1)


class Region:
    """A discretized bounded open set, stored as an inside-cell mask.

    Immutable after construction; derived data (interface cells, erosions,
    depth bounds) is cached lazily.
    """

    def __init__(self, shape: BlockShape, h: float, origin, inside: np.ndarray,
                 recipe: dict, axis_limit: int | None = None):
        self.shape = shape
        self.h = float(h)
        self.origin = np.asarray(origin, dtype=float).copy()
        self.inside = np.ascontiguousarray(inside, dtype=bool)
        self.recipe = recipe
        self.axis_limit = AXIS_CELL_LIMIT_DEFAULT if axis_limit is None else int(axis_limit)
        self._validate()
        self._eroded_cache: dict[int, np.ndarray] = {}
        self._cache: dict[str, object] = {}
        self.inside.setflags(write=False)
        self.origin.setflags(write=False)

    # -- construction checks ------------------------------------------------

    def _validate(self):
        d = 2 * self.shape.total
        if self.inside.ndim != d:
            raise ShapeMismatchError(
                f"mask rank {self.inside.ndim} != 2 * total complex dim {d}"
            )
        if self.origin.shape != (d,):
            raise ShapeMismatchError("origin length mismatch")
        if self.h <= 0:
            raise RecipeError("grid spacing h must be positive")
        flags = self.recipe.get("flags", {})
        if not flags.get("bounded", True):
            raise RecipeError("unbounded regions are not supported")
        for axis, n in enumerate(self.inside.shape):
            if n - 2 > self.axis_limit:
                raise DimensionLimitError(
                    f"axis {axis} has {n - 2} interior cells, limit {self.axis_limit}"
                )
            if n < 3 and self.inside.any():
                raise RecipeError("grid too small to hold a margin ring")
        if self.inside.any():
            for axis in range(d):
                first = np.take(self.inside, 0, axis=axis)
                last = np.take(self.inside, -1, axis=axis)
                if first.any() or last.any():
                    raise RecipeError(
                        "inside cells touch the bounding box; recipes must leave "
                        "one cell of margin on every axis"
                    )

    # -- basic grid queries ---------------------------------------------------

    @property
    def counts(self) -> tuple[int, ...]:
        return self.inside.shape

    @property
    def is_empty(self) -> bool:
        return not bool(self.inside.any())

    @property
    def inside_count(self) -> int:
        key = "inside_count"
        if key not in self._cache:
            self._cache[key] = int(self.inside.sum())
        return self._cache[key]

    def axis_centers(self, axis: int) -> np.ndarray:
        return self.origin[axis] + (np.arange(self.counts[axis]) + 0.5) * self.h

    def coord_centers(self, k: int) -> np.ndarray:
        """Complex cell centers of scalar coordinate k as a 2-D array (re, im)."""
        ax, ay = self.shape.coord_axes(k)
        x = self.axis_centers(ax)
        y = self.axis_centers(ay)
        return x[:, None] + 1j * y[None, :]

    def cell_index(self, p: PointZ | np.ndarray) -> tuple[int, ...] | None:
        """Cell containing p (half-open lower-inclusive); None if outside the box."""
        real = p.as_real() if isinstance(p, PointZ) else np.asarray(p, dtype=float)
        idx = np.floor((real - self.origin) / self.h).astype(np.int64)
        if (idx < 0).any() or (idx >= np.asarray(self.counts)).any():
            return None
        return tuple(int(i) for i in idx)

    def cell_center(self, idx) -> PointZ:
        real = self.origin + (np.asarray(idx, dtype=float) + 0.5) * self.h
        coords = real[0::2] + 1j * real[1::2]
        return PointZ(self.shape, tuple(coords))

    def cell_center_array(self, idx: np.ndarray) -> np.ndarray:
        """(N, total) complex centers for an (N, 2*total) index array."""
        real = self.origin + (np.asarray(idx, dtype=float) + 0.5) * self.h
        return real[..., 0::2] + 1j * real[..., 1::2]

    def contains(self, p: PointZ) -> bool:
        idx = self.cell_index(p)
        if idx is None:
            return False
        return bool(self.inside[idx])

    def contains_array(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized membership for an (N, total) complex coordinate array."""
        pts = np.asarray(pts, dtype=complex)
        real = np.empty(pts.shape[:-1] + (2 * self.shape.total,))
        real[..., 0::2] = pts.real
        real[..., 1::2] = pts.imag
        idx = np.floor((real - self.origin) / self.h).astype(np.int64)
        ok = ((idx >= 0) & (idx < np.asarray(self.counts))).all(axis=-1)
        out = np.zeros(pts.shape[:-1], dtype=bool)
        if ok.any():
            flat = idx[ok]
            out[ok] = self.inside[tuple(flat.T)]
        return out

    # -- distance machinery ---------------------------------------------------

    @property
    def interface_indices(self) -> np.ndarray:
        """In-grid complement cells face-adjacent to inside cells, as (N, d) ints.

        The sup-norm distance from any point of the region to the complement is
        realized on these cells (monotone-walk argument), so per-point scans can
        ignore the rest of the complement.
        """
        key = "interface"
        if key not in self._cache:
            structure = ndimage.generate_binary_structure(self.inside.ndim, 1)
            ring = ndimage.binary_dilation(self.inside, structure) & ~self.inside
            self._cache[key] = np.argwhere(ring).astype(np.int32)
        return self._cache[key]

    def _sqdist_point_to_complement(self, real: np.ndarray) -> float:
        """Squared sup-norm distance (in length units) from an arbitrary point."""
        iface = self.interface_indices
        total = self.shape.total
        best = math.inf
        for lo in range(0, len(iface), 1_000_000):
            chunk = iface[lo:lo + 1_000_000]
            centers = self.origin + (chunk.astype(np.float64) + 0.5) * self.h
            acc = None
            for k in range(total):
                ax, ay = 2 * k, 2 * k + 1
                d2 = (centers[:, ax] - real[ax]) ** 2 + (centers[:, ay] - real[ay]) ** 2
                acc = d2 if acc is None else np.maximum(acc, d2)
            best = min(best, float(acc.min()))
        return best

    def int_sqdist_to_complement(self, idx) -> int:
        """Exact squared distance (units of h**2) from a cell center to the complement."""
        iface = self.interface_indices
        idx = np.asarray(idx, dtype=np.int64)
        total = self.shape.total
        best = int(_BIG)
        for lo in range(0, len(iface), 1_000_000):
            chunk = iface[lo:lo + 1_000_000].astype(np.int64)
            acc = None
            for k in range(total):
                ax, ay = 2 * k, 2 * k + 1
                d2 = (chunk[:, ax] - idx[ax]) ** 2 + (chunk[:, ay] - idx[ay]) ** 2
                acc = d2 if acc is None else np.maximum(acc, d2)
            best = min(best, int(acc.min()))
        return best

    def dist_to_complement(self, p: PointZ) -> float:
        """Sup-norm distance from p to the nearest complement cell center.

        Exact (integer index arithmetic) when p is a grid point; otherwise a
        float scan over the interface cells.  Exact up to one grid spacing h
        relative to the continuum distance.
        """
        if not self.contains(p):
            raise PointNotInRegionError(f"point {p.coords} not in region")
        real = p.as_real()
        snapped = (real - self.origin) / self.h - 0.5
        nearest = np.rint(snapped)
        if np.max(np.abs(snapped - nearest)) < 1e-9:
            return self.h * math.sqrt(self.int_sqdist_to_complement(nearest.astype(np.int64)))
        return math.sqrt(self._sqdist_point_to_complement(real))

    def _sq_edt(self, bad: np.ndarray) -> np.ndarray:
        if bad.all():
            return np.zeros(bad.shape, dtype=np.int64)
        if not bad.any():
            return np.full(bad.shape, _BIG, dtype=np.int64)
        d = ndimage.distance_transform_edt(~bad)
        return np.rint(d * d).astype(np.int64)

    def eroded_mask(self, sq_threshold: int) -> np.ndarray:
        """Cells whose integer squared distance to the complement is >= sq_threshold.

        Computed exactly by staging one 2-D squared Euclidean distance transform
        per scalar complex coordinate: a cell fails iff some complement cell is
        strictly within the threshold in every coordinate pair simultaneously.
        """
        S = int(sq_threshold)
        if S < 1:
            raise ValueError("sq_threshold must be >= 1")
        if S in self._eroded_cache:
            return self._eroded_cache[S]
        bad = ~self.inside
        for k in range(self.shape.total):
            ax, ay = self.shape.coord_axes(k)
            arr = np.moveaxis(bad, (ax, ay), (-2, -1))
            lead = arr.shape[:-2]
            flat = arr.reshape((-1,) + arr.shape[-2:])
            out = np.empty_like(flat)
            for s in range(flat.shape[0]):
                b = flat[s]
                if not b.any():
                    out[s] = False
                elif b.all():
                    out[s] = True
                else:
                    out[s] = self._sq_edt(b) < S
            bad = np.moveaxis(out.reshape(lead + arr.shape[-2:]), (-2, -1), (ax, ay))
        survive = ~bad
        if len(self._eroded_cache) > 12:
            self._eroded_cache.pop(next(iter(self._eroded_cache)))
        self._eroded_cache[S] = survive
        return survive

    def sq_threshold_at_least(self, r: float) -> int:
        """Smallest integer S with h*sqrt(S) >= r (snapping exact grid radii)."""
        return max(1, math.ceil((r / self.h) ** 2 - 1e-9))

    def sq_threshold_greater(self, r: float) -> int:
        """Smallest integer S with h*sqrt(S) > r."""
        return max(1, math.floor((r / self.h) ** 2 + 1e-9) + 1)

    def min_sqdist_over_mask(self, mask: np.ndarray) -> int:
        """Exact min over mask cells of the integer squared distance to the complement."""
        if not mask.any():
            raise EmptyRegionError("mask is empty")
        if (mask & ~self.inside).any():
            return 0
        # bisect the largest S with mask subset of eroded(S); eroded(1) == inside
        lo, hi = 1, self.max_depth_sq + 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if (mask & ~self.eroded_mask(mid)).any():
                hi = mid
            else:
                lo = mid
        return lo

    @property
    def max_depth_sq(self) -> int:
        """Max over inside cells of the integer squared distance to the complement."""
        key = "max_depth_sq"
        if key not in self._cache:
            if self.is_empty:
                self._cache[key] = 0
            else:
                hi = 4
                while self.eroded_mask(hi).any():
                    hi *= 4
                # largest S with eroded(S) nonempty; eroded(1) == inside is nonempty
                lo = 1
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    if self.eroded_mask(mid).any():
                        lo = mid
                    else:
                        hi = mid
                self._cache[key] = lo
        return self._cache[key]

    @property
    def max_depth(self) -> float:
        return self.h * math.sqrt(self.max_depth_sq)

    @property
    def deep_probe_sqdist(self) -> int:
        """Integer squared depth at a deterministic deep cell (a max_depth_sq
        lower bound, cheap to compute: Chebyshev-deepest cell plus centroid)."""
        key = "deep_probe"
        if key not in self._cache:
            if self.is_empty:
                self._cache[key] = 0
            else:
                cheb = ndimage.distance_transform_cdt(self.inside, metric="chessboard")
                probe1 = np.unravel_index(int(np.argmax(cheb)), self.counts)
                centroid = []
                for axis in range(self.inside.ndim):
                    other = tuple(a for a in range(self.inside.ndim) if a != axis)
                    weights = self.inside.sum(axis=other)
                    centroid.append(int(round(np.average(np.arange(len(weights)),
                                                         weights=weights))))
                near = self.int_sqdist_field_to_cell(centroid)
                flat = int(np.argmin(np.where(self.inside, near, _BIG)))
                probe2 = np.unravel_index(flat, self.counts)
                best = max(self.int_sqdist_to_complement(np.asarray(probe1)),
                           self.int_sqdist_to_complement(np.asarray(probe2)))
                self._cache[key] = int(best)
        return self._cache[key]

    # -- sup-norm balls on the grid -------------------------------------------

    def int_sqdist_field_to_cell(self, idx) -> np.ndarray:
        """Integer field over all cells: squared sup-norm index distance to cell idx."""
        idx = np.asarray(idx, dtype=np.int64)
        total = self.shape.total
        out = None
        for k in range(total):
            ax, ay = 2 * k, 2 * k + 1
            dx = (np.arange(self.counts[ax], dtype=np.int64) - idx[ax]) ** 2
            dy = (np.arange(self.counts[ay], dtype=np.int64) - idx[ay]) ** 2
            shape_x = [1] * self.inside.ndim
            shape_x[ax] = self.counts[ax]
            shape_y = [1] * self.inside.ndim
            shape_y[ay] = self.counts[ay]
            d2 = dx.reshape(shape_x) + dy.reshape(shape_y)
            out = d2 if out is None else np.maximum(out, d2)
        return out

    def ball_mask(self, idx, sq_radius: int, strict: bool = True) -> np.ndarray:
        """Grid cells within the open (strict) sup-norm ball around cell idx."""
        d2 = self.int_sqdist_field_to_cell(idx)
        return (d2 < sq_radius) if strict else (d2 <= sq_radius)

    def sup_norm_to_origin_field(self) -> np.ndarray:
        """Float field over all cells: sup-norm of the cell center."""
        key = "origin_norm"
        if key not in self._cache:
            out = None
            for k in range(self.shape.total):
                c = np.abs(self.coord_centers(k))
                shape = [1] * self.inside.ndim
                ax, ay = self.shape.coord_axes(k)
                shape[ax] = self.counts[ax]
                shape[ay] = self.counts[ay]
                c = c.reshape(shape)
                out = c if out is None else np.maximum(out, c)
            self._cache[key] = out
        return self._cache[key]

    # -- spec operations --------------------------------------------------------

    def project(self, j: int) -> "Region":
        """Projection onto block j: a block-j cell is inside iff some inside cell
        of the region lies over it."""
        self.shape._check_block(j)
        keep = self.shape.block_axes(j)
        other = tuple(a for a in range(self.inside.ndim) if a not in keep)
        mask = self.inside.any(axis=other) if other else self.inside.copy()
        sub_shape = BlockShape((self.shape.dims[j - 1],), dim_limit=self.shape.dim_limit)
        recipe = {
            "name": "projection",
            "params": {"j": j, "of": self.recipe.get("name", "?")},
            "flags": {
                "bounded": True,
                "convex": bool(self.recipe.get("flags", {}).get("convex", False)),
                "connected": bool(self.recipe.get("flags", {}).get("connected", False)),
                "product": True,
            },
            "poles": {"1": self.recipe.get("poles", {}).get(str(j), [])},
        }
        return Region(sub_shape, self.h, self.origin[list(keep)], mask, recipe,
                      axis_limit=self.axis_limit)

    def block_cell_of(self, j: int, a_j) -> tuple[int, ...]:
        """Indices of the block-j cell containing the block value a_j."""
        vals = (a_j,) if np.isscalar(a_j) or isinstance(a_j, complex) else tuple(a_j)
        if len(vals) != self.shape.dims[j - 1]:
            raise ShapeMismatchError(
                f"block {j} needs {self.shape.dims[j - 1]} complex values"
            )
        idx = []
        for k, v in zip(self.shape.block_coords(j), vals):
            v = complex(v)
            ax, ay = self.shape.coord_axes(k)
            ix = math.floor((v.real - self.origin[ax]) / self.h)
            iy = math.floor((v.imag - self.origin[ay]) / self.h)
            if not (0 <= ix < self.counts[ax] and 0 <= iy < self.counts[ay]):
                raise OffGridError(f"block value {v} is outside the block-{j} grid")
            idx.extend((ix, iy))
        return tuple(idx)

    def slice_block(self, j: int, a_j) -> "Region":
        """Region over the complementary blocks of cells lying over a_j's cell."""
        if self.shape.n < 2:
            raise ShapeMismatchError("slicing needs at least two blocks")
        cell = self.block_cell_of(j, a_j)
        keep = self.shape.block_axes(j)
        other = tuple(a for a in range(self.inside.ndim) if a not in keep)
        indexer = [slice(None)] * self.inside.ndim
        for a, i in zip(keep, cell):
            indexer[a] = i
        mask = self.inside[tuple(indexer)]
        rest_dims = tuple(d for jj, d in enumerate(self.shape.dims, start=1) if jj != j)
        sub_shape = BlockShape(rest_dims, dim_limit=self.shape.dim_limit)
        recipe = {
            "name": "slice",
            "params": {"j": j, "of": self.recipe.get("name", "?")},
            "flags": {"bounded": True, "convex": False, "connected": False,
                      "product": False},
        }
        return Region(sub_shape, self.h, self.origin[list(other)], mask.copy(), recipe,
                      axis_limit=self.axis_limit)

    def dense_cells(self):
        """Deterministic coarse-to-fine enumeration of all inside cells.

        Cells are ranked by the refinement level at which a halving stride
        pattern first hits their index on every axis, then enumerated level by
        level in lexicographic order.  Every inside cell appears exactly once.
        """
        if self.is_empty:
            raise EmptyRegionError("dense enumeration of an empty region")
        levels = self._level_field()
        for t in range(int(levels.max()) + 1):
            sel = (levels == t) & self.inside
            if sel.any():
                for idx in np.argwhere(sel):
                    yield tuple(int(i) for i in idx)

    def _level_field(self) -> np.ndarray:
        key = "levels"
        if key not in self._cache:
            out = None
            for axis, n in enumerate(self.counts):
                s0 = 1 << max(0, (n - 1).bit_length())
                i = np.arange(n, dtype=np.int64)
                lv = np.zeros(n, dtype=np.int16)
                nz = i > 0
                tz = np.zeros(n, dtype=np.int16)
                ii = i.copy()
                while nz.any():
                    odd = nz & (ii % 2 == 1)
                    lv[odd] = np.int16(s0.bit_length() - 1) - tz[odd]
                    ii[nz] //= 2
                    tz[nz] += 1
                    nz = nz & (ii > 0)
                shape = [1] * self.inside.ndim
                shape[axis] = n
                lv = lv.reshape(shape)
                out = lv if out is None else np.maximum(out, lv)
            self._cache[key] = out
        return self._cache[key]

    def dense_points(self):
        for idx in self.dense_cells():
            yield self.cell_center(idx)


@dataclass(repr=False)
class CompactSample:
    """A finite sample standing in for a compact subset of the region.

    ``points`` is an (N, total) complex coordinate array; pass None for
    grid-mask samples, whose points materialize on first use.  ``margin`` is a
    guaranteed sup-norm distance from every sample point to the complement.
    ``mask`` is set when the sample is exactly a set of grid cells, enabling
    exact max-over-K computations through mask projections.
    """

    region: Region
    points: np.ndarray | None
    margin: float
    source: str = ""
    mask: np.ndarray | None = None
    robust: bool = True

    def __post_init__(self):
        if self.points is not None:
            self.points = np.asarray(self.points, dtype=complex).reshape(
                -1, self.region.shape.total)
        elif self.mask is None:
            raise ValueError("sample needs points or a mask")

    def points_array(self) -> np.ndarray:
        if self.points is None:
            self.points = (self.region.cell_center_array(np.argwhere(self.mask))
                           if self.mask.any()
                           else np.empty((0, self.region.shape.total), complex))
        return self.points

    @property
    def is_empty(self) -> bool:
        if self.points is None:
            return not bool(self.mask.any())
        return self.points.shape[0] == 0

    def validate(self):
        if self.is_empty:
            return
        pts = self.points_array()
        ok = self.region.contains_array(pts)
        if not ok.all():
            bad = pts[~ok][0]
            raise PointNotInRegionError(f"sample point {bad} outside the region")
        for p in pts:
            d = self.region.dist_to_complement(PointZ(self.region.shape, tuple(p)))
            if self.margin > d + 1e-12:
                raise ValueError(f"margin {self.margin} exceeds distance {d}")

    def point_list(self) -> list[PointZ]:
        return [PointZ(self.region.shape, tuple(p)) for p in self.points_array()]


# -- module-level wrappers matching the operation map -------------------------

def contains(U: Region, p: PointZ) -> bool:
    return U.contains(p)


def dist_to_complement(U: Region, p: PointZ) -> float:
    return U.dist_to_complement(p)


def project(U: Region, j: int) -> Region:
    return U.project(j)


def slice_region(U: Region, j: int, a_j) -> Region:
    return U.slice_block(j, a_j)


def sublevel_compact(U: Region, r: float, R: float) -> CompactSample:
    """Grid points p with dist_to_complement(p) >= r and sup_norm(p, 0) <= R.

    The returned sample's margin is r - h.  Radii below 2h are allowed but the
    sample is flagged non-robust (the set is not robustly interior at grid
    resolution); an empty result is returned with ``robust=False`` rather than
    raising.
    """
    if r <= 0 or R <= 0:
        raise ValueError("radii must be positive")
    S = U.sq_threshold_at_least(r)
    mask = U.eroded_mask(S) & (U.sup_norm_to_origin_field() <= R + 1e-12)
    robust = bool(mask.any()) and r > 2 * U.h
    return CompactSample(U, None, margin=max(r - U.h, 0.0),
                         source=f"sublevel r={r!r} R={R!r}", mask=mask, robust=robust)


def dense_sequence(U: Region):
    """Deterministic enumeration of all inside grid points, coarse to fine."""
    return U.dense_points()


# -- region spec files ---------------------------------------------------------

SPEC_VERSION = 1


def save_region(U: Region, path):
    """Write the textual region spec (versioned, bit-exact round trip)."""
    lines = [
        f"# blockholo region v{SPEC_VERSION}",
        f"version = {SPEC_VERSION}",
        "dims = " + " ".join(str(d) for d in U.shape.dims),
        f"h = {U.h!r}",
        "origin = " + " ".join(repr(float(x)) for x in U.origin),
        "counts = " + " ".join(str(c) for c in U.counts),
        f"axis_limit = {U.axis_limit}",
        "recipe = " + json.dumps(U.recipe, sort_keys=True),
        "mask_rle = " + " ".join(str(n) for n in _rle_encode(U.inside)),
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_region(path) -> Region:
    fields = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition(" = ")
            fields[key] = val
    if int(fields["version"]) != SPEC_VERSION:
        raise RecipeError(f"unsupported region spec version {fields['version']}")
    dims = tuple(int(x) for x in fields["dims"].split())
    counts = tuple(int(x) for x in fields["counts"].split())
    origin = np.array([float(x) for x in fields["origin"].split()])
    rle = [int(x) for x in fields["mask_rle"].split()]
    mask = _rle_decode(rle, counts)
    shape = BlockShape(dims)
    return Region(shape, float(fields["h"]), origin, mask,
                  json.loads(fields["recipe"]), axis_limit=int(fields["axis_limit"]))


def _rle_encode(mask: np.ndarray) -> list[int]:
    flat = mask.ravel()
    if flat.size == 0:
        return []
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds).tolist()
    first = int(flat[0])
    return [first] + runs


def _rle_decode(rle: list[int], counts) -> np.ndarray:
    total = int(np.prod(counts))
    if not rle:
        return np.zeros(counts, dtype=bool)
    val = bool(rle[0])
    out = np.empty(total, dtype=bool)
    pos = 0
    for run in rle[1:]:
        out[pos:pos + run] = val
        pos += run
        val = not val
    if pos != total:
        raise RecipeError("mask run-length data does not match the grid size")
    return out.reshape(counts)
