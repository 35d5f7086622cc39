"""Approximate holomorphically convex hulls relative to a finite function
family, compactness diagnostics, the product-hull law, and product
decomposition verdicts.

The hull filter keeps every inside grid cell p with
``|f(p)| <= (1 + tol) * max_K |f| + floor`` for all family members f.  Because
the family is finite the result is a superset of the true hull; because K is a
finite sample the K-side maximum is slightly under-estimated.  Both directions
are stated in diagnostics.

Members generated by this toolkit have a single nonzero component depending on
one block only, so their constraint fields live on the block sub-grid and are
broadcast across the full grid; general members fall back to chunked pointwise
evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyRegionError, RecipeError
from .funcspace import (
    BlackBox,
    BlockPolynomial,
    CnFunction,
    FamilyOptions,
    FunctionFamily,
    LeafFunction,
    SliceAnchored,
    generate_family,
)
from .region import BlockShape, CompactSample, PointZ, Region

DEFAULT_TOL = 1e-9
DEFAULT_FLOOR = 1e-12


# -- member evaluation helpers ---------------------------------------------------

def _single_active_component(f: CnFunction):
    active = [(i + 1, c) for i, c in enumerate(f.components)
              if not (isinstance(c, BlockPolynomial) and c.is_zero)]
    if len(active) == 1:
        return active[0]
    return None


def _block_subgrid_values(U: Region, comp: BlockPolynomial) -> np.ndarray:
    """|component| on the block sub-grid, shaped for broadcasting over the full grid.

    Single-term components factor as a product of per-coordinate moduli, so
    they broadcast without materializing the block mesh; multi-term components
    fall back to a dense block mesh (fine for small blocks).
    """
    ks = list(U.shape.block_coords(comp.block))
    grids = [U.coord_centers(k) for k in ks]
    ndim = U.inside.ndim
    if len(comp.terms) == 1:
        t = comp.terms[0]
        out = None
        for kk, g in enumerate(grids):
            e, c = t.exps[kk], t.center[kk]
            if e == 0:
                continue
            base = np.abs(g - c)
            with np.errstate(divide="ignore", over="ignore"):
                part = base ** e if e > 0 else base ** float(e)
            bshape = [1] * ndim
            ax, ay = U.shape.coord_axes(ks[kk])
            bshape[ax], bshape[ay] = g.shape
            part = part.reshape(bshape)
            out = part if out is None else out * part
        if out is None:
            out = np.full((1,) * ndim, 1.0)
        return abs(t.coeff) * out
    mesh_shape = tuple(s for g in grids for s in g.shape)
    zblock = np.empty(mesh_shape + (len(ks),), dtype=complex)
    for t, g in enumerate(grids):
        shape = [1] * len(mesh_shape)
        shape[2 * t] = g.shape[0]
        shape[2 * t + 1] = g.shape[1]
        zblock[..., t] = g.reshape(shape)
    vals = np.abs(comp.eval_block(zblock))
    bshape = [1] * ndim
    for a, s in zip(U.shape.block_axes(comp.block), mesh_shape):
        bshape[a] = s
    return vals.reshape(bshape)


def _member_abs_field(U: Region, f: CnFunction):
    """(field, kind) where field broadcasts |f| over the grid.

    kind "block": field is a broadcastable block sub-grid array.
    kind "leaf": field is a dict node -> |value| plus the member's graph.
    kind "full": field is the dense |f| array over all cells (chunked eval).
    """
    single = _single_active_component(f)
    if single is not None:
        j, comp = single
        if isinstance(comp, BlockPolynomial):
            return _block_subgrid_values(U, comp), "block"
        if isinstance(comp, LeafFunction) and comp.graph.region is U:
            node_vals = _leaf_node_values(comp)
            return (comp, node_vals), "leaf"
    return _dense_abs_field(U, f), "full"


def _leaf_node_values(comp: LeafFunction) -> np.ndarray:
    lift = comp.assignment.values
    out = np.zeros(lift.shape, dtype=complex)
    p = np.ones(lift.shape, dtype=complex)
    for c in comp.lift_coeffs:
        p = p * lift
        out += c * p
    if comp.poly is not None:
        graph = comp.graph
        zs = np.asarray([graph.block_value(i) for i in range(len(graph.nodes))],
                        dtype=complex)
        out += comp.poly.eval_block(zs)
    return np.abs(out)


def _dense_abs_field(U: Region, f: CnFunction) -> np.ndarray:
    out = np.zeros(U.counts, dtype=np.float32)
    inside_flat = U.inside.reshape(-1)
    idx_all = np.flatnonzero(inside_flat)
    vals_flat = np.zeros(inside_flat.shape[0], dtype=np.float32)
    for lo in range(0, idx_all.size, 1 << 18):
        sel = idx_all[lo:lo + (1 << 18)]
        cells = np.stack(np.unravel_index(sel, U.counts), axis=-1)
        pts = U.cell_center_array(cells)
        vals = f.eval_points(pts)
        vals_flat[sel] = np.abs(vals).max(axis=-1)
    return vals_flat.reshape(U.counts)


def _member_max_over_sample(U: Region, f: CnFunction, K: CompactSample) -> float:
    """max over K of |f|, exact over K's grid mask when available."""
    single = _single_active_component(f)
    if K.mask is not None and single is not None:
        j, comp = single
        if isinstance(comp, BlockPolynomial):
            field_bc = _block_subgrid_values(U, comp)
            expanded = tuple(a for a in range(U.inside.ndim) if field_bc.shape[a] > 1)
            other = tuple(a for a in range(U.inside.ndim) if a not in expanded)
            kproj = K.mask.any(axis=other) if other else K.mask
            sub = field_bc.reshape(tuple(field_bc.shape[a] for a in expanded))
            if sub.ndim == 0:
                return float(sub)
            return float(sub[kproj].max())
        if isinstance(comp, LeafFunction) and comp.graph.region is U:
            node_vals = _leaf_node_values(comp)
            best = 0.0
            graph = comp.graph
            keep = U.shape.block_axes(j)
            other = tuple(a for a in range(U.inside.ndim) if a not in keep)
            moved = np.moveaxis(K.mask, keep, range(len(keep)))
            for (cell, compid) in graph.nodes:
                m = moved[cell]
                labels = graph.labels_by_cell.get(cell)
                if labels is None:
                    continue
                hit = m & (labels == compid) if labels.ndim else (m and int(labels) == compid)
                if np.any(hit):
                    i = graph.node_index(cell, compid)
                    best = max(best, float(node_vals[i]))
            return best
    vals = f.eval_points(K.points_array())
    return float(np.abs(vals).max())


def _apply_member_constraint(U: Region, f: CnFunction, thresh: float,
                             member_mask: np.ndarray, ratio: np.ndarray | None,
                             worst: np.ndarray | None, idx: int, kmax: float):
    """AND the member's constraint into member_mask; track worst ratios."""
    field_val, kind = _member_abs_field(U, f)
    denom = max(kmax, DEFAULT_FLOOR)
    if kind == "block" or kind == "full":
        ok = field_val <= thresh
        member_mask &= ok
        if ratio is not None:
            r = (field_val / denom).astype(np.float32)
            r_bc = np.broadcast_to(r, member_mask.shape)
            upd = r_bc > ratio
            worst[upd] = idx
            np.maximum(ratio, r_bc, out=ratio)
        return 0
    comp, node_vals = field_val
    graph = comp.graph
    keep = U.shape.block_axes(comp.block)
    moved_mask = np.moveaxis(member_mask, keep, range(len(keep)))
    moved_ratio = (np.moveaxis(ratio, keep, range(len(keep)))
                   if ratio is not None else None)
    moved_worst = (np.moveaxis(worst, keep, range(len(keep)))
                   if worst is not None else None)
    covered = np.zeros_like(moved_mask)
    for (cell, compid) in graph.nodes:
        labels = graph.labels_by_cell[cell]
        sel = (labels == compid) if labels.ndim else np.asarray(int(labels) == compid)
        i = graph.node_index(cell, compid)
        v = float(node_vals[i])
        covered[cell][sel] = True
        if v > thresh:
            moved_mask[cell][sel] = False
        if moved_ratio is not None:
            r = np.float32(v / denom)
            cur = moved_ratio[cell]
            upd = sel & (r > cur)
            moved_worst[cell][upd] = idx
            cur[upd] = r
    failures = int((moved_mask & ~covered).sum())
    moved_mask &= covered
    return failures


@dataclass
class HullResult:
    """Approximate hull: member cells plus certificates."""

    region: Region
    K: CompactSample
    family: FunctionFamily
    tol: float
    floor: float
    member_mask: np.ndarray
    k_maxima: np.ndarray                 # per-member max over K
    worst_member: np.ndarray | None      # per-cell argmax of |f|/max_K|f|
    worst_ratio: np.ndarray | None
    eval_failures: int = 0
    _min_sqdist: int | None = None

    @property
    def member_count(self) -> int:
        return int(self.member_mask.sum())

    def member_points(self) -> np.ndarray:
        return self.region.cell_center_array(np.argwhere(self.member_mask))

    @property
    def min_boundary_sqdist(self) -> int:
        if self._min_sqdist is None:
            self._min_sqdist = self.region.min_sqdist_over_mask(self.member_mask)
        return self._min_sqdist

    @property
    def min_boundary_dist(self) -> float:
        return self.region.h * math.sqrt(self.min_boundary_sqdist)


def hull_approx(U: Region, K: CompactSample, F: FunctionFamily,
                tol: float = DEFAULT_TOL, floor: float = DEFAULT_FLOOR,
                certificates: bool = True) -> HullResult:
    """Filter the inside cells by |f(p)| <= (1+tol) * max_K |f| + floor for all f in F."""
    if len(F) == 0:
        raise EmptyRegionError("family is empty")
    if K.is_empty:
        raise EmptyRegionError("compact sample is empty")
    member_mask = U.inside.copy()
    ratio = np.zeros(U.counts, dtype=np.float32) if certificates else None
    worst = np.full(U.counts, -1, dtype=np.int16) if certificates else None
    kmax = np.empty(len(F))
    failures = 0
    for idx, f in enumerate(F.members):
        m = _member_max_over_sample(U, f, K)
        kmax[idx] = m
        thresh = (1 + tol) * m + floor
        failures += _apply_member_constraint(U, f, thresh, member_mask, ratio,
                                             worst, idx, m)
    if worst is not None:
        worst[~member_mask] = -1
    if ratio is not None:
        ratio[~member_mask] = 0.0
    return HullResult(region=U, K=K, family=F, tol=tol, floor=floor,
                      member_mask=member_mask, k_maxima=kmax,
                      worst_member=worst, worst_ratio=ratio,
                      eval_failures=failures)


# -- compactness diagnostics -------------------------------------------------------

@dataclass
class ConvexityVerdict:
    """COMPACT-LIKE / ESCAPING / INCONCLUSIVE with the evidence used.

    The approximate hull is a superset of the true hull, so ESCAPING is
    evidence only, while COMPACT-LIKE certifies compactness relative to the
    family (both statements are family-relative).  ``min_boundary_dist`` is
    filled only when the exact bisection was requested; the boolean facts
    ``hull_reaches_escape_band`` / ``hull_keeps_compact_band`` are always set.
    """

    status: str
    k_margin: float
    escape_band: float
    compact_band: float
    hull_reaches_escape_band: bool
    hull_keeps_compact_band: bool
    witness_point: PointZ | None
    min_boundary_dist: float | None = None
    note: str = ("approximate hull is a superset of the true hull; "
                 "COMPACT-LIKE is a certificate relative to the family, "
                 "ESCAPING is evidence only")


def compactness_diagnostic(U: Region, K: CompactSample, hull: HullResult,
                           escape_cells: int = 2, min_margin_cells: int = 3,
                           exact_min: bool = False) -> ConvexityVerdict:
    """ESCAPING when hull cells approach the complement while K keeps margin;
    COMPACT-LIKE when every hull cell keeps half the K margin; else INCONCLUSIVE."""
    if hull.region is not U:
        raise RecipeError("diagnostic must use the hull's own region")
    h = U.h
    escape_band = escape_cells * h
    margin = float(K.margin)
    compact_band = margin / 2

    esc_sq = U.sq_threshold_greater(escape_band)      # survive <=> dist > band
    escaping_cells = hull.member_mask & ~U.eroded_mask(esc_sq)
    has_escape = bool(escaping_cells.any())

    if compact_band > 0:
        cmp_sq = U.sq_threshold_at_least(compact_band)
        compact_like = not bool((hull.member_mask & ~U.eroded_mask(cmp_sq)).any())
    else:
        compact_like = False

    witness = None
    if has_escape:
        first = np.argwhere(escaping_cells)[0]
        witness = U.cell_center(tuple(int(i) for i in first))

    if has_escape and margin >= min_margin_cells * h:
        status = "ESCAPING"
    elif compact_like and not has_escape:
        status = "COMPACT-LIKE"
    else:
        status = "INCONCLUSIVE"
    return ConvexityVerdict(status=status, k_margin=margin,
                            escape_band=escape_band, compact_band=compact_band,
                            hull_reaches_escape_band=has_escape,
                            hull_keeps_compact_band=compact_like,
                            witness_point=witness,
                            min_boundary_dist=(hull.min_boundary_dist
                                               if exact_min else None))


# -- product law ---------------------------------------------------------------------

@dataclass
class ProductHullReport:
    product_region: Region
    product_hull: HullResult
    factor_hulls: list[HullResult]
    symmetric_difference: int
    within_band: bool
    band_cells: int


def product_region_from_factors(factors: list[Region]) -> Region:
    """Tensor a list of single-block regions into their product region."""
    dims = tuple(d for f in factors for d in f.shape.dims)
    shape = BlockShape(dims, dim_limit=max(f.shape.dim_limit for f in factors))
    origin = np.concatenate([f.origin for f in factors])
    mask = None
    offset = 0
    total_axes = sum(f.inside.ndim for f in factors)
    for f in factors:
        bshape = [1] * total_axes
        bshape[offset:offset + f.inside.ndim] = f.inside.shape
        part = f.inside.reshape(bshape)
        mask = part if mask is None else (mask & part)
        offset += f.inside.ndim
    h = factors[0].h
    if any(abs(f.h - h) > 1e-15 for f in factors):
        raise RecipeError("product factors must share the grid spacing")
    recipe = {
        "name": "product_of",
        "params": {},
        "flags": {
            "bounded": True,
            "convex": all(f.recipe.get("flags", {}).get("convex", False) for f in factors),
            "connected": all(f.recipe.get("flags", {}).get("connected", False) for f in factors),
            "product": True,
        },
        "poles": {str(j + 1): f.recipe.get("poles", {}).get("1", [])
                  for j, f in enumerate(factors)},
        "factors": [f.recipe for f in factors],
    }
    return Region(shape, h, origin, np.ascontiguousarray(mask), recipe,
                  axis_limit=max(f.axis_limit for f in factors))


def product_sample(product: Region, factor_Ks: list[CompactSample]) -> CompactSample:
    """Cartesian product of per-factor samples on the product region."""
    arrays = [K.points_array() for K in factor_Ks]
    grids = np.meshgrid(*[np.arange(a.shape[0]) for a in arrays], indexing="ij")
    pts = np.concatenate(
        [arrays[i][g.ravel()] for i, g in enumerate(grids)], axis=1)
    margin = min(float(K.margin) for K in factor_Ks)
    return CompactSample(product, pts, margin=margin, source="product of factor samples")


def hull_product_check(factor_regions: list[Region], factor_Ks: list[CompactSample],
                       d: int, tol: float = DEFAULT_TOL,
                       options: FamilyOptions | None = None) -> ProductHullReport:
    """Hull of the product sample on the product region vs the product of the
    per-factor hulls, reported as a symmetric difference in cells."""
    for f in factor_regions:
        if not f.recipe.get("flags", {}).get("connected", False):
            raise RecipeError("product law needs recipe-declared connected factors")
    options = options or FamilyOptions()
    product = product_region_from_factors(factor_regions)
    K = product_sample(product, factor_Ks)
    fam = generate_family(product, d, options)
    ph = hull_approx(product, K, fam, tol=tol, certificates=False)
    factor_hulls = []
    factor_mask = None
    total_axes = product.inside.ndim
    offset = 0
    for freg, fK in zip(factor_regions, factor_Ks):
        ffam = generate_family(freg, d, options)
        fh = hull_approx(freg, fK, ffam, tol=tol, certificates=False)
        factor_hulls.append(fh)
        bshape = [1] * total_axes
        bshape[offset:offset + freg.inside.ndim] = freg.inside.shape
        part = fh.member_mask.reshape(bshape)
        factor_mask = part if factor_mask is None else (factor_mask & part)
        offset += freg.inside.ndim
    diff = ph.member_mask ^ factor_mask
    n_diff = int(diff.sum())
    band = 2
    within = _within_band(diff, factor_mask, band)
    return ProductHullReport(product_region=product, product_hull=ph,
                             factor_hulls=factor_hulls,
                             symmetric_difference=n_diff, within_band=within,
                             band_cells=band)


def _within_band(diff: np.ndarray, reference: np.ndarray, cells: int) -> bool:
    """Every differing cell lies within `cells` cells of the reference boundary."""
    if not diff.any():
        return True
    from scipy import ndimage as ndi
    struct = np.ones((3,) * reference.ndim, dtype=bool)
    grown = ndi.binary_dilation(reference, struct, iterations=cells)
    shrunk = ndi.binary_erosion(reference, struct, iterations=cells)
    band = grown & ~shrunk
    return bool((diff & ~band).sum() == 0)


# -- product decomposition -------------------------------------------------------------

@dataclass
class DecompositionReport:
    equal: bool
    missing_cells: int           # in the product of projections but not in U
    product_cells: int
    inside_cells: int
    convex_flag: bool
    contradiction: bool = False
    note: str = ""


def product_decomposition_check(U: Region,
                                diagnostic: ConvexityVerdict | None = None) -> DecompositionReport:
    """Compare U against the product of its projections (Cartesian over blocks)."""
    mask = None
    for j in range(1, U.shape.n + 1):
        proj = U.project(j)
        bshape = [1] * U.inside.ndim
        for a, pa in zip(U.shape.block_axes(j), range(proj.inside.ndim)):
            bshape[a] = proj.inside.shape[pa]
        part = proj.inside.reshape(bshape)
        mask = part if mask is None else (mask & part)
    mask = np.broadcast_to(mask, U.counts)
    missing = int((mask & ~U.inside).sum())
    extra = int((U.inside & ~mask).sum())
    if extra:
        raise RecipeError("region exceeds the product of its projections")
    equal = missing == 0
    convex = bool(U.recipe.get("flags", {}).get("convex", False))
    contradiction = bool(convex and (diagnostic is not None)
                         and diagnostic.status == "COMPACT-LIKE" and not equal)
    note = ""
    if contradiction:
        note = ("convex region certified COMPACT-LIKE but not a product of its "
                "projections: contradicts the product-decomposition corollary")
    return DecompositionReport(equal=equal, missing_cells=missing,
                               product_cells=int(mask.sum()),
                               inside_cells=U.inside_count,
                               convex_flag=convex, contradiction=contradiction,
                               note=note)


# -- exports ------------------------------------------------------------------------

def heatmap_slice(hull: HullResult, axes: tuple[int, int],
                  fixed: dict[int, int] | None = None) -> np.ndarray:
    """2-D slice matrix of 0/1/2 = outside / inside-U / in-hull.

    Remaining axes are fixed at the given cell indices; by default at the
    lexicographically first hull member cell (or first inside cell).
    """
    U = hull.region
    if fixed is None:
        anchor_src = hull.member_mask if hull.member_mask.any() else U.inside
        anchor = np.argwhere(anchor_src)[0]
        fixed = {a: int(anchor[a]) for a in range(U.inside.ndim) if a not in axes}
    indexer = [slice(None)] * U.inside.ndim
    for a, i in fixed.items():
        indexer[a] = i
    inside2d = U.inside[tuple(indexer)]
    hull2d = hull.member_mask[tuple(indexer)]
    a0, a1 = axes
    if a1 < a0:
        inside2d = inside2d.T
        hull2d = hull2d.T
    out = np.zeros(inside2d.shape, dtype=np.int8)
    out[inside2d] = 1
    out[hull2d] = 2
    return out


def write_heatmap_csv(matrix: np.ndarray, path):
    with open(path, "w", encoding="utf-8") as fh:
        for row in matrix:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def save_hull(hull: HullResult, path):
    """Textual hull export: config echo, per-member K maxima, member mask RLE."""
    from .region import _rle_encode
    lines = [
        "# blockholo hull v1",
        f"tol = {hull.tol!r}",
        f"floor = {hull.floor!r}",
        f"member_count = {hull.member_count}",
        f"eval_failures = {hull.eval_failures}",
        "k_maxima = " + " ".join(repr(float(m)) for m in hull.k_maxima),
        "mask_rle = " + " ".join(str(n) for n in _rle_encode(hull.member_mask)),
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def worst_certificate_table(hull: HullResult, limit: int | None = None):
    """Rows (cell index tuple, worst member label, ratio) for member cells."""
    if hull.worst_member is None:
        raise RecipeError("hull was computed without certificates")
    rows = []
    cells = np.argwhere(hull.member_mask)
    if limit is not None:
        cells = cells[:limit]
    for c in cells:
        c = tuple(int(i) for i in c)
        m = int(hull.worst_member[c])
        label = hull.family.labels[m] if m >= 0 else "-"
        rows.append((c, label, float(hull.worst_ratio[c])))
    return rows
