"""Function tuples with block structure: representations, numerical derivative
verification (Wirtinger cross-block and Cauchy-Riemann residuals by central
differences), the convex-region product extension, and family generation for
hull computation.

A function tuple has one scalar complex component per block.  Component kinds:

* ``BlockPolynomial`` — sum of terms  coeff * prod_k (z_{j,k} - center_k)**e_k
  in the block's own variables only; negative exponents give Laurent terms
  around a declared pole.
* ``LeafFunction`` — polynomial in the block variable plus a polynomial in the
  branch-tracked log lifted along a leaf graph; evaluated through the node
  containing the query point.
* ``BlackBox`` — caller-supplied vectorized evaluator; claims unchecked until
  verified.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NotConvexError,
    PoleInsideProjectionError,
    RecipeError,
    ShapeMismatchError,
    UnresolvableLeafError,
)
from .leafspace import BranchAssignment, LeafGraph, build_leaf_graph, lift_branch_log
from .region import BlockShape, CompactSample, PointZ, Region


@dataclass(frozen=True)
class PolyTerm:
    coeff: complex
    exps: tuple[int, ...]
    center: tuple[complex, ...]


@dataclass(frozen=True)
class BlockPolynomial:
    """Polynomial (or Laurent) component in the variables of one block."""

    block: int                     # 1-based block index
    terms: tuple[PolyTerm, ...] = ()

    def eval_block(self, zblock: np.ndarray) -> np.ndarray:
        """zblock: (..., l_j) complex values of the block variables."""
        zblock = np.asarray(zblock, dtype=complex)
        out = np.zeros(zblock.shape[:-1], dtype=complex)
        for t in self.terms:
            term = np.full(zblock.shape[:-1], t.coeff, dtype=complex)
            for k, (e, c) in enumerate(zip(t.exps, t.center)):
                if e == 0:
                    continue
                base = zblock[..., k] - c
                if e > 0:
                    term = term * base ** e
                else:
                    term = term / base ** (-e)
            out += term
        return out

    def derivative(self, k: int) -> "BlockPolynomial":
        """Analytic d/dz_{j,k} (k is the index within the block)."""
        terms = []
        for t in self.terms:
            e = t.exps[k]
            if e == 0:
                continue
            exps = list(t.exps)
            exps[k] = e - 1
            terms.append(PolyTerm(t.coeff * e, tuple(exps), t.center))
        return BlockPolynomial(self.block, tuple(terms))

    @property
    def is_zero(self) -> bool:
        return not self.terms


def zero_component(block: int) -> BlockPolynomial:
    return BlockPolynomial(block, ())


def monomial(block: int, exps, center, coeff: complex = 1.0) -> BlockPolynomial:
    exps = (exps,) if isinstance(exps, int) else tuple(exps)
    center = (center,) if isinstance(center, (int, float, complex)) else tuple(center)
    return BlockPolynomial(block, (PolyTerm(complex(coeff), exps,
                                            tuple(complex(c) for c in center)),))


@dataclass(frozen=True)
class LeafFunction:
    """Branch-tracked component: base polynomial plus a polynomial in the log lift."""

    block: int
    graph: LeafGraph = field(compare=False)
    assignment: BranchAssignment = field(compare=False)
    lift_coeffs: tuple[complex, ...] = (1.0,)    # coefficient of lift**1, lift**2, ...
    poly: BlockPolynomial | None = None

    def lift_value(self, points: np.ndarray) -> np.ndarray:
        """Branch value of log z_j at each point, continued from its leaf node."""
        points = np.asarray(points, dtype=complex)
        flat = points.reshape(-1, points.shape[-1])
        out = np.empty(flat.shape[0], dtype=complex)
        reg = self.graph.region
        koff = reg.shape.offsets[self.block - 1]
        for i, p in enumerate(flat):
            node = self.graph.resolve(p)
            if node is None:
                raise UnresolvableLeafError(
                    f"no leaf node for point {tuple(p)} (block {self.block})")
            a = self.graph.block_value(node)[0]
            out[i] = self.assignment.values[node] + cmath.log(p[koff] / a)
        return out.reshape(points.shape[:-1])

    def eval_points(self, points: np.ndarray) -> np.ndarray:
        lift = self.lift_value(points)
        out = np.zeros(lift.shape, dtype=complex)
        p = np.ones(lift.shape, dtype=complex)
        for c in self.lift_coeffs:
            p = p * lift
            out += c * p
        if self.poly is not None:
            reg = self.graph.region
            ks = list(reg.shape.block_coords(self.block))
            out += self.poly.eval_block(np.asarray(points, complex)[..., ks])
        return out


@dataclass(frozen=True)
class BlackBox:
    """Caller-supplied component: fn maps an (N, total) complex array to (N,)."""

    block: int
    fn: object = field(compare=False)
    label: str = "blackbox"

    def eval_points(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=complex)
        flat = points.reshape(-1, points.shape[-1])
        vals = np.asarray(self.fn(flat), dtype=complex).reshape(flat.shape[0])
        return vals.reshape(points.shape[:-1])


@dataclass(frozen=True)
class SliceAnchored:
    """Component of a product extension: evaluates the source component with the
    complementary coordinates frozen to a per-cell anchor of the source region."""

    block: int
    source: object = field(compare=False)
    source_region: Region = field(compare=False)
    anchors: dict = field(compare=False)   # block cell -> complementary complex coords

    def eval_points(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=complex)
        flat = points.reshape(-1, points.shape[-1])
        reg = self.source_region
        ks = list(reg.shape.block_coords(self.block))
        rest = [k for k in range(reg.shape.total) if k not in ks]
        full = np.empty((flat.shape[0], reg.shape.total), dtype=complex)
        full[:, ks] = flat[:, ks]
        for i in range(flat.shape[0]):
            cell = _block_cell_of_values(reg, self.block, full[i, ks])
            if cell not in self.anchors:
                raise UnresolvableLeafError(
                    f"no slice anchor for block value {full[i, ks]}")
            full[i, rest] = self.anchors[cell]
        return _eval_component(self.source, full, reg.shape)


def _block_cell_of_values(reg: Region, j: int, vals) -> tuple[int, ...]:
    idx = []
    for k, v in zip(reg.shape.block_coords(j), np.atleast_1d(vals)):
        ax, ay = reg.shape.coord_axes(k)
        idx.append(int(math.floor((v.real - reg.origin[ax]) / reg.h)))
        idx.append(int(math.floor((v.imag - reg.origin[ay]) / reg.h)))
    return tuple(idx)


def _eval_component(comp, points: np.ndarray, shape: BlockShape) -> np.ndarray:
    if isinstance(comp, BlockPolynomial):
        ks = list(shape.block_coords(comp.block))
        return comp.eval_block(np.asarray(points, complex)[..., ks])
    return comp.eval_points(points)


@dataclass(frozen=True)
class CnFunction:
    """An n-tuple function with one scalar component per block."""

    shape: BlockShape
    components: tuple

    def __post_init__(self):
        if len(self.components) != self.shape.n:
            raise ShapeMismatchError("need one component per block")
        for i, comp in enumerate(self.components, start=1):
            if comp.block != i:
                raise ShapeMismatchError(
                    f"component {i} declares block {comp.block}")

    def eval_points(self, points) -> np.ndarray:
        """(N, n) component values at an (N, total) coordinate array."""
        points = np.asarray(points, dtype=complex)
        single = points.ndim == 1
        pts = points.reshape(-1, self.shape.total)
        out = np.empty((pts.shape[0], self.shape.n), dtype=complex)
        for i, comp in enumerate(self.components):
            out[:, i] = _eval_component(comp, pts, self.shape)
        return out[0] if single else out

    def depends_only_on_block(self, i: int) -> bool:
        comp = self.components[i - 1]
        return isinstance(comp, BlockPolynomial)


def evaluate(f: CnFunction, p: PointZ | np.ndarray):
    """Component values at p plus |f(p)| = max of component moduli."""
    pts = p.as_array() if isinstance(p, PointZ) else np.asarray(p, complex)
    vals = f.eval_points(pts)
    mod = np.abs(vals).max(axis=-1)
    return vals, mod


def tuple_product(f: CnFunction, g: CnFunction) -> CnFunction:
    """Componentwise product, packaged as black boxes."""
    if f.shape != g.shape:
        raise ShapeMismatchError("tuple product needs matching shapes")
    comps = []
    for i in range(f.shape.n):
        fc, gc = f.components[i], g.components[i]
        shape = f.shape

        def make(fc=fc, gc=gc):
            return lambda pts: (_eval_component(fc, pts, shape)
                                * _eval_component(gc, pts, shape))

        comps.append(BlackBox(i + 1, make(), label="product"))
    return CnFunction(f.shape, tuple(comps))


# -- derivative reports ----------------------------------------------------------

@dataclass
class DerivativeReport:
    """Finite-difference verification record."""

    kind: str                       # "cross", "cr" or "triangular"
    max_cross: float
    max_cr: float
    worst_point: PointZ | None
    worst_pair: tuple[int, int] | None   # (component i, scalar coord t)
    scaled_max: float
    tol: float
    passed: bool
    samples_used: int
    samples_skipped: int
    step: float

    def line(self) -> str:
        return (f"{self.kind}: max_cross={self.max_cross:.3e} "
                f"max_cr={self.max_cr:.3e} scaled={self.scaled_max:.3e} "
                f"tol={self.tol:g} -> {'pass' if self.passed else 'FAIL'}")


def _default_step(U: Region) -> float:
    return max(1e-4, U.h / 10)


def _pick_samples(f: CnFunction, U: Region, sample_count: int, step: float):
    """First sample_count dense-sequence points safely away from the boundary."""
    key = ("fd_samples", sample_count, step)
    cached = U._cache.get(key)
    if cached is not None:
        return cached
    guard = 4 * step
    used, skipped = [], 0
    for p in U.dense_points():
        if U.dist_to_complement(p) <= guard:
            skipped += 1
            continue
        used.append(p)
        if len(used) >= sample_count:
            break
    U._cache[key] = (used, skipped)
    return used, skipped


def _wirtinger_table(f: CnFunction, U: Region, samples, step: float):
    """Central-difference Wirtinger derivatives at each sample.

    Returns (ddz, ddzbar, base) with shapes (S, n, total), (S, n, total), (S, n):
    ddz[s, i, t] estimates d f_i / d z_t, ddzbar the conjugate derivative.
    """
    total = U.shape.total
    n = U.shape.n
    S = len(samples)
    base_pts = np.stack([p.as_array() for p in samples])       # (S, total)
    stencil = np.empty((S, total, 4, total), dtype=complex)
    for t in range(total):
        for q, dz in enumerate((step, -step, 1j * step, -1j * step)):
            stencil[:, t, q, :] = base_pts
            stencil[:, t, q, t] += dz
    vals = f.eval_points(stencil.reshape(-1, total)).reshape(S, total, 4, n)
    base = f.eval_points(base_pts).reshape(S, n)
    dx = (vals[:, :, 0, :] - vals[:, :, 1, :]) / (2 * step)    # (S, total, n)
    dy = (vals[:, :, 2, :] - vals[:, :, 3, :]) / (2 * step)
    ddz = np.transpose((dx - 1j * dy) / 2, (0, 2, 1))          # (S, n, total)
    ddzbar = np.transpose((dx + 1j * dy) / 2, (0, 2, 1))
    return ddz, ddzbar, base


def _cross_pairs(shape: BlockShape, triangular_only: bool):
    """(component i, scalar coord t) pairs whose Wirtinger derivative must vanish."""
    pairs = []
    for i in range(1, shape.n + 1):
        for t in range(shape.total):
            j = shape.block_of_coord(t)
            if j == i:
                continue
            if triangular_only and not i < j:
                continue
            pairs.append((i, t))
    return pairs


def _derivative_check(f, U, sample_count, step, tol, kind: str) -> DerivativeReport:
    step = step if step is not None else _default_step(U)
    samples, skipped = _pick_samples(f, U, sample_count, step)
    if not samples:
        raise RecipeError("no usable samples away from the boundary at this step")
    ddz, ddzbar, base = _wirtinger_table(f, U, samples, step)
    scale = np.maximum(1.0, np.abs(base).max(axis=1))          # (S,)

    cross_pairs = _cross_pairs(U.shape, triangular_only=(kind == "triangular"))
    max_cross = 0.0
    worst = (None, None, -1.0)
    for (i, t) in cross_pairs:
        mods = np.abs(ddz[:, i - 1, t])
        s = int(np.argmax(mods / scale))
        if mods[s] / scale[s] > worst[2]:
            worst = ((i, t), s, mods[s] / scale[s])
        max_cross = max(max_cross, float(mods.max()))
    max_cr = float(np.abs(ddzbar).max()) if ddzbar.size else 0.0
    cr_scaled = np.abs(ddzbar).max(axis=(1, 2)) / scale if ddzbar.size else np.zeros(1)

    if kind == "cross":
        scaled_max = worst[2] if worst[1] is not None else 0.0
        scaled_max = max(scaled_max, 0.0)
        passed = scaled_max <= tol
        worst_s = worst[1]
        worst_pair = worst[0]
    elif kind == "cr":
        worst_s = int(np.argmax(cr_scaled))
        scaled_max = float(cr_scaled[worst_s])
        passed = scaled_max <= tol
        worst_pair = None
    else:  # triangular: holomorphy plus the i<j cross conditions
        cross_scaled = worst[2] if worst[1] is not None else 0.0
        cr_worst = float(np.max(cr_scaled))
        scaled_max = max(cross_scaled, cr_worst)
        passed = scaled_max <= tol
        worst_s = worst[1] if cross_scaled >= cr_worst else int(np.argmax(cr_scaled))
        worst_pair = worst[0] if cross_scaled >= cr_worst else None

    worst_point = samples[worst_s] if worst_s is not None and samples else None
    return DerivativeReport(kind=kind, max_cross=max_cross, max_cr=max_cr,
                            worst_point=worst_point, worst_pair=worst_pair,
                            scaled_max=float(scaled_max), tol=tol, passed=bool(passed),
                            samples_used=len(samples), samples_skipped=skipped,
                            step=step)


def cross_block_derivative_check(f: CnFunction, U: Region, sample_count: int = 16,
                                 step: float | None = None, tol: float = 1e-3) -> DerivativeReport:
    """Estimate all cross-block Wirtinger derivatives d f_i / d z_j (i != j)."""
    return _derivative_check(f, U, sample_count, step, tol, "cross")


def holomorphy_check(f: CnFunction, U: Region, sample_count: int = 16,
                     step: float | None = None, tol: float = 1e-3) -> DerivativeReport:
    """Estimate Cauchy-Riemann residuals d f_i / d conj(z_t) for all i, t."""
    return _derivative_check(f, U, sample_count, step, tol, "cr")


def triangular_check(f: CnFunction, U: Region, sample_count: int = 16,
                     step: float | None = None, tol: float = 1e-3) -> DerivativeReport:
    """Holomorphy plus vanishing cross derivatives for i < j only."""
    return _derivative_check(f, U, sample_count, step, tol, "triangular")


# -- product extension (convex regions) -------------------------------------------

def extend_to_product(f: CnFunction, U: Region) -> CnFunction:
    """Extend f across the product of projections of a convex region.

    Each g_j reads f_j with the complementary coordinates frozen to a
    deterministic anchor of the slice over the query's block cell; on a convex
    region the slices are connected so the restriction of g to U reproduces f.
    """
    if not U.recipe.get("flags", {}).get("convex", False):
        raise NotConvexError("extend_to_product requires a recipe-declared convex region")
    comps = []
    for j in range(1, U.shape.n + 1):
        anchors = _slice_anchors(U, j)
        comps.append(SliceAnchored(block=j, source=f.components[j - 1],
                                   source_region=U, anchors=anchors))
    return CnFunction(U.shape, tuple(comps))


def _slice_anchors(U: Region, j: int) -> dict:
    """Lexicographically first inside cell of each slice, as complementary coords."""
    keep = U.shape.block_axes(j)
    other = tuple(a for a in range(U.inside.ndim) if a not in keep)
    moved = np.moveaxis(U.inside, keep, range(len(keep)))
    bshape = moved.shape[:len(keep)]
    flat = moved.reshape(bshape + (-1,))
    anchors = {}
    rest_counts = tuple(U.counts[a] for a in other)
    rest_origin = np.asarray([U.origin[a] for a in other])
    for cell in np.argwhere(flat.any(axis=-1)):
        cell = tuple(int(c) for c in cell)
        first = int(np.argmax(flat[cell]))
        rest_idx = np.unravel_index(first, rest_counts) if rest_counts else ()
        real = rest_origin + (np.asarray(rest_idx, dtype=float) + 0.5) * U.h
        anchors[cell] = real[0::2] + 1j * real[1::2]
    return anchors


# -- family generation --------------------------------------------------------------

@dataclass(frozen=True)
class FamilyOptions:
    poles: bool = False
    leaf_lifts: bool = False
    validate: bool = True
    validate_samples: int = 6
    tol: float = 1e-3


@dataclass
class FunctionFamily:
    """A finite surrogate for the admissible function algebra on a region."""

    region: Region
    members: tuple[CnFunction, ...]
    labels: tuple[str, ...]
    provenance: dict
    tol: float = 1e-3

    def __len__(self):
        return len(self.members)

    def __getitem__(self, i):
        return self.members[i]


def projection_centroids(U: Region) -> list[tuple[complex, ...]]:
    """Per-block centroid of the projection's inside cell centers."""
    out = []
    for j in range(1, U.shape.n + 1):
        proj = U.project(j)
        if proj.is_empty:
            out.append((0j,) * U.shape.dims[j - 1])
            continue
        cells = np.argwhere(proj.inside)
        centers = proj.origin + (cells.astype(float) + 0.5) * proj.h
        mean = centers.mean(axis=0)
        out.append(tuple(mean[0::2] + 1j * mean[1::2]))
    return out


def _multi_indices(l: int, d: int):
    """All exponent tuples of length l with 1 <= sum <= d, by (degree, lex)."""
    out = []

    def rec(prefix, remaining, slots):
        if slots == 0:
            if sum(prefix) >= 1:
                out.append(tuple(prefix))
            return
        for e in range(remaining + 1):
            rec(prefix + [e], remaining - e, slots - 1)

    for deg in range(1, d + 1):
        block = []

        def rec2(prefix, slots):
            if slots == 0:
                if sum(prefix) == deg:
                    block.append(tuple(prefix))
                return
            for e in range(deg - sum(prefix) + 1):
                rec2(prefix + [e], slots - 1)

        rec2([], l)
        out.extend(sorted(block))
    return out


def generate_family(U: Region, d: int, options: FamilyOptions | None = None) -> FunctionFamily:
    """Coordinates always; shifted monomials up to degree d per block; Laurent
    terms at declared bounded-complement centers when options.poles; powers of
    the lifted log when options.leaf_lifts and the block's leaf space is
    nontrivial."""
    if d < 1:
        raise RecipeError("family degree must be >= 1")
    options = options or FamilyOptions()
    shape = U.shape
    centroids = projection_centroids(U)
    members, labels = [], []

    def tuple_with(j, comp):
        comps = [zero_component(i) for i in range(1, shape.n + 1)]
        comps[j - 1] = comp
        return CnFunction(shape, tuple(comps))

    for j in range(1, shape.n + 1):
        l = shape.dims[j - 1]
        for k in range(l):
            exps = tuple(1 if t == k else 0 for t in range(l))
            members.append(tuple_with(j, monomial(j, exps, (0j,) * l)))
            labels.append(f"coord b{j} k{k}")
    for j in range(1, shape.n + 1):
        l = shape.dims[j - 1]
        c = centroids[j - 1]
        for exps in _multi_indices(l, d):
            members.append(tuple_with(j, monomial(j, exps, c)))
            cen = ";".join(f"{complex(x):.6g}" for x in c)
            labels.append(f"mono b{j} e{exps} c{cen}")
    if options.poles:
        for j in range(1, shape.n + 1):
            declared = U.recipe.get("poles", {}).get(str(j), [])
            if not declared:
                continue
            if shape.dims[j - 1] != 1:
                raise RecipeError("Laurent poles only supported on 1-dim blocks")
            proj = U.project(j)
            for pole in declared:
                pole = complex(pole[0], pole[1]) if isinstance(pole, (list, tuple)) else complex(pole)
                if _pole_touches_projection(proj, pole):
                    raise PoleInsideProjectionError(
                        f"declared pole {pole} meets the closure of projection {j}")
                for kk in range(1, d + 1):
                    members.append(tuple_with(j, monomial(j, (-kk,), (pole,))))
                    labels.append(f"laurent b{j} k{kk} pole{pole}")
    if options.leaf_lifts:
        for j in range(1, shape.n + 1):
            if shape.dims[j - 1] != 1:
                continue
            graph = build_leaf_graph(U, j)
            counts = {}
            for cell, comp in graph.nodes:
                counts[cell] = counts.get(cell, 0) + 1
            if not counts or max(counts.values()) < 2:
                continue
            assignment = lift_branch_log(graph)
            for kk in range(1, d + 1):
                coeffs = tuple(1.0 if t == kk - 1 else 0.0 for t in range(kk))
                members.append(tuple_with(
                    j, LeafFunction(block=j, graph=graph, assignment=assignment,
                                    lift_coeffs=coeffs)))
                labels.append(f"leaflog b{j} pow{kk}")

    fam = FunctionFamily(region=U, members=tuple(members), labels=tuple(labels),
                         provenance={"degree": d, "poles": options.poles,
                                     "leaf_lifts": options.leaf_lifts,
                                     "centroids": [[str(c) for c in cs] for cs in centroids]},
                         tol=options.tol)
    if options.validate:
        for m, lab in zip(fam.members, fam.labels):
            rep = cross_block_derivative_check(m, U, sample_count=options.validate_samples,
                                               tol=options.tol)
            if not rep.passed:
                raise RecipeError(f"family member {lab!r} failed the cross-block check: "
                                  f"{rep.line()}")
    return fam


def _pole_touches_projection(proj: Region, pole: complex) -> bool:
    idx = proj.cell_index(PointZ(proj.shape, (pole,)))
    if idx is None:
        return False
    window = tuple(slice(max(i - 1, 0), min(i + 2, n)) for i, n in zip(idx, proj.counts))
    return bool(proj.inside[window].any())


# -- textual coefficient tables ------------------------------------------------------

def save_family(fam: FunctionFamily, path):
    """Coefficient-table serialization (polynomial/Laurent members only)."""
    lines = ["# blockholo family v1",
             f"degree = {fam.provenance.get('degree', '?')}"]
    for idx, (m, lab) in enumerate(zip(fam.members, fam.labels)):
        lines.append(f"member {idx} | {lab}")
        for comp in m.components:
            if isinstance(comp, BlockPolynomial):
                for t in comp.terms:
                    exps = ",".join(str(e) for e in t.exps)
                    cen = ";".join(f"{c.real!r},{c.imag!r}" for c in t.center)
                    lines.append(f"  term block={comp.block} exps={exps} "
                                 f"center={cen} coeff={t.coeff.real!r},{t.coeff.imag!r}")
            elif isinstance(comp, LeafFunction):
                raise RecipeError("leaf-lift members have no coefficient-table form")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_family(region: Region, path) -> FunctionFamily:
    members, labels = [], []
    shape = region.shape
    current: list[BlockPolynomial] | None = None

    def flush(label):
        if current is None:
            return
        comps = [zero_component(i) for i in range(1, shape.n + 1)]
        for bp in current:
            comps[bp.block - 1] = BlockPolynomial(
                bp.block, comps[bp.block - 1].terms + bp.terms)
        members.append(CnFunction(shape, tuple(comps)))
        labels.append(label)

    pending_label = ""
    degree = 0
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            if line.startswith("degree = "):
                try:
                    degree = int(line.split("=", 1)[1])
                except ValueError:
                    degree = 0
                continue
            if line.startswith("member "):
                flush(pending_label)
                current = []
                pending_label = line.split("|", 1)[1].strip() if "|" in line else line
                continue
            line = line.strip()
            if line.startswith("term "):
                fields = dict(part.split("=", 1) for part in line[5:].split())
                block = int(fields["block"])
                exps = tuple(int(x) for x in fields["exps"].split(","))
                center = tuple(complex(float(a), float(b))
                               for a, b in (c.split(",") for c in fields["center"].split(";")))
                cre, cim = fields["coeff"].split(",")
                coeff = complex(float(cre), float(cim))
                current.append(BlockPolynomial(block, (PolyTerm(coeff, exps, center),)))
    flush(pending_label)
    return FunctionFamily(region=region, members=tuple(members), labels=tuple(labels),
                          provenance={"degree": degree, "loaded": True})
