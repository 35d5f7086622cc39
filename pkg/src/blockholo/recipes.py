"""Domain corpus generators: named region recipes with truthful declared flags,
plus compact-sample (K) generators.

Every recipe builds its mask from an exact analytic membership test evaluated
at 4-D (or 2-D/6-D) cell centers, and declares flags (bounded, convex,
connected, product) that are true by construction of the generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RecipeError
from .region import (
    AXIS_CELL_LIMIT_DEFAULT,
    BlockShape,
    CompactSample,
    PointZ,
    Region,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DomainRecipe:
    """A named region generator with parameters and truthful declared flags."""

    name: str
    params: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    poles: dict = field(default_factory=dict)   # block index (str) -> [complex...]
    factors: tuple = ()

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "params": _jsonable(self.params),
            "flags": dict(self.flags),
            "poles": {k: [[z.real, z.imag] for z in v] for k, v in self.poles.items()},
            "factors": [f.as_dict() for f in self.factors],
        }


def _jsonable(params: dict) -> dict:
    out = {}
    for k, v in params.items():
        if isinstance(v, complex):
            out[k] = [v.real, v.imag]
        elif isinstance(v, (tuple, list)):
            out[k] = list(v)
        else:
            out[k] = v
    return out


# -- recipe constructors -------------------------------------------------------

def polydisk(radii, block_dims=None) -> DomainRecipe:
    radii = tuple(float(r) for r in radii)
    if any(r <= 0 for r in radii):
        raise RecipeError("polydisk radii must be positive")
    dims = tuple(block_dims) if block_dims is not None else (1,) * len(radii)
    if sum(dims) != len(radii):
        raise RecipeError("block_dims must sum to the number of radii")
    return DomainRecipe(
        "polydisk",
        {"radii": radii, "block_dims": dims},
        {"bounded": True, "convex": True, "connected": True, "product": True},
    )


def disk_factor(radius: float, center: complex = 0j) -> DomainRecipe:
    if radius <= 0:
        raise RecipeError("disk radius must be positive")
    return DomainRecipe(
        "disk",
        {"radius": float(radius), "center": complex(center)},
        {"bounded": True, "convex": True, "connected": True, "product": True},
    )


def annulus_factor(r_in: float, r_out: float, center: complex = 0j) -> DomainRecipe:
    if not 0 < r_in < r_out:
        raise RecipeError("annulus needs 0 < r_in < r_out")
    return DomainRecipe(
        "annulus",
        {"r_in": float(r_in), "r_out": float(r_out), "center": complex(center)},
        {"bounded": True, "convex": False, "connected": True, "product": True},
        poles={"1": [complex(center)]},
    )


def box_factor(half_width: float, center: complex = 0j) -> DomainRecipe:
    if half_width <= 0:
        raise RecipeError("box half width must be positive")
    return DomainRecipe(
        "box",
        {"half_width": float(half_width), "center": complex(center)},
        {"bounded": True, "convex": True, "connected": True, "product": True},
    )


def product_of(factors) -> DomainRecipe:
    """Product of single-block factor recipes, one block per factor."""
    factors = tuple(factors)
    if not factors:
        raise RecipeError("product needs at least one factor")
    for f in factors:
        if f.name not in {"disk", "annulus", "box"}:
            raise RecipeError(f"unsupported product factor {f.name!r}")
    poles = {}
    for j, f in enumerate(factors, start=1):
        ps = f.poles.get("1", [])
        if ps:
            poles[str(j)] = list(ps)
    return DomainRecipe(
        "product_of",
        {},
        {
            "bounded": True,
            "convex": all(f.flags["convex"] for f in factors),
            "connected": all(f.flags["connected"] for f in factors),
            "product": True,
        },
        poles=poles,
        factors=factors,
    )


def euclidean_ball(radius: float = 1.0, block_dims=(1, 1)) -> DomainRecipe:
    if radius <= 0:
        raise RecipeError("ball radius must be positive")
    return DomainRecipe(
        "euclidean_ball",
        {"radius": float(radius), "block_dims": tuple(block_dims)},
        {"bounded": True, "convex": True, "connected": True, "product": False},
    )


def hartogs_figure(inner: float = 0.5, outer: float = 1.0) -> DomainRecipe:
    """Bidisk of radius ``outer`` minus the slab {|z1| >= inner, |z2| <= inner}."""
    if not 0 < inner < outer:
        raise RecipeError("hartogs figure needs 0 < inner < outer")
    return DomainRecipe(
        "hartogs_figure",
        {"inner": float(inner), "outer": float(outer)},
        {"bounded": True, "convex": False, "connected": True, "product": False},
    )


def spiral(eps: float = 0.1, theta_max: float = 6 * math.pi) -> DomainRecipe:
    """Truncated spiral tube: union over theta of disk(e^{i theta}, eps) x disk(theta, eps).

    theta runs over the symmetric window [-theta_max/2, theta_max/2] so that the
    truncation seam sits at angle pi and the block value a1 = 1 sees exactly one
    slice component per full turn.
    """
    if not 0 < eps < 0.5:
        raise RecipeError("spiral needs 0 < eps < 0.5")
    turns = theta_max / TWO_PI
    if abs(turns - round(turns)) > 1e-9 or round(turns) < 1:
        raise RecipeError("theta_max must be a positive multiple of 2*pi")
    return DomainRecipe(
        "spiral",
        {"eps": float(eps), "theta_max": float(theta_max)},
        {"bounded": True, "convex": False, "connected": True, "product": False},
    )


def convex_polytope(halfspaces, box_radius: float = 1.0, block_dims=(1, 1)) -> DomainRecipe:
    """Intersection of the polydisk of radius ``box_radius`` with real half-spaces.

    Each half-space is (normal, offset) with normal over the 2*total real axes;
    membership requires  normal . x < offset.
    """
    hs = [( [float(a) for a in n], float(b)) for n, b in halfspaces]
    return DomainRecipe(
        "convex_polytope",
        {"halfspaces": hs, "box_radius": float(box_radius),
         "block_dims": tuple(block_dims)},
        {"bounded": True, "convex": True, "connected": True, "product": False},
    )


def random_convex_polytope(seed: int, n_cuts: int = 3, box_radius: float = 1.0,
                           block_dims=(1, 1)) -> DomainRecipe:
    """Seeded random convex polytope: random cuts that keep the origin interior."""
    rng = np.random.default_rng(seed)
    d = 2 * sum(block_dims)
    halfspaces = []
    for _ in range(n_cuts):
        normal = rng.normal(size=d)
        normal /= np.linalg.norm(normal)
        offset = float(rng.uniform(0.3, 0.9) * box_radius)
        halfspaces.append((normal.tolist(), offset))
    return convex_polytope(halfspaces, box_radius=box_radius, block_dims=block_dims)


def box_union(boxes, block_dims=(1, 1)) -> DomainRecipe:
    """Union of axis-aligned product boxes, each (center tuple, half_width)."""
    norm = []
    for centers, hw in boxes:
        norm.append(([complex(c) for c in centers], float(hw)))
    return DomainRecipe(
        "box_union",
        {"boxes": [[[ [c.real, c.imag] for c in cs], hw] for cs, hw in norm]},
        {"bounded": True, "convex": False, "connected": len(norm) == 1,
         "product": len(norm) == 1},
    )


RECIPE_CONSTRUCTORS = {
    "polydisk": polydisk,
    "euclidean_ball": euclidean_ball,
    "hartogs_figure": hartogs_figure,
    "spiral": spiral,
    "convex_polytope": convex_polytope,
}


# -- grid construction ----------------------------------------------------------

def _axis_grid(lo: float, hi: float, h: float):
    """Snap [lo, hi] to cell edges at integer multiples of h, plus 1-cell margin."""
    i_lo = math.floor(lo / h + 1e-9) - 1
    i_hi = math.ceil(hi / h - 1e-9) + 1
    return i_lo * h, i_hi - i_lo


def _coord_extents(recipe: DomainRecipe) -> list[tuple[float, float]]:
    """Natural [lo, hi] per real axis, before margin snapping."""
    p = recipe.params
    if recipe.name == "polydisk":
        out = []
        for r in p["radii"]:
            out += [(-r, r), (-r, r)]
        return out
    if recipe.name == "disk":
        c, r = complex(p["center"]), p["radius"]
        return [(c.real - r, c.real + r), (c.imag - r, c.imag + r)]
    if recipe.name == "annulus":
        c, r = complex(p["center"]), p["r_out"]
        return [(c.real - r, c.real + r), (c.imag - r, c.imag + r)]
    if recipe.name == "box":
        c, w = complex(p["center"]), p["half_width"]
        return [(c.real - w, c.real + w), (c.imag - w, c.imag + w)]
    if recipe.name == "product_of":
        out = []
        for f in recipe.factors:
            out += _coord_extents(f)
        return out
    if recipe.name == "euclidean_ball":
        r = p["radius"]
        return [(-r, r)] * (2 * sum(p["block_dims"]))
    if recipe.name == "hartogs_figure":
        r = p["outer"]
        return [(-r, r)] * 4
    if recipe.name == "spiral":
        eps, th = p["eps"], p["theta_max"]
        return [(-1 - eps, 1 + eps), (-1 - eps, 1 + eps),
                (-th / 2 - eps, th / 2 + eps), (-eps, eps)]
    if recipe.name == "convex_polytope":
        r = p["box_radius"]
        return [(-r, r)] * (2 * sum(p["block_dims"]))
    if recipe.name == "box_union":
        boxes = p["boxes"]
        ncoord = len(boxes[0][0])
        out = []
        for k in range(ncoord):
            los, his = [], []
            for centers, hw in boxes:
                c = complex(centers[k][0], centers[k][1])
                los += [c.real - hw, c.imag - hw]
                his += [c.real + hw, c.imag + hw]
            out += [(min(los[0::2]), max(his[0::2])), (min(los[1::2]), max(his[1::2]))]
        return out
    raise RecipeError(f"unknown recipe {recipe.name!r}")


def _block_dims(recipe: DomainRecipe) -> tuple[int, ...]:
    p = recipe.params
    if recipe.name in {"polydisk", "euclidean_ball", "convex_polytope"}:
        return tuple(p["block_dims"])
    if recipe.name in {"disk", "annulus", "box"}:
        return (1,)
    if recipe.name == "product_of":
        return tuple(sum(_block_dims(f)) for f in recipe.factors)
    if recipe.name == "hartogs_figure":
        return (1, 1)
    if recipe.name == "spiral":
        return (1, 1)
    if recipe.name == "box_union":
        return (1,) * len(recipe.params["boxes"][0][0])
    raise RecipeError(f"unknown recipe {recipe.name!r}")


def make_region(recipe: DomainRecipe, h: float, axis_limit: int | None = None,
                dim_limit: int = 3) -> Region:
    """Build the grid region for a recipe at spacing h.

    Membership is tested analytically at every cell center.  The bounding box
    snaps the recipe's natural extent to cell edges and adds one margin cell
    per side.
    """
    dims = _block_dims(recipe)
    shape = BlockShape(dims, dim_limit=dim_limit)
    extents = _coord_extents(recipe)
    if len(extents) != 2 * shape.total:
        raise RecipeError("recipe extent does not match its block dims")
    origin, counts = [], []
    for lo, hi in extents:
        o, n = _axis_grid(lo, hi, h)
        origin.append(o)
        counts.append(n)
    origin = np.asarray(origin)
    centers = [origin[a] + (np.arange(counts[a]) + 0.5) * h for a in range(len(counts))]
    coord_grids = []
    for k in range(shape.total):
        ax, ay = 2 * k, 2 * k + 1
        coord_grids.append(centers[ax][:, None] + 1j * centers[ay][None, :])
    mask = _membership(recipe, shape, coord_grids)
    return Region(shape, h, origin, mask, recipe.as_dict(), axis_limit=axis_limit)


def _bc(arr2d: np.ndarray, k: int, total: int):
    """Reshape a per-coordinate 2-D field for broadcasting over the full grid."""
    shape = [1] * (2 * total)
    shape[2 * k] = arr2d.shape[0]
    shape[2 * k + 1] = arr2d.shape[1]
    return arr2d.reshape(shape)


def _membership(recipe: DomainRecipe, shape: BlockShape, grids) -> np.ndarray:
    p = recipe.params
    total = shape.total
    if recipe.name == "polydisk":
        out = None
        for k, r in enumerate(p["radii"]):
            ok = _bc(np.abs(grids[k]) < r, k, total)
            out = ok if out is None else (out & ok)
        return _full(out, grids)
    if recipe.name == "disk":
        c, r = complex(p["center"]), p["radius"]
        return np.abs(grids[0] - c) < r
    if recipe.name == "annulus":
        c = complex(p["center"])
        m = np.abs(grids[0] - c)
        return (p["r_in"] < m) & (m < p["r_out"])
    if recipe.name == "box":
        c, w = complex(p["center"]), p["half_width"]
        return (np.abs(grids[0].real - c.real) < w) & (np.abs(grids[0].imag - c.imag) < w)
    if recipe.name == "product_of":
        out = None
        k = 0
        for f in recipe.factors:
            nd = sum(_block_dims(f))
            sub_shape = BlockShape(tuple(_block_dims(f)), dim_limit=shape.dim_limit)
            sub = _membership(f, sub_shape, grids[k:k + nd])
            reshaped = sub.reshape(_prod_shape_dims(sub, k, nd, total))
            out = reshaped if out is None else (out & reshaped)
            k += nd
        return _full(out, grids)
    if recipe.name == "euclidean_ball":
        r2 = p["radius"] ** 2
        out = None
        for k in range(total):
            part = _bc(np.abs(grids[k]) ** 2, k, total)
            out = part if out is None else (out + part)
        return _full(out < r2, grids)
    if recipe.name == "hartogs_figure":
        a, r = p["inner"], p["outer"]
        m1 = np.abs(grids[0])
        m2 = np.abs(grids[1])
        keep = (_bc(m1 < r, 0, total) & _bc(m2 < r, 1, total)
                & (_bc(m1 < a, 0, total) | _bc(m2 > a, 1, total)))
        return _full(keep, grids)
    if recipe.name == "spiral":
        return _spiral_membership(p["eps"], p["theta_max"], grids)
    if recipe.name == "convex_polytope":
        out = None
        for k in range(total):
            r = p["box_radius"]
            ok = _bc(np.abs(grids[k]) < r, k, total)
            out = ok if out is None else (out & ok)
        out = _full(out, grids)
        for normal, offset in p["halfspaces"]:
            acc = None
            for k in range(total):
                part = _bc(normal[2 * k] * grids[k].real
                           + normal[2 * k + 1] * grids[k].imag, k, total)
                acc = part if acc is None else (acc + part)
            out = out & (_full(acc, grids) < offset)
        return out
    if recipe.name == "box_union":
        out = None
        for centers, hw in p["boxes"]:
            box = None
            for k in range(total):
                c = complex(centers[k][0], centers[k][1])
                ok = _bc((np.abs(grids[k].real - c.real) < hw)
                         & (np.abs(grids[k].imag - c.imag) < hw), k, total)
                box = ok if box is None else (box & ok)
            box = _full(box, grids)
            out = box if out is None else (out | box)
        return out
    raise RecipeError(f"unknown recipe {recipe.name!r}")


def _full(bc_arr: np.ndarray, grids) -> np.ndarray:
    """Broadcast a partial mask to the full grid shape."""
    full_shape = tuple(s for g in grids for s in g.shape)
    return np.ascontiguousarray(np.broadcast_to(bc_arr, full_shape))


def _prod_shape_dims(sub: np.ndarray, k: int, nd: int, total: int):
    shape = [1] * (2 * total)
    shape[2 * k:2 * (k + nd)] = sub.shape
    return tuple(shape)


def _spiral_membership(eps: float, theta_max: float, grids) -> np.ndarray:
    """Exact membership for the truncated spiral tube.

    A point (z1, z2) belongs iff some theta in the window satisfies both
    |z1 - e^{i theta}| < eps and |z2 - theta| < eps.  For fixed z1 the first
    condition confines theta to arcs of half-width delta around arg(z1) mod 2pi;
    for fixed z2 the second confines theta to an interval around Re(z2).
    """
    th_lo, th_hi = -theta_max / 2, theta_max / 2
    z1 = grids[0]
    z2 = grids[1]
    r = np.abs(z1)
    phi = np.angle(z1)
    cos_delta = (r ** 2 + 1 - eps ** 2) / np.where(r > 0, 2 * r, np.inf)
    on_annulus = np.abs(cos_delta) < 1
    delta = np.where(on_annulus, np.arccos(np.clip(cos_delta, -1, 1)), 0.0)

    im_ok = np.abs(z2.imag) < eps
    w = np.sqrt(np.maximum(eps ** 2 - z2.imag ** 2, 0.0))
    t_lo = np.where(im_ok, z2.real - w, np.inf)
    t_hi = np.where(im_ok, z2.real + w, -np.inf)

    z1_flat_ok = on_annulus.ravel()
    phi_f = phi.ravel()[z1_flat_ok]
    delta_f = delta.ravel()[z1_flat_ok]
    t_lo_f = t_lo.ravel()
    t_hi_f = t_hi.ravel()

    k_min = math.floor((th_lo - math.pi) / TWO_PI) - 1
    k_max = math.ceil((th_hi + math.pi) / TWO_PI) + 1
    hit = np.zeros((phi_f.size, t_lo_f.size), dtype=bool)
    for kk in range(k_min, k_max + 1):
        arc_lo = phi_f + TWO_PI * kk - delta_f
        arc_hi = phi_f + TWO_PI * kk + delta_f
        lo = np.maximum(np.maximum(arc_lo[:, None], t_lo_f[None, :]), th_lo)
        hi = np.minimum(np.minimum(arc_hi[:, None], t_hi_f[None, :]), th_hi)
        hit |= lo < hi
    out = np.zeros((z1.size, t_lo_f.size), dtype=bool)
    out[z1_flat_ok] = hit
    return out.reshape(z1.shape + z2.shape)


# -- compact sample (K) generators ----------------------------------------------

def _margin_of(region: Region, pts: np.ndarray) -> float:
    vals = [region.dist_to_complement(PointZ(region.shape, tuple(p))) for p in pts]
    return float(min(vals)) if vals else 0.0


def torus_sample(region: Region, radii, counts, centers=None) -> CompactSample:
    """Product of circles, one per scalar coordinate: radii r_k, counts[k] samples."""
    total = region.shape.total
    radii = tuple(float(r) for r in radii)
    counts = tuple(int(c) for c in counts)
    if len(radii) != total or len(counts) != total:
        raise RecipeError("torus_sample needs one radius and count per coordinate")
    centers = tuple(complex(c) for c in (centers or (0j,) * total))
    axes = [centers[k] + radii[k] * np.exp(2j * math.pi * np.arange(counts[k]) / counts[k])
            for k in range(total)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    sample = CompactSample(region, pts, margin=0.0,
                           source=f"torus radii={radii} counts={counts}")
    sample.margin = _margin_of(region, sample.points_array())
    sample.validate()
    return sample


def circle_sample(region: Region, coord: int, radius: float, count: int,
                  center: complex = 0j, others=None) -> CompactSample:
    """A circle in scalar coordinate ``coord``; other coordinates fixed."""
    total = region.shape.total
    others = list(others) if others is not None else [0j] * total
    pts = np.tile(np.asarray(others, dtype=complex), (count, 1))
    pts[:, coord] = center + radius * np.exp(2j * math.pi * np.arange(count) / count)
    sample = CompactSample(region, pts, margin=0.0,
                           source=f"circle coord={coord} r={radius} n={count}")
    sample.margin = _margin_of(region, sample.points_array())
    sample.validate()
    return sample


def axis_circles_sample(region: Region, radius: float, count: int) -> CompactSample:
    """Union of one circle per scalar coordinate, the others held at 0."""
    total = region.shape.total
    parts = []
    for k in range(total):
        pts = np.zeros((count, total), dtype=complex)
        pts[:, k] = radius * np.exp(2j * math.pi * np.arange(count) / count)
        parts.append(pts)
    pts = np.concatenate(parts, axis=0)
    sample = CompactSample(region, pts, margin=0.0,
                           source=f"axis_circles r={radius} n={count}")
    sample.margin = _margin_of(region, sample.points_array())
    sample.validate()
    return sample


def point_sample(region: Region, coords) -> CompactSample:
    pts = np.asarray([complex(c) for c in coords], dtype=complex).reshape(1, -1)
    sample = CompactSample(region, pts, margin=0.0, source="point")
    sample.margin = _margin_of(region, sample.points_array())
    sample.validate()
    return sample
