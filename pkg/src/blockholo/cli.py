"""Command-line orchestration: region generation, holomorphy checks, hulls,
witness synthesis and property suites, with line-oriented reports and CSV
tables.

Exit codes: 0 pass, 1 usage/IO error, 2 property violation, 3 inconclusive or
stalled.  Reports are deterministic for a fixed configuration; timing lines
start with '#' and are excluded from that contract.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import funcspace as fs
from . import hull as hl
from . import leafspace as lf
from . import recipes as rc
from . import witness as wt
from .errors import BlockHoloError, ExhaustionStalledError
from .region import PointZ, Region, load_region, save_region

EXIT_PASS = 0
EXIT_USAGE = 1
EXIT_FAIL = 2
EXIT_INCONCLUSIVE = 3


class Report:
    """Line-oriented key = value report with CSV side tables."""

    def __init__(self, command: str, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.lines: list[str] = [f"command = {command}"]
        self._t0 = time.perf_counter()

    def kv(self, key: str, value):
        self.lines.append(f"{key} = {value}")

    def echo_config(self, args: argparse.Namespace, keys):
        for k in keys:
            if hasattr(args, k):
                self.kv(f"config.{k}", getattr(args, k))

    def write(self, name: str = "report.txt"):
        elapsed = time.perf_counter() - self._t0
        path = self.out_dir / name
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.lines) + "\n")
            fh.write(f"# elapsed_s = {elapsed:.3f}\n")
        return path


# -- spec parsing -----------------------------------------------------------------

def _parse_number(tok: str) -> float:
    tok = tok.strip()
    if tok.endswith("pi"):
        head = tok[:-2]
        return (float(head) if head not in ("", "+", "-") else float(head + "1")) * math.pi
    if "/" in tok:
        a, b = tok.split("/", 1)
        return float(a) / float(b)
    return float(tok)


def _parse_params(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        key, _, val = pair.partition("=")
        if not _:
            raise SystemExit(f"bad --param {pair!r}, expected key=value")
        vals = [v for v in val.split(",") if v]
        try:
            nums = [_parse_number(v) for v in vals]
        except ValueError:
            out[key] = val
            continue
        out[key] = nums[0] if len(nums) == 1 else tuple(nums)
    return out


def build_recipe(name: str, params: dict) -> rc.DomainRecipe:
    if name == "polydisk":
        radii = params.get("radii", (1.0, 1.0))
        radii = (radii,) if np.isscalar(radii) else tuple(radii)
        bd = params.get("block_dims")
        bd = tuple(int(x) for x in (bd if not np.isscalar(bd) else (bd,))) if bd is not None else None
        return rc.polydisk(radii, block_dims=bd)
    if name == "euclidean_ball":
        return rc.euclidean_ball(params.get("radius", 1.0))
    if name == "hartogs_figure":
        return rc.hartogs_figure(params.get("inner", 0.5), params.get("outer", 1.0))
    if name == "spiral":
        return rc.spiral(params.get("eps", 0.1), params.get("theta_max", 6 * math.pi))
    if name == "annulus_product":
        r_in = params.get("r_in", 0.4)
        r_out = params.get("r_out", 1.0)
        disk_r = params.get("disk_radius", 1.0)
        return rc.product_of([rc.annulus_factor(r_in, r_out), rc.disk_factor(disk_r)])
    if name == "convex_polytope":
        cut = params.get("cut", 0.8)
        normal = [1.0, 0.0, 1.0, 0.0]
        return rc.convex_polytope([(normal, cut)], box_radius=params.get("box_radius", 1.0))
    raise SystemExit(f"unknown recipe {name!r}")


def region_from_args(args) -> Region:
    if getattr(args, "region", None):
        return load_region(args.region)
    recipe = build_recipe(args.recipe, _parse_params(getattr(args, "param", None)))
    return rc.make_region(recipe, h=args.h, axis_limit=args.axis_limit)


def sample_from_spec(region: Region, spec: str):
    parts = spec.split(":")
    kind = parts[0]
    if kind == "torus":
        radii = [_parse_number(v) for v in parts[1].split(",")]
        counts = [int(v) for v in parts[2].split(",")] if len(parts) > 2 else [8] * len(radii)
        return rc.torus_sample(region, radii, counts)
    if kind == "axis-circles":
        return rc.axis_circles_sample(region, _parse_number(parts[1]), int(parts[2]))
    if kind == "circle":
        return rc.circle_sample(region, int(parts[1]), _parse_number(parts[2]), int(parts[3]))
    if kind == "point":
        coords = [complex(v) for v in parts[1].split(",")]
        return rc.point_sample(region, coords)
    if kind == "sublevel":
        from .region import sublevel_compact
        return sublevel_compact(region, _parse_number(parts[1]), _parse_number(parts[2]))
    raise SystemExit(f"unknown K spec {spec!r}")


# -- named function corpus ----------------------------------------------------------

def _fn_square_cube(reg):
    return fs.CnFunction(reg.shape, (fs.monomial(1, 2, 0j), fs.monomial(2, 3, 0j)))


def _fn_coords(reg):
    return fs.CnFunction(reg.shape, (fs.monomial(1, 1, 0j), fs.monomial(2, 1, 0j)))


def _fn_cross_mix(reg):
    return fs.CnFunction(reg.shape, (
        fs.BlackBox(1, lambda p: p[:, 0] * p[:, 1], "z1*z2"),
        fs.zero_component(2)))


def _fn_conj1(reg):
    return fs.CnFunction(reg.shape, (
        fs.BlackBox(1, lambda p: np.conj(p[:, 0]), "conj(z1)"),
        fs.zero_component(2)))


def _fn_swap(reg):
    return fs.CnFunction(reg.shape, (
        fs.BlackBox(1, lambda p: p[:, 1], "z2"),
        fs.BlackBox(2, lambda p: p[:, 0], "z1")))


def _fn_abs1(reg):
    return fs.CnFunction(reg.shape, (
        fs.BlackBox(1, lambda p: np.abs(p[:, 0]).astype(complex), "|z1|"),
        fs.zero_component(2)))


def _fn_tri_shear(reg):
    return fs.CnFunction(reg.shape, (
        fs.monomial(1, 1, 0j),
        fs.BlackBox(2, lambda p: p[:, 0] + p[:, 1], "z1+z2")))


def _fn_branch_log(reg):
    graph = lf.build_leaf_graph(reg, 1)
    assignment = lf.lift_branch_log(graph)
    return fs.CnFunction(reg.shape, (
        fs.LeafFunction(block=1, graph=graph, assignment=assignment,
                        lift_coeffs=(1.0,)),
        fs.zero_component(2)))


def _fn_zero(reg):
    return fs.CnFunction(reg.shape, tuple(fs.zero_component(i + 1)
                                          for i in range(reg.shape.n)))


FUNCTION_CORPUS = {
    "square_cube": _fn_square_cube,
    "coords": _fn_coords,
    "cross_mix": _fn_cross_mix,
    "conj1": _fn_conj1,
    "swap": _fn_swap,
    "abs1": _fn_abs1,
    "tri_shear": _fn_tri_shear,
    "branch_log": _fn_branch_log,
    "zero": _fn_zero,
}


def function_from_spec(region: Region, spec: str) -> fs.CnFunction:
    if spec.startswith("name:"):
        name = spec[5:]
        if name not in FUNCTION_CORPUS:
            raise SystemExit(f"unknown function {name!r}; known: "
                             + ", ".join(sorted(FUNCTION_CORPUS)))
        return FUNCTION_CORPUS[name](region)
    fam = fs.load_family(region, spec)
    if not fam.members:
        raise SystemExit(f"no members in function file {spec!r}")
    return fam.members[0]


# -- commands ------------------------------------------------------------------------

def cmd_make_region(args) -> int:
    region = region_from_args(args)
    rep = Report("make-region", Path(args.out))
    rep.echo_config(args, ("recipe", "h", "axis_limit", "seed"))
    rep.kv("counts", "x".join(str(c) for c in region.counts))
    rep.kv("inside_cells", region.inside_count)
    save_region(region, Path(args.out) / "region.txt")
    rep.kv("region_file", "region.txt")
    rep.write()
    print(f"region written to {args.out}/region.txt "
          f"({region.inside_count} inside cells)")
    return EXIT_PASS


def cmd_check_holo(args) -> int:
    region = region_from_args(args)
    f = function_from_spec(region, args.function)
    rep = Report("check-holo", Path(args.out))
    rep.echo_config(args, ("recipe", "region", "function", "h", "samples",
                           "step", "tol", "seed"))
    cross = fs.cross_block_derivative_check(f, region, sample_count=args.samples,
                                            step=args.step, tol=args.tol)
    cr = fs.holomorphy_check(f, region, sample_count=args.samples,
                             step=args.step, tol=args.tol)
    rep.kv("cross.max", f"{cross.max_cross!r}")
    rep.kv("cross.scaled", f"{cross.scaled_max!r}")
    rep.kv("cross.pass", cross.passed)
    rep.kv("cr.max", f"{cr.max_cr!r}")
    rep.kv("cr.pass", cr.passed)
    if cross.worst_point is not None:
        rep.kv("cross.worst_point", _fmt_point(cross.worst_point))
    holo = cross.passed and cr.passed
    rep.kv("verdict", "block-holomorphic" if holo else "rejected")
    if args.triangular:
        tri = fs.triangular_check(f, region, sample_count=args.samples,
                                  step=args.step, tol=args.tol)
        rep.kv("triangular.pass", tri.passed)
    rep.write()
    print("\n".join(rep.lines[-4:]))
    return EXIT_PASS if holo else EXIT_FAIL


def cmd_hull(args) -> int:
    region = region_from_args(args)
    K = sample_from_spec(region, args.k)
    options = fs.FamilyOptions(poles=args.poles, leaf_lifts=args.leaf_lifts)
    fam = fs.generate_family(region, args.degree, options)
    H = hl.hull_approx(region, K, fam, tol=args.tol)
    verdict = hl.compactness_diagnostic(region, K, H)
    rep = Report("hull", Path(args.out))
    rep.echo_config(args, ("recipe", "region", "k", "h", "degree", "tol",
                           "poles", "leaf_lifts", "seed"))
    rep.kv("family_size", len(fam))
    rep.kv("member_cells", H.member_count)
    rep.kv("eval_failures", H.eval_failures)
    rep.kv("hull_reaches_escape_band", verdict.hull_reaches_escape_band)
    rep.kv("hull_keeps_compact_band", verdict.hull_keeps_compact_band)
    rep.kv("k_margin", f"{K.margin!r}")
    rep.kv("verdict", verdict.status)
    rep.kv("verdict_note", verdict.note)
    hl.save_hull(H, Path(args.out) / "hull.txt")
    axes = (0, 2) if region.inside.ndim >= 4 else (0, 1)
    matrix = hl.heatmap_slice(H, axes)
    hl.write_heatmap_csv(matrix, Path(args.out) / "heatmap.csv")
    rep.kv("heatmap", "heatmap.csv")
    rep.write()
    print(f"hull: {H.member_count} member cells, verdict {verdict.status}")
    return EXIT_PASS if verdict.status != "INCONCLUSIVE" else EXIT_INCONCLUSIVE


def cmd_witness(args) -> int:
    if args.terms < 1:
        print("--terms must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    region = region_from_args(args)
    fam = fs.generate_family(region, args.degree,
                             fs.FamilyOptions(poles=args.poles))
    rep = Report("witness", Path(args.out))
    rep.echo_config(args, ("recipe", "region", "h", "degree", "terms",
                           "tol", "balls", "seed"))
    try:
        plan, series = wt.build_witness(region, fam, M=args.terms)
    except ExhaustionStalledError as exc:
        rep.kv("stalled_at_stage", exc.stage)
        rep.kv("verdict", "stalled")
        rep.write()
        print(f"witness stalled at stage {exc.stage}")
        return EXIT_INCONCLUSIVE
    check = wt.verify_witness(region, fam, plan, series)
    rep.kv("terms", len(series.terms))
    rep.kv("fallback_stages", plan.fallback_stages)
    for m, v in enumerate(series.p_values, start=1):
        rep.kv(f"f_at_p{m}", f"{v!r}")
    rep.kv("certificates_ok", check["ok"])
    wt.export_witness(plan, series, Path(args.out) / "terms.csv",
                      Path(args.out) / "plan.csv")
    n_balls = min(args.balls, len(plan.a_prefix))
    for k in range(1, n_balls + 1):
        rec = wt.blowup_check(series, plan, k)
        rep.kv(f"ball{k}.max", f"{rec.running_max!r}")
        rep.kv(f"ball{k}.certified", len(rec.certified_stages))
    rep.write()
    print(f"witness with {len(series.terms)} terms; certificates ok: {check['ok']}")
    return EXIT_PASS if check["ok"] else EXIT_FAIL


def cmd_verify(args) -> int:
    rep = Report("verify", Path(args.out))
    rep.echo_config(args, ("suite", "h", "degree", "tol", "seed"))
    runner = {
        "product-law": _suite_product_law,
        "convex-decomposition": _suite_convex_decomposition,
        "n1-classical": _suite_n1_classical,
        "spiral-leaf": _suite_spiral_leaf,
    }.get(args.suite)
    if runner is None:
        print(f"unknown suite {args.suite!r}", file=sys.stderr)
        return EXIT_USAGE
    ok, lines = runner(args)
    for line in lines:
        rep.kv(*line)
    rep.kv("suite_pass", ok)
    rep.write()
    print(f"suite {args.suite}: {'pass' if ok else 'FAIL'}")
    return EXIT_PASS if ok else EXIT_FAIL


def _suite_product_law(args):
    h, d = args.h, args.degree
    cases = [
        ("disk x disk", [rc.disk_factor(1.0), rc.disk_factor(1.0)], [0.5, 0.5]),
        ("disk x annulus", [rc.disk_factor(1.0), rc.annulus_factor(0.4, 1.0)], [0.5, 0.7]),
        ("annulus x disk", [rc.annulus_factor(0.5, 1.2), rc.disk_factor(0.8)], [0.8, 0.4]),
        ("box x disk", [rc.box_factor(1.0), rc.disk_factor(1.0)], [0.5, 0.5]),
        ("annulus x annulus", [rc.annulus_factor(0.4, 1.0), rc.annulus_factor(0.5, 1.1)], [0.7, 0.8]),
    ]
    ok = True
    lines = []
    for name, factors, radii in cases:
        regions = [rc.make_region(f, h=h, axis_limit=args.axis_limit) for f in factors]
        Ks = [rc.circle_sample(reg, 0, r, 32) for reg, r in zip(regions, radii)]
        poles = any(f.name == "annulus" for f in factors)
        repc = hl.hull_product_check(regions, Ks, d=d,
                                     options=fs.FamilyOptions(poles=poles))
        lines.append((f"{name}.symmdiff", repc.symmetric_difference))
        lines.append((f"{name}.within_band", repc.within_band))
        ok &= repc.within_band
    return ok, lines


def _suite_convex_decomposition(args):
    h, d = args.h, args.degree
    lines = []
    cases = []
    ball = rc.make_region(rc.euclidean_ball(1.0), h=h, axis_limit=args.axis_limit)
    cases.append(("ball", ball, rc.axis_circles_sample(ball, 0.75, 32)))
    bidisk = rc.make_region(rc.polydisk((1.0, 1.0)), h=h, axis_limit=args.axis_limit)
    cases.append(("bidisk", bidisk, rc.torus_sample(bidisk, (0.5, 0.5), (8, 8))))
    poly = rc.make_region(build_recipe("convex_polytope", {}), h=h,
                          axis_limit=args.axis_limit)
    # axis circles: their product box reaches the cut, witnessing non-convexity
    cases.append(("polytope", poly, rc.axis_circles_sample(poly, 0.6, 32)))
    ok = True
    expectations = {"ball": ("ESCAPING", False), "bidisk": ("COMPACT-LIKE", True)}
    for name, reg, K in cases:
        fam = fs.generate_family(reg, d)
        H = hl.hull_approx(reg, K, fam, certificates=False)
        verdict = hl.compactness_diagnostic(reg, K, H)
        decomp = hl.product_decomposition_check(reg, verdict)
        lines.append((f"{name}.verdict", verdict.status))
        lines.append((f"{name}.product", decomp.equal))
        lines.append((f"{name}.contradiction", decomp.contradiction))
        ok &= not decomp.contradiction
        if name in expectations:
            status, product = expectations[name]
            ok &= verdict.status == status and decomp.equal == product
    return ok, lines


def _suite_n1_classical(args):
    h, d = args.h, args.degree
    reg2 = rc.make_region(rc.polydisk((1.0, 1.0)), h=h, axis_limit=args.axis_limit)
    reg1 = rc.make_region(rc.polydisk((1.0, 1.0), block_dims=(2,)), h=h,
                          axis_limit=args.axis_limit)
    lines = []
    ok = True
    # triangular degenerates to plain holomorphy when n = 1
    for fname in ("square_cube", "conj1"):
        f2 = FUNCTION_CORPUS[fname](reg2)
        f1 = fs.CnFunction(reg1.shape, (_merge_two_components(f2, reg1),))
        tri = fs.triangular_check(f1, reg1, tol=args.tol)
        cr = fs.holomorphy_check(f1, reg1, tol=args.tol)
        agree = tri.passed == cr.passed
        lines.append((f"{fname}.triangular_eq_holo", agree))
        ok &= agree
    K2 = rc.torus_sample(reg2, (0.5, 0.5), (8, 8))
    K1 = rc.torus_sample(reg1, (0.5, 0.5), (8, 8))
    H2 = hl.hull_approx(reg2, K2, fs.generate_family(reg2, d), certificates=False)
    H1 = hl.hull_approx(reg1, K1, fs.generate_family(reg1, d), certificates=False)
    diff = int((H1.member_mask ^ H2.member_mask).sum())
    within = hl._within_band(H1.member_mask ^ H2.member_mask, H2.member_mask, 2)
    lines.append(("hull.symmdiff", diff))
    lines.append(("hull.within_band", within))
    v1 = hl.compactness_diagnostic(reg1, K1, H1).status
    v2 = hl.compactness_diagnostic(reg2, K2, H2).status
    lines.append(("verdicts", f"{v1}/{v2}"))
    ok &= within and v1 == v2 == "COMPACT-LIKE"
    return ok, lines


def _merge_two_components(f2: fs.CnFunction, reg1: Region):
    """View an (l1=1, l2=1) tuple as a single 2-dim-block component (sum form)."""
    def fn(pts):
        vals = f2.eval_points(pts)
        return vals[:, 0] + vals[:, 1]
    return fs.BlackBox(1, fn, "merged")


def _suite_spiral_leaf(args):
    h = args.h
    reg = rc.make_region(rc.spiral(0.1, 6 * math.pi), h=h, axis_limit=2048)
    graph = lf.build_leaf_graph(reg, 1)
    assignment = lf.lift_branch_log(graph)
    nodes1 = graph.nodes_at(1.0 + 0j)
    lines = [
        ("nodes_over_a1=1", len(nodes1)),
        ("essential_cycles", graph.essential_cycle_rank),
        ("lift_residual", f"{assignment.residual!r}"),
    ]
    vals = sorted(assignment.values[i].imag for i in nodes1)
    diffs = [vals[i + 1] - vals[i] for i in range(len(vals) - 1)]
    ok = (len(nodes1) == 3 and graph.essential_cycle_rank == 0
          and all(abs(dd - 2 * math.pi) < 0.05 for dd in diffs))
    spread = assignment.per_cell_spread(1.0 + 0j)
    lines.append(("lift_spread_at_a1=1", f"{spread!r}"))
    ok &= spread > 2 * math.pi - 0.05
    lines.append(("single_valued_on_projection", spread < 1e-6))
    return ok, lines


def _fmt_point(p: PointZ) -> str:
    return ";".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in p.coords)


# -- argument parsing -----------------------------------------------------------------

def _add_common(sp, with_region=True):
    if with_region:
        sp.add_argument("--region", help="region spec file (overrides --recipe)")
        sp.add_argument("--recipe", default="polydisk",
                        help="recipe name (polydisk, euclidean_ball, hartogs_figure, "
                             "spiral, annulus_product, convex_polytope)")
        sp.add_argument("--param", action="append",
                        help="recipe parameter key=value (repeatable)")
    sp.add_argument("--h", type=_parse_number, default=1 / 16, help="grid spacing")
    sp.add_argument("--degree", type=int, default=4, help="family degree")
    sp.add_argument("--tol", type=float, default=1e-3 if with_region else 1e-3,
                    help="tolerance")
    sp.add_argument("--seed", type=int, default=0, help="random seed")
    sp.add_argument("--axis-limit", dest="axis_limit", type=int, default=2048,
                    help="max interior cells per real axis")
    sp.add_argument("--out", default="out", help="output directory")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="blockholo",
        description="Block-holomorphic function toolkit: checks, hulls, witnesses")
    sub = ap.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("make-region", help="build and save a region")
    _add_common(sp)
    sp.set_defaults(fn=cmd_make_region)

    sp = sub.add_parser("check-holo", help="verify block-holomorphy of a function")
    _add_common(sp)
    sp.add_argument("--function", required=True,
                    help="name:<corpus name> or a coefficient-table file")
    sp.add_argument("--samples", type=int, default=16)
    sp.add_argument("--step", type=float, default=None)
    sp.add_argument("--triangular", action="store_true")
    sp.set_defaults(fn=cmd_check_holo)

    sp = sub.add_parser("hull", help="approximate hull of a compact sample")
    _add_common(sp)
    sp.add_argument("--k", required=True,
                    help="K spec: torus:r1,r2:c1,c2 | axis-circles:r:n | "
                         "circle:coord:r:n | point:z1,z2 | sublevel:r:R")
    sp.add_argument("--poles", action="store_true")
    sp.add_argument("--leaf-lifts", dest="leaf_lifts", action="store_true")
    sp.set_defaults(fn=cmd_hull, tol=hl.DEFAULT_TOL)

    sp = sub.add_parser("witness", help="build the witness series")
    _add_common(sp)
    sp.add_argument("--terms", type=int, default=3)
    sp.add_argument("--poles", action="store_true")
    sp.add_argument("--balls", type=int, default=3,
                    help="how many boundary balls to blow-up check")
    sp.set_defaults(fn=cmd_witness, tol=hl.DEFAULT_TOL)

    sp = sub.add_parser("verify", help="run a property suite")
    _add_common(sp, with_region=False)
    sp.add_argument("--suite", required=True,
                    help="product-law | convex-decomposition | n1-classical | spiral-leaf")
    sp.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except BlockHoloError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        if isinstance(exc.code, int):
            return exc.code
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
