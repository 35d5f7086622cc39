"""Witness-series synthesis: the exhaustion loop, separating-function selection,
scale/power arithmetic, and blow-up checks on boundary balls.

The builder maintains shrinking interior radii r_m, growing norm bounds R_m and
nested compacts K_m = {dist >= r_m} ∩ {|z| <= R_m}; for each stage it picks a
point p_m outside the approximate hull of K_{m-1} inside the sup-norm ball of
the current dense target q_m, then a separating family member g_m with a scale
c_m and power k_m such that

    sup over K_{m-1} of |(c_m g_m)^{k_m}|  <=  2^{-(m-1)}
    |(c_m g_m(p_m))^{k_m}|  >=  1 + m + sum of prior term moduli at p_m.

The truncated series  sum_m (c_m g_m)^{k_m}  then certifies |f(p_m)| >= m for
every stage, with re-checkable per-term and tail certificates.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyRegionError,
    ExhaustionStalledError,
    NoSeparatorError,
    RecipeError,
    ResolutionTooFineError,
)
from .funcspace import CnFunction, FunctionFamily
from .hull import DEFAULT_FLOOR, DEFAULT_TOL, _member_max_over_sample, hull_approx
from .region import CompactSample, PointZ, Region, sublevel_compact

POWER_CAP = 10 ** 6
_FAR = np.int64(2 ** 62)


def interleave_targets(a_seq, count: int) -> list:
    """Triangular interleaving (a1),(a1,a2),(a1,a2,a3),... flattened to `count`.

    Every element of a_seq recurs with unboundedly large index in the
    untruncated sequence, which is what lets the blow-up argument revisit every
    dense ball infinitely often.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    prefix_len = 1
    while prefix_len * (prefix_len + 1) // 2 < count:
        prefix_len += 1
    a = []
    it = iter(a_seq)
    for _ in range(prefix_len):
        try:
            a.append(next(it))
        except StopIteration:
            break
    out = []
    block = 1
    while len(out) < count:
        for i in range(min(block, len(a))):
            out.append(a[i])
            if len(out) >= count:
                break
        block += 1
    return out


def find_separating_function(F: FunctionFamily, K: CompactSample, p: PointZ,
                             tol: float = DEFAULT_TOL):
    """Family member maximizing |g(p)| / max_K |g| (ties by family order).

    Returns (index, member, ratio, k_max).  Raises NoSeparatorError when no
    member exceeds the hull threshold at p, i.e. p is a member point.
    """
    U = F.region
    pt = p.as_array()
    best = (-1, None, -math.inf, 0.0)
    for idx, g in enumerate(F.members):
        m = _member_max_over_sample(U, g, K)
        v = float(np.abs(g.eval_points(pt)).max())
        ratio = v / max(m, DEFAULT_FLOOR)
        if ratio > best[2]:
            best = (idx, g, ratio, m)
    idx, g, ratio, m = best
    if g is None or ratio <= 1 + tol:
        raise NoSeparatorError(
            f"point {p.coords} is dominated by the family on K (best ratio {ratio:.6g})")
    return idx, g, ratio, m


def choose_scale_power(g: CnFunction, K_prev: CompactSample, p_m: PointZ,
                       prior_values, m: int, cap: int = POWER_CAP):
    """Scale c by geometric-mean normalization and the smallest admissible power k.

    c = 1/sqrt(max_K|g| * |g(p_m)|) puts the K-side product below 1 and the
    p-side above 1 with symmetric log margins; k is the smallest positive
    integer satisfying both stored certificate inequalities.
    """
    U = K_prev.region
    sup_g = _member_max_over_sample(U, g, K_prev)
    val_g = float(np.abs(g.eval_points(p_m.as_array())).max())
    if not sup_g < val_g:
        raise NoSeparatorError(
            f"not separating: sup_K |g| = {sup_g:.6g} >= |g(p)| = {val_g:.6g}")
    if val_g <= 0:
        raise NoSeparatorError("separating value is zero")
    if sup_g <= 0:
        c = 2.0 / val_g
    else:
        c = 1.0 / math.sqrt(sup_g * val_g)
    ln_sup = math.log(c * sup_g) if sup_g > 0 else -math.inf
    ln_val = math.log(c * val_g)
    need = 1.0 + m + float(sum(prior_values))
    k1 = 0 if (m == 1 or ln_sup == -math.inf) else math.ceil(
        (m - 1) * math.log(2) / (-ln_sup) - 1e-12)
    k2 = math.ceil(math.log(need) / ln_val - 1e-12)
    k = max(1, k1, k2)
    while k <= cap:
        ok_sup = k * ln_sup <= -(m - 1) * math.log(2) + 1e-12
        ok_val = k * ln_val >= math.log(need) - 1e-12
        if ok_sup and ok_val:
            break
        k += 1
    if k > cap:
        raise ResolutionTooFineError(
            f"power search exceeded cap {cap}: separation ratio too close to 1 "
            f"(increase the family degree or refine the grid)")
    return c, int(k)


@dataclass
class WitnessTerm:
    """One series term (c g)^k with its two certificate inequalities.

    The power acts componentwise on the tuple g; toolkit family members have a
    single nonzero component (``block``), so the term contributes one scalar to
    that component of the series.  Certificates are stored as log-moduli:
    log_sup_cert = k*log(c*sup_K|g|) must be <= -(m-1)*log 2, and
    log_val_cert = k*log(c*|g(p_m)|) must be >= log(1 + m + prior_sum).
    """

    m: int
    member_index: int
    label: str
    block: int
    g: CnFunction = field(repr=False)
    c: float
    k: int
    log_sup_cert: float
    log_val_cert: float
    prior_sum: float

    def eval_points(self, points: np.ndarray) -> np.ndarray:
        """Scalar value of (c g)^k on the active component; integer k keeps
        exp(k log(.)) single-valued."""
        vals = self.g.eval_points(np.asarray(points, complex))
        comp = vals[..., self.block - 1]
        base = self.c * comp
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            logb = np.log(np.abs(base))
            arg = np.angle(base)
            out = np.exp(self.k * (logb + 1j * arg))
        out = np.where(np.abs(base) == 0, 0.0, out)
        return out

    def log_modulus(self, points: np.ndarray) -> np.ndarray:
        vals = self.g.eval_points(np.asarray(points, complex))
        mods = np.abs(vals[..., self.block - 1])
        with np.errstate(divide="ignore"):
            return self.k * (math.log(self.c) + np.log(mods))


@dataclass
class WitnessPlan:
    """The exhaustion data: dense targets, chosen points, radii and compacts."""

    region: Region
    a_prefix: list[PointZ]
    q_seq: list[PointZ]
    p_seq: list[PointZ]
    r_seq: list[float]           # r_0 .. r_M
    R_seq: list[float]           # R_0 .. R_M
    K_specs: list[tuple[float, float]]   # (r_m, R_m) pairs defining K_m
    fallback_stages: list[int]   # stages where no candidate met dist <= r/2
    notes: list[str]

    def K_sample(self, m: int) -> CompactSample:
        r, R = self.K_specs[m]
        return sublevel_compact(self.region, r, R)

    def ball_radius(self, k: int) -> float:
        """Radius of the boundary ball around dense point a_k (1-based)."""
        return self.region.dist_to_complement(self.a_prefix[k - 1])


@dataclass
class WitnessSeries:
    """Truncated series as an n-tuple: component i sums the terms active on block i."""

    n_blocks: int
    terms: list[WitnessTerm]
    tail_ledger: np.ndarray      # [m-1, j-1] = sup over K_{m-1} samples of |t_j|
    p_values: list[float]        # |f_trunc(p_m)| for each stage

    def eval_points(self, points: np.ndarray) -> np.ndarray:
        """(N, n) tuple values of the truncated series."""
        points = np.asarray(points, complex)
        out = np.zeros(points.shape[:-1] + (self.n_blocks,), dtype=complex)
        for t in self.terms:
            out[..., t.block - 1] += t.eval_points(points)
        return out

    def modulus(self, points: np.ndarray) -> np.ndarray:
        """|f| = max over components of the modulus."""
        return np.abs(self.eval_points(points)).max(axis=-1)


def build_witness(U: Region, F: FunctionFamily, M: int,
                  tol: float = DEFAULT_TOL) -> tuple[WitnessPlan, WitnessSeries]:
    """Run the exhaustion loop for M stages and assemble the certified series.

    Deterministic: the dense sequence, the hull filter and the candidate scan
    are all fixed by the region and family.  Stages where the grid cannot
    offer a candidate at depth <= r_{m-1}/2 fall back to the nearest admissible
    candidate and set r_m = min(r_{m-1}/2, depth), preserving the plan
    invariants r_{m+1} <= r_m / 2 and p_m in K_m.
    """
    if M < 1:
        raise ValueError("term count M must be >= 1")
    flags = U.recipe.get("flags", {})
    if not flags.get("bounded", True):
        raise RecipeError("witness construction needs a bounded region")
    if U.is_empty:
        raise EmptyRegionError("witness construction on an empty region")

    notes = []
    h = U.h
    probe_depth = h * math.sqrt(U.deep_probe_sqdist)
    r0 = min(1.0, probe_depth)
    if r0 < 1.0:
        notes.append(f"r0 clamped to probe depth {r0!r}")
    R0 = 1.0
    while sublevel_compact(U, r0, R0).is_empty:
        R0 *= 2
        notes.append(f"R0 grown to {R0!r} to make K_0 nonempty")
        if R0 > 2 ** 20:
            raise ExhaustionStalledError("cannot make K_0 nonempty", stage=0)

    want_a = M * (M + 1) // 2 + 1
    a_prefix = []
    for p in U.dense_points():
        a_prefix.append(p)
        if len(a_prefix) >= want_a:
            break
    q_seq = interleave_targets(a_prefix, M)

    r_seq = [r0]
    R_seq = [R0]
    K_specs = [(r0, R0)]
    p_seq: list[PointZ] = []
    terms: list[WitnessTerm] = []
    fallback = []

    for m in range(1, M + 1):
        r_prev, R_prev = r_seq[-1], R_seq[-1]
        K_prev = sublevel_compact(U, r_prev, R_prev)
        if K_prev.is_empty:
            raise ExhaustionStalledError(
                f"K_{m-1} is empty at r={r_prev!r}", stage=m - 1,
                partial=(p_seq, terms))
        hull = hull_approx(U, K_prev, F, tol=tol, certificates=False)

        q = q_seq[m - 1]
        q_cell = U.cell_index(q)
        q_sq = U.int_sqdist_to_complement(np.asarray(q_cell))
        ball = U.ball_mask(q_cell, q_sq, strict=True)
        admissible = U.inside & ball & ~hull.member_mask
        if not admissible.any():
            raise ExhaustionStalledError(
                f"no point outside the hull of K_{m-1} within the ball of q_{m}",
                stage=m - 1, partial=(p_seq, terms))
        shallow_sq = U.sq_threshold_greater(r_prev / 2)
        preferred = admissible & ~U.eroded_mask(shallow_sq)
        pool = preferred if preferred.any() else admissible
        if not preferred.any():
            fallback.append(m)
        d2q_field = U.int_sqdist_field_to_cell(q_cell)
        flat_idx = int(np.argmin(np.where(pool, d2q_field, _FAR)))
        p_cell = tuple(int(i) for i in np.unravel_index(flat_idx, U.counts))
        p = U.cell_center(p_cell)
        p_sq = U.int_sqdist_to_complement(np.asarray(p_cell))
        depth = h * math.sqrt(p_sq)
        r_m = min(r_prev / 2, depth)
        R_m = max(float(np.abs(p.as_array()).max()), 2 * R_prev)

        prior_vals = [float(np.exp(t.log_modulus(p.as_array()))) for t in terms]
        idx, g, ratio, sup_g = find_separating_function(F, K_prev, p, tol=tol)
        c, k = choose_scale_power(g, K_prev, p, prior_vals, m)
        val_g = float(np.abs(g.eval_points(p.as_array())).max())
        active = _active_block(g)
        term = WitnessTerm(
            m=m, member_index=idx, label=F.labels[idx], block=active, g=g, c=c, k=k,
            log_sup_cert=(k * math.log(c * sup_g) if sup_g > 0 else -math.inf),
            log_val_cert=k * math.log(c * val_g),
            prior_sum=float(sum(prior_vals)),
        )
        terms.append(term)
        p_seq.append(p)
        r_seq.append(r_m)
        R_seq.append(R_m)
        K_specs.append((r_m, R_m))

    plan = WitnessPlan(region=U, a_prefix=a_prefix, q_seq=q_seq, p_seq=p_seq,
                       r_seq=r_seq, R_seq=R_seq, K_specs=K_specs,
                       fallback_stages=fallback, notes=notes)
    ledger = _tail_ledger(U, terms, K_specs)
    series = WitnessSeries(n_blocks=U.shape.n, terms=terms, tail_ledger=ledger,
                           p_values=[])
    series.p_values = [float(series.modulus(p.as_array())) for p in p_seq]
    return plan, series


def _active_block(g: CnFunction) -> int:
    from .funcspace import BlockPolynomial
    active = [i + 1 for i, c in enumerate(g.components)
              if not (isinstance(c, BlockPolynomial) and c.is_zero)]
    if len(active) != 1:
        raise RecipeError("witness terms need single-component family members")
    return active[0]


def _sq_supnorm_to_cell(cand: np.ndarray, cell: np.ndarray, total: int) -> np.ndarray:
    d = cand.astype(np.int64) - cell.astype(np.int64)
    out = None
    for kk in range(total):
        d2 = d[:, 2 * kk] ** 2 + d[:, 2 * kk + 1] ** 2
        out = d2 if out is None else np.maximum(out, d2)
    return out


def _tail_ledger(U: Region, terms, K_specs) -> np.ndarray:
    """ledger[m-1, j-1] = sup over K_{m-1} grid samples of |t_j|, j >= m.

    |t_j| = (c |g|)^k is monotone in |g|, so the sup over a grid-mask sample is
    exactly (c * max over mask of |g|)^k, computed through mask projections.
    """
    M = len(terms)
    ledger = np.zeros((M, M))
    for m in range(1, M + 1):
        K = sublevel_compact(U, *K_specs[m - 1])
        if K.is_empty:
            continue
        for j in range(m, M + 1):
            t = terms[j - 1]
            sup_g = _member_max_over_sample(U, t.g, K)
            ledger[m - 1, j - 1] = (math.exp(t.k * math.log(t.c * sup_g))
                                    if sup_g > 0 else 0.0)
    return ledger


def verify_witness(U: Region, F: FunctionFamily, plan: WitnessPlan,
                   series: WitnessSeries) -> dict:
    """Re-check every stored certificate from scratch.

    Recomputes K_m from (r_m, R_m), the per-term sup and growth inequalities,
    the tail bounds sum_{j>=m} sup_{K_{m-1}} |t_j| <= 2^{-(m-2)}, and the
    certified lower bounds |f(p_m)| >= m.
    """
    M = len(series.terms)
    out = {"term_certificates": [], "tail_ok": [], "p_bounds": [], "ok": True}
    for m in range(1, M + 1):
        t = series.terms[m - 1]
        K_prev = plan.K_sample(m - 1)
        sup_g = _member_max_over_sample(U, t.g, K_prev)
        p = plan.p_seq[m - 1]
        val_g = float(np.abs(t.g.eval_points(p.as_array())).max())
        log_sup = t.k * math.log(t.c * sup_g) if sup_g > 0 else -math.inf
        log_val = t.k * math.log(t.c * val_g)
        prior = sum(float(np.exp(series.terms[j].log_modulus(p.as_array())))
                    for j in range(m - 1))
        sup_ok = log_sup <= -(m - 1) * math.log(2) + 1e-9
        val_ok = log_val >= math.log(1 + m + prior) - 1e-9
        match = (abs(log_sup - t.log_sup_cert) < 1e-9 or
                 (log_sup == -math.inf and t.log_sup_cert == -math.inf))
        match &= abs(log_val - t.log_val_cert) < 1e-9
        out["term_certificates"].append((m, sup_ok, val_ok, match))
        out["ok"] &= sup_ok and val_ok and match
    for m in range(1, M + 1):
        tail = float(series.tail_ledger[m - 1, m - 1:].sum())
        ok = tail <= 2.0 ** (-(m - 2)) + 1e-9
        out["tail_ok"].append((m, tail, ok))
        out["ok"] &= ok
    for m in range(1, M + 1):
        v = series.p_values[m - 1]
        ok = v >= m - 1e-9
        out["p_bounds"].append((m, v, ok))
        out["ok"] &= ok
    return out


@dataclass
class BlowupRecord:
    ball_index: int
    center: PointZ
    radius: float
    sample_count: int
    running_max: float
    certified_stages: list[tuple[int, float]]   # (m, |f(p_m)|) for p_m in the ball


def blowup_check(series: WitnessSeries, plan: WitnessPlan, k: int,
                 sample_count: int = 4096) -> BlowupRecord:
    """Evaluate the truncated series over the boundary ball B_k around a_k.

    Samples the ball's grid cells (deterministic stride) plus every stage point
    p_m that lies inside the ball; the certified stages give re-checkable lower
    bounds for the running max.
    """
    U = plan.region
    if not 1 <= k <= len(plan.a_prefix):
        raise IndexError(f"ball index {k} out of range")
    a = plan.a_prefix[k - 1]
    a_cell = U.cell_index(a)
    a_sq = U.int_sqdist_to_complement(np.asarray(a_cell))
    ball = U.inside & U.ball_mask(a_cell, a_sq, strict=True)
    if not ball.any():
        raise EmptyRegionError(f"ball B_{k} is empty")
    cells = np.argwhere(ball)
    stride = max(1, cells.shape[0] // sample_count)
    pts = U.cell_center_array(cells[::stride])
    with np.errstate(over="ignore", invalid="ignore"):
        mods = series.modulus(pts)
    running = float(np.nanmax(mods))
    certified = []
    radius = U.h * math.sqrt(a_sq)
    a_idx = np.asarray(a_cell, dtype=np.int64)
    for m, p in enumerate(plan.p_seq, start=1):
        p_idx = np.asarray(U.cell_index(p), dtype=np.int64)
        d_sq = int(_sq_supnorm_to_cell(p_idx[None, :], a_idx, U.shape.total)[0])
        if d_sq < a_sq:
            certified.append((m, series.p_values[m - 1]))
            running = max(running, series.p_values[m - 1])
    return BlowupRecord(ball_index=k, center=a, radius=radius,
                        sample_count=int(pts.shape[0]), running_max=running,
                        certified_stages=certified)


# -- exports ------------------------------------------------------------------------

def export_witness(plan: WitnessPlan, series: WitnessSeries, term_path, plan_path):
    """Replayable term and plan tables (decimal reprs, log-modulus certificates)."""
    with open(term_path, "w", encoding="utf-8") as fh:
        fh.write("m,member_index,label,c,k,log_sup_cert,log_val_cert,prior_sum\n")
        for t in series.terms:
            fh.write(f"{t.m},{t.member_index},{t.label!r},{t.c!r},{t.k},"
                     f"{t.log_sup_cert!r},{t.log_val_cert!r},{t.prior_sum!r}\n")
    with open(plan_path, "w", encoding="utf-8") as fh:
        fh.write("stage,kind,data\n")
        for m, (r, R) in enumerate(plan.K_specs):
            fh.write(f"{m},K,r={r!r};R={R!r}\n")
        for m, q in enumerate(plan.q_seq, start=1):
            fh.write(f"{m},q,{_coords_repr(q)}\n")
        for m, p in enumerate(plan.p_seq, start=1):
            fh.write(f"{m},p,{_coords_repr(p)}\n")
        for m in plan.fallback_stages:
            fh.write(f"{m},fallback,depth preference not met at grid resolution\n")
        for note in plan.notes:
            fh.write(f"-,note,{note}\n")
        for m, v in enumerate(series.p_values, start=1):
            fh.write(f"{m},f_at_p,{v!r}\n")


def _coords_repr(p: PointZ) -> str:
    return ";".join(f"{z.real!r}+{z.imag!r}j" for z in p.coords)
