import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockholo import recipes as rc
from blockholo.errors import (
    DimensionLimitError,
    EmptyRegionError,
    PointNotInRegionError,
    RecipeError,
    ShapeMismatchError,
)
from blockholo.region import (
    BlockShape,
    PointZ,
    dense_sequence,
    load_region,
    save_region,
    slice_region,
    sublevel_compact,
    sup_norm,
)


def P(shape, *coords):
    return PointZ(shape, tuple(coords))


SH2 = BlockShape((1, 1))


class TestSupNorm:
    def test_single_nonzero_coordinate(self):
        assert sup_norm(P(SH2, 1, 0), P(SH2, 0, 0)) == 1.0

    def test_three_four_five(self):
        assert sup_norm(P(SH2, 3 + 4j, 1), P(SH2, 0, 1)) == pytest.approx(5.0)

    def test_identity(self):
        p = P(SH2, 0.3 + 0.1j, -2j)
        assert sup_norm(p, p) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            sup_norm(P(SH2, 1, 0), P(BlockShape((2,)), 1, 0))

    @given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False,
                                       allow_infinity=False),
                    min_size=2, max_size=2),
           st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False,
                                       allow_infinity=False),
                    min_size=2, max_size=2),
           st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False,
                                       allow_infinity=False),
                    min_size=2, max_size=2))
    @settings(max_examples=50, deadline=None)
    def test_metric_properties(self, a, b, c):
        pa, pb, pc = P(SH2, *a), P(SH2, *b), P(SH2, *c)
        assert sup_norm(pa, pb) >= 0
        assert sup_norm(pa, pb) == sup_norm(pb, pa)
        assert sup_norm(pa, pc) <= sup_norm(pa, pb) + sup_norm(pb, pc) + 1e-12


class TestBlockShape:
    def test_limit_enforced(self):
        with pytest.raises(DimensionLimitError):
            BlockShape((2, 2))

    def test_limit_override(self):
        assert BlockShape((2, 2), dim_limit=4).total == 4

    def test_axes_mapping(self):
        sh = BlockShape((1, 2))
        assert sh.block_axes(1) == (0, 1)
        assert sh.block_axes(2) == (2, 3, 4, 5)
        assert sh.block_of_coord(0) == 1
        assert sh.block_of_coord(2) == 2


class TestContains:
    def test_center_inside(self, bidisk8):
        assert bidisk8.contains(P(SH2, 0, 0))

    def test_outside(self, bidisk8):
        assert not bidisk8.contains(P(SH2, 2, 0))

    def test_outside_bbox(self, bidisk8):
        assert not bidisk8.contains(P(SH2, 50, 0))

    def test_cell_boundary_lower_inclusive(self, bidisk8):
        # a point exactly on a cell edge belongs to the upper cell
        h = bidisk8.h
        edge_x = bidisk8.origin[0] + 5 * h
        idx = bidisk8.cell_index(np.array([edge_x, 0.01, 0.01, 0.01]))
        assert idx[0] == 5


class TestDistToComplement:
    def test_polydisk_center(self, bidisk8):
        d = bidisk8.dist_to_complement(P(SH2, 0, 0))
        assert abs(d - 1.0) <= bidisk8.h

    def test_polydisk_halfway(self, bidisk8):
        d = bidisk8.dist_to_complement(P(SH2, 0.5, 0))
        assert abs(d - 0.5) <= bidisk8.h

    def test_outside_raises(self, bidisk8):
        with pytest.raises(PointNotInRegionError):
            bidisk8.dist_to_complement(P(SH2, 2, 0))

    def test_matches_brute_force_scan(self):
        # oracle: min over every in-grid complement cell, no interface shortcut
        reg = rc.make_region(rc.hartogs_figure(0.5), h=1 / 6)
        comp_cells = np.argwhere(~reg.inside).astype(np.int64)
        for cell in [(4, 4, 4, 4), (7, 7, 9, 7), (3, 8, 8, 8)]:
            if not reg.inside[cell]:
                continue
            deltas = comp_cells - np.asarray(cell)
            per_coord = np.maximum(deltas[:, 0] ** 2 + deltas[:, 1] ** 2,
                                   deltas[:, 2] ** 2 + deltas[:, 3] ** 2)
            oracle = reg.h * math.sqrt(per_coord.min())
            got = reg.dist_to_complement(reg.cell_center(cell))
            assert got == pytest.approx(oracle, abs=1e-12)

    def test_eroded_mask_matches_per_point(self):
        reg = rc.make_region(rc.hartogs_figure(0.5), h=1 / 6)
        for S in (1, 2, 4, 5, 9):
            eroded = reg.eroded_mask(S)
            for cell in map(tuple, np.argwhere(reg.inside)[::29]):
                per_point = reg.int_sqdist_to_complement(np.asarray(cell))
                assert eroded[cell] == (per_point >= S)


class TestProject:
    def test_product_projection_equals_factor(self, bidisk8, disk8):
        proj = bidisk8.project(1)
        assert proj.counts == disk8.counts
        assert (proj.inside == disk8.inside).all()

    def test_spiral_projection_is_annulus(self, spiral16):
        proj = spiral16.project(1)
        centers = proj.coord_centers(0)
        mods = np.abs(centers[proj.inside])
        assert mods.min() > 0.9 - 2 * proj.h
        assert mods.max() < 1.1 + 2 * proj.h

    def test_empty_projection(self):
        reg = rc.make_region(rc.polydisk((1.0, 1.0)), h=1 / 4)
        empty = reg.inside & False
        from blockholo.region import Region
        empty_reg = Region(reg.shape, reg.h, reg.origin, empty,
                           {"name": "empty", "flags": {"bounded": True}})
        assert empty_reg.project(1).is_empty

    def test_index_out_of_range(self, bidisk8):
        with pytest.raises(IndexError):
            bidisk8.project(3)


class TestSlice:
    def test_product_slice_is_factor(self, bidisk8, disk8):
        sl = slice_region(bidisk8, 1, 0j)
        assert (sl.inside == disk8.inside).all()

    def test_off_projection_is_empty(self, bidisk8):
        sl = slice_region(bidisk8, 1, 1.05 + 0j)
        assert sl.is_empty

    def test_off_grid_raises(self, bidisk8):
        from blockholo.errors import OffGridError
        with pytest.raises(OffGridError):
            slice_region(bidisk8, 1, 9 + 0j)


class TestSublevelCompact:
    def test_polydisk_sublevel(self, bidisk8):
        K = sublevel_compact(bidisk8, 0.5, 1.0)
        assert not K.is_empty
        pts = K.points_array()
        assert np.abs(pts).max() <= 1.0 + 1e-9
        # every output point satisfies both inequalities as computed
        for p in pts[::97]:
            pz = PointZ(bidisk8.shape, tuple(p))
            assert bidisk8.dist_to_complement(pz) >= 0.5 - 1e-12
            assert max(abs(z) for z in p) <= 1.0 + 1e-12

    def test_unreachable_radius_flagged_empty(self, bidisk8):
        K = sublevel_compact(bidisk8, 1.5, 1.0)
        assert K.is_empty
        assert not K.robust

    def test_nested_monotone(self, bidisk8):
        big = sublevel_compact(bidisk8, 0.25, 1.0)
        small = sublevel_compact(bidisk8, 0.5, 0.75)
        assert (small.mask <= big.mask).all()

    def test_margin(self, bidisk8):
        K = sublevel_compact(bidisk8, 0.5, 1.0)
        assert K.margin == pytest.approx(0.5 - bidisk8.h)


class TestDenseSequence:
    def test_each_cell_exactly_once(self):
        reg = rc.make_region(rc.disk_factor(1.0), h=1 / 8)
        cells = list(reg.dense_cells())
        assert len(cells) == reg.inside_count
        assert len(set(cells)) == len(cells)

    def test_deterministic(self):
        r1 = rc.make_region(rc.disk_factor(1.0), h=1 / 8)
        r2 = rc.make_region(rc.disk_factor(1.0), h=1 / 8)
        assert list(r1.dense_cells()) == list(r2.dense_cells())

    def test_density_against_full_scan(self):
        reg = rc.make_region(rc.disk_factor(1.0), h=1 / 8)
        target = np.array([0.3, -0.4])
        best = math.inf
        mins = []
        for p in dense_sequence(reg):
            arr = p.as_real()
            best = min(best, math.hypot(arr[0] - target[0], arr[1] - target[1]))
            mins.append(best)
        assert mins == sorted(mins, reverse=True)
        assert mins[-1] <= reg.h

    def test_empty_region_raises(self):
        from blockholo.region import Region
        reg = rc.make_region(rc.disk_factor(1.0), h=1 / 4)
        empty = Region(reg.shape, reg.h, reg.origin, reg.inside & False,
                       {"name": "empty", "flags": {"bounded": True}})
        with pytest.raises(EmptyRegionError):
            next(dense_sequence(empty))


class TestRegionIO:
    def test_round_trip_bit_exact(self, tmp_path, hartogs16):
        path = tmp_path / "region.txt"
        save_region(hartogs16, path)
        back = load_region(path)
        assert back.shape == hartogs16.shape
        assert back.h == hartogs16.h
        assert (back.origin == hartogs16.origin).all()
        assert (back.inside == hartogs16.inside).all()
        assert back.recipe == hartogs16.recipe
        # saving again is byte-identical
        path2 = tmp_path / "region2.txt"
        save_region(back, path2)
        assert path.read_bytes() == path2.read_bytes()


class TestLimits:
    def test_axis_limit(self):
        with pytest.raises(DimensionLimitError):
            rc.make_region(rc.polydisk((1.0, 1.0)), h=1 / 64, axis_limit=64)

    def test_dim_limit(self):
        with pytest.raises(DimensionLimitError):
            rc.make_region(rc.polydisk((1.0, 1.0, 1.0, 1.0)), h=1 / 4)

    def test_margin_ring_enforced(self):
        from blockholo.region import Region
        sh = BlockShape((1,))
        bad = np.ones((4, 4), dtype=bool)
        with pytest.raises(RecipeError):
            Region(sh, 0.5, np.array([-1.0, -1.0]), bad,
                   {"name": "x", "flags": {"bounded": True}})

    def test_unbounded_rejected(self):
        from blockholo.region import Region
        sh = BlockShape((1,))
        mask = np.zeros((6, 6), dtype=bool)
        mask[2:4, 2:4] = True
        with pytest.raises(RecipeError):
            Region(sh, 0.5, np.array([-1.5, -1.5]), mask,
                   {"name": "x", "flags": {"bounded": False}})
