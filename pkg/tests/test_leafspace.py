import cmath
import math

import numpy as np
import pytest

from blockholo import leafspace as lf
from blockholo import recipes as rc
from blockholo.errors import EmptyRegionError
from blockholo.region import PointZ


def uf_components(mask):
    """Brute-force union-find component count + partition over a boolean mask."""
    cells = [tuple(c) for c in np.argwhere(mask)]
    parent = {c: c for c in cells}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for c in cells:
        for axis in range(mask.ndim):
            nb = list(c)
            nb[axis] += 1
            nb = tuple(nb)
            if nb in parent:
                union(c, nb)
    groups = {}
    for c in cells:
        groups.setdefault(find(c), set()).add(c)
    return groups


class TestSliceComponents:
    def test_polydisk_slice_connected(self, bidisk8):
        sc = lf.slice_components(bidisk8, 1, 0j)
        assert sc.count == 1

    def test_ball_slice_connected(self, ball16):
        sc = lf.slice_components(ball16, 1, 0.5 + 0j)
        assert sc.count == 1

    def test_spiral_three_turns(self, spiral16):
        sc = lf.slice_components(spiral16, 1, 1.0 + 0j)
        assert sc.count == 3

    def test_empty_slice_raises(self, bidisk8):
        with pytest.raises(EmptyRegionError):
            lf.slice_components(bidisk8, 1, 1.05 + 0j)

    def test_labels_match_union_find_oracle(self, spiral16):
        sc = lf.slice_components(spiral16, 1, 1.0 + 0j)
        mask = sc.labels >= 0
        groups = uf_components(mask)
        assert len(groups) == sc.count
        # identical partitions: every oracle group maps to exactly one label
        for cells in groups.values():
            labels = {int(sc.labels[c]) for c in cells}
            assert len(labels) == 1

    def test_ids_by_lexicographic_first_cell(self, spiral16):
        sc = lf.slice_components(spiral16, 1, 1.0 + 0j)
        firsts = []
        for comp in range(sc.count):
            cells = np.argwhere(sc.labels == comp)
            firsts.append(tuple(cells[0]))
        assert firsts == sorted(firsts)


class TestLeafGraph:
    def test_product_graph_matches_projection_cells(self, bidisk8):
        g = lf.build_leaf_graph(bidisk8, 1)
        proj = bidisk8.project(1)
        assert len(g.nodes) == proj.inside_count
        # one node per block cell, edges exactly the face adjacency of the mask
        cells = {tuple(c) for c in np.argwhere(proj.inside)}
        n_adj = 0
        for cell in cells:
            for axis in range(2):
                nb = list(cell)
                nb[axis] += 1
                if tuple(nb) in cells:
                    n_adj += 1
        assert len(g.edges) == n_adj
        assert g.essential_cycle_rank == 0

    def test_two_boxes_two_components(self):
        reg = rc.make_region(rc.box_union(
            [((-0.6 - 0.6j, 0j), 0.25), ((0.6 + 0.6j, 0j), 0.25)]), h=1 / 8)
        g = lf.build_leaf_graph(reg, 1)
        assert g.n_components == 2

    def test_spiral_unrolls(self, spiral16):
        g = lf.build_leaf_graph(spiral16, 1)
        assert g.essential_cycle_rank == 0
        assert g.is_acyclic
        assert len(g.nodes_at(1.0 + 0j)) == 3

    def test_annulus_product_has_essential_cycle(self):
        reg = rc.make_region(
            rc.product_of([rc.annulus_factor(0.4, 1.0), rc.disk_factor(1.0)]),
            h=1 / 8)
        g = lf.build_leaf_graph(reg, 1)
        assert g.essential_cycle_rank == 1
        assert not g.is_acyclic

    def test_node_count_matches_slice_components(self, spiral16):
        g = lf.build_leaf_graph(spiral16, 1)
        proj = spiral16.project(1)
        total = 0
        for cell in map(tuple, np.argwhere(proj.inside)):
            a = proj.cell_center(cell)
            try:
                total += lf.slice_components(spiral16, 1, a.coords[0]).count
            except EmptyRegionError:
                pass
        assert total == len(g.nodes)

    def test_basepoint_lexicographic(self, bidisk8):
        g = lf.build_leaf_graph(bidisk8, 1)
        assert g.basepoint == 0
        assert g.nodes == sorted(g.nodes)

    def test_edge_list_export(self, tmp_path, bidisk8):
        g = lf.build_leaf_graph(bidisk8, 1)
        path = tmp_path / "edges.txt"
        g.export_edge_list(path)
        lines = path.read_text().splitlines()
        assert len([l for l in lines if not l.startswith(("#", "node"))]) == len(g.edges)


class TestLiftBranchLog:
    def test_cut_annulus_principal(self):
        # single-block C-shaped region avoiding the negative real cut
        reg = rc.make_region(rc.convex_polytope(
            [([-1.0, 0.0], 0.3)], box_radius=1.4, block_dims=(1,)), h=1 / 8)
        # keep only |z| > 0.5: mimics an annular sector via mask surgery
        centers = reg.coord_centers(0)
        from blockholo.region import Region
        mask = reg.inside & (np.abs(centers) > 0.5)
        reg2 = Region(reg.shape, reg.h, reg.origin, mask,
                      {"name": "cut_annulus", "flags": {"bounded": True}})
        g = lf.build_leaf_graph(reg2, 1)
        asn = lf.lift_branch_log(g)
        for i in range(0, len(g.nodes), 7):
            a = g.block_value(i)[0]
            assert asn.values[i] == pytest.approx(cmath.log(a), abs=1e-9)

    def test_full_annulus_monodromy_flagged(self, annulus8):
        g = lf.build_leaf_graph(annulus8, 1)
        asn = lf.lift_branch_log(g)
        assert asn.residual == pytest.approx(2 * math.pi, abs=0.05)

    def test_spiral_consecutive_turns_differ_by_2pi(self, spiral16):
        g = lf.build_leaf_graph(spiral16, 1)
        asn = lf.lift_branch_log(g)
        assert asn.residual < 10 * spiral16.h
        nodes = g.nodes_at(1.0 + 0j)
        vals = sorted(asn.values[i].imag for i in nodes)
        for lo, hi in zip(vals, vals[1:]):
            assert hi - lo == pytest.approx(2 * math.pi, abs=10 * spiral16.h)

    def test_gauge_offset(self, spiral16):
        g = lf.build_leaf_graph(spiral16, 1)
        a0 = lf.lift_branch_log(g)
        base = a0.values[g.basepoint]
        a1 = lf.lift_branch_log(g, base_value=base + 3 - 2j)
        assert np.allclose(a1.values, a0.values + (3 - 2j))

    def test_product_lift_descends(self, bidisk8):
        # shift the disk so 0 is outside the projection closure
        reg = rc.make_region(rc.product_of(
            [rc.disk_factor(0.4, center=1.0), rc.disk_factor(1.0)]), h=1 / 8)
        g = lf.build_leaf_graph(reg, 1)
        asn = lf.lift_branch_log(g)
        for cell in {c for c, _ in g.nodes}:
            a = g.block_value(g.node_index(cell, 0))[0]
            assert asn.per_cell_spread(a) == 0.0
