"""Leaf-space machinery: connected components of slices, the leaf graph gluing
them across the block-j grid, and branch-tracked lifts (single-valued log on
regions whose leaf space unrolls).

The leaf graph is the discrete stand-in for the space a block component
actually lives on: nodes are (block-j cell, slice-component) pairs, edges join
overlapping components over face-adjacent block cells.  Cell-level graphs of
2-D projections always contain 4-cycles around grid squares (plaquettes), so
"has essential cycles" is measured homotopically: plaquettes count as filled
faces and the essential cycle rank is  components - (V - E + F).  A product
region with disk factors gives rank 0, an annulus factor gives rank 1, and the
unrolled spiral gives rank 0.
"""

from __future__ import annotations

import cmath
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    EmptyRegionError,
    OffGridError,
    ShapeMismatchError,
    ZeroModulusError,
)
from .region import PointZ, Region


@dataclass
class SliceComponents:
    """Component labeling of one slice U over a fixed block-j cell.

    ``labels`` has the complementary-region grid shape; -1 marks cells outside
    the slice and ids 0..count-1 are assigned by lexicographically smallest
    member cell.
    """

    j: int
    block_cell: tuple[int, ...]
    labels: np.ndarray
    count: int


def _label_mask(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """Face-adjacency component labels, ids ordered by lexicographic first cell."""
    if mask.ndim == 0:
        lab = np.full((), -1, dtype=np.int32)
        if mask:
            lab = np.zeros((), dtype=np.int32)
        return lab, int(bool(mask))
    structure = ndimage.generate_binary_structure(mask.ndim, 1)
    raw, n = ndimage.label(mask, structure=structure)
    labels = np.full(mask.shape, -1, dtype=np.int32)
    if n == 0:
        return labels, 0
    order = {}
    for idx in np.argwhere(mask):
        rid = raw[tuple(idx)]
        if rid not in order:
            order[rid] = len(order)
    remap = np.full(n + 1, -1, dtype=np.int32)
    for rid, new in order.items():
        remap[rid] = new
    labels[mask] = remap[raw[mask]]
    return labels, n


def slice_components(U: Region, j: int, a_j) -> SliceComponents:
    """Exact face-adjacency component labeling of the slice over a_j."""
    if U.shape.n < 2:
        raise ShapeMismatchError("slice_components needs at least two blocks")
    cell = U.block_cell_of(j, a_j)
    sl = U.slice_block(j, a_j)
    if sl.is_empty:
        raise EmptyRegionError(f"slice over {a_j} is empty")
    labels, count = _label_mask(sl.inside)
    return SliceComponents(j=j, block_cell=cell, labels=labels, count=count)


@dataclass
class LeafGraph:
    """Slice components glued over the block-j grid."""

    j: int
    region: Region
    nodes: list[tuple[tuple[int, ...], int]]          # (block cell, component id)
    edges: list[tuple[int, int]]                      # node index pairs, u < v
    basepoint: int
    labels_by_cell: dict[tuple[int, ...], np.ndarray] = field(repr=False, default_factory=dict)
    plaquettes: int = 0
    n_components: int = 0

    _index: dict[tuple[tuple[int, ...], int], int] = field(default_factory=dict, repr=False)
    _adj: list[list[int]] | None = field(default=None, repr=False)

    def node_index(self, cell: tuple[int, ...], comp: int) -> int:
        if not self._index:
            self._index = {nd: i for i, nd in enumerate(self.nodes)}
        return self._index[(cell, comp)]

    @property
    def adjacency(self) -> list[list[int]]:
        if self._adj is None:
            adj = [[] for _ in self.nodes]
            for u, v in self.edges:
                adj[u].append(v)
                adj[v].append(u)
            for lst in adj:
                lst.sort()
            self._adj = adj
        return self._adj

    def block_value(self, node: int) -> tuple[complex, ...]:
        """Complex center of the node's block cell."""
        cell, _ = self.nodes[node]
        vals = []
        for t, k in enumerate(self.region.shape.block_coords(self.j)):
            ax, ay = self.region.shape.coord_axes(k)
            x = self.region.origin[ax] + (cell[2 * t] + 0.5) * self.region.h
            y = self.region.origin[ay] + (cell[2 * t + 1] + 0.5) * self.region.h
            vals.append(x + 1j * y)
        return tuple(vals)

    def nodes_at(self, a_j) -> list[int]:
        """Indices of all nodes over the block cell containing a_j."""
        cell = self.region.block_cell_of(self.j, a_j)
        return [i for i, (c, _) in enumerate(self.nodes) if c == cell]

    def resolve(self, point_coords) -> int | None:
        """Node index containing a full-space point, or None."""
        reg = self.region
        idx = reg.cell_index(PointZ(reg.shape, tuple(point_coords)))
        if idx is None:
            return None
        keep = reg.shape.block_axes(self.j)
        cell = tuple(idx[a] for a in keep)
        rest = tuple(idx[a] for a in range(len(idx)) if a not in keep)
        labels = self.labels_by_cell.get(cell)
        if labels is None:
            return None
        comp = int(labels[rest]) if labels.ndim else int(labels)
        if comp < 0:
            return None
        try:
            return self.node_index(cell, comp)
        except KeyError:
            return None

    @property
    def cyclomatic_number(self) -> int:
        return len(self.edges) - len(self.nodes) + self.n_components

    @property
    def essential_cycle_rank(self) -> int:
        """Rank of cycles not bounded by plaquettes: components - (V - E + F).

        Treats the plaquette-filled complex as an open surface (no 2-cycles),
        which holds for covers of planar grid complexes; grid-scale evidence,
        clamped at 0 where the surface assumption degrades.
        """
        chi = len(self.nodes) - len(self.edges) + self.plaquettes
        return max(0, self.n_components - chi)

    @property
    def is_acyclic(self) -> bool:
        """No essential cycles: the graph deformation-retracts to a forest."""
        return self.essential_cycle_rank == 0

    def export_edge_list(self, path):
        """Edge-list text format, node token = '<flat block cell index>:<component id>'."""
        reg = self.region
        keep = reg.shape.block_axes(self.j)
        dims = tuple(reg.counts[a] for a in keep)

        def token(node):
            cell, comp = self.nodes[node]
            flat = int(np.ravel_multi_index(cell, dims))
            return f"{flat}:{comp}"

        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# leaf graph j={self.j} nodes={len(self.nodes)} "
                     f"edges={len(self.edges)}\n")
            for i in range(len(self.nodes)):
                fh.write(f"node {token(i)}\n")
            for u, v in self.edges:
                fh.write(f"{token(u)} {token(v)}\n")


def build_leaf_graph(U: Region, j: int) -> LeafGraph:
    """Nodes for every (block cell, slice component), edges by complementary
    overlap between face-adjacent block cells."""
    U.shape._check_block(j)
    proj = U.project(j)
    if proj.is_empty:
        raise EmptyRegionError("projection is empty")
    keep = U.shape.block_axes(j)
    other = tuple(a for a in range(U.inside.ndim) if a not in keep)

    moved = np.moveaxis(U.inside, keep, range(len(keep)))
    block_shape = moved.shape[:len(keep)]
    rest_shape = moved.shape[len(keep):]
    flat = moved.reshape((-1,) + rest_shape) if rest_shape else moved.reshape((-1,))

    labels_by_cell: dict[tuple[int, ...], np.ndarray] = {}
    counts_by_cell: dict[tuple[int, ...], int] = {}
    for bidx in np.argwhere(proj.inside):
        cell = tuple(int(i) for i in bidx)
        fi = int(np.ravel_multi_index(cell, block_shape))
        mask = flat[fi]
        if rest_shape:
            if not mask.any():
                continue
            labels, cnt = _label_mask(mask)
        else:
            if not mask:
                continue
            labels, cnt = np.zeros((), dtype=np.int32), 1
        labels_by_cell[cell] = labels
        counts_by_cell[cell] = cnt

    nodes = []
    for cell in sorted(labels_by_cell):
        for comp in range(counts_by_cell[cell]):
            nodes.append((cell, comp))
    index = {nd: i for i, nd in enumerate(nodes)}

    edges = set()
    naxes = len(keep)
    for cell in sorted(labels_by_cell):
        la = labels_by_cell[cell]
        for axis in range(naxes):
            nb = list(cell)
            nb[axis] += 1
            nb = tuple(nb)
            if nb not in labels_by_cell:
                continue
            lb = labels_by_cell[nb]
            for ca, cb in _overlap_pairs(la, lb):
                edges.add((index[(cell, ca)], index[(nb, cb)]))
    edges = sorted(edges)

    plaquettes = _count_plaquettes(labels_by_cell, index, set(edges), naxes)
    n_comp = _graph_components(len(nodes), edges)

    graph = LeafGraph(j=j, region=U, nodes=nodes, edges=list(edges), basepoint=0,
                      labels_by_cell=labels_by_cell, plaquettes=plaquettes,
                      n_components=n_comp)
    return graph


def _overlap_pairs(la: np.ndarray, lb: np.ndarray):
    """Component id pairs sharing at least one complementary cell."""
    if la.ndim == 0:
        if int(la) >= 0 and int(lb) >= 0:
            return [(int(la), int(lb))]
        return []
    both = (la >= 0) & (lb >= 0)
    if not both.any():
        return []
    pairs = np.stack([la[both], lb[both]], axis=1)
    return [tuple(map(int, p)) for p in np.unique(pairs, axis=0)]


def _count_plaquettes(labels_by_cell, index, edge_set, naxes) -> int:
    """Closed lifted 4-cycles over unit squares of the block grid, all axis pairs."""
    if naxes < 2:
        return 0
    count = 0
    for cell in sorted(labels_by_cell):
        for a1 in range(naxes):
            for a2 in range(a1 + 1, naxes):
                c10 = list(cell); c10[a1] += 1; c10 = tuple(c10)
                c01 = list(cell); c01[a2] += 1; c01 = tuple(c01)
                c11 = list(cell); c11[a1] += 1; c11[a2] += 1; c11 = tuple(c11)
                if c10 not in labels_by_cell or c01 not in labels_by_cell \
                        or c11 not in labels_by_cell:
                    continue
                count += _square_cycles(cell, c10, c01, c11, index, edge_set,
                                        labels_by_cell)
    return count


def _square_cycles(c00, c10, c01, c11, index, edge_set, labels_by_cell) -> int:
    def comps(cell):
        la = labels_by_cell[cell]
        if la.ndim == 0:
            return [0] if int(la) >= 0 else []
        m = int(la.max())
        return list(range(m + 1)) if m >= 0 else []

    def has_edge(u, v):
        return (min(u, v), max(u, v)) in edge_set

    n = 0
    for x in comps(c00):
        u00 = index[(c00, x)]
        for y in comps(c10):
            u10 = index[(c10, y)]
            if not has_edge(u00, u10):
                continue
            for xp in comps(c01):
                u01 = index[(c01, xp)]
                if not has_edge(u00, u01):
                    continue
                for yp in comps(c11):
                    u11 = index[(c11, yp)]
                    if has_edge(u10, u11) and has_edge(u01, u11):
                        n += 1
    return n


def _graph_components(n: int, edges) -> int:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    return len({find(i) for i in range(n)})


@dataclass
class BranchAssignment:
    """A branch of log a_j chosen continuously along the leaf graph.

    Values propagate breadth-first from the basepoint with increments
    log(a'/a) (principal branch of the ratio of adjacent block values), so the
    assignment is determined by the basepoint value and the graph alone.
    ``residual`` is the max over non-tree edges of |value difference -
    increment|; an essential cycle with winding shows up as a residual near a
    nonzero multiple of 2*pi.
    """

    graph: LeafGraph
    values: np.ndarray
    base_value: complex
    residual: float
    flagged_edges: list[tuple[int, int]]

    def value_at_node(self, node: int) -> complex:
        return complex(self.values[node])

    def per_cell_spread(self, a_j) -> float:
        """Spread of lift values over the nodes at one block value.

        Zero when the lift descends to a single-valued function of a_j;
        approximately 2*pi times the turn count otherwise.
        """
        nodes = self.graph.nodes_at(a_j)
        if not nodes:
            raise OffGridError(f"no leaf nodes over {a_j}")
        vals = self.values[nodes]
        return float(np.max(np.abs(vals[:, None] - vals[None, :])))


def lift_branch_log(G: LeafGraph, base_value: complex | None = None,
                    cut_tolerance: float = 0.5) -> BranchAssignment:
    """Assign a continuous branch of log a_j to every node of the graph.

    Requires single-dimensional block values (l_j = 1) away from 0.  When the
    graph is disconnected every component gets its own basepoint (principal
    log) and the requested base_value applies to the component of the global
    basepoint.
    """
    reg = G.region
    if reg.shape.dims[G.j - 1] != 1:
        raise ShapeMismatchError("log lift needs a one-dimensional block")
    vals = np.zeros(len(G.nodes), dtype=complex)
    seen = np.zeros(len(G.nodes), dtype=bool)
    adj = G.adjacency
    residual = 0.0
    flagged = []
    tree_edges = set()

    bases = [G.basepoint] + [i for i in range(len(G.nodes)) if i != G.basepoint]
    for start in bases:
        if seen[start]:
            continue
        a0 = G.block_value(start)[0]
        if abs(a0) < reg.h:
            raise ZeroModulusError("block value too close to 0 for a log branch")
        vals[start] = (complex(base_value) if (base_value is not None
                       and start == G.basepoint) else cmath.log(a0))
        seen[start] = True
        queue = deque([start])
        while queue:
            u = queue.popleft()
            au = G.block_value(u)[0]
            for v in adj[u]:
                av = G.block_value(v)[0]
                ratio = av / au
                inc = cmath.log(ratio)
                if abs(ratio - 1) > cut_tolerance:
                    flagged.append((u, v))
                if not seen[v]:
                    seen[v] = True
                    vals[v] = vals[u] + inc
                    tree_edges.add((min(u, v), max(u, v)))
                    queue.append(v)
                else:
                    if (min(u, v), max(u, v)) in tree_edges:
                        continue
                    res = abs(vals[v] - vals[u] - inc)
                    residual = max(residual, res)
    return BranchAssignment(graph=G, values=vals,
                            base_value=complex(vals[G.basepoint]),
                            residual=residual, flagged_edges=flagged)
