"""Geometric cluster tree over edge DOFs and the admissible block partition.

Each cluster carries two axis-aligned boxes: the support box (union of all
tets sharing a member edge, for reporting and the enclosing-cube side) and
the tight box of the member edge midpoints. A block (tau, sigma) is
eta-admissible when

    min(diam(M_tau), diam(M_sigma)) <= eta * dist(M_tau, M_sigma)

on the midpoint boxes M, with Euclidean diameters and the componentwise
box-to-box gap distance. Admissibility must use the midpoint boxes: the
support boxes are inflated by one mesh width per side, which at desk-scale
meshes leaves no admissible pair at all (min diam stays above eta times
any achievable gap) and would empty the far field. Splitting bisects the
midpoint box at the midpoint of its longest axis (ties go to the lower
child), which guarantees strictly shrinking point sets.
"""

from dataclasses import dataclass, field

import numpy as np

from .fem import DofMap
from .mesh import Mesh


@dataclass
class Cluster:
    indices: np.ndarray   # sorted DOF ids
    bbox_lo: np.ndarray   # (3,) support box: covers every member support tet
    bbox_hi: np.ndarray
    mid_lo: np.ndarray    # (3,) tight box of the member edge midpoints
    mid_hi: np.ndarray
    level: int
    children: tuple = ()
    id: int = -1

    @property
    def size(self):
        return int(self.indices.size)

    @property
    def is_leaf(self):
        return not self.children

    def diameter(self):
        """Euclidean diameter of the midpoint box (admissibility metric)."""
        return float(np.linalg.norm(self.mid_hi - self.mid_lo))

    def support_diameter(self):
        return float(np.linalg.norm(self.bbox_hi - self.bbox_lo))

    def cube_side(self):
        """Side of the smallest cube enclosing the support box."""
        return float((self.bbox_hi - self.bbox_lo).max())


@dataclass
class ClusterTree:
    root: Cluster
    n_leaf: int
    clusters: list          # preorder
    depth: int


def box_distance(lo1, hi1, lo2, hi2) -> float:
    gap = np.maximum(0.0, np.maximum(lo1 - hi2, lo2 - hi1))
    return float(np.linalg.norm(gap))


def is_admissible(c1: Cluster, c2: Cluster, eta: float) -> bool:
    d = box_distance(c1.mid_lo, c1.mid_hi, c2.mid_lo, c2.mid_hi)
    return min(c1.diameter(), c2.diameter()) <= eta * d


def build_cluster_tree(mesh: Mesh, dofmap: DofMap, n_leaf: int = 32) -> ClusterTree:
    if n_leaf < 1:
        raise ValueError("n_leaf must be >= 1")
    n = dofmap.n_dofs
    mids = np.empty((n, 3))
    sup_lo = np.empty((n, 3))
    sup_hi = np.empty((n, 3))
    for i, e in enumerate(dofmap.interior_edges):
        ends = mesh.vertices[mesh.edges[e]]
        mids[i] = ends.mean(axis=0)
        pts = mesh.vertices[mesh.tets[mesh.edge_tets[e]].ravel()]
        sup_lo[i] = pts.min(axis=0)
        sup_hi[i] = pts.max(axis=0)

    def build(idx, level):
        lo = sup_lo[idx].min(axis=0)
        hi = sup_hi[idx].max(axis=0)
        pts = mids[idx]
        plo, phi = pts.min(axis=0), pts.max(axis=0)
        if idx.size <= n_leaf:
            return Cluster(idx, lo, hi, plo, phi, level)
        axis = int(np.argmax(phi - plo))
        cut = 0.5 * (plo[axis] + phi[axis])
        left = pts[:, axis] <= cut
        if left.all() or not left.any():
            # all midpoints coincide on the longest axis; fall back to an
            # index split so the recursion still terminates
            left = np.zeros(idx.size, dtype=bool)
            left[: idx.size // 2] = True
        kids = (build(idx[left], level + 1), build(idx[~left], level + 1))
        return Cluster(idx, lo, hi, plo, phi, level, kids)

    root = build(np.arange(n, dtype=np.int64), 0)
    clusters = []

    def register(c):
        c.id = len(clusters)
        clusters.append(c)
        for k in c.children:
            register(k)

    register(root)
    depth = max(c.level for c in clusters)
    return ClusterTree(root, int(n_leaf), clusters, int(depth))


@dataclass
class BlockPartition:
    far: list    # (Cluster, Cluster) pairs, admissible
    near: list   # (Cluster, Cluster) pairs, both leaves
    eta: float
    tree: ClusterTree = field(repr=False, default=None)

    @property
    def n_dofs(self):
        return self.tree.root.size


def build_block_partition(tree: ClusterTree, eta: float = 2.0) -> BlockPartition:
    if not eta > 0:
        raise ValueError("eta must be positive")
    far, near = [], []

    def rec(t, s):
        if is_admissible(t, s, eta):
            far.append((t, s))
            return
        if t.is_leaf and s.is_leaf:
            near.append((t, s))
            return
        for a in t.children or (t,):
            for b in s.children or (s,):
                rec(a, b)

    rec(tree.root, tree.root)
    return BlockPartition(far, near, float(eta), tree)


def sparsity_constant(partition: BlockPartition) -> int:
    counts = {}
    for t, s in partition.far:
        counts[("r", t.id)] = counts.get(("r", t.id), 0) + 1
        counts[("c", s.id)] = counts.get(("c", s.id), 0) + 1
    return max(counts.values(), default=0)


def tiling_defect(partition: BlockPartition) -> int:
    """Number of (i, j) pairs not covered exactly once; 0 for a partition."""
    n = partition.n_dofs
    cover = np.zeros((n, n), dtype=np.int16)
    for t, s in partition.far + partition.near:
        cover[np.ix_(t.indices, s.indices)] += 1
    return int((cover != 1).sum())


def partition_to_dict(partition: BlockPartition) -> dict:
    clusters = [{
        "id": c.id,
        "level": c.level,
        "indices": c.indices.tolist(),
        "box_lo": c.bbox_lo.tolist(),
        "box_hi": c.bbox_hi.tolist(),
        "midpoint_box_lo": c.mid_lo.tolist(),
        "midpoint_box_hi": c.mid_hi.tolist(),
        "cube_side": c.cube_side(),
        "children": [k.id for k in c.children],
    } for c in partition.tree.clusters]
    return {
        "eta": partition.eta,
        "n_leaf": partition.tree.n_leaf,
        "depth": partition.tree.depth,
        "sparsity_constant": sparsity_constant(partition),
        "clusters": clusters,
        "far": [[t.id, s.id] for t, s in partition.far],
        "near": [[t.id, s.id] for t, s in partition.near],
    }
