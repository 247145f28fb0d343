"""Cluster tree and block partition structure.

Every derived quantity (admissibility, sparsity constant, tiling) is
recomputed here from scratch with independent loops and compared against
the library's answers.
"""

import numpy as np
import pytest

from hmaxwell import (
    box_distance,
    build_block_partition,
    build_cluster_tree,
    is_admissible,
    sparsity_constant,
    tiling_defect,
)
from hmaxwell.cluster import Cluster
from hmaxwell.fem import build_dof_map


@pytest.fixture(scope="module")
def tree_and_partition(request):
    cache = {}

    def get(n, n_leaf=32, eta=2.0):
        key = (n, n_leaf, eta)
        if key not in cache:
            from hmaxwell import build_box_mesh

            mesh = build_box_mesh(n)
            dofmap = build_dof_map(mesh)
            tree = build_cluster_tree(mesh, dofmap, n_leaf=n_leaf)
            part = build_block_partition(tree, eta=eta)
            cache[key] = (mesh, dofmap, tree, part)
        return cache[key]

    return get


def edge_midpoints(mesh, dofmap):
    e = mesh.edges[dofmap.interior_edges]
    return 0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]])


def test_leaves_partition_the_index_set(tree_and_partition):
    mesh, dofmap, tree, _ = tree_and_partition(3)
    seen = np.concatenate([c.indices for c in tree.clusters if c.is_leaf])
    assert np.array_equal(np.sort(seen), np.arange(dofmap.n_dofs))
    for c in tree.clusters:
        assert c.size > 0
        if c.is_leaf:
            assert c.size <= tree.n_leaf
        else:
            a, b = c.children
            assert np.array_equal(np.sort(np.concatenate([a.indices, b.indices])),
                                  c.indices)
            assert a.level == b.level == c.level + 1


def test_boxes_cover_their_members(tree_and_partition):
    mesh, dofmap, tree, _ = tree_and_partition(3)
    mids = edge_midpoints(mesh, dofmap)
    for c in tree.clusters:
        pts = mids[c.indices]
        assert np.all(pts >= c.mid_lo - 1e-12) and np.all(pts <= c.mid_hi + 1e-12)
        assert np.all(c.bbox_lo <= c.mid_lo + 1e-12)
        assert np.all(c.bbox_hi >= c.mid_hi - 1e-12)
        # support box covers every tet touching a member edge
        for d in c.indices[:: max(1, c.size // 8)]:
            e = dofmap.interior_edges[d]
            for t in mesh.edge_tets[e]:
                verts = mesh.vertices[mesh.tets[t]]
                assert np.all(verts >= c.bbox_lo - 1e-12)
                assert np.all(verts <= c.bbox_hi + 1e-12)


def scratch_distance(lo1, hi1, lo2, hi2):
    gap = np.maximum(0.0, np.maximum(lo2 - hi1, lo1 - hi2))
    return float(np.linalg.norm(gap))


def scratch_admissible(c1, c2, eta):
    d1 = np.linalg.norm(c1.mid_hi - c1.mid_lo)
    d2 = np.linalg.norm(c2.mid_hi - c2.mid_lo)
    dist = scratch_distance(c1.mid_lo, c1.mid_hi, c2.mid_lo, c2.mid_hi)
    return min(d1, d2) <= eta * dist


def test_box_distance_cases():
    lo = np.zeros(3)
    hi = np.ones(3)
    assert box_distance(lo, hi, lo, hi) == 0.0
    assert box_distance(lo, hi, lo + 0.5, hi + 0.5) == 0.0  # overlap
    assert abs(box_distance(lo, hi, lo + 3.0, hi + 3.0) - 2.0 * np.sqrt(3.0)) < 1e-14
    shifted = (lo + np.array([2.0, 0.0, 0.0]), hi + np.array([2.0, 0.0, 0.0]))
    assert abs(box_distance(lo, hi, *shifted) - 1.0) < 1e-14


def test_admissibility_inequality_cases():
    mk = lambda lo, hi: Cluster(np.arange(1), np.asarray(lo, float),
                                np.asarray(hi, float), np.asarray(lo, float),
                                np.asarray(hi, float), 0)
    unit = mk([0, 0, 0], [1, 1, 1])
    far = mk([11, 0, 0], [12, 1, 1])
    assert not is_admissible(unit, unit, eta=1.0)      # dist 0
    assert is_admissible(unit, far, eta=1.0)           # sqrt(3) <= 10
    assert is_admissible(far, unit, eta=1.0)           # symmetric


@pytest.mark.parametrize("n,eta", [(3, 2.0), (4, 2.0), (4, 1.0)])
def test_partition_far_and_near_fields(n, eta, tree_and_partition):
    _, dofmap, tree, part = tree_and_partition(n, eta=eta)
    assert part.eta == eta
    for t, s in part.far:
        assert scratch_admissible(t, s, eta)
    for t, s in part.near:
        assert t.is_leaf and s.is_leaf
        assert not scratch_admissible(t, s, eta)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_partition_tiles_exactly(n, tree_and_partition):
    _, dofmap, tree, part = tree_and_partition(n)
    assert tiling_defect(part) == 0
    # independent cover count
    N = dofmap.n_dofs
    cover = np.zeros((N, N), dtype=np.int32)
    for t, s in list(part.far) + list(part.near):
        cover[np.ix_(t.indices, s.indices)] += 1
    assert np.all(cover == 1)


def test_sparsity_constant_recount(tree_and_partition):
    """C_sp counts far-field partners only, in either block orientation."""
    _, _, tree, part = tree_and_partition(4)
    partners = {}
    for t, s in part.far:
        partners.setdefault(t.id, set()).add(s.id)
        partners.setdefault(s.id, set()).add(t.id)
    expect = max(len(v) for v in partners.values())
    assert sparsity_constant(part) == expect


@pytest.mark.parametrize("n", [2, 4])
def test_depth_scales_logarithmically(n, tree_and_partition):
    _, dofmap, tree, _ = tree_and_partition(n)
    assert tree.depth == max(c.level for c in tree.clusters)
    assert tree.depth <= 3 * np.log2(dofmap.n_dofs) + 2


def test_tree_build_is_deterministic(tree_and_partition):
    from hmaxwell import build_box_mesh

    mesh = build_box_mesh(3)
    dofmap = build_dof_map(mesh)
    t1 = build_cluster_tree(mesh, dofmap, n_leaf=16)
    t2 = build_cluster_tree(mesh, dofmap, n_leaf=16)
    assert len(t1.clusters) == len(t2.clusters)
    for a, b in zip(t1.clusters, t2.clusters):
        assert np.array_equal(a.indices, b.indices)
        assert np.array_equal(a.mid_lo, b.mid_lo)
        assert a.id == b.id and a.level == b.level
