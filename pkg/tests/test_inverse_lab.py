"""Inverse compression experiments against direct linear-algebra oracles."""

import numpy as np
import pytest
from scipy.linalg import eigh, svdvals

from hmaxwell import (
    assemble_system,
    block_svd,
    build_block_partition,
    build_box_mesh,
    build_cluster_tree,
    dense_inverse,
    dual_basis,
    fit_decay,
    rank_sweep,
    theorem_transfer_check,
)
from hmaxwell.cluster import sparsity_constant
from hmaxwell.fem import build_dof_map
from hmaxwell.hmatrix import compress_dense, to_dense


@pytest.fixture(scope="module")
def lab3():
    mesh = build_box_mesh(3)
    sysm = assemble_system(mesh)
    tree = build_cluster_tree(mesh, sysm.dofmap, n_leaf=16)
    part = build_block_partition(tree, eta=2.0)
    binv = dense_inverse(sysm.A)
    return sysm, part, binv


def test_single_dof_inverse(mesh_cache):
    """n=1 leaves exactly one interior edge; the inverse is the scalar
    reciprocal."""
    sysm = assemble_system(mesh_cache(1))
    assert sysm.A.shape == (1, 1)
    binv = dense_inverse(sysm.A)
    assert abs(binv[0, 0] - 1.0 / sysm.A[0, 0]) < 1e-14 * abs(1.0 / sysm.A[0, 0])


def test_dense_inverse_identity_and_symmetry(lab3):
    sysm, _, binv = lab3
    n = sysm.n_dofs
    assert np.abs(sysm.A @ binv - np.eye(n)).max() < 1e-8
    # A symmetric implies A^{-1} symmetric, up to solver roundoff
    assert np.abs(binv - binv.T).max() < 1e-8 * np.abs(binv).max()


def test_dense_inverse_rejects_near_singular(mesh_cache):
    """kappa at a discrete eigenvalue makes A singular."""
    m = mesh_cache(2)
    sysm = assemble_system(m)
    w = eigh(sysm.K, sysm.M, eigvals_only=True)
    bad = float(w[np.argmax(w > 1e-8)])  # smallest nonzero pencil eigenvalue
    sick = assemble_system(m, kappa=bad)
    with pytest.raises(ValueError, match="kappa"):
        dense_inverse(sick.A)


def test_block_svd_matches_direct(lab3, rng):
    _, part, binv = lab3
    t, s = part.far[0] if part.far else part.near[0]
    sv = block_svd(binv, t.indices, s.indices)
    direct = svdvals(binv[np.ix_(t.indices, s.indices)])
    assert np.allclose(sv, direct, atol=1e-12)


def test_rank_sweep_errors_match_exact_svd(lab3):
    sysm, part, binv = lab3
    r_list = [0, 1, 2, 4, 8]
    rows, binv_out = rank_sweep(sysm.A, part, r_list, tol=1e-8,
                                max_iter=2000, binv=binv)
    assert binv_out is binv
    assert [row.r for row in rows] == sorted(r_list)
    norm_b = np.linalg.norm(binv, 2)
    for row in rows:
        h = compress_dense(binv, part, row.r)
        exact = np.linalg.norm(binv - to_dense(h), 2)
        assert row.converged
        assert abs(row.abs_err - exact) <= 1e-6 * max(exact, 1e-30)
        assert abs(row.rel_err - row.abs_err / norm_b) < 1e-12
        # block-to-global bound, recomputed from scratch
        sig = 0.0
        for t, s in part.far:
            sv = svdvals(binv[np.ix_(t.indices, s.indices)])
            if row.r < sv.size:
                sig = max(sig, sv[row.r])
        assert abs(row.max_block_sigma - sig) < 1e-12
        c_sp = sparsity_constant(part)
        depth = part.tree.depth
        assert abs(row.bound_value - c_sp * (depth + 1) * sig) < 1e-12
        assert row.abs_err <= row.bound_value * (1.0 + 1e-6) + 1e-30
    errs = [row.abs_err for row in rows]
    assert all(a >= b for a, b in zip(errs, errs[1:]))  # nonincreasing


def test_rank_zero_error_is_far_part_norm(lab3):
    sysm, part, binv = lab3
    rows, _ = rank_sweep(sysm.A, part, [0], tol=1e-8, max_iter=2000, binv=binv)
    far_part = np.zeros_like(binv)
    for t, s in part.far:
        far_part[np.ix_(t.indices, s.indices)] = binv[np.ix_(t.indices, s.indices)]
    assert abs(rows[0].abs_err - np.linalg.norm(far_part, 2)) < 1e-6


def test_rank_sweep_without_bound_assertion(lab3):
    sysm, part, binv = lab3
    rows, _ = rank_sweep(sysm.A, part, [2], binv=binv, bound_slack=None)
    assert rows[0].r == 2


# decay fits ----------------------------------------------------------------

def test_fit_recovers_plain_exponential():
    rs = np.arange(1, 11)
    fit = fit_decay(rs, 3.0 * 0.5**rs)
    assert abs(fit.q - 0.5) < 1e-6
    assert abs(fit.log_c_exp - np.log(3.0)) < 1e-9
    assert fit.resid_exp < 1e-12
    assert fit.n_used == 10 and not fit.skipped


def test_fit_recovers_root_exponential():
    rs = np.arange(1, 21)
    x = rs**0.25 / np.log(rs + 2.0)
    fit = fit_decay(rs, 2.0 * np.exp(-x))
    assert abs(fit.b - 1.0) < 1e-3
    assert abs(fit.log_c_root - np.log(2.0)) < 1e-9
    assert fit.resid_root < 1e-12


def test_fit_constant_data():
    fit = fit_decay(np.arange(1, 8), np.full(7, 0.25))
    assert abs(fit.q - 1.0) < 1e-12
    assert abs(fit.b) < 1e-12
    assert fit.resid_exp < 1e-14


def test_fit_skips_with_too_few_points():
    fit = fit_decay([1, 2, 3, 4, 5], [1.0, 0.5, 1e-20, 1e-20, 1e-20])
    assert fit.skipped
    assert fit.n_used == 2
    assert "fewer than 4" in fit.note
    assert fit.q == 1.0 and fit.b == 0.0


def test_fit_drops_floor_points_only():
    rs = np.arange(1, 10)
    errs = 0.5**rs
    errs[-1] = 0.0
    fit = fit_decay(rs, errs)
    assert fit.n_used == 8
    assert abs(fit.q - 0.5) < 1e-6


# transfer identity ---------------------------------------------------------

def test_transfer_identity_on_one_pair(lab3):
    sysm, part, binv = lab3
    assert part.far, "partition should have admissible pairs at n=3"
    dual = dual_basis(sysm.mesh, sysm.dofmap)
    t, s = max(part.far, key=lambda p: p[0].size * p[1].size)
    rep = theorem_transfer_check(sysm, dual, t, s, binv, n_rhs=5)
    assert rep["passed"]
    assert rep["max_mismatch"] <= 1e-10
    assert rep["rows"] == t.size and rep["cols"] == s.size
    assert np.all(np.diff(rep["singular_values"]) <= 1e-30)


def test_transfer_negative_control(lab3):
    """A corrupted inverse block must be caught."""
    sysm, part, binv = lab3
    dual = dual_basis(sysm.mesh, sysm.dofmap)
    t, s = part.far[0]
    bad = binv.copy()
    bad[np.ix_(t.indices, s.indices)] *= 1.5
    rep = theorem_transfer_check(sysm, dual, t, s, bad, n_rhs=3)
    assert not rep["passed"]
    assert rep["max_mismatch"] > 1e-4
