"""Single-tet element oracles.

The local mass matrix has the closed form

    M[ef] = I[ac] gb.gd - I[ad] gb.gc - I[bc] ga.gd + I[bd] ga.gc

with I[ij] = V (1 + delta_ij)/20 and e = (a,b), f = (c,d); the curl-curl
matrix is 4V (ga x gb).(gc x gd). Both are checked against the
quadrature-based element routines, which take a different route.
"""

import numpy as np
import pytest

from hmaxwell import LOCAL_EDGES, TetElement, make_polynomial_field
from hmaxwell.whitney import LOCAL_FACES


def random_tet(rng, min_det=0.05):
    while True:
        coords = rng.random((4, 3))
        mat = np.hstack([np.ones((4, 1)), coords])
        if abs(np.linalg.det(mat)) > min_det:
            return coords


REFERENCE = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0],
                      [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


def mass_oracle(el):
    g, v = el.grads, el.volume
    lam = v * (np.ones((4, 4)) + np.eye(4)) / 20.0
    m = np.zeros((6, 6))
    for i, (a, b) in enumerate(LOCAL_EDGES):
        for j, (c, d) in enumerate(LOCAL_EDGES):
            m[i, j] = (lam[a, c] * (g[b] @ g[d]) - lam[a, d] * (g[b] @ g[c])
                       - lam[b, c] * (g[a] @ g[d]) + lam[b, d] * (g[a] @ g[c]))
    return m


def curl_oracle(el):
    g, v = el.grads, el.volume
    k = np.zeros((6, 6))
    for i, (a, b) in enumerate(LOCAL_EDGES):
        for j, (c, d) in enumerate(LOCAL_EDGES):
            k[i, j] = 4.0 * v * (np.cross(g[a], g[b]) @ np.cross(g[c], g[d]))
    return k


@pytest.mark.parametrize("seed", range(8))
def test_local_matrices_match_closed_forms(seed):
    el = TetElement(random_tet(np.random.default_rng(seed)))
    assert np.allclose(el.mass_matrix(), mass_oracle(el), atol=1e-14)
    assert np.allclose(el.curl_curl_matrix(), curl_oracle(el), atol=1e-13)
    # bitwise symmetry, not just numeric
    assert np.array_equal(el.mass_matrix(), el.mass_matrix().T)
    assert np.array_equal(el.curl_curl_matrix(), el.curl_curl_matrix().T)


def test_barycentric_partition_of_unity(rng):
    el = TetElement(random_tet(rng))
    pts = rng.random((20, 3))
    lam = el.barycentric(pts)
    assert np.allclose(lam.sum(axis=1), 1.0)
    assert np.allclose(lam @ el.coords, pts)


def test_edge_integrals_are_kronecker(rng):
    """Line integral of psi_f along oriented edge e equals delta_ef."""
    el = TetElement(random_tet(rng))
    t, w = np.polynomial.legendre.leggauss(6)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    for i, (a, b) in enumerate(LOCAL_EDGES):
        xa, xb = el.coords[a], el.coords[b]
        pts = xa[None, :] + t[:, None] * (xb - xa)[None, :]
        psi = el.whitney(pts)  # (q, 6, 3)
        ints = np.einsum("q,qfd,d->f", w, psi, xb - xa)
        expect = np.zeros(6)
        expect[i] = 1.0
        assert np.allclose(ints, expect, atol=1e-13)


def test_interpolant_reproduces_nedelec_fields(rng):
    """a + b x x is reproduced exactly; a generic linear field is not."""
    el = TetElement(random_tet(rng))
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    fld = lambda x: a + np.cross(b, x)
    coeffs = el.nedelec_interpolant(fld)
    # sample strictly inside the tet via random barycentric weights
    pts = rng.dirichlet(np.ones(4), size=10) @ el.coords
    vals = el.nedelec_eval(coeffs, pts)
    expect = np.array([fld(p) for p in pts])
    assert np.allclose(vals, expect, atol=1e-12)

    sym = lambda x: np.array([x[1], x[2], x[0]])  # has a symmetric part
    coeffs2 = el.nedelec_interpolant(sym)
    vals2 = el.nedelec_eval(coeffs2, pts)
    expect2 = np.array([sym(p) for p in pts])
    assert np.linalg.norm(vals2 - expect2) > 1e-3


def test_whitney_curls_match_finite_differences(rng):
    el = TetElement(random_tet(rng))
    curls = el.whitney_curls()
    x0 = (el.coords.mean(axis=0))
    eps = 1e-6

    def field_k(k, x):
        return el.whitney(np.asarray(x)[None, :])[0, k, :]

    for k in range(6):
        num = np.zeros(3)
        for d in range(3):
            e1 = np.eye(3)[(d + 1) % 3]
            e2 = np.eye(3)[(d + 2) % 3]
            dv2 = (field_k(k, x0 + eps * e1) - field_k(k, x0 - eps * e1)) / (2 * eps)
            dv1 = (field_k(k, x0 + eps * e2) - field_k(k, x0 - eps * e2)) / (2 * eps)
            num[d] = dv2[(d + 2) % 3] - dv1[(d + 1) % 3]
        assert np.allclose(num, curls[k], atol=1e-6)


def test_rt_fluxes_are_kronecker_and_divergence_is_constant(rng):
    el = TetElement(random_tet(rng))
    a, b = rng.standard_normal(3), rng.standard_normal()
    fld = lambda x: a + b * np.asarray(x)  # divergence 3b
    fluxes = el.rt_face_interpolant(fld)
    div = el.rt_divergence(fluxes)
    assert abs(div - 3.0 * b) < 1e-10
    # divergence theorem: total outward flux equals volume integral
    assert abs(fluxes.sum() - div * el.volume) < 1e-10
    # RT0 contains a + b x, so evaluation reproduces the field pointwise
    pts = rng.dirichlet(np.ones(4), size=8) @ el.coords
    assert np.allclose(el.rt_eval(fluxes, pts), np.array([fld(p) for p in pts]),
                       atol=1e-11)


def test_face_frames_outward_unit_normals(rng):
    el = TetElement(random_tet(rng))
    normals, areas = el.face_frames()
    assert np.allclose(np.linalg.norm(normals, axis=1), 1.0)
    centroid = el.coords.mean(axis=0)
    for f, idx in enumerate(LOCAL_FACES):
        mid = el.coords[list(idx)].mean(axis=0)
        assert normals[f] @ (mid - centroid) > 0


def random_poly_coeffs(rng, degree=3):
    monos = [(i, j, k)
             for i in range(degree + 1)
             for j in range(degree + 1)
             for k in range(degree + 1)
             if i + j + k <= degree]
    return {m: rng.standard_normal() for m in monos}


def test_commuting_diagram_on_polynomials(rng):
    """RT interpolant of the curl equals the curl of the edge interpolant."""
    for _ in range(5):
        el = TetElement(random_tet(rng))
        fld, curl = make_polynomial_field(random_poly_coeffs(rng),
                                          random_poly_coeffs(rng),
                                          random_poly_coeffs(rng))
        assert el.commuting_residual(fld, curl) < 1e-12


def test_grad_mixed_matrix_against_quadrature(rng):
    from hmaxwell.quadrature import tet_rule

    el = TetElement(random_tet(rng))
    bary, w = tet_rule(2)
    pts = bary @ el.coords
    psi = el.whitney(pts)
    got = el.grad_mixed_matrix()
    for v in range(4):
        col = el.volume * np.einsum("q,qkd,d->k", w, psi, el.grads[v])
        assert np.allclose(got[:, v], col, atol=1e-13)


def test_nodal_matrices(rng):
    el = TetElement(random_tet(rng))
    s = el.nodal_stiffness()
    m = el.nodal_mass()
    assert np.allclose(s.sum(axis=1), 0.0, atol=1e-12)  # constants in kernel
    assert abs(m.sum() - el.volume) < 1e-13              # partition of unity
    assert np.allclose(s, el.volume * el.grads @ el.grads.T)


def test_degenerate_tet_rejected():
    flat = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    with pytest.raises(ValueError):
        TetElement(flat)
