"""Lowest-order edge elements on a single tetrahedron.

The edge shape function of local edge (a, b) is

    psi_ab = lambda_a grad(lambda_b) - lambda_b grad(lambda_a),

whose tangential line integral equals 1 along its own edge (oriented a -> b)
and 0 along every other edge, and whose curl is the constant vector
2 grad(lambda_a) x grad(lambda_b). The face-flux interpolant uses the four
lowest-order face shape functions phi_f(x) = (x - x_opp) / (3 |T|), which
carry unit outward flux through their own face and zero through the others.
"""

import numpy as np

from .mesh import LOCAL_EDGES
from .quadrature import segment_rule, tet_rule, tet_rule_degree2, triangle_rule

# local faces, each opposite the like-indexed vertex
LOCAL_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))


class TetElement:
    """Affine geometry and element matrices of one tetrahedron."""

    def __init__(self, coords):
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (4, 3):
            raise ValueError("expected 4 vertex coordinates")
        mat = np.hstack([np.ones((4, 1)), coords])
        det = np.linalg.det(mat)
        scale = max(np.abs(coords).max(), 1.0)
        if abs(det) < 1e-14 * scale ** 3:
            raise ValueError("degenerate tetrahedron")
        self.coords = coords
        self.volume = abs(det) / 6.0
        # column j holds the affine coefficients of lambda_j
        self.coef = np.linalg.inv(mat)
        self.grads = np.ascontiguousarray(self.coef[1:, :].T)  # (4, 3)

    def barycentric(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.hstack([np.ones((points.shape[0], 1)), points]) @ self.coef

    def whitney(self, points):
        """Edge shape functions at points: (npts, 6, 3)."""
        lam = self.barycentric(points)  # (npts, 4)
        out = np.empty((lam.shape[0], 6, 3))
        for k, (a, b) in enumerate(LOCAL_EDGES):
            out[:, k, :] = (lam[:, a, None] * self.grads[b]
                            - lam[:, b, None] * self.grads[a])
        return out

    def whitney_curls(self):
        """Constant curls of the edge shape functions: (6, 3)."""
        out = np.empty((6, 3))
        for k, (a, b) in enumerate(LOCAL_EDGES):
            out[k] = 2.0 * np.cross(self.grads[a], self.grads[b])
        return out

    def curl_curl_matrix(self):
        c = self.whitney_curls()
        return _mirror_upper(self.volume * (c @ c.T))

    def mass_matrix(self):
        # integrand is quadratic, the 4-point rule is exact for it
        bary, w = tet_rule_degree2()
        psi = self.whitney(bary @ self.coords)  # (4, 6, 3)
        m = self.volume * np.einsum("q,qed,qfd->ef", w, psi, psi)
        return _mirror_upper(m)

    def grad_mixed_matrix(self):
        """B[k, v] = integral of psi_k . grad(lambda_v); exact closed form."""
        b = np.empty((6, 4))
        for k, (a, c) in enumerate(LOCAL_EDGES):
            b[k] = (self.volume / 4.0) * (self.grads[c] - self.grads[a]) @ self.grads.T
        return b

    def nodal_stiffness(self):
        return _mirror_upper(self.volume * (self.grads @ self.grads.T))

    def nodal_mass(self):
        return self.volume * (np.ones((4, 4)) + np.eye(4)) / 20.0

    # faces -------------------------------------------------------------
    def face_frames(self):
        """Per face: (unit outward normal, area)."""
        normals = np.empty((4, 3))
        areas = np.empty(4)
        for f, (i, j, k) in enumerate(LOCAL_FACES):
            a, b, c = self.coords[i], self.coords[j], self.coords[k]
            nvec = np.cross(b - a, c - a) / 2.0
            area = np.linalg.norm(nvec)
            nhat = nvec / area
            if nhat @ ((a + b + c) / 3.0 - self.coords[f]) < 0:
                nhat = -nhat
            normals[f] = nhat
            areas[f] = area
        return normals, areas

    # interpolants -------------------------------------------------------
    def nedelec_interpolant(self, field, degree: int = 5):
        """Tangential edge integrals of the field: (6,) coefficients."""
        t, w = segment_rule(degree)
        coeffs = np.empty(6, dtype=_field_dtype(field, self.coords[0]))
        for k, (a, b) in enumerate(LOCAL_EDGES):
            xa, xb = self.coords[a], self.coords[b]
            vals = np.array([np.asarray(field(xa + ti * (xb - xa))) for ti in t])
            coeffs[k] = np.einsum("q,qd,d->", w, vals, xb - xa)
        return coeffs

    def nedelec_eval(self, coeffs, points):
        return np.einsum("k,qkd->qd", coeffs, self.whitney(points))

    def rt_face_interpolant(self, field, degree: int = 5):
        """Outward face fluxes of the field: (4,) coefficients."""
        bary, w = triangle_rule(degree)
        normals, areas = self.face_frames()
        fluxes = np.empty(4, dtype=_field_dtype(field, self.coords[0]))
        for f, idx in enumerate(LOCAL_FACES):
            pts = bary @ self.coords[list(idx)]
            vals = np.array([np.asarray(field(p)) for p in pts])
            fluxes[f] = areas[f] * np.einsum("q,qd,d->", w, vals, normals[f])
        return fluxes

    def rt_eval(self, fluxes, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros((points.shape[0], 3), dtype=np.asarray(fluxes).dtype)
        for f in range(4):
            out += fluxes[f] * (points - self.coords[f]) / (3.0 * self.volume)
        return out

    def rt_divergence(self, fluxes):
        # each face function has constant divergence 1/|T|
        return np.sum(fluxes) / self.volume

    def commuting_residual(self, field, curl_field, degree: int = 5):
        """max over faces of |flux of curl(interpolated field) - flux of
        interpolated curl|; zero for smooth fields by Stokes' theorem."""
        coeffs = self.nedelec_interpolant(field, degree)
        cvec = coeffs @ self.whitney_curls()
        normals, areas = self.face_frames()
        lhs = areas * (normals @ cvec)
        rhs = self.rt_face_interpolant(curl_field, degree)
        return float(np.abs(lhs - rhs).max())


def local_whitney(tet_coords, point):
    """Values and curls of the six edge shape functions at one point."""
    el = TetElement(tet_coords)
    return el.whitney(point)[0], el.whitney_curls()


def _mirror_upper(mat):
    # copy the upper triangle onto the lower one so symmetry is bitwise
    out = np.triu(mat)
    return out + np.triu(mat, 1).T


def _field_dtype(field, probe_point):
    return np.result_type(np.asarray(field(probe_point)).dtype, np.float64)


def make_polynomial_field(coeff_x, coeff_y, coeff_z):
    """Vector field with polynomial components given as {(i,j,k): c} dicts;
    returns (field, curl_field) callables."""
    comps = (dict(coeff_x), dict(coeff_y), dict(coeff_z))

    def mono(p, i, j, k):
        return p[0] ** i * p[1] ** j * p[2] ** k

    def dmono(p, i, j, k, axis):
        e = [i, j, k]
        if e[axis] == 0:
            return 0.0
        c = e[axis]
        e[axis] -= 1
        return c * mono(p, *e)

    def field(p):
        return np.array([sum(c * mono(p, *m) for m, c in comp.items())
                         for comp in comps])

    def partial(comp_idx, axis, p):
        return sum(c * dmono(p, *m, axis) for m, c in comps[comp_idx].items())

    def curl_field(p):
        return np.array([
            partial(2, 1, p) - partial(1, 2, p),
            partial(0, 2, p) - partial(2, 0, p),
            partial(1, 0, p) - partial(0, 1, p),
        ])

    return field, curl_field
