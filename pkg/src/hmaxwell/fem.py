"""Global edge-element spaces and the Maxwell bilinear form on a box mesh.

The Galerkin system uses the bilinear (not sesquitilinear) form

    a(E, Psi) = <curl E, curl Psi> - kappa <E, Psi>,

assembled over the basis functions of interior edges (tangential trace zero
on the box boundary). A = K - kappa M is complex symmetric, i.e. A equals
its transpose without conjugation; it is kept real when kappa is real.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse

from .mesh import LOCAL_EDGES, Mesh
from .quadrature import tet_rule
from .whitney import TetElement


@dataclass(frozen=True)
class DofMap:
    interior_edges: np.ndarray  # (N,) edge ids carrying DOFs, ascending
    edge_to_dof: np.ndarray     # (E,) DOF index or -1 for boundary edges
    n_dofs: int


def build_dof_map(mesh: Mesh) -> DofMap:
    ids = np.flatnonzero(~mesh.boundary_edge)
    edge_to_dof = np.full(mesh.n_edges, -1, dtype=np.int64)
    edge_to_dof[ids] = np.arange(ids.size)
    return DofMap(ids, edge_to_dof, int(ids.size))


@dataclass
class GalerkinSystem:
    mesh: Mesh
    dofmap: DofMap
    kappa: complex
    K: np.ndarray  # (N, N) curl-curl part, real symmetric PSD
    M: np.ndarray  # (N, N) mass part, real symmetric PD
    A: np.ndarray  # K - kappa M
    elements: list = field(repr=False, default=None)  # TetElement per tet
    _lu: tuple = field(repr=False, default=None, compare=False)

    @property
    def n_dofs(self):
        return self.dofmap.n_dofs

    @property
    def h(self):
        return self.mesh.h

    def lu(self):
        if self._lu is None:
            self._lu = scipy.linalg.lu_factor(self.A)
        return self._lu


def assemble_system(mesh: Mesh, dofmap: DofMap = None, kappa: complex = 1.0) -> GalerkinSystem:
    """Assemble K, M and A = K - kappa M over the interior-edge DOFs."""
    if kappa == 0:
        raise ValueError("kappa must be nonzero (gradients lie in the curl kernel)")
    if dofmap is None:
        dofmap = build_dof_map(mesh)
    n = dofmap.n_dofs
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    elements = []
    for t in range(mesh.n_tets):
        el = TetElement(mesh.vertices[mesh.tets[t]])
        elements.append(el)
        s = mesh.tet_edge_signs[t].astype(float)
        dofs = dofmap.edge_to_dof[mesh.tet_edges[t]]
        keep = dofs >= 0
        if not keep.any():
            continue
        sign = np.outer(s, s)
        d = dofs[keep]
        ij = (d[:, None], d[None, :])
        np.add.at(K, ij, (sign * el.curl_curl_matrix())[np.ix_(keep, keep)])
        np.add.at(M, ij, (sign * el.mass_matrix())[np.ix_(keep, keep)])
    kappa = complex(kappa)
    if kappa.imag == 0.0:
        kappa = kappa.real
    A = K - kappa * M
    return GalerkinSystem(mesh, dofmap, kappa, K, M, A, elements)


def solve_system(system: GalerkinSystem, rhs: np.ndarray) -> np.ndarray:
    return scipy.linalg.lu_solve(system.lu(), rhs)


def hcurl_norm(system: GalerkinSystem, u: np.ndarray) -> float:
    """Norm with square <curl u, curl u> + <u, u>."""
    return float(np.sqrt(np.real(np.vdot(u, (system.K + system.M) @ u))))


# nodal space ------------------------------------------------------------

@dataclass
class NodalSpace:
    interior_vertices: np.ndarray  # (Nv,) vertex ids
    vertex_to_dof: np.ndarray      # (V,) column or -1
    n_dofs: int
    laplacian: np.ndarray          # (Nv, Nv) stiffness of the hat functions
    mass: np.ndarray               # (Nv, Nv)


def build_nodal_space(mesh: Mesh, elements=None) -> NodalSpace:
    ids = np.flatnonzero(~mesh.boundary_vertex)
    v2d = np.full(mesh.n_vertices, -1, dtype=np.int64)
    v2d[ids] = np.arange(ids.size)
    nv = ids.size
    L = np.zeros((nv, nv))
    Mn = np.zeros((nv, nv))
    for t in range(mesh.n_tets):
        el = elements[t] if elements else TetElement(mesh.vertices[mesh.tets[t]])
        d = v2d[mesh.tets[t]]
        keep = d >= 0
        if not keep.any():
            continue
        ij = (d[keep][:, None], d[keep][None, :])
        np.add.at(L, ij, el.nodal_stiffness()[np.ix_(keep, keep)])
        np.add.at(Mn, ij, el.nodal_mass()[np.ix_(keep, keep)])
    return NodalSpace(ids, v2d, int(nv), L, Mn)


def discrete_gradient(mesh: Mesh, dofmap: DofMap, nodal_space: NodalSpace) -> np.ndarray:
    """G maps interior nodal values to edge coefficients of the gradient.

    The tangential integral of grad(p) along edge (lo, hi) is p(hi) - p(lo),
    so G is a signed incidence matrix. Rows for boundary edges would vanish
    identically (both endpoints sit on the boundary) and are not stored.
    """
    G = np.zeros((dofmap.n_dofs, nodal_space.n_dofs))
    for row, e in enumerate(dofmap.interior_edges):
        lo, hi = mesh.edges[e]
        j = nodal_space.vertex_to_dof[hi]
        if j >= 0:
            G[row, j] += 1.0
        j = nodal_space.vertex_to_dof[lo]
        if j >= 0:
            G[row, j] -= 1.0
    return G


# projections ------------------------------------------------------------

def rhs_vector(system: GalerkinSystem, fld, degree: int = 4) -> np.ndarray:
    """Load vector f_i = <fld, Psi_i> by tet quadrature of the given degree."""
    bary, w = tet_rule(degree)
    mesh, dofmap = system.mesh, system.dofmap
    probe = np.asarray(fld(mesh.vertices[0]))
    f = np.zeros(dofmap.n_dofs, dtype=np.result_type(probe.dtype, np.float64))
    for t in range(mesh.n_tets):
        el = system.elements[t]
        pts = bary @ el.coords
        vals = np.array([np.asarray(fld(p)) for p in pts])
        psi = el.whitney(pts)
        local = el.volume * np.einsum("q,qd,qkd->k", w, vals, psi)
        dofs = dofmap.edge_to_dof[mesh.tet_edges[t]]
        keep = dofs >= 0
        np.add.at(f, dofs[keep], (mesh.tet_edge_signs[t] * local)[keep])
    return f


def l2_project(system: GalerkinSystem, fld, degree: int = 4) -> np.ndarray:
    """Coefficients of the L2 projection of a callable field onto the space."""
    f = rhs_vector(system, fld, degree)
    u = scipy.linalg.solve(system.M, f, assume_a="pos")
    resid = np.linalg.norm(system.M @ u - f)
    if resid > 1e-10 * max(np.linalg.norm(f), 1e-300):
        raise RuntimeError(f"mass solve residual {resid:.3e} too large")
    return u


# dual basis -------------------------------------------------------------

@dataclass
class DualBasis:
    carrier_tet: np.ndarray  # (N,) tet id whose element carries lambda_i
    coeffs: np.ndarray       # (N, 6) coefficients in the carrier's signed basis


def dual_basis(mesh: Mesh, dofmap: DofMap) -> DualBasis:
    """Single-tet dual functions lambda_i with <lambda_i, Psi_j> = delta_ij.

    For DOF i on edge e, the carrier is the first tet sharing e; the local
    coefficients solve the carrier's 6x6 edge mass system against the unit
    vector of e's local slot, using globally signed local basis functions.
    Biorthogonality to every other basis function is automatic because any
    edge overlapping the carrier tet is one of its six edges.
    """
    n = dofmap.n_dofs
    carrier = np.empty(n, dtype=np.int64)
    coeffs = np.empty((n, 6))
    for i, e in enumerate(dofmap.interior_edges):
        t = int(mesh.edge_tets[e][0])
        carrier[i] = t
        el = TetElement(mesh.vertices[mesh.tets[t]])
        s = mesh.tet_edge_signs[t].astype(float)
        m_signed = el.mass_matrix() * np.outer(s, s)
        k_local = int(np.flatnonzero(mesh.tet_edges[t] == e)[0])
        rhs = np.zeros(6)
        rhs[k_local] = 1.0
        coeffs[i] = np.linalg.solve(m_signed, rhs)
    return DualBasis(carrier, coeffs)


def dual_norms(system: GalerkinSystem, dual: DualBasis) -> np.ndarray:
    """L2 norms of the dual functions."""
    out = np.empty(dual.carrier_tet.size)
    for i in range(out.size):
        t = int(dual.carrier_tet[i])
        el = system.elements[t]
        s = system.mesh.tet_edge_signs[t].astype(float)
        m_signed = el.mass_matrix() * np.outer(s, s)
        c = dual.coeffs[i]
        out[i] = np.sqrt(c @ m_signed @ c)
    return out


def local_dof_coeffs(system: GalerkinSystem, t: int, u: np.ndarray) -> np.ndarray:
    """Signed local coefficients on tet t of the global DOF vector u."""
    dofs = system.dofmap.edge_to_dof[system.mesh.tet_edges[t]]
    vals = np.where(dofs >= 0, u[np.clip(dofs, 0, None)], 0.0)
    return system.mesh.tet_edge_signs[t] * vals


def apply_dual_functionals(system: GalerkinSystem, dual: DualBasis,
                           indices, u: np.ndarray) -> np.ndarray:
    """<lambda_i, E_h> for i in indices, integrated over the carrier tets.

    Both lambda_i and u_h are expanded in the carrier's globally signed
    basis, whose Gram matrix is m_signed; the expansion coefficients of
    u_h in that basis are the raw global DOF values.
    """
    out = np.empty(len(indices), dtype=u.dtype)
    for pos, i in enumerate(indices):
        t = int(dual.carrier_tet[i])
        el = system.elements[t]
        s = system.mesh.tet_edge_signs[t].astype(float)
        m_signed = el.mass_matrix() * np.outer(s, s)
        dofs = system.dofmap.edge_to_dof[system.mesh.tet_edges[t]]
        vals = np.where(dofs >= 0, u[np.clip(dofs, 0, None)], 0.0)
        out[pos] = dual.coeffs[i] @ (m_signed @ vals)
    return out


def riesz_rhs(system: GalerkinSystem, dual: DualBasis, indices, b) -> np.ndarray:
    """Load vector of F_b = sum_i b_i lambda_i, i.e. f_j = <F_b, Psi_j>."""
    b = np.asarray(b)
    f = np.zeros(system.n_dofs, dtype=np.result_type(b.dtype, np.float64))
    for pos, i in enumerate(indices):
        t = int(dual.carrier_tet[i])
        el = system.elements[t]
        s = system.mesh.tet_edge_signs[t].astype(float)
        m_signed = el.mass_matrix() * np.outer(s, s)
        weights = m_signed @ dual.coeffs[i]
        dofs = system.dofmap.edge_to_dof[system.mesh.tet_edges[t]]
        keep = dofs >= 0
        np.add.at(f, dofs[keep], b[pos] * weights[keep])
    return f


# region machinery -------------------------------------------------------

@dataclass
class RegionNodalSpace:
    """Nodal space of a union of tets, with boundary vertices of the box
    excluded; used for gradient projections on mesh-conforming regions."""
    system: GalerkinSystem
    tet_ids: np.ndarray
    free_vertices: np.ndarray   # (nf,) vertex ids carrying unknowns
    col_of_vertex: np.ndarray   # (V,) column or -1
    pinned_vertex: int          # grounded vertex id, or -1 when none needed
    gram: np.ndarray            # (nf, nf) gradient Gram matrix
    _solve: object = field(repr=False, default=None, compare=False)

    def solver(self):
        if self._solve is None:
            try:
                c = scipy.linalg.cho_factor(self.gram)
                self._solve = lambda r: scipy.linalg.cho_solve(c, r)
            except np.linalg.LinAlgError:
                g = self.gram
                self._solve = lambda r: np.linalg.lstsq(g, r, rcond=None)[0]
        return self._solve


def region_nodal_space(system: GalerkinSystem, tet_ids) -> RegionNodalSpace:
    mesh = system.mesh
    tet_ids = np.asarray(tet_ids, dtype=np.int64)
    verts = np.unique(mesh.tets[tet_ids])
    free = verts[~mesh.boundary_vertex[verts]]
    pinned = -1
    if free.size == verts.size and free.size > 0:
        # region does not touch the box boundary: constants are in the
        # space, ground the lowest vertex (the gradient is unaffected)
        pinned = int(free[0])
        free = free[1:]
    col = np.full(mesh.n_vertices, -1, dtype=np.int64)
    col[free] = np.arange(free.size)
    gram = np.zeros((free.size, free.size))
    for t in tet_ids:
        el = system.elements[int(t)]
        d = col[mesh.tets[t]]
        keep = d >= 0
        if not keep.any():
            continue
        ij = (d[keep][:, None], d[keep][None, :])
        np.add.at(gram, ij, el.nodal_stiffness()[np.ix_(keep, keep)])
    return RegionNodalSpace(system, tet_ids, free, col, pinned, gram)


def pi_nabla_project(space: RegionNodalSpace, u: np.ndarray) -> np.ndarray:
    """L2(region) projection of the edge field u onto discrete gradients.

    Returns the full-length nodal vector p with p = 0 at box-boundary
    vertices and at the pinned vertex; grad(p) restricted to the region is
    the projection. The projection is a contraction in L2 of the region.
    """
    system = space.system
    mesh = system.mesh
    rhs = np.zeros(space.free_vertices.size, dtype=u.dtype)
    for t in space.tet_ids:
        el = system.elements[int(t)]
        local = local_dof_coeffs(system, int(t), u) @ el.grad_mixed_matrix()
        d = space.col_of_vertex[mesh.tets[t]]
        keep = d >= 0
        np.add.at(rhs, d[keep], local[keep])
    p = np.zeros(mesh.n_vertices, dtype=u.dtype)
    if space.free_vertices.size:
        if np.iscomplexobj(u):
            sol = space.solver()(rhs.real) + 1j * space.solver()(rhs.imag)
        else:
            sol = space.solver()(rhs)
        p[space.free_vertices] = sol
    return p


def gradient_edge_coeffs(system: GalerkinSystem, p: np.ndarray) -> np.ndarray:
    """Edge DOF coefficients of grad(p) for a full-length nodal vector p."""
    edges = system.mesh.edges[system.dofmap.interior_edges]
    return p[edges[:, 1]] - p[edges[:, 0]]


def assemble_region_matrix(system: GalerkinSystem, tet_ids, kind: str):
    """Sparse Gram matrix over DOFs integrating only over the given tets;
    kind is 'mass' or 'curl'."""
    mesh, dofmap = system.mesh, system.dofmap
    rows, cols, vals = [], [], []
    for t in np.asarray(tet_ids, dtype=np.int64):
        el = system.elements[int(t)]
        loc = el.mass_matrix() if kind == "mass" else el.curl_curl_matrix()
        s = mesh.tet_edge_signs[t].astype(float)
        loc = loc * np.outer(s, s)
        dofs = dofmap.edge_to_dof[mesh.tet_edges[t]]
        keep = dofs >= 0
        d = dofs[keep]
        loc = loc[np.ix_(keep, keep)]
        rows.append(np.repeat(d, d.size))
        cols.append(np.tile(d, d.size))
        vals.append(loc.ravel())
    n = dofmap.n_dofs
    if not rows:
        return scipy.sparse.csr_array((n, n))
    return scipy.sparse.csr_array(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n))


def region_l2_norm(system: GalerkinSystem, tet_ids, u: np.ndarray,
                   gram=None) -> float:
    g = assemble_region_matrix(system, tet_ids, "mass") if gram is None else gram
    return float(np.sqrt(max(np.real(np.vdot(u, g @ u)), 0.0)))


# matrix dump ------------------------------------------------------------

def matrix_to_coordinate_text(mat: np.ndarray) -> str:
    """Coordinate text: one 'row col re im' line per entry, 0-based."""
    mat = np.asarray(mat)
    lines = []
    for i in range(mat.shape[0]):
        for j in range(mat.shape[1]):
            v = complex(mat[i, j])
            lines.append(f"{i} {j} {v.real!r} {v.imag!r}")
    return "\n".join(lines) + "\n"
