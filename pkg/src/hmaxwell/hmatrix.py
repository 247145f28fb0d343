"""Blockwise low-rank matrix format over a block partition.

Far (admissible) blocks hold truncated-SVD factors X Y^H with orthonormal
columns in X, which is the spectral-norm-optimal rank-r approximation of the
block. Near blocks are stored dense and exactly. The format supports matvec,
its conjugate transpose, storage accounting and a power-iteration estimate
of the spectral norm of the approximation error against a dense source.
"""

from dataclasses import dataclass

import numpy as np

from .cluster import BlockPartition, sparsity_constant


@dataclass
class LowRankBlock:
    rows: np.ndarray
    cols: np.ndarray
    X: np.ndarray  # (|rows|, r), orthonormal columns
    Y: np.ndarray  # (|cols|, r); the block is X @ Y^H

    @property
    def rank(self):
        return int(self.X.shape[1])


@dataclass
class DenseBlock:
    rows: np.ndarray
    cols: np.ndarray
    data: np.ndarray


@dataclass
class HMatrix:
    shape: tuple
    far: list
    near: list
    partition: BlockPartition


@dataclass
class StorageStats:
    scalars_far: int
    scalars_near: int
    scalar_count: int
    bytes_far: int
    bytes_near: int
    bound_scalars: int  # C_sp * (depth + 1) * r_max * N


def truncated_svd(block: np.ndarray, rank: int):
    """Factors (X, Y) of the best rank-r approximation, plus all singular
    values of the block."""
    try:
        u, s, vh = np.linalg.svd(block, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"SVD failed on a {block.shape} block") from exc
    r = min(rank, s.size)
    return u[:, :r], (vh[:r].conj().T) * s[:r], s


def compress_dense(dense: np.ndarray, partition: BlockPartition, rank: int) -> HMatrix:
    """Replace far blocks by rank-min(rank, dims) truncated SVDs; copy near
    blocks verbatim."""
    if rank < 0:
        raise ValueError("rank must be >= 0")
    far, near = [], []
    for t, s in partition.far:
        sub = dense[np.ix_(t.indices, s.indices)]
        try:
            x, y, _ = truncated_svd(sub, rank)
        except RuntimeError as exc:
            raise RuntimeError(f"block ({t.id},{s.id}): {exc}") from exc
        far.append(LowRankBlock(t.indices, s.indices, x, y))
    for t, s in partition.near:
        near.append(DenseBlock(t.indices, s.indices,
                               dense[np.ix_(t.indices, s.indices)].copy()))
    return HMatrix(dense.shape, far, near, partition)


def compress_adaptive(dense: np.ndarray, partition: BlockPartition, tol: float) -> HMatrix:
    """Per-block rank chosen as the smallest r with sigma_{r+1} <= tol*sigma_1."""
    far, near = [], []
    for t, s in partition.far:
        sub = dense[np.ix_(t.indices, s.indices)]
        u, sv, vh = np.linalg.svd(sub, full_matrices=False)
        r = int((sv > tol * sv[0]).sum()) if sv.size and sv[0] > 0 else 0
        far.append(LowRankBlock(t.indices, s.indices,
                                u[:, :r], (vh[:r].conj().T) * sv[:r]))
    for t, s in partition.near:
        near.append(DenseBlock(t.indices, s.indices,
                               dense[np.ix_(t.indices, s.indices)].copy()))
    return HMatrix(dense.shape, far, near, partition)


def matvec(h: HMatrix, x: np.ndarray) -> np.ndarray:
    dt = np.result_type(x.dtype, *(b.data.dtype for b in h.near),
                        *(b.X.dtype for b in h.far), np.float64)
    y = np.zeros(h.shape[0], dtype=dt)
    for b in h.far:
        y[b.rows] += b.X @ (b.Y.conj().T @ x[b.cols])
    for b in h.near:
        y[b.rows] += b.data @ x[b.cols]
    return y


def rmatvec(h: HMatrix, x: np.ndarray) -> np.ndarray:
    """Conjugate-transpose matvec."""
    dt = np.result_type(x.dtype, *(b.data.dtype for b in h.near),
                        *(b.X.dtype for b in h.far), np.float64)
    y = np.zeros(h.shape[1], dtype=dt)
    for b in h.far:
        y[b.cols] += b.Y @ (b.X.conj().T @ x[b.rows])
    for b in h.near:
        y[b.cols] += b.data.conj().T @ x[b.rows]
    return y


def to_dense(h: HMatrix) -> np.ndarray:
    dt = np.result_type(*(b.data.dtype for b in h.near),
                        *(b.X.dtype for b in h.far), np.float64)
    out = np.zeros(h.shape, dtype=dt)
    for b in h.far:
        out[np.ix_(b.rows, b.cols)] = b.X @ b.Y.conj().T
    for b in h.near:
        out[np.ix_(b.rows, b.cols)] = b.data
    return out


def spectral_error(dense: np.ndarray, h: HMatrix, tol: float = 1e-4,
                   max_iter: int = 500, seed: int = 0):
    """Power iteration for ||dense - h||_2 on E E^H; returns (estimate,
    converged)."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    n = dense.shape[0]
    cplx = np.iscomplexobj(dense) or any(np.iscomplexobj(b.X) for b in h.far) \
        or any(np.iscomplexobj(b.data) for b in h.near)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    if cplx:
        v = v + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    dense_h = dense.conj().T
    floor = (np.finfo(float).eps * max(np.linalg.norm(dense, "fro"), 1e-300)) ** 2

    def e_apply(x):
        return dense @ x - matvec(h, x)

    def eh_apply(x):
        return dense_h @ x - rmatvec(h, x)

    lam_prev = None
    lam = 0.0
    converged = False
    for _ in range(max_iter):
        w = eh_apply(v)
        lam = float(np.real(np.vdot(w, w)))  # = v^H E E^H v for unit v
        if lam <= floor:
            return 0.0, True
        if lam_prev is not None and abs(lam - lam_prev) <= tol * lam:
            converged = True
            break
        lam_prev = lam
        v = e_apply(w)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0, True
        v /= nv
    return float(np.sqrt(lam)), converged


def storage_stats(h: HMatrix) -> StorageStats:
    scal_far = sum(b.X.size + b.Y.size for b in h.far)
    scal_near = sum(b.data.size for b in h.near)
    bytes_far = sum(b.X.nbytes + b.Y.nbytes for b in h.far)
    bytes_near = sum(b.data.nbytes for b in h.near)
    r_max = max((b.rank for b in h.far), default=0)
    c_sp = sparsity_constant(h.partition)
    depth = h.partition.tree.depth
    n = h.shape[0]
    return StorageStats(int(scal_far), int(scal_near), int(scal_far + scal_near),
                        int(bytes_far), int(bytes_near),
                        int(c_sp * (depth + 1) * r_max * n))


def hmatrix_manifest(h: HMatrix) -> dict:
    """JSON-ready description of the block structure and per-block ranks."""
    return {
        "shape": list(h.shape),
        "eta": h.partition.eta,
        "far": [{
            "tau": t.id, "sigma": s.id, "rank": b.rank,
            "rows": int(b.X.shape[0]), "cols": int(b.Y.shape[0]),
        } for (t, s), b in zip(h.partition.far, h.far)],
        "near": [{
            "tau": t.id, "sigma": s.id,
            "rows": int(b.data.shape[0]), "cols": int(b.data.shape[1]),
        } for (t, s), b in zip(h.partition.near, h.near)],
    }
