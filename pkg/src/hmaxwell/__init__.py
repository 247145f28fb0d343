"""Lowest-order edge-element Maxwell systems on Kuhn-triangulated boxes,
blockwise low-rank compression of their dense inverses, and the local
harmonic-analysis experiments that explain why the compression works.
"""

__version__ = "0.1.0"

from .cluster import (BlockPartition, Cluster, ClusterTree, box_distance,
                      build_block_partition, build_cluster_tree, is_admissible,
                      sparsity_constant, tiling_defect)
from .fem import (DofMap, DualBasis, GalerkinSystem, NodalSpace,
                  RegionNodalSpace, assemble_system, build_dof_map,
                  build_nodal_space, discrete_gradient, dual_basis, dual_norms,
                  gradient_edge_coeffs, hcurl_norm, l2_project,
                  pi_nabla_project, region_nodal_space, rhs_vector,
                  solve_system)
from .harmonic import (BoxRegion, CaccioppoliResult, ConcentricPair,
                       HarmonicSpace, caccioppoli_ratio, constraint_residual,
                       default_pairs, exact_sequence_recover,
                       gradient_part_harmonic_check, harmonic_space,
                       helmholtz_report, local_helmholtz,
                       tets_inside_box, tets_intersecting_box)
from .hmatrix import (DenseBlock, HMatrix, LowRankBlock, StorageStats,
                      compress_adaptive, compress_dense, matvec, rmatvec,
                      spectral_error, storage_stats, to_dense, truncated_svd)
from .inverse_lab import (DecayFit, SweepRow, block_svd, dense_inverse,
                          fit_decay, rank_sweep, theorem_transfer_check)
from .mesh import (Mesh, build_box_mesh, conformity_report, mesh_width,
                   shape_regularity_constant, support_tets)
from .whitney import (LOCAL_EDGES, TetElement, local_whitney,
                      make_polynomial_field)
