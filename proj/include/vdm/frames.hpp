#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "vdm/graph.hpp"
#include "vdm/types.hpp"

namespace vdm {

// Orthonormal tangent bases from weighted local PCA.
struct FrameField {
  int d = 0;
  std::vector<Eigen::MatrixXd> bases;     // one p x d basis per point
  std::vector<Eigen::VectorXd> spectra;   // covariance eigenvalues, descending

  int m() const { return static_cast<int>(bases.size()); }
  int p() const { return bases.empty() ? 0 : static_cast<int>(bases[0].rows()); }
};

// Weighted covariance C_i = sum_j w_ij (x_j - x_i)(x_j - x_i)^T / sum_j w_ij
// over graph neighbors; basis = top-d eigenvectors, each column's sign fixed
// so its largest-magnitude entry is positive (first such entry on ties).
// Throws RankDeficient when the d-th and (d+1)-th covariance eigenvalues
// agree within 1e-12 (tangent space ambiguous), InvalidArgument when some
// vertex has fewer than d neighbors.
FrameField estimate_frames(const PointCloud& cloud, const NeighborGraph& graph,
                           int d);

// Orthogonal alignment of neighboring bases: O = argmin over O(d) of
// ||B_i^T B_j - O||_F, i.e. the polar factor U V^T of B_i^T B_j. With
// special = true the result is pushed into SO(d) by flipping the column of U
// carrying the smallest singular value when det(U V^T) < 0. Throws
// NearSingularAlignment when the smallest singular value of B_i^T B_j falls
// below 1e-8.
Eigen::MatrixXd connect(const Eigen::MatrixXd& basis_i,
                        const Eigen::MatrixXd& basis_j, bool special);

// Per-edge connection matrices, stored once for i < j; O_ji = O_ij^T.
struct ConnectionGraph {
  NeighborGraph graph;
  int d = 0;
  bool special = false;
  std::vector<std::array<int, 2>> edge_list;   // canonical i < j order
  std::vector<Eigen::MatrixXd> connections;    // aligned with edge_list
};

ConnectionGraph build_connections(const FrameField& frames,
                                  const NeighborGraph& graph, bool special);

// Random per-point orthogonal change of basis B_i <- B_i Q_i (Haar Q_i via
// QR sign-fixed Gaussians). Used by gauge-invariance tests; everything
// observable downstream must be unchanged by this.
FrameField regauge(const FrameField& frames, std::uint64_t seed);

}  // namespace vdm
