#include "vdm/frames.hpp"

#include <cmath>

#include "vdm/rng.hpp"

namespace vdm {

namespace {

// Largest-|entry| positive, scanning from the top on ties.
void fix_column_sign(Eigen::Ref<Eigen::VectorXd> col) {
  int arg = 0;
  double best = -1.0;
  for (int i = 0; i < col.size(); ++i)
    if (std::abs(col(i)) > best) {
      best = std::abs(col(i));
      arg = i;
    }
  if (col(arg) < 0.0) col = -col;
}

}  // namespace

FrameField estimate_frames(const PointCloud& cloud, const NeighborGraph& graph,
                           int d) {
  const int m = cloud.m();
  const int p = cloud.p();
  if (graph.m != m)
    throw VdmError(ErrorCode::InvalidArgument, "frames",
                   "graph and cloud sizes differ",
                   {{"graph_m", graph.m}, {"cloud_m", m}});
  if (d < 1 || d > p)
    throw VdmError(ErrorCode::InvalidArgument, "frames",
                   "need 1 <= d <= p", {{"d", d}, {"p", p}});

  FrameField frames;
  frames.d = d;
  frames.bases.resize(m);
  frames.spectra.resize(m);

  Eigen::MatrixXd cov(p, p);
  for (int i = 0; i < m; ++i) {
    const auto& nbrs = graph.adj[i];
    if (static_cast<int>(nbrs.size()) < d)
      throw VdmError(ErrorCode::InvalidArgument, "frames",
                     "vertex has fewer than d neighbors",
                     {{"i", i}, {"neighbors", nbrs.size()}, {"d", d}});
    cov.setZero();
    double wsum = 0.0;
    for (const auto& e : nbrs) {
      const Eigen::VectorXd diff =
          (cloud.points.row(e.j) - cloud.points.row(i)).transpose();
      cov.noalias() += e.w * diff * diff.transpose();
      wsum += e.w;
    }
    cov /= wsum;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success)
      throw VdmError(ErrorCode::ConvergenceFailure, "frames",
                     "local covariance eigendecomposition failed", {{"i", i}});
    // Eigen sorts ascending; flip to descending.
    Eigen::VectorXd vals = eig.eigenvalues().reverse();
    if (d < p && vals(d - 1) - vals(d) < 1e-12)
      throw VdmError(ErrorCode::RankDeficient, "frames",
                     "tangent space ambiguous: covariance eigenvalues d and "
                     "d+1 coincide",
                     {{"i", i},
                      {"lambda_d", vals(d - 1)},
                      {"lambda_d1", vals(d)}});
    Eigen::MatrixXd basis(p, d);
    for (int k = 0; k < d; ++k) {
      basis.col(k) = eig.eigenvectors().col(p - 1 - k);
      fix_column_sign(basis.col(k));
    }
    frames.bases[i] = std::move(basis);
    frames.spectra[i] = std::move(vals);
  }
  return frames;
}

Eigen::MatrixXd connect(const Eigen::MatrixXd& basis_i,
                        const Eigen::MatrixXd& basis_j, bool special) {
  const Eigen::MatrixXd cross = basis_i.transpose() * basis_j;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const int d = static_cast<int>(cross.rows());
  const double sigma_min = svd.singularValues()(d - 1);
  if (sigma_min < 1e-8)
    throw VdmError(ErrorCode::NearSingularAlignment, "frames",
                   "tangent bases nearly orthogonal; alignment unstable",
                   {{"sigma_min", sigma_min}});
  Eigen::MatrixXd u = svd.matrixU();
  Eigen::MatrixXd o = u * svd.matrixV().transpose();
  if (special && o.determinant() < 0.0) {
    u.col(d - 1) = -u.col(d - 1);
    o = u * svd.matrixV().transpose();
  }
  return o;
}

ConnectionGraph build_connections(const FrameField& frames,
                                  const NeighborGraph& graph, bool special) {
  if (frames.m() != graph.m)
    throw VdmError(ErrorCode::InvalidArgument, "frames",
                   "frame field and graph sizes differ");
  ConnectionGraph conn;
  conn.graph = graph;
  conn.d = frames.d;
  conn.special = special;
  conn.edge_list = graph.edges();
  conn.connections.reserve(conn.edge_list.size());
  for (const auto& [i, j] : conn.edge_list)
    conn.connections.push_back(connect(frames.bases[i], frames.bases[j], special));
  return conn;
}

FrameField regauge(const FrameField& frames, std::uint64_t seed) {
  Rng rng(seed);
  FrameField out = frames;
  const int d = frames.d;
  for (auto& basis : out.bases) {
    Eigen::MatrixXd g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR();
    for (int k = 0; k < d; ++k)
      if (r(k, k) < 0.0) q.col(k) = -q.col(k);
    basis = basis * q;
  }
  return out;
}

}  // namespace vdm
