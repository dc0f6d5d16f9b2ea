#include "vdm/charts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include "vdm/errors.hpp"

namespace vdm {

std::vector<int> BandFilter::band() const {
  std::vector<int> out;
  std::set_intersection(low_set.begin(), low_set.end(), high_set.begin(),
                        high_set.end(), std::back_inserter(out));
  return out;
}

BandFilter make_band(const SpectralBundle& bundle, double a, double a_prime,
                     double t) {
  if (!(a > a_prime && a_prime > 0.0) || !(t > 0.0))
    throw VdmError(ErrorCode::InvalidArgument, "charts",
                   "band needs A > A' > 0 and t > 0",
                   {{"A", a}, {"A_prime", a_prime}, {"t", t}});
  BandFilter f;
  f.a = a;
  f.a_prime = a_prime;
  f.t = t;
  for (int k = 0; k < bundle.k(); ++k) {
    if (bundle.eigenvalues(k) <= a / t) f.low_set.push_back(k);
    if (bundle.eigenvalues(k) > a_prime / t) f.high_set.push_back(k);
  }
  return f;
}

double mu_weight(const SpectralBundle& bundle, const std::vector<int>& ball,
                 int k, int l) {
  if (ball.empty())
    throw VdmError(ErrorCode::InvalidArgument, "charts", "ball is empty");
  if (k < 0 || k >= bundle.k() || l < 0 || l >= bundle.k())
    throw VdmError(ErrorCode::InvalidArgument, "charts",
                   "eigenindex out of range", {{"k", k}, {"l", l}});
  double total = 0.0, mean_k = 0.0, mean_l = 0.0;
  for (int i : ball) {
    if (i < 0 || i >= bundle.m)
      throw VdmError(ErrorCode::InvalidArgument, "charts",
                     "ball index out of range", {{"i", i}});
    const double w = bundle.degrees(i);
    total += w;
    mean_k += w * bundle.field_at(k, i).squaredNorm();
    mean_l += w * bundle.field_at(l, i).squaredNorm();
  }
  mean_k /= total;
  mean_l /= total;
  if (mean_k < 1e-14 || mean_l < 1e-14)
    throw VdmError(ErrorCode::ZeroFieldOnBall, "charts",
                   "eigenvector field vanishes on the ball",
                   {{"k", k}, {"l", l}, {"mean_k", mean_k}, {"mean_l", mean_l}});
  return 1.0 / std::sqrt(mean_k * mean_l);
}

Eigen::VectorXd estimate_gradient(const SpectralBundle& bundle,
                                  const FrameField& frames,
                                  const NeighborGraph& graph,
                                  const PointCloud& cloud, int z, int k,
                                  int l) {
  const int d = bundle.d;
  if (z < 0 || z >= bundle.m)
    throw VdmError(ErrorCode::InvalidArgument, "charts",
                   "center index out of range", {{"z", z}});
  const auto& nbrs = graph.adj[z];
  const int n = static_cast<int>(nbrs.size());
  if (n < d + 1)
    throw VdmError(ErrorCode::InvalidArgument, "charts",
                   "gradient fit needs at least d+1 neighbors",
                   {{"z", z}, {"neighbors", n}, {"d", d}});

  const Eigen::MatrixXd& basis = frames.bases[z];
  const Eigen::VectorXd xz = cloud.points.row(z).transpose();
  Eigen::MatrixXd design(n, d + 1);
  Eigen::VectorXd rhs(n);
  for (int r = 0; r < n; ++r) {
    const NeighborEdge& e = nbrs[r];
    const double sw = std::sqrt(e.w);
    const Eigen::VectorXd diff = cloud.points.row(e.j).transpose() - xz;
    design(r, 0) = sw;
    design.row(r).tail(d) = sw * (basis.transpose() * diff).transpose();
    rhs(r) = sw * bundle.field_at(k, e.j).dot(bundle.field_at(l, e.j));
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues().tail(1)(0);
  const double smax = svd.singularValues()(0);
  if (!(smin > 0.0) || smax / smin > 1e8)
    throw VdmError(ErrorCode::RankDeficient, "charts",
                   "gradient design matrix ill-conditioned",
                   {{"z", z}, {"condition", smin > 0.0 ? smax / smin : 0.0}});
  const Eigen::VectorXd coef = svd.solve(rhs);
  return coef.tail(d);
}

namespace {

// First unit direction orthogonal to the rows of g (the selected gradients):
// the first right-singular vector beyond the row count, deterministically
// sign-fixed. Requires rows < cols.
Eigen::VectorXd null_direction(const Eigen::MatrixXd& g) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeFullV);
  Eigen::VectorXd v = svd.matrixV().col(g.rows());
  int arg = 0;
  for (int i = 1; i < v.size(); ++i)
    if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
  if (v(arg) < 0.0) v = -v;
  return v;
}

}  // namespace

ChartSelection select_chart(const SpectralBundle& bundle,
                            const FrameField& frames,
                            const NeighborGraph& graph,
                            const PointCloud& cloud, int z,
                            const BandFilter& band, double ball_radius,
                            const ChartOptions& opts) {
  const int d = bundle.d;
  if (!(ball_radius > 0.0) || !(opts.c0 > 0.0))
    throw VdmError(ErrorCode::InvalidArgument, "charts",
                   "ball radius and c0 must be positive",
                   {{"ball_radius", ball_radius}, {"c0", opts.c0}});

  const std::vector<double> dist = shortest_paths(graph, z);
  std::vector<int> ball;
  for (int i = 0; i < graph.m; ++i)
    if (dist[i] <= ball_radius) ball.push_back(i);

  const std::vector<int> usable = band.band();
  if (usable.empty())
    throw VdmError(ErrorCode::ChartSearchFailed, "charts",
                   "band filter admits no eigenpairs",
                   {{"A", band.a}, {"A_prime", band.a_prime}, {"t", band.t}});

  // Per-pair data is independent of the greedy step; cache on first use.
  struct PairData {
    double mu;
    Eigen::VectorXd grad;
  };
  std::map<std::array<int, 2>, std::optional<PairData>> cache;
  auto pair_data = [&](int i, int j) -> const std::optional<PairData>& {
    auto it = cache.find({i, j});
    if (it == cache.end()) {
      std::optional<PairData> entry;
      try {
        PairData p{mu_weight(bundle, ball, i, j),
                   estimate_gradient(bundle, frames, graph, cloud, z, i, j)};
        if (p.mu <= opts.mu_cap) entry = std::move(p);
      } catch (const VdmError& e) {
        if (e.code() != ErrorCode::ZeroFieldOnBall) throw;
      }
      it = cache.emplace(std::array<int, 2>{i, j}, std::move(entry)).first;
    }
    return it->second;
  };

  const double threshold = opts.c0 / ball_radius;
  ChartSelection sel;
  sel.center = z;
  sel.radius = ball_radius;
  sel.ball = ball;

  Eigen::MatrixXd gradients(d, d);  // column l = selected gradient g_l
  for (int l = 0; l < d; ++l) {
    Eigen::VectorXd v;
    if (l == 0) {
      v = Eigen::VectorXd::Unit(d, 0);
    } else {
      v = null_direction(gradients.leftCols(l).transpose());
    }

    double best_score = -1.0;
    std::array<int, 2> best_pair{-1, -1};
    for (std::size_t a = 0; a < usable.size(); ++a)
      for (std::size_t b = a; b < usable.size(); ++b) {
        const int i = usable[a], j = usable[b];
        const auto& data = pair_data(i, j);
        if (!data) continue;
        const double score = data->mu * std::abs(v.dot(data->grad));
        if (score > best_score) {
          best_score = score;
          best_pair = {i, j};
        }
      }
    if (best_score < threshold)
      throw VdmError(ErrorCode::ChartSearchFailed, "charts",
                     "no admissible pair at this step",
                     {{"step", l + 1},
                      {"best_score", best_score},
                      {"threshold", threshold}});

    sel.pairs.push_back(best_pair);
    const auto& data = pair_data(best_pair[0], best_pair[1]);
    gradients.col(l) = data->grad;
  }

  // Orthonormalize the selected gradients in order; expressing the gradient
  // records in this frame makes the matrix lower-triangular by construction,
  // and projecting onto the feasible directions can only grow the diagonal
  // past the admissibility threshold.
  Eigen::MatrixXd q(d, d);
  for (int l = 0; l < d; ++l) {
    Eigen::VectorXd v = gradients.col(l);
    for (int k = 0; k < l; ++k) v -= q.col(k).dot(v) * q.col(k);
    const double norm = v.norm();
    if (norm < 1e-14)
      throw VdmError(ErrorCode::NumericalInconsistency, "charts",
                     "selected gradients nearly dependent", {{"step", l + 1}});
    q.col(l) = v / norm;
  }

  sel.directions = q;
  sel.weights.resize(d);
  sel.gradient_matrix.resize(d, d);
  for (int l = 0; l < d; ++l) {
    const auto& data = pair_data(sel.pairs[l][0], sel.pairs[l][1]);
    sel.weights(l) = data->mu;
    for (int k = 0; k < d; ++k)
      sel.gradient_matrix(l, k) = data->mu * q.col(k).dot(gradients.col(l));
  }
  return sel;
}

int best_chart_center(const SpectralBundle& bundle, const FrameField& frames,
                      const NeighborGraph& graph, const PointCloud& cloud,
                      const BandFilter& band, double ball_radius,
                      const ChartOptions& opts) {
  // Rank admissible centers by the weakest selected gradient, renormalized
  // from the ball-local mu to the global-mean mu of the same pair. The
  // ball-local weight grows wherever a field nearly vanishes, which rewards
  // exactly the centers whose charts fold inside the ball; at the global
  // scale the strongest gradient sits midway between critical points of the
  // pair field.
  std::vector<int> everything(bundle.m);
  for (int i = 0; i < bundle.m; ++i) everything[i] = i;
  std::map<std::array<int, 2>, double> global_mu;
  auto mu_g = [&](int i, int j) {
    auto it = global_mu.find({i, j});
    if (it == global_mu.end())
      it = global_mu.emplace(std::array<int, 2>{i, j},
                             mu_weight(bundle, everything, i, j))
               .first;
    return it->second;
  };

  int best = -1;
  double best_margin = -1.0;
  std::optional<VdmError> last_error;
  for (int z = 0; z < bundle.m; ++z) {
    try {
      const ChartSelection sel = select_chart(bundle, frames, graph, cloud, z,
                                              band, ball_radius, opts);
      double margin = std::numeric_limits<double>::infinity();
      for (int l = 0; l < sel.gradient_matrix.rows(); ++l) {
        const double grad = std::abs(sel.gradient_matrix(l, l)) /
                            sel.weights(l) *
                            mu_g(sel.pairs[l][0], sel.pairs[l][1]);
        margin = std::min(margin, grad);
      }
      if (margin > best_margin) {
        best_margin = margin;
        best = z;
      }
    } catch (const VdmError& e) {
      last_error = e;
    }
  }
  if (best < 0) {
    if (last_error) throw *last_error;
    throw VdmError(ErrorCode::ChartSearchFailed, "charts",
                   "no center admits a chart", {});
  }
  return best;
}

DistortionRange measure_distortion(const ChartSelection& sel,
                                   const SpectralBundle& bundle,
                                   const NeighborGraph& graph,
                                   const std::vector<int>& ball) {
  if (ball.size() < 2)
    throw VdmError(ErrorCode::InvalidArgument, "charts",
                   "distortion needs at least two ball points");
  const int n = static_cast<int>(sel.pairs.size());
  Eigen::MatrixXd phi(static_cast<int>(ball.size()), n);
  for (std::size_t r = 0; r < ball.size(); ++r)
    for (int l = 0; l < n; ++l)
      phi(static_cast<int>(r), l) =
          sel.weights(l) * bundle.field_at(sel.pairs[l][0], ball[r])
                               .dot(bundle.field_at(sel.pairs[l][1], ball[r]));

  DistortionRange range;
  range.c_lo = std::numeric_limits<double>::infinity();
  range.c_hi = 0.0;
  for (std::size_t a = 0; a < ball.size(); ++a) {
    const std::vector<double> dist = shortest_paths(graph, ball[a]);
    for (std::size_t b = a + 1; b < ball.size(); ++b) {
      const double ratio =
          (phi.row(a) - phi.row(b)).norm() / dist[ball[b]];
      range.c_lo = std::min(range.c_lo, ratio);
      range.c_hi = std::max(range.c_hi, ratio);
    }
  }
  return range;
}

}  // namespace vdm
