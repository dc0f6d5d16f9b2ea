#include "vdm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "vdm/errors.hpp"
#include "vdm/rng.hpp"

namespace vdm {

namespace {

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

nlohmann::json report_to_json(const CheckReport& report) {
  return {{"name", report.name},
          {"pass", report.pass},
          {"statistic", finite_or_null(report.statistic)},
          {"threshold", finite_or_null(report.threshold)},
          {"details", report.details}};
}

nlohmann::json reports_to_json(const std::vector<CheckReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  return arr;
}

int first_cluster(const Eigen::VectorXd& eigenvalues, double rel_gap) {
  const int k = static_cast<int>(eigenvalues.size());
  for (int c = 1; c < k; ++c) {
    if (eigenvalues(c) - eigenvalues(c - 1) >
        rel_gap * std::max(eigenvalues(c), 1e-12))
      return c;
  }
  return k;
}

CheckReport check_sphere_analytic(const SpectralBundle& bundle,
                                  const FrameField& frames,
                                  const std::vector<SphereFrameSample>& samples,
                                  double tol) {
  if (bundle.d != 2)
    throw VdmError(ErrorCode::InvalidArgument, "verify",
                   "sphere check needs a d=2 bundle", {{"d", bundle.d}});
  if (static_cast<int>(samples.size()) != bundle.m ||
      frames.m() != bundle.m)
    throw VdmError(ErrorCode::InvalidArgument, "verify",
                   "samples, frames and bundle disagree on m");

  const int cluster = first_cluster(bundle.eigenvalues);
  if (cluster != 6)
    throw VdmError(ErrorCode::MultiplicityMismatch, "verify",
                   "leading eigenvalue cluster is not 6-dimensional",
                   {{"found", cluster}});

  // Cross-covariance between the numerical fields U_i (2x6) and the frame
  // coordinates of the analytic family, in the degree-weighted pairing.
  std::vector<Eigen::Matrix<double, 2, 6>> numeric(bundle.m);
  Eigen::Matrix<double, 6, 6> cross = Eigen::Matrix<double, 6, 6>::Zero();
  double mean_trace = 0.0, total_weight = 0.0;
  for (int i = 0; i < bundle.m; ++i) {
    Eigen::Matrix<double, 2, 6> u;
    for (int a = 0; a < 6; ++a) u.col(a) = bundle.field_at(a, i);
    numeric[i] = u;

    Eigen::Matrix<double, 2, 6> xi;
    for (int a = 0; a < 6; ++a)
      xi.col(a) =
          frames.bases[i].transpose() * analytic_sphere_field(samples[i], a);

    const double w = bundle.degrees(i);
    cross += w * u.transpose() * xi;
    mean_trace += w * u.squaredNorm();
    total_weight += w;
  }
  mean_trace /= total_weight;

  Eigen::JacobiSVD<Eigen::Matrix<double, 6, 6>> svd(
      cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix<double, 6, 6> q = svd.matrixU() * svd.matrixV().transpose();
  const double q_defect =
      (q.transpose() * q - Eigen::Matrix<double, 6, 6>::Identity()).norm();

  // The analytic Gram has trace 4 at every point (two copies of the tangent
  // projector); one global scale matches the degree-weighted mean trace.
  const double scale = 4.0 / mean_trace;

  double worst = 0.0;
  int worst_point = -1;
  for (int i = 0; i < bundle.m; ++i) {
    const Eigen::Matrix<double, 6, 6> gram =
        scale * q.transpose() * numeric[i].transpose() * numeric[i] * q;
    const double err = (gram - analytic_sphere_gram(samples[i])).norm();
    if (err > worst) {
      worst = err;
      worst_point = i;
    }
  }

  CheckReport report;
  report.name = "sphere_analytic";
  report.statistic = worst;
  report.threshold = tol;
  report.pass = worst <= tol;
  report.details = {{"direction", "<="},
                    {"cluster", cluster},
                    {"scale", scale},
                    {"mean_trace", mean_trace},
                    {"q_orthogonality_defect", q_defect},
                    {"worst_point", worst_point},
                    {"cluster_eigenvalues",
                     std::vector<double>(bundle.eigenvalues.data(),
                                         bundle.eigenvalues.data() + 6)}};
  return report;
}

CheckReport check_rp2(const SpectralBundle& bundle,
                      const std::vector<std::array<int, 2>>& antipodal_pairs,
                      const std::vector<std::array<int, 2>>& far_pairs,
                      double t, double tol) {
  if (!(t > 0.0))
    throw VdmError(ErrorCode::InvalidArgument, "verify",
                   "diffusion time must be positive", {{"t", t}});
  if (antipodal_pairs.empty())
    throw VdmError(ErrorCode::InvalidArgument, "verify",
                   "no antipodal pairs supplied");

  const int cluster = first_cluster(bundle.eigenvalues);
  if (cluster != 6)
    throw VdmError(ErrorCode::MultiplicityMismatch, "verify",
                   "leading eigenvalue cluster is not 6-dimensional",
                   {{"found", cluster}});

  // Micro-clusters inside the leading cluster, by the solver gap rule; each
  // segment sum is invariant to the eigenbasis the solver happened to pick.
  const Eigen::VectorXd head = bundle.eigenvalues.head(cluster);
  const std::vector<int> bounds =
      gap_positions(head, bundle.meta.gap_tol, true);
  if (bounds.size() < 3)
    throw VdmError(ErrorCode::MultiplicityMismatch, "verify",
                   "leading cluster has fewer than three micro-clusters",
                   {{"micro_clusters", bounds.size()}});

  std::vector<int> sizes;
  Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(bundle.m, 3);
  int start = 0;
  for (int g = 0; g < static_cast<int>(bounds.size()); ++g) {
    const int stop = bounds[g];
    if (g < 3)
      for (int k = start; k < stop; ++k) {
        const double w = std::exp(-2.0 * bundle.eigenvalues(k) * t);
        for (int i = 0; i < bundle.m; ++i)
          coords(i, g) += w * bundle.field_at(k, i).squaredNorm();
      }
    sizes.push_back(stop - start);
    start = stop;
  }

  double diameter = 0.0;
  for (int i = 0; i < bundle.m; ++i)
    for (int j = i + 1; j < bundle.m; ++j)
      diameter =
          std::max(diameter, (coords.row(i) - coords.row(j)).norm());
  if (!(diameter > 0.0))
    throw VdmError(ErrorCode::NumericalInconsistency, "verify",
                   "diagonal map image has zero spread");

  std::set<std::array<int, 2>> antipodal_set;
  double collapse = 0.0;
  for (const auto& [i, j] : antipodal_pairs) {
    if (i < 0 || j < 0 || i >= bundle.m || j >= bundle.m || i == j)
      throw VdmError(ErrorCode::InvalidArgument, "verify",
                     "antipodal pair invalid", {{"i", i}, {"j", j}});
    antipodal_set.insert({std::min(i, j), std::max(i, j)});
    collapse =
        std::max(collapse, (coords.row(i) - coords.row(j)).norm());
  }
  collapse /= diameter;

  double separation = std::numeric_limits<double>::infinity();
  int used_far = 0;
  for (const auto& [i, j] : far_pairs) {
    if (i < 0 || j < 0 || i >= bundle.m || j >= bundle.m || i == j)
      throw VdmError(ErrorCode::InvalidArgument, "verify",
                     "far pair invalid", {{"i", i}, {"j", j}});
    if (antipodal_set.count({std::min(i, j), std::max(i, j)})) continue;
    ++used_far;
    separation =
        std::min(separation, (coords.row(i) - coords.row(j)).norm());
  }
  separation /= diameter;

  CheckReport report;
  report.name = "rp2_identification";
  report.statistic = collapse;
  report.threshold = tol;
  report.pass = collapse < tol;
  report.details = {{"direction", "<"},
                    {"separation", finite_or_null(separation)},
                    {"separation_over_collapse",
                     finite_or_null(collapse > 0.0 ? separation / collapse
                                                   : std::numeric_limits<
                                                         double>::infinity())},
                    {"non_antipodal_far_pairs", used_far},
                    {"micro_cluster_sizes", sizes},
                    {"image_diameter", diameter}};
  return report;
}

CheckReport check_cauchy_schwarz(const SpectralBundle& bundle, double t, int n,
                                 int trials, std::uint64_t seed) {
  if (trials < 1)
    throw VdmError(ErrorCode::InvalidArgument, "verify",
                   "need at least one trial", {{"trials", trials}});
  const HsEvaluator hs(bundle, t, n);
  Rng rng(seed);
  double worst = std::numeric_limits<double>::infinity();
  std::array<int, 2> worst_pair{-1, -1};
  for (int trial = 0; trial < trials; ++trial) {
    const int i = static_cast<int>(rng.uniform_index(bundle.m));
    const int j = static_cast<int>(rng.uniform_index(bundle.m));
    const double off = hs(i, j);
    const double margin = hs.diagonal(i) * hs.diagonal(j) - off * off;
    if (margin < worst) {
      worst = margin;
      worst_pair = {i, j};
    }
  }

  CheckReport report;
  report.name = "cauchy_schwarz";
  report.statistic = worst;
  report.threshold = -1e-12;
  report.pass = worst >= -1e-12;
  report.details = {{"direction", ">="},
                    {"trials", trials},
                    {"truncation", hs.truncation()},
                    {"t", t},
                    {"worst_pair", worst_pair}};
  return report;
}

CheckReport check_weyl_growth(const SpectralBundle& bundle, int n_intrinsic) {
  if (n_intrinsic < 1)
    throw VdmError(ErrorCode::InvalidArgument, "verify",
                   "intrinsic dimension must be positive",
                   {{"n", n_intrinsic}});
  std::vector<double> positive;
  int zeros = 0;
  for (int k = 0; k < bundle.k(); ++k) {
    if (bundle.eigenvalues(k) > 1e-12)
      positive.push_back(bundle.eigenvalues(k));
    else
      ++zeros;
  }
  const int p = static_cast<int>(positive.size());
  if (p < 50)
    throw VdmError(ErrorCode::InsufficientSpectrum, "verify",
                   "need at least 50 positive eigenvalues",
                   {{"positive", p}});
  const int lo = p / 4;
  const int hi = (3 * p) / 4;
  if (hi - lo < 10)
    throw VdmError(ErrorCode::InsufficientSpectrum, "verify",
                   "fit window has fewer than 10 points",
                   {{"window", hi - lo}});

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const int count = hi - lo;
  for (int r = lo; r < hi; ++r) {
    const double x = std::log(positive[r]);
    const double y = std::log(static_cast<double>(zeros + r + 1));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = count * sxx - sx * sx;
  if (std::abs(denom) < 1e-12)
    throw VdmError(ErrorCode::InsufficientSpectrum, "verify",
                   "eigenvalues in the fit window are numerically equal");
  const double slope = (count * sxy - sx * sy) / denom;
  const double expected = n_intrinsic / 2.0;

  CheckReport report;
  report.name = "weyl_growth";
  report.statistic = std::abs(slope - expected);
  report.threshold = 0.3 * expected;
  report.pass = report.statistic < report.threshold;
  report.details = {{"direction", "<"},
                    {"slope", slope},
                    {"expected", expected},
                    {"window_lo", lo},
                    {"window_hi", hi},
                    {"positive", p},
                    {"zero_modes", zeros}};
  return report;
}

CheckReport check_remainder_decay(const SpectralBundle& bundle, double t,
                                  const std::vector<int>& gaps,
                                  double ratio_threshold) {
  if (gaps.size() < 3)
    throw VdmError(ErrorCode::InvalidArgument, "verify",
                   "need at least three gap-aligned truncations",
                   {{"gaps", gaps.size()}});
  std::vector<double> remainders;
  remainders.reserve(gaps.size());
  for (int n : gaps) remainders.push_back(partial_remainder(bundle, t, n));

  bool monotone = true;
  double worst_ratio = 0.0;
  for (std::size_t s = 1; s < remainders.size(); ++s) {
    if (remainders[s] > remainders[s - 1] + 1e-14) monotone = false;
    if (remainders[s - 1] > 0.0)
      worst_ratio = std::max(worst_ratio, remainders[s] / remainders[s - 1]);
  }

  CheckReport report;
  report.name = "remainder_decay";
  report.statistic = worst_ratio;
  report.threshold = ratio_threshold;
  report.pass = monotone && worst_ratio < ratio_threshold;
  report.details = {{"direction", "<"},
                    {"monotone", monotone},
                    {"t", t},
                    {"gaps", gaps},
                    {"remainders", remainders}};
  return report;
}

CheckReport kato_ratio_diagnostic(const SpectralBundle& bundle,
                                  const ScalarBaseline& baseline, double t) {
  if (baseline.fields.rows() != bundle.m)
    throw VdmError(ErrorCode::InvalidArgument, "verify",
                   "baseline and bundle disagree on m");
  const HsEvaluator hs(bundle, t, bundle.k());
  const int a_count = static_cast<int>(baseline.eigenvalues.size());
  double worst = 0.0;
  for (int i = 0; i < bundle.m; ++i) {
    const double scalar = dm_heat_kernel(baseline, t, a_count, i, i);
    if (scalar <= 0.0) continue;
    worst = std::max(worst, std::sqrt(hs.diagonal(i)) / scalar);
  }

  CheckReport report;
  report.name = "kato_ratio";
  report.statistic = worst;
  report.threshold = std::numeric_limits<double>::infinity();
  report.pass = true;
  report.details = {{"direction", "diagnostic"},
                    {"t", t},
                    {"vector_truncation", bundle.k()},
                    {"scalar_truncation", a_count}};
  return report;
}

}  // namespace vdm
