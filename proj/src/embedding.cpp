#include "vdm/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vdm {

int extend_to_gap(const SpectralBundle& bundle, int n) {
  if (n < 1 || n > bundle.k())
    throw VdmError(ErrorCode::InvalidArgument, "embedding",
                   "truncation must lie in 1..K",
                   {{"n", n}, {"K", bundle.k()}});
  for (int g : bundle.gaps)
    if (g >= n) return g;
  throw VdmError(ErrorCode::TruncationInsideCluster, "embedding",
                 "no spectral gap at or beyond requested truncation",
                 {{"n", n}, {"K", bundle.k()}});
}

HsEvaluator::HsEvaluator(const SpectralBundle& bundle, double t, int n)
    : bundle_(bundle), n_(extend_to_gap(bundle, n)) {
  if (!(t > 0.0))
    throw VdmError(ErrorCode::InvalidArgument, "embedding",
                   "diffusion time must be positive", {{"t", t}});
  weights_.resize(n_, n_);
  for (int k = 0; k < n_; ++k)
    for (int l = 0; l < n_; ++l)
      weights_(k, l) =
          std::exp(-(bundle.eigenvalues(k) + bundle.eigenvalues(l)) * t);
}

Eigen::MatrixXd HsEvaluator::gram_at(int i) const {
  Eigen::MatrixXd g(n_, n_);
  for (int k = 0; k < n_; ++k) {
    const auto uk = bundle_.fields.col(k).segment(i * bundle_.d, bundle_.d);
    for (int l = 0; l <= k; ++l) {
      const auto ul = bundle_.fields.col(l).segment(i * bundle_.d, bundle_.d);
      const double v = uk.dot(ul);
      g(k, l) = v;
      g(l, k) = v;
    }
  }
  return g;
}

double HsEvaluator::operator()(int i, int j) const {
  if (i < 0 || i >= bundle_.m || j < 0 || j >= bundle_.m)
    throw VdmError(ErrorCode::InvalidArgument, "embedding",
                   "point index out of range", {{"i", i}, {"j", j}});
  const Eigen::MatrixXd gi = gram_at(i);
  const Eigen::MatrixXd gj = (i == j) ? gi : gram_at(j);
  return (weights_.array() * gi.array() * gj.array()).sum();
}

EmbeddingResult vdm_embed(const SpectralBundle& bundle, double t, int n) {
  if (!(t > 0.0))
    throw VdmError(ErrorCode::InvalidArgument, "embedding",
                   "diffusion time must be positive", {{"t", t}});
  const int n_eff = extend_to_gap(bundle, n);

  EmbeddingResult result;
  result.t = t;
  result.n = n_eff;
  result.coords.resize(bundle.m, n_eff * n_eff);
  Eigen::MatrixXd half(n_eff, n_eff);
  for (int k = 0; k < n_eff; ++k)
    for (int l = 0; l < n_eff; ++l)
      half(k, l) =
          std::exp(-(bundle.eigenvalues(k) + bundle.eigenvalues(l)) * t / 2.0);

  for (int i = 0; i < bundle.m; ++i)
    for (int k = 0; k < n_eff; ++k) {
      const auto uk = bundle.fields.col(k).segment(i * bundle.d, bundle.d);
      for (int l = 0; l < n_eff; ++l) {
        const auto ul = bundle.fields.col(l).segment(i * bundle.d, bundle.d);
        result.coords(i, k * n_eff + l) = half(k, l) * uk.dot(ul);
      }
    }
  if (!result.coords.allFinite())
    throw VdmError(ErrorCode::NumericalInconsistency, "embedding",
                   "non-finite embedding coordinates");
  return result;
}

double hs_kernel(const SpectralBundle& bundle, double t, int n, int i, int j) {
  return HsEvaluator(bundle, t, n)(i, j);
}

double vdm_distance(const SpectralBundle& bundle, double t, int n, int i,
                    int j) {
  const HsEvaluator hs(bundle, t, n);
  const double sq = hs(i, i) + hs(j, j) - 2.0 * hs(i, j);
  if (sq < -1e-12)
    throw VdmError(ErrorCode::NumericalInconsistency, "embedding",
                   "squared distance markedly negative",
                   {{"i", i}, {"j", j}, {"value", sq}});
  return std::sqrt(std::max(sq, 0.0));
}

double partial_remainder(const SpectralBundle& bundle, double t, int n) {
  if (!(t > 0.0))
    throw VdmError(ErrorCode::InvalidArgument, "embedding",
                   "diffusion time must be positive", {{"t", t}});
  const int k_total = bundle.k();
  if (n < 0 || n > k_total)
    throw VdmError(ErrorCode::InvalidArgument, "embedding",
                   "tail start must lie in 0..K",
                   {{"n", n}, {"K", k_total}});
  Eigen::MatrixXd w(k_total, k_total);
  for (int k = 0; k < k_total; ++k)
    for (int l = 0; l < k_total; ++l)
      w(k, l) = std::exp(-(bundle.eigenvalues(k) + bundle.eigenvalues(l)) * t);

  double worst = 0.0;
  for (int i = 0; i < bundle.m; ++i) {
    double tail = 0.0;
    for (int k = 0; k < k_total; ++k) {
      const auto uk = bundle.fields.col(k).segment(i * bundle.d, bundle.d);
      for (int l = 0; l < k_total; ++l) {
        if (k < n && l < n) continue;
        const auto ul = bundle.fields.col(l).segment(i * bundle.d, bundle.d);
        const double g = uk.dot(ul);
        tail += w(k, l) * g * g;
      }
    }
    worst = std::max(worst, tail);
  }
  return worst;
}

ScalarBaseline dm_baseline(const NeighborGraph& graph, int k, double t,
                           double tol) {
  if (!(t > 0.0))
    throw VdmError(ErrorCode::InvalidArgument, "embedding",
                   "diffusion time must be positive", {{"t", t}});
  const BlockOperator op = assemble_trivial(graph, 1);
  SolverOptions opts;
  opts.k = k;
  opts.tol = tol;
  const SpectralBundle bundle = spectrum(op, opts);

  ScalarBaseline base;
  base.t = t;
  base.eigenvalues = bundle.eigenvalues;
  base.fields = bundle.fields;  // d = 1, so already m x K
  base.gaps = bundle.gaps;
  base.coords.resize(graph.m, bundle.k());
  for (int a = 0; a < bundle.k(); ++a)
    base.coords.col(a) =
        std::exp(-bundle.eigenvalues(a) * t) * bundle.fields.col(a);
  return base;
}

double dm_heat_kernel(const ScalarBaseline& baseline, double t, int a_count,
                      int i, int j) {
  if (a_count < 1 || a_count > baseline.eigenvalues.size())
    throw VdmError(ErrorCode::InvalidArgument, "embedding",
                   "scalar truncation out of range", {{"a_count", a_count}});
  double acc = 0.0;
  for (int a = 0; a < a_count; ++a)
    acc += std::exp(-baseline.eigenvalues(a) * t) * baseline.fields(i, a) *
           baseline.fields(j, a);
  return acc;
}

Certificate certify_embedding(const SpectralBundle& bundle, double t, int n,
                              const std::vector<std::array<int, 2>>& far_pairs,
                              double margin_frac) {
  const int n_eff = extend_to_gap(bundle, n);
  if (n_eff >= bundle.k())
    throw VdmError(ErrorCode::InsufficientSpectrum, "embedding",
                   "certificate needs spectrum beyond the truncation",
                   {{"n", n_eff}, {"K", bundle.k()}});
  if (far_pairs.empty())
    throw VdmError(ErrorCode::InvalidArgument, "embedding",
                   "certificate needs at least one far pair");
  for (const auto& [i, j] : far_pairs)
    if (i == j || i < 0 || j < 0 || i >= bundle.m || j >= bundle.m)
      throw VdmError(ErrorCode::InvalidArgument, "embedding",
                     "far pair invalid", {{"i", i}, {"j", j}});
  if (!(margin_frac >= 0.0))
    throw VdmError(ErrorCode::InvalidArgument, "embedding",
                   "margin fraction must be nonnegative");

  const HsEvaluator hs(bundle, t, bundle.k());
  double c1 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < bundle.m; ++i) c1 = std::min(c1, hs.diagonal(i));

  double cross = -std::numeric_limits<double>::infinity();
  for (const auto& [i, j] : far_pairs) cross = std::max(cross, hs(i, j));

  Certificate cert;
  cert.t = t;
  cert.n = n_eff;
  cert.k = bundle.k();
  cert.c1 = c1;
  cert.g = c1 - cross;
  cert.r_n = partial_remainder(bundle, t, n_eff);
  cert.margin = margin_frac * c1;
  cert.pass = cert.g > 2.0 * cert.r_n + cert.margin;
  return cert;
}

}  // namespace vdm
