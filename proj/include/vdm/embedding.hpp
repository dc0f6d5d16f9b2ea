#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "vdm/gcl.hpp"
#include "vdm/graph.hpp"

namespace vdm {

// Truncated vector diffusion map and the heat-kernel quantities built on it.
// Conventions (N = truncation, always extended to a spectral gap):
//   coords(i, (k,l))   = exp(-(lambda_k + lambda_l) t / 2) <u_k[i], u_l[i]>
//   hs_kernel(t,N,i,j) = sum_{k,l <= N} exp(-(lambda_k+lambda_l) t)
//                          <u_k[i],u_l[i]> <u_k[j],u_l[j]>
// so hs_kernel is exactly the coordinate inner product <coords_i, coords_j>.

// Smallest gap boundary >= n. Throws InvalidArgument when n is out of range
// and TruncationInsideCluster when no gap at or beyond n is available.
int extend_to_gap(const SpectralBundle& bundle, int n);

struct EmbeddingResult {
  double t = 0.0;
  int n = 0;                // effective truncation (gap-extended)
  Eigen::MatrixXd coords;   // m x n^2, pair (k,l) at column k*n + l
};

EmbeddingResult vdm_embed(const SpectralBundle& bundle, double t, int n);

double hs_kernel(const SpectralBundle& bundle, double t, int n, int i, int j);

// sqrt(hs(i,i) + hs(j,j) - 2 hs(i,j)); tiny negative squares (>= -1e-12) are
// clamped to zero, anything worse raises NumericalInconsistency.
double vdm_distance(const SpectralBundle& bundle, double t, int n, int i,
                    int j);

// Truncation tail R_N(t) = max_i sum over pairs with k or l beyond n (both
// <= K) of exp(-(lambda_k+lambda_l) t) <u_k[i],u_l[i]>^2. Monotone
// nonincreasing in n by construction.
double partial_remainder(const SpectralBundle& bundle, double t, int n);

// Scalar diffusion-map baseline on the same graph (trivial bundle, d = 1).
struct ScalarBaseline {
  double t = 0.0;
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::MatrixXd fields;       // m x K, degree-normalized
  Eigen::MatrixXd coords;       // m x K, exp(-lambda_k t) phi_k(i)
  std::vector<int> gaps;
};

ScalarBaseline dm_baseline(const NeighborGraph& graph, int k, double t,
                           double tol = 1e-10);

// Truncated scalar heat kernel sum_{a < a_count} exp(-nu_a t) phi_a(i) phi_a(j).
double dm_heat_kernel(const ScalarBaseline& baseline, double t, int a_count,
                      int i, int j);

// Separation certificate for the truncated map. Diagonal floor and far-pair
// gap are measured at the full available truncation K (the stand-in for the
// untruncated kernel); the tail penalty R_N covers what truncation at n
// discards. PASS requires G > 2 R_N + margin.
struct Certificate {
  double t = 0.0;
  int n = 0;
  int k = 0;
  double c1 = 0.0;      // min_i hs(t, K, i, i)
  double g = 0.0;       // c1 - max over far pairs of hs(t, K, i, j)
  double r_n = 0.0;     // partial_remainder(t, n)
  double margin = 0.0;  // margin_frac * c1
  bool pass = false;
};

Certificate certify_embedding(const SpectralBundle& bundle, double t, int n,
                              const std::vector<std::array<int, 2>>& far_pairs,
                              double margin_frac = 0.1);

// Shared evaluator caching the exp weight table for repeated hs queries.
class HsEvaluator {
 public:
  HsEvaluator(const SpectralBundle& bundle, double t, int n);

  double operator()(int i, int j) const;
  double diagonal(int i) const { return (*this)(i, i); }
  int truncation() const { return n_; }

 private:
  Eigen::MatrixXd gram_at(int i) const;

  const SpectralBundle& bundle_;
  int n_;
  Eigen::MatrixXd weights_;  // exp(-(lambda_k + lambda_l) t)
};

}  // namespace vdm
