#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "vdm/frames.hpp"
#include "vdm/gcl.hpp"
#include "vdm/graph.hpp"
#include "vdm/types.hpp"

namespace vdm {

// Band-pass filter on eigenpairs: low_set keeps lambda <= A/t, high_set
// keeps lambda > A'/t. Chart pairs are drawn from the intersection.
struct BandFilter {
  double a = 0.0;        // upper band constant A
  double a_prime = 0.0;  // lower band constant A'
  double t = 0.0;
  std::vector<int> low_set;
  std::vector<int> high_set;

  std::vector<int> band() const;  // ascending intersection
};

// Requires A > A' > 0 and t > 0 (InvalidArgument otherwise).
BandFilter make_band(const SpectralBundle& bundle, double a, double a_prime,
                     double t);

// Inverse root-mean-square normalizer for a pair of eigenvector fields over
// a ball: mu = (mean ||u_k||^2)^{-1/2} (mean ||u_l||^2)^{-1/2}, means taken
// with degree weights. Throws ZeroFieldOnBall when either mean < 1e-14.
double mu_weight(const SpectralBundle& bundle, const std::vector<int>& ball,
                 int k, int l);

// Tangent gradient of f(x) = <u_k[x], u_l[x]> at z: weighted least-squares
// fit (with intercept) of f over the graph neighbors of z against tangent
// coordinates B_z^T (x_j - x_z), weighted by the edge kernel weights.
// Throws RankDeficient when the design matrix condition number exceeds 1e8
// and InvalidArgument when z has fewer than d+1 neighbors.
Eigen::VectorXd estimate_gradient(const SpectralBundle& bundle,
                                  const FrameField& frames,
                                  const NeighborGraph& graph,
                                  const PointCloud& cloud, int z, int k,
                                  int l);

struct ChartSelection {
  int center = -1;
  double radius = 0.0;
  std::vector<std::array<int, 2>> pairs;  // eigenindex pairs (i_l, j_l)
  Eigen::MatrixXd directions;       // d x n, column l = v_l in frame coords
  Eigen::VectorXd weights;          // mu_1..mu_n
  Eigen::MatrixXd gradient_matrix;  // (l,k) = mu_l * <v_k, grad f_l(z)>
  std::vector<int> ball;            // graph ball used for the mu means
};

struct ChartOptions {
  double c0 = 0.1;       // admissibility threshold constant
  double mu_cap = 1e8;   // reject pairs with larger normalizers
};

// Greedy selection of n = bundle.d pairs from the band. Step l searches
// along a unit direction orthogonal to the already selected gradients (step
// one uses the first principal direction, i.e. e_1 in frame coordinates) and
// keeps the admissible pair maximizing mu * |directional gradient|, ties
// broken by smallest (i, j). A pair is admissible when that score reaches
// c0 / ball_radius. The stored directions are the Gram-Schmidt frame of the
// selected gradients, which leaves gradient_matrix lower-triangular with
// diagonal entries at or above the admissibility threshold. Throws
// ChartSearchFailed (with the step reached and best score) when no pair
// qualifies.
ChartSelection select_chart(const SpectralBundle& bundle,
                            const FrameField& frames,
                            const NeighborGraph& graph,
                            const PointCloud& cloud, int z,
                            const BandFilter& band, double ball_radius,
                            const ChartOptions& opts = {});

// Deterministic auto policy for the chart center: runs select_chart at every
// point and keeps the admissible center whose weakest selected gradient is
// largest when weighted by the global-mean mu of its pair (the ball-local mu
// rewards centers where the fields nearly vanish, which are the ones whose
// charts fold inside the ball). Centers where every in-band pair runs out of
// directional gradient fail the search and are skipped; if no center admits
// a chart the last error is rethrown.
int best_chart_center(const SpectralBundle& bundle, const FrameField& frames,
                      const NeighborGraph& graph, const PointCloud& cloud,
                      const BandFilter& band, double ball_radius,
                      const ChartOptions& opts = {});

struct DistortionRange {
  double c_lo = 0.0;
  double c_hi = 0.0;
};

// Empirical bi-Lipschitz range of the weighted chart map
// Phi(x)_l = mu_l <u_{i_l}[x], u_{j_l}[x]> over distinct pairs in the ball:
// min and max of ||Phi(x) - Phi(y)|| / d(x, y) with d the graph
// shortest-path distance.
DistortionRange measure_distortion(const ChartSelection& sel,
                                   const SpectralBundle& bundle,
                                   const NeighborGraph& graph,
                                   const std::vector<int>& ball);

}  // namespace vdm
