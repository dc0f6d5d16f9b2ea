#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "vdm/types.hpp"

namespace vdm {

// Synthetic data generators for the two reference manifolds: a closed curve
// in R^p built from parallel-beam projections of a planar image (diffeomorphic
// to S^1), and frame bundles over S^2 drawn Haar-uniformly from SO(3).

struct GaussianSpot {
  double cx = 0.0;
  double cy = 0.0;
  double sigma = 0.2;
  double amplitude = 1.0;
};

// Compactly supported test image: a sum of isotropic Gaussians truncated to
// the closed unit disk.
struct XrayImage {
  std::vector<GaussianSpot> spots;

  double value(double x, double y) const;

  // Two bumps of distinct widths and heights whose centers are close to
  // orthogonal. Collinear-with-origin centers leave an exact sinogram
  // symmetry (pi - theta; centrally symmetric images additionally give
  // theta + pi) that folds the curve onto itself, and near-collinear ones
  // leave the fold gap below usable graph bandwidths.
  static XrayImage default_two_spot();
};

// Parallel-beam line integral along direction theta at signed offset z:
//   R_psi(theta, z) = integral psi(y*theta_hat + z*theta_perp) dy
// with theta_hat = (cos t, sin t), theta_perp = (-sin t, cos t). Midpoint rule
// with fixed step 2/steps over y in [-1, 1]; the production step is 2/256.
double xray_value(const XrayImage& image, double theta, double z,
                  int steps = 256);

// m projection vectors x_i = [R_psi(theta_i, z_j)]_{j=1..p}, z_j = -1 + 2j/p,
// theta_i = 2*pi*i/m recorded in label_theta. The grid is deterministic; the
// seed is accepted for config uniformity and recorded upstream but does not
// alter the output. Throws DegenerateEmbedding when p is too small to
// separate the curve (some pair of distinct angles closer than 1e-9 in R^p).
PointCloud sample_circle_xray(int m, int p, const XrayImage& image,
                              std::uint64_t seed);

// One Haar draw from SO(3): point = third column, frame = first two columns.
struct SphereFrameSample {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();

  Eigen::Vector3d point() const { return rotation.col(2); }
  Eigen::Vector3d frame1() const { return rotation.col(0); }
  Eigen::Vector3d frame2() const { return rotation.col(1); }
};

// Haar sampling via QR of a 3x3 Gaussian matrix with the diagonal sign fix,
// then det = +1 enforced by flipping the last column if needed. When
// antipodal is true each draw R is followed by its partner (R1, -R2, -R3)
// whose point is -R3, so the output has 2m samples and partner(2i) = 2i+1.
std::vector<SphereFrameSample> sample_sphere_frames(int m, std::uint64_t seed,
                                                    bool antipodal = false);

// Embed sphere samples as a point cloud. Labels: the nine rotation entries
// (label_r00..label_r22, row-major) and, when partners are present,
// label_partner with the partner's row index.
PointCloud sphere_cloud(const std::vector<SphereFrameSample>& samples,
                        bool antipodal = false);

// Ambient R^3 value of the analytic field X_a (a in 0..5) at the sample's
// point: X_k is the tangential projection of the k-th coordinate field,
// X_{k+3} = point x X_k its rotation by the complex structure.
Eigen::Vector3d analytic_sphere_field(const SphereFrameSample& sample, int a);

// Closed-form 6x6 Gram matrix G_ab = <X_a, X_b> at the sample's point:
//   G[k][l] = G[k+3][l+3] = R1_k R1_l + R2_k R2_l
//   G[k][l+3] = -R1_k R2_l + R2_k R1_l            (k, l in 0..2)
// Diagonal blocks are the tangent-plane projector (PSD, eigenvalues 1,1,0,
// trace 2); off-diagonal block is antisymmetric.
Eigen::Matrix<double, 6, 6> analytic_sphere_gram(
    const SphereFrameSample& sample);

}  // namespace vdm
