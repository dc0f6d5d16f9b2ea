#include "vdm/geometry.hpp"

#include <cmath>
#include <limits>

#include "vdm/rng.hpp"

namespace vdm {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

double XrayImage::value(double x, double y) const {
  if (x * x + y * y > 1.0) return 0.0;  // truncate to the closed unit disk
  double v = 0.0;
  for (const auto& s : spots) {
    const double dx = x - s.cx;
    const double dy = y - s.cy;
    v += s.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * s.sigma * s.sigma));
  }
  return v;
}

XrayImage XrayImage::default_two_spot() {
  // The two centers must be strongly linearly independent. An isotropic
  // Gaussian projects to the same 1D profile in every direction, shifted by
  // <c, theta_perp>, and the disk-truncation correction is even in
  // <c, theta_hat>; with centers collinear with the origin the sinogram is
  // invariant under theta -> pi - theta and the curve doubles over itself.
  // Near-collinear centers leave the fold gap smaller than usable graph
  // bandwidths, which splices distant angles together, so the centers are
  // chosen close to orthogonal.
  return XrayImage{{{0.42, 0.05, 0.19, 1.0}, {-0.10, -0.40, 0.16, 0.55}}};
}

double xray_value(const XrayImage& image, double theta, double z, int steps) {
  if (steps < 1)
    throw VdmError(ErrorCode::InvalidArgument, "geometry",
                   "quadrature needs at least one step");
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  // theta_perp = (-sin, cos); the ray is { y*theta_hat + z*theta_perp }.
  const double ox = -st * z;
  const double oy = ct * z;
  const double h = 2.0 / steps;
  double acc = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double y = -1.0 + (k + 0.5) * h;
    acc += image.value(ox + y * ct, oy + y * st);
  }
  return acc * h;
}

PointCloud sample_circle_xray(int m, int p, const XrayImage& image,
                              std::uint64_t seed) {
  (void)seed;  // angles are gridded; see header
  if (m < 3 || p < 1)
    throw VdmError(ErrorCode::InvalidArgument, "geometry",
                   "need m >= 3 and p >= 1",
                   {{"m", m}, {"p", p}});
  PointCloud cloud;
  cloud.points.resize(m, p);
  Eigen::VectorXd thetas(m);
  for (int i = 0; i < m; ++i) {
    const double theta = kTwoPi * i / m;
    thetas(i) = theta;
    for (int j = 0; j < p; ++j) {
      const double z = -1.0 + 2.0 * (j + 1) / p;
      cloud.points(i, j) = xray_value(image, theta, z);
    }
  }

  // If the image fails to separate angles (e.g. rotationally symmetric, or p
  // too coarse), downstream graph construction would silently merge distinct
  // curve points. Reject here instead.
  double min_sq = std::numeric_limits<double>::infinity();
  int bad_i = -1, bad_j = -1;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const double sq = (cloud.points.row(i) - cloud.points.row(j)).squaredNorm();
      if (sq < min_sq) {
        min_sq = sq;
        bad_i = i;
        bad_j = j;
      }
    }
  if (min_sq < 1e-9 * 1e-9)
    throw VdmError(ErrorCode::DegenerateEmbedding, "geometry",
                   "projection vectors of distinct angles nearly coincide",
                   {{"i", bad_i},
                    {"j", bad_j},
                    {"distance", std::sqrt(min_sq)}});

  cloud.add_label("theta", std::move(thetas));
  cloud.intrinsic_dim_hint = 1;
  return cloud;
}

namespace {

Eigen::Matrix3d haar_rotation(Rng& rng) {
  Eigen::Matrix3d g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(g);
  Eigen::Matrix3d q = qr.householderQ();
  const Eigen::Matrix3d r = qr.matrixQR();
  // Sign fix makes the draw Haar on O(3); flipping the last column moves the
  // det = -1 sheet onto SO(3) measure-preservingly.
  for (int k = 0; k < 3; ++k)
    if (r(k, k) < 0.0) q.col(k) = -q.col(k);
  if (q.determinant() < 0.0) q.col(2) = -q.col(2);
  return q;
}

}  // namespace

std::vector<SphereFrameSample> sample_sphere_frames(int m, std::uint64_t seed,
                                                    bool antipodal) {
  if (m < 1)
    throw VdmError(ErrorCode::InvalidArgument, "geometry", "need m >= 1",
                   {{"m", m}});
  Rng rng(seed);
  std::vector<SphereFrameSample> out;
  out.reserve(antipodal ? 2 * m : m);
  for (int i = 0; i < m; ++i) {
    SphereFrameSample s;
    s.rotation = haar_rotation(rng);
    const double ortho = (s.rotation.transpose() * s.rotation -
                          Eigen::Matrix3d::Identity())
                             .cwiseAbs()
                             .maxCoeff();
    if (ortho > 1e-12 || std::abs(s.rotation.determinant() - 1.0) > 1e-12)
      throw VdmError(ErrorCode::NumericalInconsistency, "geometry",
                     "QR draw is not a rotation to tolerance");
    out.push_back(s);
    if (antipodal) {
      // Partner with point -R3; keeping det = +1 forces a second sign flip,
      // here applied to the second frame vector.
      SphereFrameSample t;
      t.rotation.col(0) = s.rotation.col(0);
      t.rotation.col(1) = -s.rotation.col(1);
      t.rotation.col(2) = -s.rotation.col(2);
      out.push_back(t);
    }
  }
  return out;
}

PointCloud sphere_cloud(const std::vector<SphereFrameSample>& samples,
                        bool antipodal) {
  const int n = static_cast<int>(samples.size());
  if (n < 1)
    throw VdmError(ErrorCode::InvalidArgument, "geometry", "no samples");
  PointCloud cloud;
  cloud.points.resize(n, 3);
  for (int i = 0; i < n; ++i) cloud.points.row(i) = samples[i].point().transpose();

  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      Eigen::VectorXd col(n);
      for (int i = 0; i < n; ++i) col(i) = samples[i].rotation(r, c);
      cloud.add_label("r" + std::to_string(r) + std::to_string(c),
                      std::move(col));
    }
  if (antipodal) {
    if (n % 2 != 0)
      throw VdmError(ErrorCode::InvalidArgument, "geometry",
                     "antipodal clouds must have an even sample count");
    Eigen::VectorXd partner(n);
    for (int i = 0; i < n; i += 2) {
      partner(i) = i + 1;
      partner(i + 1) = i;
    }
    cloud.add_label("partner", std::move(partner));
  }
  cloud.intrinsic_dim_hint = 2;
  return cloud;
}

Eigen::Vector3d analytic_sphere_field(const SphereFrameSample& sample, int a) {
  if (a < 0 || a > 5)
    throw VdmError(ErrorCode::InvalidArgument, "geometry",
                   "field index must lie in 0..5", {{"a", a}});
  const Eigen::Vector3d r1 = sample.frame1();
  const Eigen::Vector3d r2 = sample.frame2();
  if (a < 3) return r1(a) * r1 + r2(a) * r2;
  const int k = a - 3;
  return r1(k) * r2 - r2(k) * r1;
}

Eigen::Matrix<double, 6, 6> analytic_sphere_gram(
    const SphereFrameSample& sample) {
  const Eigen::Vector3d r1 = sample.frame1();
  const Eigen::Vector3d r2 = sample.frame2();
  Eigen::Matrix3d m_block;
  Eigen::Matrix3d a_block;
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      m_block(k, l) = r1(k) * r1(l) + r2(k) * r2(l);
      a_block(k, l) = -r1(k) * r2(l) + r2(k) * r1(l);
    }
  Eigen::Matrix<double, 6, 6> g;
  g.topLeftCorner<3, 3>() = m_block;
  g.bottomRightCorner<3, 3>() = m_block;
  g.topRightCorner<3, 3>() = a_block;
  g.bottomLeftCorner<3, 3>() = a_block.transpose();
  return g;
}

}  // namespace vdm
