#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "vdm/errors.hpp"
#include "vdm/geometry.hpp"

namespace {

// Independent quadrature for the line integral: composite Simpson on a 10x
// finer grid than production. Agreement within the midpoint rule's O(h^2)
// error budget pins the integrand and the geometry convention.
double xray_oracle(const vdm::XrayImage& image, double theta, double z) {
  const int n = 2560;  // even
  const double a = -1.0, b = 1.0;
  const double h = (b - a) / n;
  const double ct = std::cos(theta), st = std::sin(theta);
  auto f = [&](double y) {
    const double px = y * ct - z * st;
    const double py = y * st + z * ct;
    return image.value(px, py);
  };
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("geometry: image value is a truncated Gaussian sum") {
  const vdm::XrayImage img = vdm::XrayImage::default_two_spot();
  REQUIRE(img.spots.size() == 2);
  // Inside the disk the value is the plain Gaussian sum.
  const double x = 0.3, y = 0.1;
  double expect = 0.0;
  for (const auto& s : img.spots) {
    const double dx = x - s.cx, dy = y - s.cy;
    expect += s.amplitude * std::exp(-(dx * dx + dy * dy) / (2 * s.sigma * s.sigma));
  }
  CHECK(img.value(x, y) == doctest::Approx(expect).epsilon(1e-12));
  // Outside the unit disk the image vanishes.
  CHECK(img.value(1.2, 0.0) == 0.0);
  CHECK(img.value(0.8, 0.8) == 0.0);
}

TEST_CASE("geometry: xray_value matches an independent Simpson quadrature") {
  const vdm::XrayImage img = vdm::XrayImage::default_two_spot();
  double worst = 0.0;
  for (double theta : {0.0, 0.7, 1.9, 3.1, 4.4, 5.8})
    for (double z : {-0.8, -0.4, -0.1, 0.0, 0.3, 0.6}) {
      const double got = vdm::xray_value(img, theta, z);
      const double want = xray_oracle(img, theta, z);
      worst = std::max(worst, std::abs(got - want));
    }
  // Midpoint with 256 steps on a smooth integrand: h^2/24 * |f''| scale.
  CHECK(worst < 5e-5);
}

TEST_CASE("geometry: xray grid layout and labels") {
  const int m = 40, p = 16;
  const vdm::PointCloud cloud =
      vdm::sample_circle_xray(m, p, vdm::XrayImage::default_two_spot(), 3);
  REQUIRE(cloud.m() == m);
  REQUIRE(cloud.p() == p);
  const Eigen::VectorXd* theta = cloud.find_label("theta");
  REQUIRE(theta != nullptr);
  for (int i = 0; i < m; ++i)
    CHECK((*theta)(i) == doctest::Approx(2.0 * M_PI * i / m).epsilon(1e-15));
  // Column j holds the projection at offset z = -1 + 2(j+1)/p.
  const vdm::XrayImage img = vdm::XrayImage::default_two_spot();
  const double z3 = -1.0 + 2.0 * 4 / p;
  CHECK(cloud.points(7, 3) ==
        doctest::Approx(vdm::xray_value(img, (*theta)(7), z3))
            .epsilon(1e-14));
}

TEST_CASE("geometry: xray curve is uniformly sampled and closes up") {
  const int m = 400, p = 64;
  const vdm::PointCloud cloud =
      vdm::sample_circle_xray(m, p, vdm::XrayImage::default_two_spot(), 0);
  double max_step = 0.0, min_step = 1e300, total = 0.0;
  for (int i = 0; i < m; ++i) {
    const double step =
        (cloud.points.row((i + 1) % m) - cloud.points.row(i)).norm();
    max_step = std::max(max_step, step);
    min_step = std::min(min_step, step);
    total += step;
  }
  // Smooth closed curve: consecutive gaps scale like 1/m and never spike.
  CHECK(max_step < 5.0 * total / m);
  CHECK(min_step > 0.0);
}

TEST_CASE("geometry: xray rejects an image that cannot embed the circle") {
  // A single centered spot is rotationally symmetric, so every angle gives
  // the same projection vector.
  const vdm::XrayImage symmetric{{{0.0, 0.0, 0.3, 1.0}}};
  CHECK_THROWS_AS(vdm::sample_circle_xray(64, 16, symmetric, 0),
                  vdm::VdmError);
}

TEST_CASE("geometry: symmetric angle pairs stay separated for the default image") {
  // theta + pi (central symmetry) and pi - theta (centers collinear with the
  // origin) are the two sinogram symmetries that would fold the curve onto
  // itself; the default image must break both with real margin.
  const int m = 128, p = 32;
  const vdm::PointCloud cloud =
      vdm::sample_circle_xray(m, p, vdm::XrayImage::default_two_spot(), 0);
  double min_opposite = 1e300, min_reflected = 1e300;
  for (int i = 0; i < m / 2; ++i)
    min_opposite = std::min(
        min_opposite,
        (cloud.points.row(i) - cloud.points.row(i + m / 2)).norm());
  for (int i = 0; i < m; ++i) {
    const int j = ((m / 2 - i) % m + m) % m;  // angle pi - theta_i
    if (j == i) continue;
    min_reflected = std::min(
        min_reflected, (cloud.points.row(i) - cloud.points.row(j)).norm());
  }
  CHECK(min_opposite > 1e-3);
  CHECK(min_reflected > 1e-3);
}

TEST_CASE("geometry: sphere frames are exact rotations") {
  const auto samples = vdm::sample_sphere_frames(200, 17);
  REQUIRE(samples.size() == 200);
  for (const auto& s : samples) {
    const Eigen::Matrix3d& r = s.rotation;
    CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() < 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("geometry: sphere sampling is uniform on the sphere") {
  const auto samples = vdm::sample_sphere_frames(60000, 23);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d second = Eigen::Matrix3d::Zero();
  for (const auto& s : samples) {
    mean += s.point();
    second += s.point() * s.point().transpose();
  }
  mean /= double(samples.size());
  second /= double(samples.size());
  CHECK(mean.norm() < 0.02);
  CHECK((second - Eigen::Matrix3d::Identity() / 3.0).norm() < 0.02);
}

TEST_CASE("geometry: antipodal partners negate the point") {
  const auto samples = vdm::sample_sphere_frames(50, 31, true);
  REQUIRE(samples.size() == 100);
  for (int i = 0; i < 50; ++i) {
    const auto& a = samples[2 * i];
    const auto& b = samples[2 * i + 1];
    CHECK((a.point() + b.point()).norm() < 1e-15);
    CHECK((a.frame1() - b.frame1()).norm() < 1e-15);
    CHECK((a.frame2() + b.frame2()).norm() < 1e-15);
    CHECK(b.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("geometry: sphere cloud labels round-trip the rotations") {
  const auto samples = vdm::sample_sphere_frames(20, 5, true);
  const vdm::PointCloud cloud = vdm::sphere_cloud(samples, true);
  REQUIRE(cloud.m() == 40);
  REQUIRE(cloud.p() == 3);
  const char* names[9] = {"r00", "r01", "r02", "r10", "r11",
                          "r12", "r20", "r21", "r22"};
  for (int i = 0; i < 40; ++i) {
    CHECK((cloud.points.row(i).transpose() - samples[i].point()).norm() <
          1e-15);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        CHECK((*cloud.find_label(names[3 * r + c]))(i) ==
              samples[i].rotation(r, c));
  }
  const Eigen::VectorXd* partner = cloud.find_label("partner");
  REQUIRE(partner != nullptr);
  for (int i = 0; i < 20; ++i) {
    CHECK((*partner)(2 * i) == 2 * i + 1);
    CHECK((*partner)(2 * i + 1) == 2 * i);
  }
}

TEST_CASE("geometry: analytic fields are tangential coordinate projections") {
  const auto samples = vdm::sample_sphere_frames(40, 41);
  for (const auto& s : samples) {
    const Eigen::Vector3d x = s.point();
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector3d xk = vdm::analytic_sphere_field(s, k);
      // Projection of e_k onto the tangent plane, computed directly.
      Eigen::Vector3d want = Eigen::Vector3d::Unit(k) - x(k) * x;
      CHECK((xk - want).norm() < 1e-14);
      // Rotated family: cross product with the base point.
      const Eigen::Vector3d xk3 = vdm::analytic_sphere_field(s, k + 3);
      CHECK((xk3 - x.cross(xk)).norm() < 1e-14);
    }
  }
}

TEST_CASE("geometry: gram closed form agrees with field inner products") {
  const auto samples = vdm::sample_sphere_frames(30, 43);
  for (const auto& s : samples) {
    const auto g = vdm::analytic_sphere_gram(s);
    CHECK((g - g.transpose()).norm() < 1e-14);
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) {
        const double dot = vdm::analytic_sphere_field(s, a)
                               .dot(vdm::analytic_sphere_field(s, b));
        CHECK(g(a, b) == doctest::Approx(dot).epsilon(1e-12));
      }
    // Diagonal block is the tangent projector in the coordinate basis.
    const Eigen::Vector3d x = s.point();
    const Eigen::Matrix3d proj =
        Eigen::Matrix3d::Identity() - x * x.transpose();
    CHECK((g.topLeftCorner<3, 3>() - proj).norm() < 1e-13);
    CHECK((g.bottomRightCorner<3, 3>() - proj).norm() < 1e-13);
    CHECK((g.topRightCorner<3, 3>() + g.topRightCorner<3, 3>().transpose())
              .norm() < 1e-13);
  }
}

TEST_CASE("geometry: gram at the identity rotation") {
  vdm::SphereFrameSample s;  // rotation = I
  const auto g = vdm::analytic_sphere_gram(s);
  CHECK(g(0, 0) == doctest::Approx(1.0));
  CHECK(g(1, 1) == doctest::Approx(1.0));
  CHECK(g(2, 2) == doctest::Approx(0.0));
  CHECK(g(0, 4) == doctest::Approx(-1.0));
  CHECK(g(1, 3) == doctest::Approx(1.0));
  CHECK(g(0, 3) == doctest::Approx(0.0));
  CHECK(g(1, 4) == doctest::Approx(0.0));
}

TEST_CASE("geometry: diagonal block trace is 2 and spectrum sits in [0,1]") {
  const auto samples = vdm::sample_sphere_frames(50, 47);
  for (const auto& s : samples) {
    const auto g = vdm::analytic_sphere_gram(s);
    CHECK(g.topLeftCorner<3, 3>().trace() == doctest::Approx(2.0));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(g.topLeftCorner<3, 3>());
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
    CHECK(es.eigenvalues().maxCoeff() < 1.0 + 1e-12);
  }
}

TEST_CASE("geometry: antipodal gram identity") {
  const auto samples = vdm::sample_sphere_frames(40, 53, true);
  for (int i = 0; i < 40; i += 2) {
    const auto ga = vdm::analytic_sphere_gram(samples[i]);
    const auto gb = vdm::analytic_sphere_gram(samples[i + 1]);
    // Diagonal blocks agree, off-diagonal block flips sign.
    CHECK((ga.topLeftCorner<3, 3>() - gb.topLeftCorner<3, 3>()).norm() <
          1e-13);
    CHECK((ga.bottomRightCorner<3, 3>() - gb.bottomRightCorner<3, 3>())
              .norm() < 1e-13);
    CHECK((ga.topRightCorner<3, 3>() + gb.topRightCorner<3, 3>()).norm() <
          1e-13);
  }
}
