#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "vdm/errors.hpp"
#include "vdm/frames.hpp"
#include "vdm/geometry.hpp"
#include "vdm/graph.hpp"
#include "vdm/rng.hpp"
#include "vdm/types.hpp"

namespace {

Eigen::MatrixXd random_orthogonal(int d, vdm::Rng& rng, bool special = false) {
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  if (special && q.determinant() < 0) q.col(0) = -q.col(0);
  return q;
}

// Random orthonormal frame of the tangent plane at unit vector x.
Eigen::Matrix<double, 3, 2> random_tangent_frame(const Eigen::Vector3d& x,
                                                 vdm::Rng& rng) {
  Eigen::Matrix<double, 3, 2> b;
  for (int c = 0; c < 2; ++c) {
    Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
    v -= x * x.dot(v);
    for (int prev = 0; prev < c; ++prev) v -= b.col(prev) * b.col(prev).dot(v);
    b.col(c) = v.normalized();
  }
  return b;
}

// Exact parallel transport on the unit sphere along the geodesic from y to x:
// rotation about the axis y x x through the angle between them.
Eigen::Matrix3d sphere_transport(const Eigen::Vector3d& y,
                                 const Eigen::Vector3d& x) {
  const Eigen::Vector3d axis_raw = y.cross(x);
  const double s = axis_raw.norm();
  const double c = y.dot(x);
  if (s < 1e-15) return Eigen::Matrix3d::Identity();
  const Eigen::Vector3d a = axis_raw / s;
  Eigen::Matrix3d k;
  k << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  return Eigen::Matrix3d::Identity() + s * k + (1.0 - c) * k * k;
}

}  // namespace

TEST_CASE("frames: recover an exact affine subspace") {
  vdm::Rng rng(3);
  const int m = 120, p = 5, d = 2;
  Eigen::MatrixXd basis(p, d);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < d; ++j) basis(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd q =
      Eigen::MatrixXd(qr.householderQ()).leftCols(d);

  vdm::PointCloud cloud;
  cloud.points.resize(m, p);
  for (int i = 0; i < m; ++i) {
    const Eigen::Vector2d coef(rng.uniform(-1, 1), rng.uniform(-1, 1));
    cloud.points.row(i) = (q * coef).transpose();
  }
  vdm::GraphOptions opts;
  opts.epsilon = 3.0 * vdm::suggest_epsilon(cloud);
  const vdm::NeighborGraph graph = vdm::build_graph(cloud, opts);
  const vdm::FrameField frames = vdm::estimate_frames(cloud, graph, d);
  REQUIRE(frames.m() == m);
  const Eigen::MatrixXd projector = q * q.transpose();
  for (int i = 0; i < m; ++i) {
    const Eigen::MatrixXd& b = frames.bases[i];
    CHECK((b.transpose() * b - Eigen::MatrixXd::Identity(d, d)).norm() < 1e-10);
    // Columns live in the subspace: projecting changes nothing.
    CHECK((projector * b - b).norm() < 1e-8);
  }
}

TEST_CASE("frames: sphere PCA frames are nearly tangent") {
  const auto samples = vdm::sample_sphere_frames(2000, 29);
  const vdm::PointCloud cloud = vdm::sphere_cloud(samples);
  vdm::GraphOptions opts;
  opts.epsilon = 3.0 * vdm::suggest_epsilon(cloud);
  const vdm::NeighborGraph graph = vdm::build_graph(cloud, opts);
  const vdm::FrameField frames = vdm::estimate_frames(cloud, graph, 2);
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const Eigen::Vector3d x = cloud.points.row(i).transpose();
    worst = std::max(worst, std::abs(frames.bases[i].col(0).dot(x)));
    worst = std::max(worst, std::abs(frames.bases[i].col(1).dot(x)));
  }
  CHECK(worst < 0.1);
}

TEST_CASE("frames: two symmetric neighbors give the line direction") {
  vdm::PointCloud cloud;
  cloud.points.resize(3, 3);
  const Eigen::Vector3d v = Eigen::Vector3d(1.0, 2.0, -0.5).normalized();
  cloud.points.row(0) = (-0.1 * v).transpose();
  cloud.points.row(1) = Eigen::RowVector3d::Zero();
  cloud.points.row(2) = (0.1 * v).transpose();
  vdm::GraphOptions opts;
  opts.epsilon = 0.15 * 0.15;
  const vdm::NeighborGraph graph = vdm::build_graph(cloud, opts);
  const vdm::FrameField frames = vdm::estimate_frames(cloud, graph, 1);
  const Eigen::Vector3d b = frames.bases[1].col(0);
  CHECK(std::abs(std::abs(b.dot(v)) - 1.0) < 1e-12);
}

TEST_CASE("frames: ambiguous tangent space is rejected") {
  // Four neighbors forming an exact cross: both covariance eigenvalues equal,
  // so a d=1 frame is ill-defined.
  vdm::PointCloud cloud;
  cloud.points.resize(5, 2);
  cloud.points << 0, 0, 0.1, 0, -0.1, 0, 0, 0.1, 0, -0.1;
  vdm::GraphOptions opts;
  opts.epsilon = 0.12 * 0.12;  // center sees all four arms, arms see center
  CHECK_THROWS_AS(
      [&] {
        const vdm::NeighborGraph graph = vdm::build_graph(cloud, opts);
        return vdm::estimate_frames(cloud, graph, 1);
      }(),
      vdm::VdmError);
}

TEST_CASE("frames: connect on identical and rotated frames") {
  vdm::Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = 7, d = 3;
    Eigen::MatrixXd raw(p, d);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < d; ++j) raw(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    const Eigen::MatrixXd b = Eigen::MatrixXd(qr.householderQ()).leftCols(d);
    CHECK((vdm::connect(b, b, false) - Eigen::MatrixXd::Identity(d, d)).norm() <
          1e-12);
    const Eigen::MatrixXd q = random_orthogonal(d, rng, true);
    const Eigen::MatrixXd o = vdm::connect(b, b * q, false);
    CHECK((o - q).norm() < 1e-10);
  }
}

TEST_CASE("frames: connect output is orthogonal, transpose-consistent, equivariant") {
  vdm::Rng rng(43);
  const int p = 6, d = 2;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd raw1(p, d), raw2(p, d);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < d; ++j) {
        raw1(i, j) = rng.normal();
        // Nearby second frame so the alignment is non-degenerate.
        raw2(i, j) = raw1(i, j) + 0.2 * rng.normal();
      }
    auto orth = [](const Eigen::MatrixXd& a) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
      return Eigen::MatrixXd(Eigen::MatrixXd(qr.householderQ()).leftCols(a.cols()));
    };
    const Eigen::MatrixXd bi = orth(raw1), bj = orth(raw2);
    const Eigen::MatrixXd o = vdm::connect(bi, bj, false);
    CHECK((o.transpose() * o - Eigen::MatrixXd::Identity(d, d)).norm() < 1e-10);
    CHECK((vdm::connect(bj, bi, false) - o.transpose()).norm() < 1e-10);
    const Eigen::MatrixXd qi = random_orthogonal(d, rng);
    const Eigen::MatrixXd qj = random_orthogonal(d, rng);
    const Eigen::MatrixXd o2 = vdm::connect(bi * qi, bj * qj, false);
    CHECK((o2 - qi.transpose() * o * qj).norm() < 1e-9);
  }
}

TEST_CASE("frames: special flag lands in SO(d)") {
  Eigen::MatrixXd bi(4, 2);
  bi << 1, 0, 0, 1, 0, 0, 0, 0;
  Eigen::MatrixXd bj = bi;
  bj.col(1) = -bj.col(1);  // reflection: B_i^T B_j = diag(1, -1)
  const Eigen::MatrixXd o_plain = vdm::connect(bi, bj, false);
  CHECK(o_plain.determinant() == doctest::Approx(-1.0).epsilon(1e-12));
  // Equal singular values make the SO projection non-unique only up to which
  // column flips; perturb so the smallest singular value is isolated.
  Eigen::MatrixXd bj2 = bi * Eigen::Rotation2Dd(0.3).toRotationMatrix();
  bj2.col(1) = -bj2.col(1);
  const Eigen::MatrixXd o_special = vdm::connect(bi, bj2, true);
  CHECK(o_special.determinant() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK((o_special.transpose() * o_special - Eigen::Matrix2d::Identity())
            .norm() < 1e-10);
}

TEST_CASE("frames: orthogonal frames cannot be aligned") {
  Eigen::MatrixXd bi(4, 2), bj(4, 2);
  bi << 1, 0, 0, 1, 0, 0, 0, 0;
  bj << 0, 0, 0, 0, 1, 0, 0, 1;
  CHECK_THROWS_AS(vdm::connect(bi, bj, false), vdm::VdmError);
}

TEST_CASE("frames: Procrustes approximates sphere parallel transport") {
  vdm::Rng rng(47);
  double worst_excess = -1e300;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Vector3d y(rng.normal(), rng.normal(), rng.normal());
    y.normalize();
    // Nearby second point at geodesic distance about 0.05..0.3.
    Eigen::Vector3d step(rng.normal(), rng.normal(), rng.normal());
    step -= y * y.dot(step);
    step.normalize();
    const double angle = rng.uniform(0.05, 0.3);
    const Eigen::Vector3d x = (std::cos(angle) * y + std::sin(angle) * step);
    const auto bi = random_tangent_frame(x, rng);
    const auto bj = random_tangent_frame(y, rng);
    const Eigen::MatrixXd o = vdm::connect(bi, bj, false);
    // Oracle: exact transport from y to x expressed in the same frames.
    const Eigen::Matrix3d rot = sphere_transport(y, x);
    const Eigen::Matrix2d exact = bi.transpose() * rot * bj;
    const double chord = (x - y).norm();
    worst_excess =
        std::max(worst_excess, (o - exact).norm() - 10.0 * chord * chord);
  }
  CHECK(worst_excess < 0.0);
}

TEST_CASE("frames: build_connections stores orthogonal transports once") {
  const auto samples = vdm::sample_sphere_frames(300, 59);
  const vdm::PointCloud cloud = vdm::sphere_cloud(samples);
  vdm::GraphOptions opts;
  opts.epsilon = 3.0 * vdm::suggest_epsilon(cloud);
  const vdm::NeighborGraph graph = vdm::build_graph(cloud, opts);
  const vdm::FrameField frames = vdm::estimate_frames(cloud, graph, 2);
  const vdm::ConnectionGraph conn = vdm::build_connections(frames, graph, false);
  REQUIRE(conn.edge_list.size() == graph.edge_count());
  REQUIRE(conn.connections.size() == conn.edge_list.size());
  for (std::size_t e = 0; e < conn.edge_list.size(); ++e) {
    const auto& [i, j] = conn.edge_list[e];
    CHECK(i < j);
    const Eigen::MatrixXd& o = conn.connections[e];
    CHECK((o.transpose() * o - Eigen::Matrix2d::Identity()).norm() < 1e-10);
    CHECK((o - vdm::connect(frames.bases[i], frames.bases[j], false)).norm() <
          1e-14);
  }
}

TEST_CASE("frames: regauge keeps orthonormality and changes the gauge") {
  const auto samples = vdm::sample_sphere_frames(50, 61);
  const vdm::PointCloud cloud = vdm::sphere_cloud(samples);
  vdm::GraphOptions opts;
  opts.epsilon = 3.0 * vdm::suggest_epsilon(cloud);
  const vdm::NeighborGraph graph = vdm::build_graph(cloud, opts);
  const vdm::FrameField frames = vdm::estimate_frames(cloud, graph, 2);
  const vdm::FrameField turned = vdm::regauge(frames, 777);
  REQUIRE(turned.m() == frames.m());
  double moved = 0.0;
  for (int i = 0; i < frames.m(); ++i) {
    const Eigen::MatrixXd& b = turned.bases[i];
    CHECK((b.transpose() * b - Eigen::Matrix2d::Identity()).norm() < 1e-12);
    // Same span as the original frame.
    CHECK((b - frames.bases[i] * (frames.bases[i].transpose() * b)).norm() <
          1e-10);
    moved = std::max(moved, (b - frames.bases[i]).norm());
  }
  CHECK(moved > 0.1);
}
