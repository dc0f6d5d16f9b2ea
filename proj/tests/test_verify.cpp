#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "vdm/embedding.hpp"
#include "vdm/errors.hpp"
#include "vdm/frames.hpp"
#include "vdm/gcl.hpp"
#include "vdm/geometry.hpp"
#include "vdm/graph.hpp"
#include "vdm/rng.hpp"
#include "vdm/verify.hpp"

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

vdm::FrameField exact_frames(const std::vector<vdm::SphereFrameSample>& s) {
  vdm::FrameField frames;
  frames.d = 2;
  for (const auto& sample : s) {
    Eigen::MatrixXd b(3, 2);
    b.col(0) = sample.frame1();
    b.col(1) = sample.frame2();
    frames.bases.push_back(b);
    frames.spectra.push_back(Eigen::VectorXd::Ones(2));
  }
  return frames;
}

// Analytic fields written in the exact frames; eigenvalues set by the caller.
vdm::SpectralBundle analytic_bundle(
    const std::vector<vdm::SphereFrameSample>& s,
    const vdm::FrameField& frames, const Eigen::VectorXd& eigenvalues) {
  const int m = static_cast<int>(s.size());
  vdm::SpectralBundle b;
  b.m = m;
  b.d = 2;
  b.eigenvalues = eigenvalues;
  b.fields.resize(2 * m, eigenvalues.size());
  b.degrees = Eigen::VectorXd::Ones(m);
  b.gaps = {static_cast<int>(eigenvalues.size())};
  b.meta.gap_tol = 1e-6;
  for (int i = 0; i < m; ++i)
    for (int a = 0; a < eigenvalues.size() && a < 6; ++a) {
      const Eigen::Vector3d field = vdm::analytic_sphere_field(s[i], a);
      b.fields(2 * i, a) = frames.bases[i].col(0).dot(field);
      b.fields(2 * i + 1, a) = frames.bases[i].col(1).dot(field);
    }
  return b;
}

// Shared small S^1 pipeline for the kernel-level checks.
struct CircleFixture {
  vdm::PointCloud cloud;
  vdm::NeighborGraph graph;
  vdm::SpectralBundle bundle;  // d=1 connection bundle
  double t = 0.0;
};

const CircleFixture& circle_fixture() {
  static const CircleFixture fix = [] {
    CircleFixture f;
    f.cloud =
        vdm::sample_circle_xray(150, 16, vdm::XrayImage::default_two_spot(), 0);
    vdm::GraphOptions gopts;
    gopts.epsilon = vdm::suggest_epsilon(f.cloud);
    f.graph = vdm::build_graph(f.cloud, gopts);
    const vdm::FrameField frames = vdm::estimate_frames(f.cloud, f.graph, 1);
    const vdm::ConnectionGraph conn =
        vdm::build_connections(frames, f.graph, false);
    vdm::SolverOptions sopts;
    sopts.k = 12;
    f.bundle = vdm::spectrum(vdm::assemble(conn), sopts);
    int first_positive = 0;
    while (f.bundle.eigenvalues(first_positive) <= 1e-8) ++first_positive;
    f.t = 1.0 / f.bundle.eigenvalues(first_positive);
    return f;
  }();
  return fix;
}

}  // namespace

TEST_CASE("verify: first cluster boundary rule") {
  CHECK(vdm::first_cluster(vec({0.0, 1.0})) == 1);
  CHECK(vdm::first_cluster(vec({1.0, 1.4})) == 2);
  CHECK(vdm::first_cluster(vec({1.0, 1.4}), 0.2) == 1);
  CHECK(vdm::first_cluster(vec({1.0, 1.0, 1.0, 3.0, 3.1})) == 3);
  CHECK(vdm::first_cluster(vec({0.0, 0.0, 0.0})) == 3);
  CHECK(vdm::first_cluster(vec({0.7})) == 1);
}

TEST_CASE("verify: report serialization") {
  vdm::CheckReport a;
  a.name = "alpha";
  a.pass = true;
  a.statistic = 0.25;
  a.threshold = std::numeric_limits<double>::infinity();
  a.details = {{"k", 3}};
  vdm::CheckReport b;
  b.name = "beta";
  b.pass = false;
  b.statistic = 2.0;
  b.threshold = 1.0;

  const auto arr = vdm::reports_to_json({a, b});
  REQUIRE(arr.is_array());
  REQUIRE(arr.size() == 2);
  CHECK(arr[0]["name"] == "alpha");
  CHECK(arr[0]["pass"] == true);
  CHECK(arr[0]["statistic"] == doctest::Approx(0.25));
  CHECK(arr[0]["threshold"].is_null());
  CHECK(arr[0]["details"]["k"] == 3);
  CHECK(arr[1]["pass"] == false);
  CHECK(arr[1]["threshold"] == doctest::Approx(1.0));
}

TEST_CASE("verify: analytic sphere fields pass their own check") {
  const auto samples = vdm::sample_sphere_frames(400, 311);
  const vdm::FrameField frames = exact_frames(samples);
  vdm::SpectralBundle bundle =
      analytic_bundle(samples, frames, Eigen::VectorXd::Constant(6, 1.0));
  vdm::Rng rng(5);
  for (int i = 0; i < bundle.m; ++i) bundle.degrees(i) = rng.uniform(0.5, 2.0);

  const vdm::CheckReport r =
      vdm::check_sphere_analytic(bundle, frames, samples, 0.15);
  CHECK(r.pass);
  CHECK(r.statistic < 1e-8);
  CHECK(r.details["q_orthogonality_defect"].get<double>() < 1e-8);
  CHECK(r.details["cluster"] == 6);

  // The global scale is estimated from the data, so a rescaled eigenbasis
  // must produce the same statistic.
  vdm::SpectralBundle scaled = bundle;
  scaled.fields *= 0.37;
  const vdm::CheckReport r2 =
      vdm::check_sphere_analytic(scaled, frames, samples, 0.15);
  CHECK(r2.pass);
  CHECK(r2.statistic < 1e-8);
}

TEST_CASE("verify: sphere check demands a 6-fold cluster") {
  const auto samples = vdm::sample_sphere_frames(50, 313);
  const vdm::FrameField frames = exact_frames(samples);
  const vdm::SpectralBundle bundle =
      analytic_bundle(samples, frames, vec({1.0, 1.0, 1.0, 1.0, 2.2, 2.2}));
  bool caught = false;
  try {
    vdm::check_sphere_analytic(bundle, frames, samples, 0.15);
  } catch (const vdm::VdmError& e) {
    caught = true;
    CHECK(e.code() == vdm::ErrorCode::MultiplicityMismatch);
    CHECK(e.to_json()["details"]["found"] == 4);
  }
  CHECK(caught);
}

TEST_CASE("verify: antipodal collapse of the diagonal map is exact") {
  const auto samples = vdm::sample_sphere_frames(150, 317, true);
  const vdm::FrameField frames = exact_frames(samples);
  const vdm::SpectralBundle bundle = analytic_bundle(
      samples, frames, vec({0.50, 0.50, 0.52, 0.52, 0.54, 0.54}));

  std::vector<std::array<int, 2>> antipodal;
  for (int i = 0; i < bundle.m; i += 2) antipodal.push_back({i, i + 1});
  const std::vector<std::array<int, 2>> far{{0, 2}, {4, 10}, {9, 31}};

  const vdm::CheckReport r = vdm::check_rp2(bundle, antipodal, far, 1.0, 0.05);
  CHECK(r.pass);
  CHECK(r.statistic < 1e-10);
  CHECK(r.details["micro_cluster_sizes"] == std::vector<int>({2, 2, 2}));
  CHECK(r.details["image_diameter"].get<double>() > 0.0);
  CHECK(r.details["non_antipodal_far_pairs"] == 3);

  SUBCASE("degenerate spectra are rejected") {
    vdm::SpectralBundle flat = bundle;
    flat.eigenvalues = Eigen::VectorXd::Constant(6, 0.5);
    CHECK_THROWS_AS(vdm::check_rp2(flat, antipodal, far, 1.0, 0.05),
                    vdm::VdmError);
    vdm::SpectralBundle split = bundle;
    split.eigenvalues = vec({0.1, 0.5, 0.5, 0.5, 0.5, 0.5});
    CHECK_THROWS_AS(vdm::check_rp2(split, antipodal, far, 1.0, 0.05),
                    vdm::VdmError);
  }
  SUBCASE("argument validation") {
    CHECK_THROWS_AS(vdm::check_rp2(bundle, {}, far, 1.0, 0.05), vdm::VdmError);
    CHECK_THROWS_AS(vdm::check_rp2(bundle, antipodal, {{3, 3}}, 1.0, 0.05),
                    vdm::VdmError);
    CHECK_THROWS_AS(vdm::check_rp2(bundle, antipodal, far, -1.0, 0.05),
                    vdm::VdmError);
  }
}

TEST_CASE("verify: Cauchy-Schwarz margin on a real bundle") {
  const CircleFixture& fix = circle_fixture();
  const vdm::CheckReport r = vdm::check_cauchy_schwarz(
      fix.bundle, fix.t, fix.bundle.k(), 500, 424242);
  CHECK(r.pass);
  CHECK(r.statistic >= -1e-12);
  CHECK(r.threshold == doctest::Approx(-1e-12));
  CHECK(r.details["trials"] == 500);
  CHECK(r.details["truncation"] == fix.bundle.k());
  CHECK_THROWS_AS(
      vdm::check_cauchy_schwarz(fix.bundle, fix.t, fix.bundle.k(), 0, 1),
      vdm::VdmError);
}

TEST_CASE("verify: Weyl fit recovers exact power laws") {
  // Eigenvalues following count ~ lambda^{n/2} exactly give slope n/2.
  vdm::SpectralBundle b;
  b.m = 1;
  b.d = 1;
  b.degrees = Eigen::VectorXd::Ones(1);
  b.gaps = {130};
  b.eigenvalues.resize(130);
  b.fields = Eigen::MatrixXd::Zero(1, 130);

  b.eigenvalues(0) = 0.0;
  for (int j = 1; j < 130; ++j) b.eigenvalues(j) = 1e-3 * j * j;
  const vdm::CheckReport curve = vdm::check_weyl_growth(b, 1);
  CHECK(curve.pass);
  CHECK(curve.statistic < 0.05);
  CHECK(curve.details["expected"] == doctest::Approx(0.5));

  for (int j = 1; j < 130; ++j) b.eigenvalues(j) = 1e-3 * j;
  const vdm::CheckReport surface = vdm::check_weyl_growth(b, 2);
  CHECK(surface.pass);
  CHECK(surface.statistic < 0.1);

  b.eigenvalues = Eigen::VectorXd::LinSpaced(40, 0.1, 4.0);
  b.fields = Eigen::MatrixXd::Zero(1, 40);
  bool caught = false;
  try {
    vdm::check_weyl_growth(b, 1);
  } catch (const vdm::VdmError& e) {
    caught = true;
    CHECK(e.code() == vdm::ErrorCode::InsufficientSpectrum);
  }
  CHECK(caught);
}

TEST_CASE("verify: Weyl exponent of a dense-solved circle spectrum") {
  const vdm::PointCloud cloud =
      vdm::sample_circle_xray(512, 32, vdm::XrayImage::default_two_spot(), 0);
  vdm::GraphOptions gopts;
  gopts.epsilon = vdm::suggest_epsilon(cloud);
  const vdm::NeighborGraph graph = vdm::build_graph(cloud, gopts);
  const vdm::BlockOperator op = vdm::assemble_trivial(graph, 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      op.dense_normalized());
  REQUIRE(eig.info() == Eigen::Success);

  const int k = 120;
  vdm::SpectralBundle b;
  b.m = graph.m;
  b.d = 1;
  b.degrees = op.degrees;
  b.gaps = {k};
  b.eigenvalues.resize(k);
  for (int i = 0; i < k; ++i)
    b.eigenvalues(i) = 1.0 - eig.eigenvalues()(graph.m - 1 - i);
  b.fields = Eigen::MatrixXd::Zero(graph.m, k);

  const vdm::CheckReport r = vdm::check_weyl_growth(b, 1);
  CHECK(r.pass);
  CHECK(r.details["positive"].get<int>() >= 50);
}

TEST_CASE("verify: remainder ratios decay across gaps") {
  const CircleFixture& fix = circle_fixture();
  REQUIRE(fix.bundle.gaps.size() >= 3);
  const vdm::CheckReport r =
      vdm::check_remainder_decay(fix.bundle, fix.t, fix.bundle.gaps);
  CHECK(r.pass);
  CHECK(r.details["monotone"] == true);
  CHECK(r.statistic < 1.0);
  const auto rem = r.details["remainders"].get<std::vector<double>>();
  REQUIRE(rem.size() == fix.bundle.gaps.size());
  for (std::size_t s = 1; s < rem.size(); ++s)
    CHECK(rem[s] <= rem[s - 1] + 1e-14);
  CHECK(rem.back() == 0.0);

  CHECK_THROWS_AS(
      vdm::check_remainder_decay(fix.bundle, fix.t, {fix.bundle.gaps[0]}),
      vdm::VdmError);
}

TEST_CASE("verify: trivial line bundle has unit Kato ratio") {
  const CircleFixture& fix = circle_fixture();
  const vdm::BlockOperator op = vdm::assemble_trivial(fix.graph, 1);
  vdm::SolverOptions sopts;
  sopts.k = 10;
  const vdm::SpectralBundle trivial = vdm::spectrum(op, sopts);
  const vdm::ScalarBaseline baseline =
      vdm::dm_baseline(fix.graph, 10, fix.t);
  REQUIRE(baseline.eigenvalues.size() == trivial.k());

  const vdm::CheckReport r =
      vdm::kato_ratio_diagnostic(trivial, baseline, fix.t);
  CHECK(r.pass);
  CHECK(r.statistic == doctest::Approx(1.0).epsilon(1e-9));
  const auto j = vdm::report_to_json(r);
  CHECK(j["threshold"].is_null());
}
