#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vdm/charts.hpp"
#include "vdm/embedding.hpp"
#include "vdm/errors.hpp"
#include "vdm/frames.hpp"
#include "vdm/gcl.hpp"
#include "vdm/geometry.hpp"
#include "vdm/graph.hpp"
#include "vdm/io.hpp"
#include "vdm/types.hpp"
#include "vdm/verify.hpp"

namespace {

using vdm::ErrorCode;
using vdm::VdmError;

struct RunConfig {
  std::string out = "out";
  std::string manifold = "circle-xray";  // circle-xray | sphere | sphere-antipodal
  int m = 2000;                          // sphere-antipodal: base draws, 2m total
  int p = 128;                           // circle-xray grid size; spheres use 3
  int d = 0;                             // 0 = from manifold
  int k = 12;
  std::string epsilon = "auto";
  std::string t = "auto";      // auto = 1 / (first eigenvalue > 1e-8)
  std::string n = "auto";      // auto = first gap >= d+1
  std::string kernel_id = "gauss5";
  std::uint64_t seed = 42;
  double band_a = 4.0;
  double band_a_prime = 0.25;
  double c0 = 0.1;
  double mu_cap = 1e8;
  std::string ball_radius = "auto";  // auto = graph diameter / 8
  int chart_center = -1;  // -1 = auto: best admissibility margin
  double margin_frac = 0.1;
  double sphere_tol = 0.15;
  double rp2_tol = 0.05;
  double remainder_ratio = 1.0;
  int trials = 10000;
  double solver_tol = 1e-10;
  double gap_tol = 1e-6;
  std::string normalization = "degree";
  bool complete_graph = false;
  bool special_orthogonal = false;
  bool wide = false;
};

struct Paths {
  std::string points, graph, frames_dir, bundle_dir, embedding, certificate,
      chart, verify;

  explicit Paths(const std::string& out)
      : points(out + "/points.csv"),
        graph(out + "/graph.csv"),
        frames_dir(out + "/frames"),
        bundle_dir(out + "/bundle"),
        embedding(out + "/embedding.csv"),
        certificate(out + "/certificate.json"),
        chart(out + "/chart.json"),
        verify(out + "/verify.json") {}
};

std::optional<double> parse_auto(const std::string& value,
                                 const std::string& name) {
  if (value == "auto") return std::nullopt;
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw VdmError(ErrorCode::InvalidArgument, "cli",
                   "expected a number or \"auto\"",
                   {{"option", name}, {"value", value}});
  }
}

int manifold_dim(const RunConfig& cfg) {
  if (cfg.d > 0) return cfg.d;
  if (cfg.manifold == "circle-xray") return 1;
  if (cfg.manifold == "sphere" || cfg.manifold == "sphere-antipodal") return 2;
  throw VdmError(ErrorCode::InvalidArgument, "cli", "unknown manifold",
                 {{"manifold", cfg.manifold}});
}

nlohmann::ordered_json config_json(const RunConfig& cfg) {
  return {{"out", cfg.out},
          {"manifold", cfg.manifold},
          {"m", cfg.m},
          {"p", cfg.p},
          {"d", cfg.d},
          {"k", cfg.k},
          {"epsilon", cfg.epsilon},
          {"t", cfg.t},
          {"n", cfg.n},
          {"kernel_id", cfg.kernel_id},
          {"seed", std::to_string(cfg.seed)},
          {"band_a", cfg.band_a},
          {"band_a_prime", cfg.band_a_prime},
          {"c0", cfg.c0},
          {"mu_cap", cfg.mu_cap},
          {"ball_radius", cfg.ball_radius},
          {"chart_center", cfg.chart_center},
          {"margin_frac", cfg.margin_frac},
          {"sphere_tol", cfg.sphere_tol},
          {"rp2_tol", cfg.rp2_tol},
          {"remainder_ratio", cfg.remainder_ratio},
          {"trials", cfg.trials},
          {"solver_tol", cfg.solver_tol},
          {"gap_tol", cfg.gap_tol},
          {"normalization", cfg.normalization},
          {"complete_graph", cfg.complete_graph},
          {"special_orthogonal", cfg.special_orthogonal},
          {"wide", cfg.wide}};
}

void load_config_file(const std::string& path, RunConfig& cfg) {
  const nlohmann::json j = vdm::read_json_file(path);
  if (!j.is_object())
    throw VdmError(ErrorCode::InvalidArgument, "cli",
                   "config file must hold a JSON object", {{"path", path}});
  auto str_or_number = [&](const nlohmann::json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return vdm::format_g17(v.get<double>());
    throw VdmError(ErrorCode::InvalidArgument, "cli",
                   "expected string or number in config", {{"path", path}});
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "out") cfg.out = value.get<std::string>();
    else if (key == "manifold") cfg.manifold = value.get<std::string>();
    else if (key == "m") cfg.m = value.get<int>();
    else if (key == "p") cfg.p = value.get<int>();
    else if (key == "d") cfg.d = value.get<int>();
    else if (key == "k") cfg.k = value.get<int>();
    else if (key == "epsilon") cfg.epsilon = str_or_number(value);
    else if (key == "t") cfg.t = str_or_number(value);
    else if (key == "n") cfg.n = str_or_number(value);
    else if (key == "kernel_id") cfg.kernel_id = value.get<std::string>();
    else if (key == "seed")
      cfg.seed = value.is_string()
                     ? std::stoull(value.get<std::string>())
                     : value.get<std::uint64_t>();
    else if (key == "band_a") cfg.band_a = value.get<double>();
    else if (key == "band_a_prime") cfg.band_a_prime = value.get<double>();
    else if (key == "c0") cfg.c0 = value.get<double>();
    else if (key == "mu_cap") cfg.mu_cap = value.get<double>();
    else if (key == "ball_radius") cfg.ball_radius = str_or_number(value);
    else if (key == "chart_center") cfg.chart_center = value.get<int>();
    else if (key == "margin_frac") cfg.margin_frac = value.get<double>();
    else if (key == "sphere_tol") cfg.sphere_tol = value.get<double>();
    else if (key == "rp2_tol") cfg.rp2_tol = value.get<double>();
    else if (key == "remainder_ratio")
      cfg.remainder_ratio = value.get<double>();
    else if (key == "trials") cfg.trials = value.get<int>();
    else if (key == "solver_tol") cfg.solver_tol = value.get<double>();
    else if (key == "gap_tol") cfg.gap_tol = value.get<double>();
    else if (key == "normalization")
      cfg.normalization = value.get<std::string>();
    else if (key == "complete_graph") cfg.complete_graph = value.get<bool>();
    else if (key == "special_orthogonal")
      cfg.special_orthogonal = value.get<bool>();
    else if (key == "wide") cfg.wide = value.get<bool>();
    else
      throw VdmError(ErrorCode::InvalidArgument, "cli",
                     "unknown config key", {{"key", key}});
  }
}

vdm::Normalization normalization_of(const RunConfig& cfg) {
  if (cfg.normalization == "degree")
    return vdm::Normalization::kDegreeWeighted;
  if (cfg.normalization == "uniform") return vdm::Normalization::kUniform;
  throw VdmError(ErrorCode::InvalidArgument, "cli",
                 "normalization must be degree or uniform",
                 {{"normalization", cfg.normalization}});
}

double resolve_t(const RunConfig& cfg, const vdm::SpectralBundle& bundle) {
  if (const auto v = parse_auto(cfg.t, "t")) return *v;
  for (int k = 0; k < bundle.k(); ++k)
    if (bundle.eigenvalues(k) > 1e-8) return 1.0 / bundle.eigenvalues(k);
  throw VdmError(ErrorCode::InvalidArgument, "cli",
                 "cannot resolve t: no eigenvalue above 1e-8");
}

int resolve_n(const RunConfig& cfg, const vdm::SpectralBundle& bundle,
              int d) {
  if (const auto v = parse_auto(cfg.n, "n")) return static_cast<int>(*v);
  for (int g : bundle.gaps)
    if (g >= d + 1) return g;
  throw VdmError(ErrorCode::TruncationInsideCluster, "cli",
                 "cannot resolve N: no gap at or beyond d+1",
                 {{"d", d}});
}

vdm::NeighborGraph rebuild_graph(const vdm::PointCloud& cloud,
                                 const vdm::BundleMeta& meta) {
  vdm::GraphOptions gopts;
  gopts.epsilon = meta.epsilon;
  gopts.kernel = vdm::Kernel::by_id(meta.kernel_id);
  gopts.complete = meta.complete;
  return vdm::build_graph(cloud, gopts);
}

std::vector<vdm::SphereFrameSample> samples_from_labels(
    const vdm::PointCloud& cloud) {
  const char* names[9] = {"r00", "r01", "r02", "r10", "r11",
                          "r12", "r20", "r21", "r22"};
  const Eigen::VectorXd* cols[9];
  for (int c = 0; c < 9; ++c) {
    cols[c] = cloud.find_label(names[c]);
    if (!cols[c])
      throw VdmError(ErrorCode::InvalidArgument, "cli",
                     "point cloud lacks sphere rotation labels",
                     {{"missing", names[c]}});
  }
  std::vector<vdm::SphereFrameSample> samples(cloud.m());
  for (int i = 0; i < cloud.m(); ++i)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        samples[i].rotation(r, c) = (*cols[3 * r + c])(i);
  return samples;
}

std::vector<std::array<int, 2>> antipodal_from_labels(
    const vdm::PointCloud& cloud) {
  const Eigen::VectorXd* partner = cloud.find_label("partner");
  if (!partner)
    throw VdmError(ErrorCode::InvalidArgument, "cli",
                   "point cloud lacks antipodal partner labels");
  std::vector<std::array<int, 2>> pairs;
  for (int i = 0; i < cloud.m(); ++i) {
    const int j = static_cast<int>((*partner)(i));
    if (j < 0 || j >= cloud.m() || j == i)
      throw VdmError(ErrorCode::InvalidArgument, "cli",
                     "invalid partner label", {{"i", i}, {"partner", j}});
    if (i < j) pairs.push_back({i, j});
  }
  return pairs;
}

// Far pairs in the antipodal quotient metric: the pair (s, j) qualifies only
// when both d(s, j) and d(s, partner(j)) clear the threshold. Plain far pairs
// would admit j near the partner of s, whose image distance is legitimately
// tiny, polluting the separation witness.
std::vector<std::array<int, 2>> quotient_far_pairs(
    const vdm::NeighborGraph& graph, const vdm::PointCloud& cloud,
    double min_dist, int max_pairs = 256, int max_sources = 64) {
  const Eigen::VectorXd* partner = cloud.find_label("partner");
  if (!partner)
    throw VdmError(ErrorCode::InvalidArgument, "cli",
                   "point cloud lacks antipodal partner labels");
  std::vector<std::array<int, 2>> out;
  std::set<std::array<int, 2>> seen;
  const int stride = std::max(1, graph.m / max_sources);
  for (int s = 0; s < graph.m && static_cast<int>(out.size()) < max_pairs;
       s += stride) {
    const auto dist = vdm::shortest_paths(graph, s);
    for (int j = 0; j < graph.m && static_cast<int>(out.size()) < max_pairs;
         ++j) {
      if (j == s) continue;
      const int pj = static_cast<int>((*partner)(j));
      const double quotient = std::min(dist[j], dist[pj]);
      if (!std::isfinite(quotient) || quotient < min_dist) continue;
      const std::array<int, 2> key{std::min(s, j), std::max(s, j)};
      if (seen.insert(key).second) out.push_back(key);
    }
  }
  return out;
}

void stage_generate(const RunConfig& cfg) {
  const Paths paths(cfg.out);
  std::filesystem::create_directories(cfg.out);
  vdm::PointCloud cloud;
  if (cfg.manifold == "circle-xray") {
    cloud = vdm::sample_circle_xray(cfg.m, cfg.p,
                                    vdm::XrayImage::default_two_spot(),
                                    cfg.seed);
  } else if (cfg.manifold == "sphere" || cfg.manifold == "sphere-antipodal") {
    const bool anti = cfg.manifold == "sphere-antipodal";
    const auto samples = vdm::sample_sphere_frames(cfg.m, cfg.seed, anti);
    cloud = vdm::sphere_cloud(samples, anti);
  } else {
    throw VdmError(ErrorCode::InvalidArgument, "cli", "unknown manifold",
                   {{"manifold", cfg.manifold}});
  }
  vdm::Provenance prov;
  prov.config = config_json(cfg);
  vdm::write_point_cloud_csv(paths.points, cloud, prov);
  std::cout << "generate: wrote " << paths.points << " (" << cloud.m()
            << " x " << cloud.p() << ")\n";
}

void stage_spectrum(const RunConfig& cfg) {
  const Paths paths(cfg.out);
  const std::string points_hash = vdm::hex64(vdm::fnv1a_file(paths.points));
  const vdm::PointCloud cloud = vdm::read_point_cloud_csv(paths.points);
  const int d = manifold_dim(cfg);

  vdm::GraphOptions gopts;
  gopts.kernel = vdm::Kernel::by_id(cfg.kernel_id);
  gopts.complete = cfg.complete_graph;
  const auto eps_cfg = parse_auto(cfg.epsilon, "epsilon");
  gopts.epsilon = eps_cfg ? *eps_cfg : vdm::suggest_epsilon(cloud);
  const vdm::NeighborGraph graph = vdm::build_graph(cloud, gopts);

  const vdm::FrameField frames = vdm::estimate_frames(cloud, graph, d);
  const vdm::ConnectionGraph conn =
      vdm::build_connections(frames, graph, cfg.special_orthogonal);
  const vdm::BlockOperator op = vdm::assemble(conn);

  vdm::SolverOptions sopts;
  sopts.k = cfg.k;
  sopts.tol = cfg.solver_tol;
  sopts.gap_tol = cfg.gap_tol;
  sopts.seed = cfg.seed;
  sopts.normalization = normalization_of(cfg);
  vdm::SpectralBundle bundle = vdm::spectrum(op, sopts);
  bundle.meta.epsilon = graph.epsilon;
  bundle.meta.kernel_id = graph.kernel_id;
  bundle.meta.special = cfg.special_orthogonal;
  bundle.meta.complete = cfg.complete_graph;
  if (d == 1)
    for (int k = 0; k < bundle.k(); ++k)
      if (bundle.eigenvalues(k) > 1e-10) {
        bundle.meta.scalar_lambda2 = bundle.eigenvalues(k);
        break;
      }

  vdm::Provenance prov;
  prov.config = config_json(cfg);
  prov.config["resolved"] = {{"epsilon", graph.epsilon}, {"d", d}};
  prov.inputs = {{"points.csv", points_hash}};
  vdm::write_graph_csv(paths.graph, graph, prov);
  vdm::write_frames(paths.frames_dir, frames, prov);
  vdm::write_bundle(paths.bundle_dir, bundle, cloud.p(), prov);
  std::cout << "spectrum: K=" << bundle.k() << " lambda=["
            << bundle.eigenvalues(0) << ", "
            << bundle.eigenvalues(bundle.k() - 1) << "] epsilon="
            << graph.epsilon << "\n";
}

vdm::Provenance downstream_provenance(const RunConfig& cfg,
                                      const Paths& paths) {
  vdm::Provenance prov;
  prov.config = config_json(cfg);
  prov.inputs = {
      {"points.csv", vdm::hex64(vdm::fnv1a_file(paths.points))},
      {"bundle/meta.json",
       vdm::hex64(vdm::fnv1a_file(paths.bundle_dir + "/meta.json"))},
      {"bundle/fields.f64le",
       vdm::hex64(vdm::fnv1a_file(paths.bundle_dir + "/fields.f64le"))}};
  return prov;
}

void stage_embed(const RunConfig& cfg) {
  const Paths paths(cfg.out);
  vdm::Provenance prov = downstream_provenance(cfg, paths);
  const vdm::SpectralBundle bundle = vdm::read_bundle(paths.bundle_dir);
  const vdm::PointCloud cloud = vdm::read_point_cloud_csv(paths.points);

  const double t = resolve_t(cfg, bundle);
  const int n = resolve_n(cfg, bundle, bundle.d);
  const vdm::EmbeddingResult emb = vdm::vdm_embed(bundle, t, n);

  const vdm::NeighborGraph graph = rebuild_graph(cloud, bundle.meta);
  const double diameter = vdm::diameter_estimate(graph);
  const auto far = vdm::far_pairs(graph, diameter / 4.0);
  const vdm::Certificate cert =
      vdm::certify_embedding(bundle, t, n, far, cfg.margin_frac);

  prov.config["resolved"] = {{"t", t},
                             {"n", emb.n},
                             {"diameter", diameter},
                             {"far_pairs", far.size()}};
  vdm::write_embedding_csv(paths.embedding, emb, cfg.wide, prov);
  nlohmann::ordered_json cert_json = vdm::certificate_to_json(cert);
  cert_json["provenance"] = vdm::provenance_json(prov);
  vdm::write_file_atomic(paths.certificate, vdm::dump_json17(cert_json));
  std::cout << "embed: t=" << t << " N=" << emb.n << " certificate "
            << (cert.pass ? "PASS" : "FAIL") << " (G=" << cert.g
            << ", R_N=" << cert.r_n << ", margin=" << cert.margin << ")\n";
}

void stage_chart(const RunConfig& cfg) {
  const Paths paths(cfg.out);
  vdm::Provenance prov = downstream_provenance(cfg, paths);
  const vdm::SpectralBundle bundle = vdm::read_bundle(paths.bundle_dir);
  const vdm::PointCloud cloud = vdm::read_point_cloud_csv(paths.points);
  const vdm::NeighborGraph graph = rebuild_graph(cloud, bundle.meta);
  const vdm::FrameField frames =
      vdm::estimate_frames(cloud, graph, bundle.d);

  const double t = resolve_t(cfg, bundle);
  const vdm::BandFilter band =
      vdm::make_band(bundle, cfg.band_a, cfg.band_a_prime, t);
  const auto radius_cfg = parse_auto(cfg.ball_radius, "ball_radius");
  const double radius =
      radius_cfg ? *radius_cfg : vdm::diameter_estimate(graph) / 8.0;

  vdm::ChartOptions copts;
  copts.c0 = cfg.c0;
  copts.mu_cap = cfg.mu_cap;
  const int center =
      cfg.chart_center >= 0
          ? cfg.chart_center
          : vdm::best_chart_center(bundle, frames, graph, cloud, band, radius,
                                   copts);
  const vdm::ChartSelection sel = vdm::select_chart(
      bundle, frames, graph, cloud, center, band, radius, copts);
  const vdm::DistortionRange range =
      vdm::measure_distortion(sel, bundle, graph, sel.ball);

  prov.config["resolved"] = {
      {"t", t}, {"ball_radius", radius}, {"chart_center", center}};
  nlohmann::ordered_json chart_json =
      vdm::chart_to_json(sel, bundle, band, cfg.c0, range);
  chart_json["provenance"] = vdm::provenance_json(prov);
  vdm::write_file_atomic(paths.chart, vdm::dump_json17(chart_json));
  std::cout << "chart: center=" << sel.center << " pairs=";
  for (const auto& [i, j] : sel.pairs) std::cout << "(" << i << "," << j << ")";
  std::cout << " c_hi/c_lo=" << range.c_hi / range.c_lo << "\n";
}

int stage_verify(const RunConfig& cfg) {
  const Paths paths(cfg.out);
  vdm::Provenance prov = downstream_provenance(cfg, paths);
  const vdm::SpectralBundle bundle = vdm::read_bundle(paths.bundle_dir);
  const vdm::PointCloud cloud = vdm::read_point_cloud_csv(paths.points);
  const vdm::NeighborGraph graph = rebuild_graph(cloud, bundle.meta);

  const double t = resolve_t(cfg, bundle);
  const int n = resolve_n(cfg, bundle, bundle.d);

  std::vector<vdm::CheckReport> reports;
  reports.push_back(
      vdm::check_cauchy_schwarz(bundle, t, n, cfg.trials, cfg.seed));
  reports.push_back(vdm::check_remainder_decay(bundle, t, bundle.gaps,
                                               cfg.remainder_ratio));
  {
    const vdm::ScalarBaseline baseline =
        vdm::dm_baseline(graph, std::min(bundle.k(), graph.m), t,
                         cfg.solver_tol);
    reports.push_back(vdm::kato_ratio_diagnostic(bundle, baseline, t));
  }
  if (bundle.k() >= 60)
    reports.push_back(vdm::check_weyl_growth(bundle, bundle.d));
  if (cfg.manifold == "sphere" || cfg.manifold == "sphere-antipodal") {
    const auto samples = samples_from_labels(cloud);
    const vdm::FrameField frames =
        vdm::estimate_frames(cloud, graph, bundle.d);
    reports.push_back(
        vdm::check_sphere_analytic(bundle, frames, samples, cfg.sphere_tol));
  }
  if (cfg.manifold == "sphere-antipodal") {
    const auto anti = antipodal_from_labels(cloud);
    const double diameter = vdm::diameter_estimate(graph);
    const auto far = quotient_far_pairs(graph, cloud, diameter / 4.0);
    reports.push_back(vdm::check_rp2(bundle, anti, far, t, cfg.rp2_tol));
  }

  bool all_pass = true;
  for (const auto& r : reports) all_pass = all_pass && r.pass;

  prov.config["resolved"] = {{"t", t}, {"n", n}};
  nlohmann::ordered_json suite;
  suite["pass"] = all_pass;
  suite["checks"] = nlohmann::ordered_json(vdm::reports_to_json(reports));
  suite["provenance"] = vdm::provenance_json(prov);
  vdm::write_file_atomic(paths.verify, vdm::dump_json17(suite));
  for (const auto& r : reports)
    std::cout << "verify: " << r.name << " "
              << (r.pass ? "PASS" : "FAIL") << " statistic=" << r.statistic
              << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;

  // Config file first, flags override.
  for (int a = 1; a + 1 < argc; ++a)
    if (std::string(argv[a]) == "--config") {
      try {
        load_config_file(argv[a + 1], cfg);
      } catch (const VdmError& e) {
        std::cerr << e.to_json().dump() << "\n";
        return vdm::error_exit_code(e.code());
      }
      break;
    }

  CLI::App app{
      "vector diffusion map pipeline: point cloud -> graph connection "
      "Laplacian -> eigenvector fields -> embedding, charts, verification.\n"
      "Exit codes: 0 ok, 1 failed verify check, 2 usage, 10+ pipeline error "
      "(code printed as JSON on stderr)."};
  app.require_subcommand(1);
  app.fallthrough();  // flags may follow the subcommand
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override)");
  app.add_option("--out", cfg.out, "artifact directory");
  app.add_option("--manifold", cfg.manifold,
                 "circle-xray | sphere | sphere-antipodal");
  app.add_option("--m", cfg.m, "sample count (sphere-antipodal: base draws)");
  app.add_option("--p", cfg.p, "projection grid size (circle-xray)");
  app.add_option("--d", cfg.d, "bundle rank override (0 = from manifold)");
  app.add_option("--K", cfg.k, "requested eigenpair count");
  app.add_option("--epsilon", cfg.epsilon, "kernel bandwidth or \"auto\"");
  app.add_option("--t", cfg.t, "diffusion time or \"auto\"");
  app.add_option("--N", cfg.n, "truncation or \"auto\"");
  app.add_option("--kernel", cfg.kernel_id, "kernel id");
  app.add_option("--seed", cfg.seed, "RNG seed");
  app.add_option("--A", cfg.band_a, "band upper constant");
  app.add_option("--A-prime", cfg.band_a_prime, "band lower constant");
  app.add_option("--c0", cfg.c0, "chart admissibility constant");
  app.add_option("--mu-cap", cfg.mu_cap, "chart weight cap");
  app.add_option("--ball-radius", cfg.ball_radius,
                 "chart ball radius or \"auto\"");
  app.add_option("--chart-center", cfg.chart_center,
                 "chart center index (-1 = auto: best admissibility margin)");
  app.add_option("--margin-frac", cfg.margin_frac,
                 "certificate margin as a fraction of c1");
  app.add_option("--sphere-tol", cfg.sphere_tol, "sphere check tolerance");
  app.add_option("--rp2-tol", cfg.rp2_tol, "antipodal collapse tolerance");
  app.add_option("--remainder-ratio", cfg.remainder_ratio,
                 "remainder decay ratio bound");
  app.add_option("--trials", cfg.trials, "random trials per inequality check");
  app.add_option("--solver-tol", cfg.solver_tol, "eigensolver tolerance");
  app.add_option("--gap-tol", cfg.gap_tol, "spectral gap tolerance");
  app.add_option("--normalization", cfg.normalization, "degree | uniform");
  app.add_flag("--complete", cfg.complete_graph,
               "complete graph (bandwidth past the diameter)");
  app.add_flag("--special", cfg.special_orthogonal,
               "restrict connections to SO(d)");
  app.add_flag("--wide", cfg.wide, "wide embedding CSV layout");

  auto* sub_generate = app.add_subcommand("generate", "sample a point cloud");
  auto* sub_spectrum =
      app.add_subcommand("spectrum", "graph, frames and spectral bundle");
  auto* sub_embed =
      app.add_subcommand("embed", "truncated VDM embedding + certificate");
  auto* sub_chart = app.add_subcommand("chart", "local chart construction");
  auto* sub_verify = app.add_subcommand("verify", "property check suite");
  auto* sub_all = app.add_subcommand("all", "run every stage in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sub_generate->parsed()) {
      stage_generate(cfg);
    } else if (sub_spectrum->parsed()) {
      stage_spectrum(cfg);
    } else if (sub_embed->parsed()) {
      stage_embed(cfg);
    } else if (sub_chart->parsed()) {
      stage_chart(cfg);
    } else if (sub_verify->parsed()) {
      return stage_verify(cfg);
    } else if (sub_all->parsed()) {
      stage_generate(cfg);
      stage_spectrum(cfg);
      stage_embed(cfg);
      stage_chart(cfg);
      return stage_verify(cfg);
    }
  } catch (const VdmError& e) {
    std::cerr << e.to_json().dump() << "\n";
    return vdm::error_exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json({{"stage", "cli"},
                                 {"code", "Unknown"},
                                 {"message", e.what()}})
                     .dump()
              << "\n";
    return 1;
  }
  return 0;
}
