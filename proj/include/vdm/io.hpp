#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vdm/charts.hpp"
#include "vdm/embedding.hpp"
#include "vdm/frames.hpp"
#include "vdm/gcl.hpp"
#include "vdm/graph.hpp"
#include "vdm/types.hpp"

namespace vdm {

// Artifact layer. Every writer is deterministic byte for byte: doubles are
// rendered with %.17g (round-trip exact for binary64), JSON keys keep
// insertion order, and files land via a .partial rename so failed runs never
// clobber completed artifacts.

std::uint64_t fnv1a_bytes(const void* data, std::size_t len);
std::uint64_t fnv1a_file(const std::string& path);  // IoError if unreadable
std::string hex64(std::uint64_t v);
std::string format_g17(double v);

// Serialize with %.17g doubles; pretty = 2-space indent, otherwise compact.
// Non-finite numbers throw IoError (JSON cannot carry them).
std::string dump_json17(const nlohmann::ordered_json& j, bool pretty = true);

void write_file_atomic(const std::string& path, const std::string& content);
nlohmann::json read_json_file(const std::string& path);

// Config plus content hashes of the inputs a stage consumed; embedded in
// every artifact (as "# " comment lines in CSV, as a "provenance" object in
// JSON).
struct Provenance {
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<std::pair<std::string, std::string>> inputs;
};

nlohmann::ordered_json provenance_json(const Provenance& prov);

// Point cloud CSV: optional "# " provenance lines, then a mandatory header
// (coordinates x0..x{p-1}, labels prefixed label_), then one row per point,
// %.17g decimals.
void write_point_cloud_csv(const std::string& path, const PointCloud& cloud,
                           const Provenance& prov);
PointCloud read_point_cloud_csv(const std::string& path);

// Edge list CSV: header i,j,w with i < j, weights at 17 significant digits.
void write_graph_csv(const std::string& path, const NeighborGraph& graph,
                     const Provenance& prov);

// frames.f64le: m*p*d little-endian doubles, row-major per point, plus a
// sidecar frames.json {m, p, d, provenance} in the same directory.
void write_frames(const std::string& dir, const FrameField& frames,
                  const Provenance& prov);
FrameField read_frames(const std::string& dir);

// Spectral bundle directory: meta.json (m, d, p, epsilon, kernel_id, K,
// eigenvalues, gaps, degrees, solver settings, provenance) plus fields.f64le
// holding K*m*d little-endian doubles, eigenpair-major then point-major.
void write_bundle(const std::string& dir, const SpectralBundle& bundle,
                  int ambient_p, const Provenance& prov);
SpectralBundle read_bundle(const std::string& dir, int* ambient_p = nullptr);

// Embedding CSV: long form (i,pair_k,pair_l,value) or wide form (one row per
// point, columns v_<k>_<l>).
void write_embedding_csv(const std::string& path, const EmbeddingResult& emb,
                         bool wide, const Provenance& prov);

nlohmann::ordered_json certificate_to_json(const Certificate& cert);
nlohmann::ordered_json chart_to_json(const ChartSelection& sel,
                                     const SpectralBundle& bundle,
                                     const BandFilter& band, double c0,
                                     const DistortionRange& range);

}  // namespace vdm
