#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vdm/types.hpp"

namespace vdm {

// Weight kernel on scaled distance u = ||x_i - x_j|| / sqrt(epsilon).
// Compact support on [0, 1] is enforced: the edge set is exactly
// { (i,j) : ||x_i - x_j|| < sqrt(epsilon), i != j }. Only "gauss5"
// (exp(-5 u^2) on [0,1]) is registered.
struct Kernel {
  std::string id = "gauss5";

  // Weight from the squared distance; avoids a sqrt and keeps the brute-force
  // and tree paths bit-identical.
  double weight_sq(double sq_dist, double epsilon) const;
  // Inverse: squared distance from a stored weight (used when loading edge
  // lists, which serialize weights only).
  double sq_dist_from_weight(double w, double epsilon) const;

  static Kernel by_id(const std::string& id);
};

struct NeighborEdge {
  int j = -1;
  double w = 0.0;
  double dist = 0.0;
};

struct NeighborGraph {
  int m = 0;
  double epsilon = 0.0;
  std::string kernel_id;
  bool complete = false;
  // Sorted by j; every edge appears in both endpoint lists.
  std::vector<std::vector<NeighborEdge>> adj;

  double degree(int i) const {
    double s = 0.0;
    for (const auto& e : adj[i]) s += e.w;
    return s;
  }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& row : adj) n += row.size();
    return n / 2;
  }

  // Canonical i < j edge enumeration (lexicographic), the order used by the
  // CSV export and the block operator.
  std::vector<std::array<int, 2>> edges() const;
};

struct GraphOptions {
  double epsilon = 0.0;       // required unless complete = true
  Kernel kernel;              // default gauss5
  bool complete = false;      // widen epsilon past the cloud diameter
};

// Build the neighbor graph. Brute force for m <= 4096, k-d tree above; the
// two paths produce bit-identical results (candidate distances are always
// recomputed the same way). Throws:
//   InvalidArgument     duplicate points (distance < 1e-12) or bad epsilon
//   GraphDisconnected   with per-point component labels in details
NeighborGraph build_graph(const PointCloud& cloud, const GraphOptions& opts);

// Bandwidth heuristic: (median over i of the distance to the ceil(log m)-th
// nearest neighbor)^2. O(m^2); fine at desk scale.
double suggest_epsilon(const PointCloud& cloud);

// Connected-component labels (0-based, by order of first appearance).
std::vector<int> component_labels(const NeighborGraph& graph);

// Single-source shortest paths with edge length = ambient distance.
// Unreachable vertices get +infinity.
std::vector<double> shortest_paths(const NeighborGraph& graph, int source);

// Two-sweep diameter estimate (exact on trees/cycles, a lower bound in
// general).
double diameter_estimate(const NeighborGraph& graph);

// Deterministic sample of vertex pairs at shortest-path distance >= min_dist,
// drawn from evenly spaced Dijkstra sources. Used for embedding certificates.
std::vector<std::array<int, 2>> far_pairs(const NeighborGraph& graph,
                                          double min_dist,
                                          int max_pairs = 256,
                                          int max_sources = 64);

}  // namespace vdm
