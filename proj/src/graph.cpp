#include "vdm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>

namespace vdm {

namespace {

constexpr int kBruteForceLimit = 4096;
constexpr double kDuplicateSqDist = 1e-12 * 1e-12;

// Canonical squared distance: fixed accumulation order so the brute-force and
// tree paths agree bit for bit.
double sq_dist(const Eigen::MatrixXd& pts, int i, int j) {
  double acc = 0.0;
  for (int k = 0; k < pts.cols(); ++k) {
    const double diff = pts(i, k) - pts(j, k);
    acc += diff * diff;
  }
  return acc;
}

double max_sq_dist(const Eigen::MatrixXd& pts) {
  double best = 0.0;
  for (int i = 0; i < pts.rows(); ++i)
    for (int j = i + 1; j < pts.rows(); ++j)
      best = std::max(best, sq_dist(pts, i, j));
  return best;
}

// Fixed-radius candidate search. Median split on the dimension of largest
// extent, leaves of 16; candidates are re-tested by the caller with the
// canonical distance.
class KdTree {
 public:
  explicit KdTree(const Eigen::MatrixXd& pts) : pts_(pts) {
    idx_.resize(pts.rows());
    for (int i = 0; i < pts.rows(); ++i) idx_[i] = i;
    nodes_.reserve(2 * idx_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<int>(idx_.size()));
  }

  void radius_candidates(int query, double radius_sq,
                         std::vector<int>& out) const {
    out.clear();
    search(root_, query, radius_sq, out);
  }

 private:
  static constexpr int kLeafSize = 16;

  struct Node {
    int begin = 0, end = 0;
    int dim = -1;
    double split = 0.0;
    int left = -1, right = -1;
  };

  int build(int begin, int end) {
    Node node;
    node.begin = begin;
    node.end = end;
    if (end - begin > kLeafSize) {
      int dim = 0;
      double best_extent = -1.0;
      for (int d = 0; d < pts_.cols(); ++d) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int t = begin; t < end; ++t) {
          const double v = pts_(idx_[t], d);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        if (hi - lo > best_extent) {
          best_extent = hi - lo;
          dim = d;
        }
      }
      const int mid = begin + (end - begin) / 2;
      std::nth_element(idx_.begin() + begin, idx_.begin() + mid,
                       idx_.begin() + end, [&](int a, int b) {
                         const double va = pts_(a, dim), vb = pts_(b, dim);
                         return va < vb || (va == vb && a < b);
                       });
      node.dim = dim;
      node.split = pts_(idx_[mid], dim);
      const int self = static_cast<int>(nodes_.size());
      nodes_.push_back(node);
      const int left = build(begin, mid);
      const int right = build(mid, end);
      nodes_[self].left = left;
      nodes_[self].right = right;
      return self;
    }
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    return self;
  }

  void search(int node_id, int query, double radius_sq,
              std::vector<int>& out) const {
    const Node& node = nodes_[node_id];
    if (node.dim < 0) {
      for (int t = node.begin; t < node.end; ++t) out.push_back(idx_[t]);
      return;
    }
    const double delta = pts_(query, node.dim) - node.split;
    if (delta <= 0.0) {
      search(node.left, query, radius_sq, out);
      if (delta * delta <= radius_sq) search(node.right, query, radius_sq, out);
    } else {
      search(node.right, query, radius_sq, out);
      if (delta * delta <= radius_sq) search(node.left, query, radius_sq, out);
    }
  }

  const Eigen::MatrixXd& pts_;
  std::vector<int> idx_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace

double Kernel::weight_sq(double sq_d, double epsilon) const {
  if (sq_d >= epsilon) return 0.0;  // support is [0, 1) in scaled distance
  return std::exp(-5.0 * sq_d / epsilon);
}

double Kernel::sq_dist_from_weight(double w, double epsilon) const {
  return -epsilon * std::log(w) / 5.0;
}

Kernel Kernel::by_id(const std::string& id) {
  if (id != "gauss5")
    throw VdmError(ErrorCode::InvalidArgument, "graph_builder",
                   "unknown kernel id", {{"kernel", id}});
  return Kernel{id};
}

std::vector<std::array<int, 2>> NeighborGraph::edges() const {
  std::vector<std::array<int, 2>> out;
  out.reserve(edge_count());
  for (int i = 0; i < m; ++i)
    for (const auto& e : adj[i])
      if (e.j > i) out.push_back({i, e.j});
  return out;
}

NeighborGraph build_graph(const PointCloud& cloud, const GraphOptions& opts) {
  cloud.validate();
  const int m = cloud.m();
  if (m < 2)
    throw VdmError(ErrorCode::InvalidArgument, "graph_builder",
                   "need at least two points");

  double epsilon = opts.epsilon;
  if (opts.complete) {
    // Widen the bandwidth just past the squared diameter so every pair sits
    // strictly inside the kernel support.
    epsilon = max_sq_dist(cloud.points) * (1.0 + 0x1.0p-40);
  }
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw VdmError(ErrorCode::InvalidArgument, "graph_builder",
                   "epsilon must be positive and finite",
                   {{"epsilon", epsilon}});

  NeighborGraph graph;
  graph.m = m;
  graph.epsilon = epsilon;
  graph.kernel_id = opts.kernel.id;
  graph.complete = opts.complete;
  graph.adj.assign(m, {});

  auto add_pair = [&](int i, int j) {
    const double sq = sq_dist(cloud.points, i, j);
    if (sq < kDuplicateSqDist)
      throw VdmError(ErrorCode::InvalidArgument, "graph_builder",
                     "duplicate points in cloud",
                     {{"i", i}, {"j", j}, {"distance", std::sqrt(sq)}});
    if (sq < epsilon) {
      const double w = opts.kernel.weight_sq(sq, epsilon);
      const double dist = std::sqrt(sq);
      graph.adj[i].push_back({j, w, dist});
      graph.adj[j].push_back({i, w, dist});
    }
  };

  if (m <= kBruteForceLimit) {
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) add_pair(i, j);
  } else {
    KdTree tree(cloud.points);
    std::vector<int> candidates;
    for (int i = 0; i < m; ++i) {
      tree.radius_candidates(i, epsilon, candidates);
      std::sort(candidates.begin(), candidates.end());
      for (int j : candidates)
        if (j > i) add_pair(i, j);
    }
  }

  for (auto& row : graph.adj)
    std::sort(row.begin(), row.end(),
              [](const NeighborEdge& a, const NeighborEdge& b) { return a.j < b.j; });

  const auto labels = component_labels(graph);
  const int n_components = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  if (n_components > 1)
    throw VdmError(ErrorCode::GraphDisconnected, "graph_builder",
                   "graph has multiple connected components; increase epsilon",
                   {{"components", n_components}, {"labels", labels}});
  return graph;
}

double suggest_epsilon(const PointCloud& cloud) {
  cloud.validate();
  const int m = cloud.m();
  if (m < 2)
    throw VdmError(ErrorCode::InvalidArgument, "graph_builder",
                   "need at least two points");
  int k = static_cast<int>(std::ceil(std::log(static_cast<double>(m))));
  k = std::clamp(k, 1, m - 1);

  std::vector<double> kth(m);
  std::vector<double> row(m - 1);
  for (int i = 0; i < m; ++i) {
    int n = 0;
    for (int j = 0; j < m; ++j)
      if (j != i) row[n++] = sq_dist(cloud.points, i, j);
    std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
    kth[i] = std::sqrt(row[k - 1]);
  }
  std::sort(kth.begin(), kth.end());
  const double median = (m % 2 == 1)
                            ? kth[m / 2]
                            : 0.5 * (kth[m / 2 - 1] + kth[m / 2]);
  return median * median;
}

std::vector<int> component_labels(const NeighborGraph& graph) {
  std::vector<int> labels(graph.m, -1);
  int next = 0;
  std::vector<int> stack;
  for (int s = 0; s < graph.m; ++s) {
    if (labels[s] >= 0) continue;
    labels[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const auto& e : graph.adj[v])
        if (labels[e.j] < 0) {
          labels[e.j] = next;
          stack.push_back(e.j);
        }
    }
    ++next;
  }
  return labels;
}

std::vector<double> shortest_paths(const NeighborGraph& graph, int source) {
  if (source < 0 || source >= graph.m)
    throw VdmError(ErrorCode::InvalidArgument, "graph_builder",
                   "source out of range", {{"source", source}});
  std::vector<double> dist(graph.m, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    const auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (const auto& e : graph.adj[v]) {
      const double nd = d + e.dist;
      if (nd < dist[e.j]) {
        dist[e.j] = nd;
        heap.push({nd, e.j});
      }
    }
  }
  return dist;
}

namespace {
int farthest_vertex(const std::vector<double>& dist) {
  int best = 0;
  double best_d = -1.0;
  for (int i = 0; i < static_cast<int>(dist.size()); ++i)
    if (std::isfinite(dist[i]) && dist[i] > best_d) {
      best_d = dist[i];
      best = i;
    }
  return best;
}
}  // namespace

double diameter_estimate(const NeighborGraph& graph) {
  const auto d0 = shortest_paths(graph, 0);
  const int u = farthest_vertex(d0);
  const auto d1 = shortest_paths(graph, u);
  return d1[farthest_vertex(d1)];
}

std::vector<std::array<int, 2>> far_pairs(const NeighborGraph& graph,
                                          double min_dist, int max_pairs,
                                          int max_sources) {
  if (max_pairs < 1 || max_sources < 1)
    throw VdmError(ErrorCode::InvalidArgument, "graph_builder",
                   "max_pairs and max_sources must be positive");
  std::vector<std::array<int, 2>> out;
  std::set<std::array<int, 2>> seen;
  const int stride = std::max(1, graph.m / max_sources);
  for (int s = 0; s < graph.m && static_cast<int>(out.size()) < max_pairs;
       s += stride) {
    const auto dist = shortest_paths(graph, s);
    for (int j = 0; j < graph.m && static_cast<int>(out.size()) < max_pairs;
         ++j) {
      if (j == s || !std::isfinite(dist[j]) || dist[j] < min_dist) continue;
      const std::array<int, 2> key{std::min(s, j), std::max(s, j)};
      if (seen.insert(key).second) out.push_back(key);
    }
  }
  return out;
}

}  // namespace vdm
