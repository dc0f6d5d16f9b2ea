#include "vdm/io.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vdm/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "f64le artifacts assume a little-endian host");

namespace vdm {

namespace fs = std::filesystem;

std::uint64_t fnv1a_bytes(const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw VdmError(ErrorCode::IoError, "io", "cannot open file for hashing",
                   {{"path", path}});
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void append_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  out += '"';
}

void dump_rec(const nlohmann::ordered_json& j, std::string& out, bool pretty,
              int depth) {
  const std::string pad(pretty ? 2 * (depth + 1) : 0, ' ');
  const std::string close_pad(pretty ? 2 * depth : 0, ' ');
  const char* nl = pretty ? "\n" : "";
  switch (j.type()) {
    case nlohmann::ordered_json::value_t::null:
      out += "null";
      break;
    case nlohmann::ordered_json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case nlohmann::ordered_json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      break;
    case nlohmann::ordered_json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      break;
    case nlohmann::ordered_json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v))
        throw VdmError(ErrorCode::IoError, "io",
                       "non-finite number in JSON artifact");
      out += format_g17(v);
      break;
    }
    case nlohmann::ordered_json::value_t::string:
      append_escaped(out, j.get<std::string>());
      break;
    case nlohmann::ordered_json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      out += '[';
      bool first = true;
      for (const auto& item : j) {
        if (!first) out += ',';
        first = false;
        out += nl;
        out += pad;
        dump_rec(item, out, pretty, depth + 1);
      }
      out += nl;
      out += close_pad;
      out += ']';
      break;
    }
    case nlohmann::ordered_json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += nl;
        out += pad;
        append_escaped(out, it.key());
        out += pretty ? ": " : ":";
        dump_rec(it.value(), out, pretty, depth + 1);
      }
      out += nl;
      out += close_pad;
      out += '}';
      break;
    }
    default:
      throw VdmError(ErrorCode::IoError, "io",
                     "unsupported JSON value type in artifact");
  }
}

}  // namespace

std::string dump_json17(const nlohmann::ordered_json& j, bool pretty) {
  std::string out;
  dump_rec(j, out, pretty, 0);
  if (pretty) out += '\n';
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string partial = path + ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out)
      throw VdmError(ErrorCode::IoError, "io", "cannot open file for writing",
                     {{"path", partial}});
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out)
      throw VdmError(ErrorCode::IoError, "io", "short write",
                     {{"path", partial}});
  }
  std::error_code ec;
  fs::rename(partial, path, ec);
  if (ec)
    throw VdmError(ErrorCode::IoError, "io", "cannot finalize artifact",
                   {{"path", path}, {"error", ec.message()}});
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw VdmError(ErrorCode::IoError, "io", "cannot open JSON file",
                   {{"path", path}});
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw VdmError(ErrorCode::IoError, "io", "invalid JSON",
                   {{"path", path}, {"what", e.what()}});
  }
  return j;
}

nlohmann::ordered_json provenance_json(const Provenance& prov) {
  nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
  for (const auto& [name, hash] : prov.inputs) inputs[name] = hash;
  return {{"config", prov.config}, {"inputs", inputs}};
}

namespace {

std::string provenance_comments(const std::string& kind,
                                const Provenance& prov) {
  std::string out = "# artifact: " + kind + "\n";
  out += "# config: " + dump_json17(prov.config, false) + "\n";
  for (const auto& [name, hash] : prov.inputs)
    out += "# input " + name + ": fnv1a64:" + hash + "\n";
  return out;
}

}  // namespace

void write_point_cloud_csv(const std::string& path, const PointCloud& cloud,
                           const Provenance& prov) {
  cloud.validate();
  std::string out = provenance_comments("point_cloud", prov);
  for (int c = 0; c < cloud.p(); ++c) {
    if (c) out += ',';
    out += "x" + std::to_string(c);
  }
  for (const auto& [name, col] : cloud.labels) out += ",label_" + name;
  out += '\n';
  for (int i = 0; i < cloud.m(); ++i) {
    for (int c = 0; c < cloud.p(); ++c) {
      if (c) out += ',';
      out += format_g17(cloud.points(i, c));
    }
    for (const auto& [name, col] : cloud.labels) {
      out += ',';
      out += format_g17(col(i));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

namespace {

double parse_double(const std::string& field, const std::string& path,
                    int line) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end)
    throw VdmError(ErrorCode::IoError, "io", "cannot parse number in CSV",
                   {{"path", path}, {"line", line}, {"field", field}});
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

PointCloud read_point_cloud_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw VdmError(ErrorCode::IoError, "io", "cannot open point cloud CSV",
                   {{"path", path}});
  std::string line;
  int line_no = 0;
  // Skip provenance comments, then read the mandatory header.
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line[0] != '#') break;
  }
  if (line.empty() || line[0] == '#')
    throw VdmError(ErrorCode::IoError, "io", "point cloud CSV has no header",
                   {{"path", path}});

  const std::vector<std::string> header = split_csv_line(line);
  std::vector<int> coord_cols;
  std::vector<std::pair<std::string, int>> label_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (header[c].rfind("label_", 0) == 0)
      label_cols.emplace_back(header[c].substr(6), c);
    else
      coord_cols.push_back(c);
  }
  if (coord_cols.empty())
    throw VdmError(ErrorCode::IoError, "io", "CSV has no coordinate columns",
                   {{"path", path}});

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw VdmError(ErrorCode::IoError, "io", "CSV row width mismatch",
                     {{"path", path},
                      {"line", line_no},
                      {"expected", header.size()},
                      {"got", fields.size()}});
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      row[c] = parse_double(fields[c], path, line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw VdmError(ErrorCode::IoError, "io", "point cloud CSV has no rows",
                   {{"path", path}});

  PointCloud cloud;
  const int m = static_cast<int>(rows.size());
  const int p = static_cast<int>(coord_cols.size());
  cloud.points.resize(m, p);
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < p; ++c) cloud.points(i, c) = rows[i][coord_cols[c]];
  for (const auto& [name, col] : label_cols) {
    Eigen::VectorXd v(m);
    for (int i = 0; i < m; ++i) v(i) = rows[i][col];
    cloud.add_label(name, std::move(v));
  }
  cloud.validate();
  return cloud;
}

void write_graph_csv(const std::string& path, const NeighborGraph& graph,
                     const Provenance& prov) {
  std::string out = provenance_comments("graph", prov);
  out += "i,j,w\n";
  for (const auto& [i, j] : graph.edges()) {
    double w = 0.0;
    for (const NeighborEdge& e : graph.adj[i])
      if (e.j == j) {
        w = e.w;
        break;
      }
    out += std::to_string(i) + "," + std::to_string(j) + "," + format_g17(w) +
           "\n";
  }
  write_file_atomic(path, out);
}

namespace {

void write_doubles_atomic(const std::string& path,
                          const std::vector<double>& values) {
  std::string bytes(reinterpret_cast<const char*>(values.data()),
                    values.size() * sizeof(double));
  write_file_atomic(path, bytes);
}

std::vector<double> read_doubles(const std::string& path,
                                 std::size_t expected) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in)
    throw VdmError(ErrorCode::IoError, "io", "cannot open binary artifact",
                   {{"path", path}});
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size != expected * sizeof(double))
    throw VdmError(ErrorCode::IoError, "io", "binary artifact size mismatch",
                   {{"path", path},
                    {"bytes", size},
                    {"expected", expected * sizeof(double)}});
  std::vector<double> values(expected);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(size));
  if (!in)
    throw VdmError(ErrorCode::IoError, "io", "short read",
                   {{"path", path}});
  return values;
}

}  // namespace

void write_frames(const std::string& dir, const FrameField& frames,
                  const Provenance& prov) {
  fs::create_directories(dir);
  const int m = frames.m(), p = frames.p(), d = frames.d;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(m) * p * d);
  for (int i = 0; i < m; ++i)
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < d; ++c) values.push_back(frames.bases[i](r, c));
  write_doubles_atomic(dir + "/frames.f64le", values);

  nlohmann::ordered_json meta = {{"m", m},
                                 {"p", p},
                                 {"d", d},
                                 {"provenance", provenance_json(prov)}};
  write_file_atomic(dir + "/frames.json", dump_json17(meta));
}

FrameField read_frames(const std::string& dir) {
  const nlohmann::json meta = read_json_file(dir + "/frames.json");
  const int m = meta.at("m").get<int>();
  const int p = meta.at("p").get<int>();
  const int d = meta.at("d").get<int>();
  if (m < 1 || p < 1 || d < 1 || d > p)
    throw VdmError(ErrorCode::IoError, "io", "invalid frames metadata",
                   {{"m", m}, {"p", p}, {"d", d}});
  const std::vector<double> values = read_doubles(
      dir + "/frames.f64le", static_cast<std::size_t>(m) * p * d);
  FrameField frames;
  frames.d = d;
  frames.bases.resize(m, Eigen::MatrixXd(p, d));
  std::size_t pos = 0;
  for (int i = 0; i < m; ++i)
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < d; ++c) frames.bases[i](r, c) = values[pos++];
  return frames;
}

void write_bundle(const std::string& dir, const SpectralBundle& bundle,
                  int ambient_p, const Provenance& prov) {
  fs::create_directories(dir);

  nlohmann::ordered_json meta;
  meta["m"] = bundle.m;
  meta["d"] = bundle.d;
  meta["p"] = ambient_p;
  meta["epsilon"] = bundle.meta.epsilon;
  meta["kernel_id"] = bundle.meta.kernel_id;
  meta["complete"] = bundle.meta.complete;
  meta["special"] = bundle.meta.special;
  meta["normalization"] = bundle.meta.normalization;
  meta["seed"] = std::to_string(bundle.meta.seed);
  meta["K"] = bundle.k();
  nlohmann::ordered_json eigs = nlohmann::ordered_json::array();
  for (int k = 0; k < bundle.k(); ++k) eigs.push_back(bundle.eigenvalues(k));
  meta["eigenvalues"] = std::move(eigs);
  meta["gaps"] = bundle.gaps;
  nlohmann::ordered_json degs = nlohmann::ordered_json::array();
  for (int i = 0; i < bundle.m; ++i) degs.push_back(bundle.degrees(i));
  meta["degrees"] = std::move(degs);
  meta["solver"] = {{"tol", bundle.meta.solver_tol},
                    {"gap_tol", bundle.meta.gap_tol},
                    {"iters", bundle.meta.iterations},
                    {"max_residual", bundle.meta.max_residual},
                    {"k_at_gap", bundle.meta.k_at_gap}};
  if (bundle.meta.scalar_lambda2)
    meta["scalar_lambda2"] = *bundle.meta.scalar_lambda2;
  else
    meta["scalar_lambda2"] = nullptr;
  meta["provenance"] = provenance_json(prov);
  write_file_atomic(dir + "/meta.json", dump_json17(meta));

  const std::size_t count = static_cast<std::size_t>(bundle.fields.size());
  std::vector<double> values(bundle.fields.data(),
                             bundle.fields.data() + count);
  write_doubles_atomic(dir + "/fields.f64le", values);
}

SpectralBundle read_bundle(const std::string& dir, int* ambient_p) {
  const nlohmann::json meta = read_json_file(dir + "/meta.json");
  SpectralBundle bundle;
  bundle.m = meta.at("m").get<int>();
  bundle.d = meta.at("d").get<int>();
  const int k = meta.at("K").get<int>();
  if (bundle.m < 1 || bundle.d < 1 || k < 1)
    throw VdmError(ErrorCode::IoError, "io", "invalid bundle metadata",
                   {{"m", bundle.m}, {"d", bundle.d}, {"K", k}});
  if (ambient_p) *ambient_p = meta.at("p").get<int>();

  bundle.eigenvalues.resize(k);
  const auto& eigs = meta.at("eigenvalues");
  if (static_cast<int>(eigs.size()) != k)
    throw VdmError(ErrorCode::IoError, "io",
                   "eigenvalue list length disagrees with K",
                   {{"K", k}, {"len", eigs.size()}});
  for (int idx = 0; idx < k; ++idx)
    bundle.eigenvalues(idx) = eigs[idx].get<double>();

  bundle.gaps = meta.at("gaps").get<std::vector<int>>();
  const auto& degs = meta.at("degrees");
  if (static_cast<int>(degs.size()) != bundle.m)
    throw VdmError(ErrorCode::IoError, "io",
                   "degree list length disagrees with m",
                   {{"m", bundle.m}, {"len", degs.size()}});
  bundle.degrees.resize(bundle.m);
  for (int i = 0; i < bundle.m; ++i) bundle.degrees(i) = degs[i].get<double>();

  bundle.meta.epsilon = meta.at("epsilon").get<double>();
  bundle.meta.kernel_id = meta.at("kernel_id").get<std::string>();
  bundle.meta.complete = meta.at("complete").get<bool>();
  bundle.meta.special = meta.at("special").get<bool>();
  bundle.meta.normalization = meta.at("normalization").get<std::string>();
  bundle.meta.seed = std::stoull(meta.at("seed").get<std::string>());
  const auto& solver = meta.at("solver");
  bundle.meta.solver_tol = solver.at("tol").get<double>();
  bundle.meta.gap_tol = solver.at("gap_tol").get<double>();
  bundle.meta.iterations = solver.at("iters").get<int>();
  bundle.meta.max_residual = solver.at("max_residual").get<double>();
  bundle.meta.k_at_gap = solver.at("k_at_gap").get<bool>();
  if (meta.contains("scalar_lambda2") && !meta.at("scalar_lambda2").is_null())
    bundle.meta.scalar_lambda2 = meta.at("scalar_lambda2").get<double>();

  const std::size_t count =
      static_cast<std::size_t>(bundle.m) * bundle.d * k;
  const std::vector<double> values =
      read_doubles(dir + "/fields.f64le", count);
  bundle.fields.resize(static_cast<Eigen::Index>(bundle.m) * bundle.d, k);
  std::copy(values.begin(), values.end(), bundle.fields.data());
  bundle.validate();
  return bundle;
}

void write_embedding_csv(const std::string& path, const EmbeddingResult& emb,
                         bool wide, const Provenance& prov) {
  std::string out = provenance_comments("embedding", prov);
  const int n = emb.n;
  if (wide) {
    out += "i";
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        out += ",v_" + std::to_string(k) + "_" + std::to_string(l);
    out += '\n';
    for (int i = 0; i < emb.coords.rows(); ++i) {
      out += std::to_string(i);
      for (int c = 0; c < emb.coords.cols(); ++c) {
        out += ',';
        out += format_g17(emb.coords(i, c));
      }
      out += '\n';
    }
  } else {
    out += "i,pair_k,pair_l,value\n";
    for (int i = 0; i < emb.coords.rows(); ++i)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          out += std::to_string(i) + "," + std::to_string(k) + "," +
                 std::to_string(l) + "," +
                 format_g17(emb.coords(i, k * n + l)) + "\n";
  }
  write_file_atomic(path, out);
}

nlohmann::ordered_json certificate_to_json(const Certificate& cert) {
  return {{"c1", cert.c1},     {"G", cert.g},
          {"R_N", cert.r_n},   {"margin", cert.margin},
          {"pass", cert.pass}, {"t", cert.t},
          {"n", cert.n},       {"K", cert.k}};
}

nlohmann::ordered_json chart_to_json(const ChartSelection& sel,
                                     const SpectralBundle& bundle,
                                     const BandFilter& band, double c0,
                                     const DistortionRange& range) {
  nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
  nlohmann::ordered_json eigs = nlohmann::ordered_json::array();
  for (const auto& [i, j] : sel.pairs) {
    pairs.push_back({i, j});
    eigs.push_back({bundle.eigenvalues(i), bundle.eigenvalues(j)});
  }
  nlohmann::ordered_json mu = nlohmann::ordered_json::array();
  for (int l = 0; l < sel.weights.size(); ++l) mu.push_back(sel.weights(l));
  nlohmann::ordered_json grad = nlohmann::ordered_json::array();
  nlohmann::ordered_json dirs = nlohmann::ordered_json::array();
  for (int l = 0; l < sel.gradient_matrix.rows(); ++l) {
    nlohmann::ordered_json grow = nlohmann::ordered_json::array();
    nlohmann::ordered_json drow = nlohmann::ordered_json::array();
    for (int c = 0; c < sel.gradient_matrix.cols(); ++c) {
      grow.push_back(sel.gradient_matrix(l, c));
      drow.push_back(sel.directions(c, l));  // column l is direction v_l
    }
    grad.push_back(std::move(grow));
    dirs.push_back(std::move(drow));
  }
  return {{"center", sel.center},
          {"radius", sel.radius},
          {"pairs", std::move(pairs)},
          {"eigenvalues", std::move(eigs)},
          {"mu", std::move(mu)},
          {"gradient_matrix", std::move(grad)},
          {"directions", std::move(dirs)},
          {"c_lo", range.c_lo},
          {"c_hi", range.c_hi},
          {"band",
           {{"A", band.a}, {"A_prime", band.a_prime}, {"t", band.t}}},
          {"c0", c0},
          {"ball_size", sel.ball.size()}};
}

}  // namespace vdm
