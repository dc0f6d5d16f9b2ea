#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vdm/errors.hpp"

namespace vdm {

// m points in R^p, one row per point. Labels are optional per-point metadata
// columns (angle on the curve, rotation entries on the sphere, antipodal
// partner index); CSV serialization prefixes them with "label_". Insertion
// order of labels is preserved so exports are byte-stable.
struct PointCloud {
  Eigen::MatrixXd points;  // m x p
  std::vector<std::pair<std::string, Eigen::VectorXd>> labels;
  std::optional<int> intrinsic_dim_hint;

  int m() const { return static_cast<int>(points.rows()); }
  int p() const { return static_cast<int>(points.cols()); }

  const Eigen::VectorXd* find_label(const std::string& name) const {
    for (const auto& [key, col] : labels)
      if (key == name) return &col;
    return nullptr;
  }

  void add_label(const std::string& name, Eigen::VectorXd col) {
    if (col.size() != points.rows())
      throw VdmError(ErrorCode::InvalidArgument, "point_cloud",
                     "label length must equal point count",
                     {{"label", name}});
    labels.emplace_back(name, std::move(col));
  }

  void validate() const {
    if (points.rows() < 1 || points.cols() < 1)
      throw VdmError(ErrorCode::InvalidArgument, "point_cloud",
                     "point cloud must be a nonempty m x p matrix");
    if (!points.allFinite())
      throw VdmError(ErrorCode::InvalidArgument, "point_cloud",
                     "point cloud contains non-finite coordinates");
  }
};

}  // namespace vdm
