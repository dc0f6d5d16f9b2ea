#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

namespace vdm {

// Machine-readable failure codes. Every pipeline error carries one of these
// plus a stage name, so the CLI can surface {stage, code, message, details}
// as JSON on stderr and map the code to a distinct exit status.
enum class ErrorCode {
  InvalidArgument,
  DegenerateEmbedding,
  GraphDisconnected,
  RankDeficient,
  NearSingularAlignment,
  ConvergenceFailure,
  TruncationInsideCluster,
  ZeroFieldOnBall,
  ChartSearchFailed,
  MultiplicityMismatch,
  InsufficientSpectrum,
  NumericalInconsistency,
  IoError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorCode::GraphDisconnected: return "GraphDisconnected";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NearSingularAlignment: return "NearSingularAlignment";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::TruncationInsideCluster: return "TruncationInsideCluster";
    case ErrorCode::ZeroFieldOnBall: return "ZeroFieldOnBall";
    case ErrorCode::ChartSearchFailed: return "ChartSearchFailed";
    case ErrorCode::MultiplicityMismatch: return "MultiplicityMismatch";
    case ErrorCode::InsufficientSpectrum: return "InsufficientSpectrum";
    case ErrorCode::NumericalInconsistency: return "NumericalInconsistency";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// Exit statuses: 0 success, 2 usage, 10 + code otherwise (documented in the
// CLI help text).
inline int error_exit_code(ErrorCode c) { return 10 + static_cast<int>(c); }

class VdmError : public std::runtime_error {
 public:
  VdmError(ErrorCode code, std::string stage, const std::string& message,
           nlohmann::json details = nlohmann::json::object())
      : std::runtime_error(std::string(error_code_name(code)) + " [" + stage +
                           "]: " + message),
        code_(code),
        stage_(std::move(stage)),
        details_(std::move(details)) {}

  ErrorCode code() const { return code_; }
  const std::string& stage() const { return stage_; }
  const nlohmann::json& details() const { return details_; }

  nlohmann::json to_json() const {
    return {{"stage", stage_},
            {"code", error_code_name(code_)},
            {"message", what()},
            {"details", details_}};
  }

 private:
  ErrorCode code_;
  std::string stage_;
  nlohmann::json details_;
};

}  // namespace vdm
