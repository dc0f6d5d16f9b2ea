#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vdm/frames.hpp"

namespace vdm {

// Graph connection Laplacian, kept in block-sparse form. S has d x d blocks
// S[i,j] = w_ij O_ij stored once per i < j edge (S[j,i] is the transpose);
// D[i,i] = deg(i) I_d with deg(i) = sum_l w_il. The operator of interest is
// C = I - D^{-1} S, analyzed through its symmetrization
// D^{-1/2} S D^{-1/2}.
struct BlockOperator {
  int m = 0;
  int d = 0;
  std::vector<std::array<int, 2>> edge_list;
  std::vector<Eigen::MatrixXd> blocks;  // w_ij * O_ij, aligned with edge_list
  Eigen::VectorXd degrees;              // strictly positive on connected graphs

  int dim() const { return m * d; }

  void apply_s(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
  void apply_normalized(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;

  Eigen::MatrixXd dense_s() const;
  Eigen::MatrixXd dense_normalized() const;
  Eigen::MatrixXd dense_c() const;
};

BlockOperator assemble(const ConnectionGraph& conn);

// Identity connections on every edge (the trivial bundle); with d = 1 this
// reduces C to the scalar random-walk Laplacian.
BlockOperator assemble_trivial(const NeighborGraph& graph, int d);

enum class Normalization { kDegreeWeighted, kUniform };

inline const char* normalization_name(Normalization n) {
  return n == Normalization::kDegreeWeighted ? "degree" : "uniform";
}

struct SolverOptions {
  int k = 10;                  // requested eigenpair count (pre gap extension)
  double tol = 1e-10;          // Ritz residual tolerance on the symmetrized op
  double gap_tol = 1e-6;       // gap rule: gap after N iff
                               // lambda_{N+1} - lambda_N >= gap_tol * max(1, lambda_N)
  std::uint64_t seed = 0x5EEDBA5Eull;  // start-vector seed (documented constant)
  Normalization normalization = Normalization::kDegreeWeighted;
};

struct BundleMeta {
  double epsilon = 0.0;
  std::string kernel_id;
  bool special = false;
  bool complete = false;
  double solver_tol = 0.0;
  double gap_tol = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;          // total Lanczos steps across passes
  double max_residual = 0.0;   // worst ||C u - lambda u|| / ||u|| over pairs
  bool k_at_gap = false;       // whether a gap after the K-th pair was verified
  std::string normalization = "degree";
  std::optional<double> scalar_lambda2;  // first nonzero scalar scale, if known
};

// K eigenpairs of C with the smallest eigenvalues, ascending. Fields are
// stored eigenpair-major: column k holds u_k stacked point-major, so
// fields(i*d + a, k) is component a of u_k at point i. Under the default
// degree normalization sum_i deg(i) <u_k[i], u_l[i]> = delta_kl.
struct SpectralBundle {
  int m = 0;
  int d = 0;
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd fields;
  Eigen::VectorXd degrees;  // graph degrees, the discrete volume weights
  std::vector<int> gaps;    // truncation sizes ending at a verified gap
  BundleMeta meta;

  int k() const { return static_cast<int>(eigenvalues.size()); }

  // d x m view of eigenvector field k (column i = u_k[i]).
  Eigen::Map<const Eigen::MatrixXd> field(int k_idx) const {
    return {fields.col(k_idx).data(), d, m};
  }

  Eigen::VectorXd field_at(int k_idx, int i) const {
    return fields.col(k_idx).segment(i * d, d);
  }

  void validate() const;
};

// Iterative eigensolver on the symmetrized operator: Lanczos with full
// reorthogonalization, deflation against converged pairs (restarts recover
// multiplicities), deterministic seeded start vectors. The returned count is
// opts.k extended to the end of any eigenvalue cluster per the gap rule; the
// final truncation always sits at a verified gap (or exhausts the spectrum).
// Throws ConvergenceFailure when residuals cannot be driven to tolerance and
// InvalidArgument when opts.k exceeds m*d.
SpectralBundle spectrum(const BlockOperator& op, const SolverOptions& opts);

// Gap positions within an ascending eigenvalue list: every N with
// lambda_{N+1} - lambda_N >= gap_tol * max(1, lambda_N), plus K itself when
// trailing_gap_verified (e.g. the solver checked the next eigenvalue, or the
// list exhausts the operator).
std::vector<int> gap_positions(const Eigen::VectorXd& eigenvalues,
                               double gap_tol, bool trailing_gap_verified);

}  // namespace vdm
