#include "vdm/gcl.hpp"

#include <algorithm>
#include <cmath>

#include "vdm/rng.hpp"

namespace vdm {

void BlockOperator::apply_s(const Eigen::VectorXd& x, Eigen::VectorXd& y) const {
  y.setZero(dim());
  for (std::size_t e = 0; e < edge_list.size(); ++e) {
    const int i = edge_list[e][0];
    const int j = edge_list[e][1];
    const auto& blk = blocks[e];
    y.segment(i * d, d).noalias() += blk * x.segment(j * d, d);
    y.segment(j * d, d).noalias() += blk.transpose() * x.segment(i * d, d);
  }
}

void BlockOperator::apply_normalized(const Eigen::VectorXd& x,
                                     Eigen::VectorXd& y) const {
  Eigen::VectorXd scaled(dim());
  for (int i = 0; i < m; ++i)
    scaled.segment(i * d, d) = x.segment(i * d, d) / std::sqrt(degrees(i));
  apply_s(scaled, y);
  for (int i = 0; i < m; ++i) y.segment(i * d, d) /= std::sqrt(degrees(i));
}

Eigen::MatrixXd BlockOperator::dense_s() const {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim(), dim());
  for (std::size_t e = 0; e < edge_list.size(); ++e) {
    const int i = edge_list[e][0];
    const int j = edge_list[e][1];
    s.block(i * d, j * d, d, d) = blocks[e];
    s.block(j * d, i * d, d, d) = blocks[e].transpose();
  }
  return s;
}

Eigen::MatrixXd BlockOperator::dense_normalized() const {
  Eigen::MatrixXd s = dense_s();
  Eigen::VectorXd inv_sqrt(dim());
  for (int i = 0; i < m; ++i)
    inv_sqrt.segment(i * d, d).setConstant(1.0 / std::sqrt(degrees(i)));
  return inv_sqrt.asDiagonal() * s * inv_sqrt.asDiagonal();
}

Eigen::MatrixXd BlockOperator::dense_c() const {
  Eigen::MatrixXd s = dense_s();
  Eigen::VectorXd inv(dim());
  for (int i = 0; i < m; ++i) inv.segment(i * d, d).setConstant(1.0 / degrees(i));
  return Eigen::MatrixXd::Identity(dim(), dim()) - inv.asDiagonal() * s;
}

namespace {

BlockOperator assemble_impl(const NeighborGraph& graph, int d,
                            const std::vector<std::array<int, 2>>& edge_list,
                            const std::vector<Eigen::MatrixXd>* connections) {
  BlockOperator op;
  op.m = graph.m;
  op.d = d;
  op.edge_list = edge_list;
  op.blocks.reserve(edge_list.size());
  for (std::size_t e = 0; e < edge_list.size(); ++e) {
    const auto [i, j] = edge_list[e];
    double w = 0.0;
    for (const auto& edge : graph.adj[i])
      if (edge.j == j) {
        w = edge.w;
        break;
      }
    if (w <= 0.0)
      throw VdmError(ErrorCode::InvalidArgument, "gcl",
                     "edge missing from graph adjacency",
                     {{"i", i}, {"j", j}});
    if (connections)
      op.blocks.push_back(w * (*connections)[e]);
    else
      op.blocks.push_back(w * Eigen::MatrixXd::Identity(d, d));
  }
  op.degrees.resize(graph.m);
  for (int i = 0; i < graph.m; ++i) {
    op.degrees(i) = graph.degree(i);
    if (!(op.degrees(i) > 0.0))
      throw VdmError(ErrorCode::InvalidArgument, "gcl",
                     "vertex with zero degree; graph must be connected",
                     {{"i", i}});
  }
  return op;
}

}  // namespace

BlockOperator assemble(const ConnectionGraph& conn) {
  return assemble_impl(conn.graph, conn.d, conn.edge_list, &conn.connections);
}

BlockOperator assemble_trivial(const NeighborGraph& graph, int d) {
  if (d < 1)
    throw VdmError(ErrorCode::InvalidArgument, "gcl", "need d >= 1");
  return assemble_impl(graph, d, graph.edges(), nullptr);
}

void SpectralBundle::validate() const {
  if (eigenvalues.size() != fields.cols() ||
      fields.rows() != static_cast<Eigen::Index>(m) * d)
    throw VdmError(ErrorCode::InvalidArgument, "gcl",
                   "bundle shape mismatch");
  for (int i = 0; i + 1 < eigenvalues.size(); ++i)
    if (eigenvalues(i) > eigenvalues(i + 1) + 1e-12)
      throw VdmError(ErrorCode::NumericalInconsistency, "gcl",
                     "eigenvalues not ascending", {{"index", i}});
  if (eigenvalues.size() > 0 &&
      (eigenvalues(0) < -1e-10 ||
       eigenvalues(eigenvalues.size() - 1) > 2.0 + 1e-10))
    throw VdmError(ErrorCode::NumericalInconsistency, "gcl",
                   "eigenvalues outside [0, 2]",
                   {{"min", eigenvalues(0)},
                    {"max", eigenvalues(eigenvalues.size() - 1)}});
}

std::vector<int> gap_positions(const Eigen::VectorXd& eigenvalues,
                               double gap_tol, bool trailing_gap_verified) {
  std::vector<int> gaps;
  const int k = static_cast<int>(eigenvalues.size());
  for (int n = 1; n < k; ++n)
    if (eigenvalues(n) - eigenvalues(n - 1) >=
        gap_tol * std::max(1.0, eigenvalues(n - 1)))
      gaps.push_back(n);
  if (k > 0 && trailing_gap_verified) gaps.push_back(k);
  return gaps;
}

namespace {

// One restarted Lanczos state over the deflated symmetrized operator.
// Full reorthogonalization keeps the basis orthonormal to machine precision;
// locked (converged) vectors are projected out of every iterate so restarts
// pick up the next eigenvalues, including further copies inside multiplets.
class DeflatedLanczos {
 public:
  DeflatedLanczos(const BlockOperator& op, double tol, std::uint64_t seed)
      : op_(op), tol_(tol), seed_(seed), locked_(op.dim(), 0) {}

  int locked_count() const { return static_cast<int>(locked_.cols()); }
  const Eigen::MatrixXd& locked_vectors() const { return locked_; }
  const std::vector<double>& locked_values() const { return theta_; }
  int total_steps() const { return total_steps_; }

  bool exhausted() const { return exhausted_; }

  // Grow the locked set to `want` pairs (top of the spectrum first), then
  // confirm contiguity: one more restart must find nothing above the bottom
  // of the locked block, otherwise a multiplet copy was missed and the block
  // keeps growing until the remaining spectrum sits strictly below it.
  void ensure(int want) {
    want = std::min(want, op_.dim());
    int stale_passes = 0;
    int max_steps_boost = 0;
    while (locked_count() < want && !exhausted_) {
      if (pass_count_ > 2 * want + 32)
        throw VdmError(ErrorCode::ConvergenceFailure, "gcl",
                       "eigensolver pass budget exhausted",
                       {{"locked", locked_count()}, {"want", want}});
      const int before = locked_count();
      run_pass(want - locked_count(), max_steps_boost);
      if (locked_count() == before) {
        ++stale_passes;
        ++max_steps_boost;
        if (stale_passes >= 4)
          throw VdmError(ErrorCode::ConvergenceFailure, "gcl",
                         "no Ritz pair converged to tolerance",
                         {{"locked", locked_count()},
                          {"want", want},
                          {"tol", tol_}});
      } else {
        stale_passes = 0;
      }
    }
    stale_passes = 0;
    max_steps_boost = 0;
    while (locked_count() < op_.dim() && !exhausted_) {
      const double block_min = *std::min_element(theta_.begin(), theta_.end());
      const int before = locked_count();
      run_pass(1, max_steps_boost);
      if (locked_count() == before) {
        if (exhausted_) break;
        ++stale_passes;
        ++max_steps_boost;
        if (stale_passes >= 3)
          throw VdmError(ErrorCode::ConvergenceFailure, "gcl",
                         "contiguity confirmation failed to converge",
                         {{"locked", locked_count()}, {"tol", tol_}});
        continue;
      }
      double new_max = theta_[before];
      for (std::size_t t = before; t < theta_.size(); ++t)
        new_max = std::max(new_max, theta_[t]);
      if (new_max <= block_min + 10.0 * tol_) break;
      stale_passes = 0;
      max_steps_boost = 0;
    }
  }

 private:
  void project_locked(Eigen::VectorXd& v) const {
    if (locked_.cols() > 0)
      v.noalias() -= locked_ * (locked_.transpose() * v);
  }

  bool make_start_vector(Eigen::VectorXd& q) {
    // A handful of attempts; each derives from the documented seed and the
    // pass counter so runs are reproducible.
    for (int attempt = 0; attempt < 8; ++attempt) {
      Rng rng(seed_ + 0x9E3779B97F4A7C15ull * (pass_count_ * 8 + attempt + 1));
      for (int i = 0; i < q.size(); ++i) q(i) = rng.normal();
      project_locked(q);
      project_locked(q);
      const double norm = q.norm();
      if (norm > 1e-8 * std::sqrt(static_cast<double>(q.size()))) {
        q /= norm;
        return true;
      }
    }
    return false;
  }

  void run_pass(int want, int boost) {
    ++pass_count_;
    const int n = op_.dim();
    const int free_dim = n - locked_count();
    if (free_dim <= 0) {
      exhausted_ = true;
      return;
    }
    int max_steps = std::max(3 * want + 60, 200) << boost;
    max_steps = std::min({max_steps, free_dim, 1500});

    Eigen::MatrixXd q_basis(n, max_steps + 1);
    Eigen::VectorXd alpha(max_steps), beta(max_steps);
    Eigen::VectorXd q(n), w(n);

    if (!make_start_vector(q)) {
      exhausted_ = true;
      return;
    }
    q_basis.col(0) = q;

    int steps = 0;
    bool invariant = false;
    for (int j = 0; j < max_steps; ++j) {
      op_.apply_normalized(q_basis.col(j), w);
      project_locked(w);
      if (j > 0) w.noalias() -= beta(j - 1) * q_basis.col(j - 1);
      alpha(j) = q_basis.col(j).dot(w);
      w.noalias() -= alpha(j) * q_basis.col(j);
      // Full reorthogonalization, twice, against both the Krylov basis and
      // the locked set; classical Gram-Schmidt in block form.
      for (int round = 0; round < 2; ++round) {
        w.noalias() -= q_basis.leftCols(j + 1) *
                       (q_basis.leftCols(j + 1).transpose() * w);
        project_locked(w);
      }
      beta(j) = w.norm();
      steps = j + 1;
      ++total_steps_;
      if (beta(j) < 1e-13) {
        invariant = true;  // exact invariant subspace reached
        break;
      }
      q_basis.col(j + 1) = w / beta(j);
      // Periodic convergence checks once the subspace can hold the answers.
      if (steps >= want && (steps % 10 == 0 || steps == max_steps)) {
        if (count_converged_top(alpha, beta, steps, want) >= want) break;
      }
    }
    lock_converged(q_basis, alpha, beta, steps, invariant);
  }

  // Ritz pairs of the current tridiagonal; returns how many of the top
  // `want` have residual within tolerance.
  int count_converged_top(const Eigen::VectorXd& alpha,
                          const Eigen::VectorXd& beta, int steps, int want) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(alpha.head(steps), beta.head(steps - 1),
                               Eigen::ComputeEigenvectors);
    const double beta_last = beta(steps - 1);
    int converged = 0;
    for (int r = 0; r < std::min(want, steps); ++r) {
      const int col = steps - 1 - r;  // ascending order -> top is last
      const double res = std::abs(beta_last * eig.eigenvectors()(steps - 1, col));
      if (res <= tol_)
        ++converged;
      else
        break;
    }
    return converged;
  }

  void lock_converged(const Eigen::MatrixXd& q_basis,
                      const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                      int steps, bool invariant) {
    if (steps == 0) return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    if (steps == 1) {
      Eigen::MatrixXd t(1, 1);
      t(0, 0) = alpha(0);
      eig.compute(t);
    } else {
      eig.computeFromTridiagonal(alpha.head(steps), beta.head(steps - 1),
                                 Eigen::ComputeEigenvectors);
    }
    const double beta_last = invariant ? 0.0 : beta(steps - 1);
    // Lock the contiguous run of converged pairs from the top down; stopping
    // at the first unconverged one keeps the locked set an exact prefix of
    // the remaining spectrum.
    for (int r = 0; r < steps; ++r) {
      const int col = steps - 1 - r;
      const double res = std::abs(beta_last * eig.eigenvectors()(steps - 1, col));
      if (res > tol_) break;
      Eigen::VectorXd v = q_basis.leftCols(steps) * eig.eigenvectors().col(col);
      project_locked(v);
      project_locked(v);
      const double norm = v.norm();
      if (norm < 1e-6) continue;  // already represented in the locked set
      v /= norm;
      locked_.conservativeResize(Eigen::NoChange, locked_.cols() + 1);
      locked_.col(locked_.cols() - 1) = v;
      theta_.push_back(eig.eigenvalues()(col));
    }
  }

  const BlockOperator& op_;
  double tol_;
  std::uint64_t seed_;
  Eigen::MatrixXd locked_;
  std::vector<double> theta_;
  int pass_count_ = 0;
  int total_steps_ = 0;
  bool exhausted_ = false;
};

}  // namespace

SpectralBundle spectrum(const BlockOperator& op, const SolverOptions& opts) {
  const int dim = op.dim();
  if (opts.k < 1 || opts.k > dim)
    throw VdmError(ErrorCode::InvalidArgument, "gcl",
                   "need 1 <= K <= m*d", {{"K", opts.k}, {"dim", dim}});
  if (!(opts.tol > 0.0))
    throw VdmError(ErrorCode::InvalidArgument, "gcl", "tol must be positive");

  DeflatedLanczos solver(op, opts.tol, opts.seed);

  // Compute a small buffer past the request so the gap rule can look one
  // eigenvalue ahead; keep extending while the request ends inside a cluster.
  const int buffer = 8;
  int k_eff = -1;
  int target = std::min(dim, opts.k + buffer);
  std::vector<double> lambda;
  int prev_have = -1;
  while (true) {
    solver.ensure(target);
    const int have = solver.locked_count();
    if (have == prev_have && have < dim)
      throw VdmError(ErrorCode::ConvergenceFailure, "gcl",
                     "spectrum extension stalled before reaching a gap",
                     {{"locked", have}, {"target", target}});
    prev_have = have;
    // theta descending <-> lambda ascending under lambda = 1 - theta.
    lambda.assign(solver.locked_values().begin(), solver.locked_values().end());
    std::sort(lambda.begin(), lambda.end(), std::greater<double>());
    for (auto& v : lambda) v = 1.0 - v;

    for (int k_try = opts.k; k_try <= have; ++k_try) {
      if (k_try == dim ||
          (k_try < have &&
           lambda[k_try] - lambda[k_try - 1] >=
               opts.gap_tol * std::max(1.0, lambda[k_try - 1]))) {
        k_eff = k_try;
        break;
      }
    }
    if (k_eff > 0) break;
    if (have >= dim) {
      k_eff = dim;
      break;
    }
    target = std::min(dim, have + buffer);
  }

  // Map Ritz vectors of the symmetrized operator back to eigenvectors of C:
  // u = D^{-1/2} v, which lands D-orthonormal exactly when v is orthonormal.
  const int have = solver.locked_count();
  std::vector<int> order(have);
  for (int i = 0; i < have; ++i) order[i] = i;
  const auto& theta = solver.locked_values();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return theta[a] > theta[b] || (theta[a] == theta[b] && a < b);
  });

  SpectralBundle bundle;
  bundle.m = op.m;
  bundle.d = op.d;
  bundle.degrees = op.degrees;
  bundle.eigenvalues.resize(k_eff);
  bundle.fields.resize(dim, k_eff);
  Eigen::VectorXd inv_sqrt(dim);
  for (int i = 0; i < op.m; ++i)
    inv_sqrt.segment(i * op.d, op.d).setConstant(1.0 / std::sqrt(op.degrees(i)));

  for (int k_idx = 0; k_idx < k_eff; ++k_idx) {
    const int src = order[k_idx];
    bundle.eigenvalues(k_idx) = 1.0 - theta[src];
    Eigen::VectorXd v = solver.locked_vectors().col(src);
    // Deterministic sign: largest-|entry| of the symmetrized vector positive.
    int arg = 0;
    for (int i = 1; i < v.size(); ++i)
      if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
    if (v(arg) < 0.0) v = -v;
    Eigen::VectorXd u = inv_sqrt.cwiseProduct(v);
    if (opts.normalization == Normalization::kUniform) u /= u.norm();
    bundle.fields.col(k_idx) = u;
  }

  // Validate the advertised residual invariant on C itself.
  double max_residual = 0.0;
  Eigen::VectorXd su(dim);
  for (int k_idx = 0; k_idx < k_eff; ++k_idx) {
    const Eigen::VectorXd u = bundle.fields.col(k_idx);
    op.apply_s(u, su);
    for (int i = 0; i < op.m; ++i) su.segment(i * op.d, op.d) /= op.degrees(i);
    const Eigen::VectorXd cu = u - su;
    const double res =
        (cu - bundle.eigenvalues(k_idx) * u).norm() / u.norm();
    max_residual = std::max(max_residual, res);
  }
  if (max_residual > 1e-8)
    throw VdmError(ErrorCode::ConvergenceFailure, "gcl",
                   "eigenpair residual exceeds 1e-8 after convergence",
                   {{"max_residual", max_residual}});

  Eigen::Map<const Eigen::VectorXd> lam(lambda.data(), k_eff);
  bundle.gaps = gap_positions(lam, opts.gap_tol, true);
  bundle.meta.solver_tol = opts.tol;
  bundle.meta.gap_tol = opts.gap_tol;
  bundle.meta.seed = opts.seed;
  bundle.meta.iterations = solver.total_steps();
  bundle.meta.max_residual = max_residual;
  bundle.meta.k_at_gap = true;
  bundle.meta.normalization = normalization_name(opts.normalization);
  bundle.validate();
  return bundle;
}

}  // namespace vdm
