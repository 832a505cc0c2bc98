#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "sot/dictionary_type.hpp"

namespace sot {

/// Pairwise ground cost between two dictionaries, C(i,j) >= 0.
struct CostMatrix {
  Eigen::MatrixXd entries;

  Eigen::Index rows() const noexcept { return entries.rows(); }
  Eigen::Index cols() const noexcept { return entries.cols(); }
};

/// A nonnegative coupling with the marginals it was solved for.
struct TransportPlan {
  Eigen::MatrixXd entries;
  Eigen::VectorXd row_marginal;
  Eigen::VectorXd col_marginal;
  /// Solver statistics: iterations (Sinkhorn) or pivots (network simplex),
  /// and max(||T 1 - a||_1, ||T^T 1 - b||_1) of the returned plan.
  int iterations = 0;
  double marginal_error = 0.0;
  bool converged = true;
};

/// C(i,j) = ||dx_i - dy_j||^2.
CostMatrix cost_matrix(const Dictionary& dx, const Dictionary& dy);

/// <C, T>.
double transport_cost(const CostMatrix& cost, const TransportPlan& plan);

/// max(||T 1 - a||_1, ||T^T 1 - b||_1).
double marginal_error(const Eigen::MatrixXd& plan, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

constexpr std::size_t kDefaultExactOtMaxCells = 512 * 512;

/// Exact discrete optimal transport via the network simplex method on the
/// bipartite transportation graph. Returns an optimal vertex of the
/// transportation polytope (at most m + n - 1 nonzero entries).
/// Throws ErrorCode::too_large when m * n exceeds `max_cells`.
TransportPlan exact_ot(const CostMatrix& cost, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       std::size_t max_cells = kDefaultExactOtMaxCells);

struct SinkhornOptions {
  double eta = 0.05;
  int max_iters = 200;
  double tol = 1e-9;
  /// Divide C by its largest entry before building the kernel, so eta is
  /// relative to a unit cost scale.
  bool normalize_cost = true;
};

struct SinkhornResult {
  TransportPlan plan;
  /// Marginal L1 error after each full (u, v) update.
  std::vector<double> errors;
  /// log u and log v of the final scalings, for the kernel
  /// exp(-C / (scale * eta)).
  Eigen::VectorXd log_u;
  Eigen::VectorXd log_v;
  double cost_scale = 1.0;
  bool log_domain = false;
};

/// Entropy-regularized transport by Sinkhorn scaling:
///   M = exp(-C / eta), u = a ./ (M v), v = b ./ (M^T u), T = diag(u) M diag(v),
/// starting from v = 1. Stops when the marginal L1 error reaches `tol` or
/// after `max_iters` updates. Iterations move to the log domain when the
/// kernel or a scaling leaves [1e-100, 1e100].
SinkhornResult sinkhorn_detailed(const CostMatrix& cost, const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& b, const SinkhornOptions& options);

TransportPlan sinkhorn(const CostMatrix& cost, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const SinkhornOptions& options = {});

/// Writes the plan as a matrix CSV: a header `i\j,0,..,n-1,row_marginal`,
/// one row per source atom ending with a_i, and a final `col_marginal` row
/// ending with the total mass.
void write_plan_csv(const TransportPlan& plan, const std::filesystem::path& path);

}  // namespace sot
