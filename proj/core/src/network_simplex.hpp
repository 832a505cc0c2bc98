#pragma once

#include <Eigen/Dense>

namespace sot::detail {

struct NetworkSimplexResult {
  Eigen::MatrixXd flow;
  int pivots = 0;
};

/// Uncapacitated transportation problem min <C, T> s.t. T 1 = a, T^T 1 = b,
/// solved by the primal network simplex method with an artificial root,
/// block-search pricing and the strongly-feasible leaving-arc rule.
NetworkSimplexResult solve_transportation(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a,
                                          const Eigen::VectorXd& b);

}  // namespace sot::detail
