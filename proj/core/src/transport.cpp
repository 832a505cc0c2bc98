#include "sot/transport.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>

#include "network_simplex.hpp"
#include "sot/error.hpp"

namespace sot {
namespace {

void check_marginal(const Eigen::VectorXd& v, Eigen::Index expected, const char* name) {
  if (v.size() != expected) throw_invalid(std::string(name) + " length does not match the cost matrix");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i)) || !(v(i) > 0.0)) {
      throw_invalid(std::string(name) + " must be strictly positive and finite");
    }
  }
  if (std::abs(v.sum() - 1.0) > 1e-8) throw_invalid(std::string(name) + " must sum to 1");
}

void check_cost(const CostMatrix& cost) {
  if (cost.rows() == 0 || cost.cols() == 0) throw_invalid("cost matrix is empty");
  if (!cost.entries.allFinite() || (cost.entries.array() < 0.0).any()) {
    throw_invalid("cost matrix entries must be finite and nonnegative");
  }
}

double log_sum_exp(const Eigen::Ref<const Eigen::ArrayXd>& x) {
  const double hi = x.maxCoeff();
  if (!std::isfinite(hi)) return hi;
  return hi + std::log((x - hi).exp().sum());
}

bool scalings_in_range(const Eigen::VectorXd& s) {
  constexpr double lo = 1e-100;
  constexpr double hi = 1e100;
  return (s.array() >= lo).all() && (s.array() <= hi).all();
}

// Relative change the next u-update would make: u_i <- a_i / (M v)_i scales
// u_i by a_i / r_i, where r_i is the current row sum.
double relative_u_change(const Eigen::VectorXd& rows, const Eigen::VectorXd& a) {
  return ((a - rows).array().abs() / rows.array()).maxCoeff();
}

[[noreturn]] void numeric_failure(int iteration) {
  throw Error(ErrorCode::numeric_failure,
              "non-finite value in Sinkhorn iteration " + std::to_string(iteration));
}

}  // namespace

CostMatrix cost_matrix(const Dictionary& dx, const Dictionary& dy) {
  if (dx.dim() != dy.dim()) {
    throw_invalid("dictionaries live in different patch dimensions (" + std::to_string(dx.dim()) +
                  " vs " + std::to_string(dy.dim()) + ")");
  }
  CostMatrix cost;
  cost.entries.resize(dx.size(), dy.size());
  for (Eigen::Index j = 0; j < dy.size(); ++j) {
    for (Eigen::Index i = 0; i < dx.size(); ++i) {
      cost.entries(i, j) = (dx.atom(i) - dy.atom(j)).squaredNorm();
    }
  }
  return cost;
}

double transport_cost(const CostMatrix& cost, const TransportPlan& plan) {
  if (cost.rows() != plan.entries.rows() || cost.cols() != plan.entries.cols()) {
    throw_invalid("cost and plan shapes differ");
  }
  return cost.entries.cwiseProduct(plan.entries).sum();
}

double marginal_error(const Eigen::MatrixXd& plan, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double row = (plan.rowwise().sum() - a).lpNorm<1>();
  const double col = (plan.colwise().sum().transpose() - b).lpNorm<1>();
  return std::max(row, col);
}

TransportPlan exact_ot(const CostMatrix& cost, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       std::size_t max_cells) {
  check_cost(cost);
  const auto cells = static_cast<std::size_t>(cost.rows()) * static_cast<std::size_t>(cost.cols());
  if (cells > max_cells) {
    throw Error(ErrorCode::too_large, "exact transport on " + std::to_string(cost.rows()) + "x" +
                                          std::to_string(cost.cols()) + " exceeds the cap of " +
                                          std::to_string(max_cells) + " cells; use sinkhorn instead");
  }
  check_marginal(a, cost.rows(), "row marginal");
  check_marginal(b, cost.cols(), "column marginal");

  auto solved = detail::solve_transportation(cost.entries, a, b);
  TransportPlan plan;
  plan.entries = std::move(solved.flow);
  plan.row_marginal = a;
  plan.col_marginal = b;
  plan.iterations = solved.pivots;
  plan.marginal_error = marginal_error(plan.entries, a, b);
  plan.converged = true;
  return plan;
}

SinkhornResult sinkhorn_detailed(const CostMatrix& cost, const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& b, const SinkhornOptions& options) {
  check_cost(cost);
  check_marginal(a, cost.rows(), "row marginal");
  check_marginal(b, cost.cols(), "column marginal");
  if (!(options.eta > 0.0)) throw_invalid("sinkhorn eta must be positive");
  if (options.max_iters < 1) throw_invalid("sinkhorn max_iters must be at least 1");
  if (!(options.tol >= 0.0)) throw_invalid("sinkhorn tolerance must be nonnegative");

  SinkhornResult result;
  double scale = 1.0;
  if (options.normalize_cost) {
    const double max_cost = cost.entries.maxCoeff();
    if (max_cost > 0.0) scale = max_cost;
  }
  result.cost_scale = scale;

  // Exponent of the Gibbs kernel: M = exp(-K).
  const Eigen::ArrayXXd k_exp = cost.entries.array() / (scale * options.eta);
  const Eigen::ArrayXd log_a = a.array().log();
  const Eigen::ArrayXd log_b = b.array().log();
  const Eigen::Index m = cost.rows();
  const Eigen::Index n = cost.cols();

  bool log_domain = k_exp.maxCoeff() > std::log(1e100);
  Eigen::VectorXd u = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  Eigen::ArrayXd log_u = Eigen::ArrayXd::Zero(m);
  Eigen::ArrayXd log_v = Eigen::ArrayXd::Zero(n);
  Eigen::MatrixXd kernel;
  if (!log_domain) kernel = (-k_exp).exp().matrix();

  Eigen::MatrixXd plan;
  double error = std::numeric_limits<double>::infinity();
  double u_change = std::numeric_limits<double>::infinity();
  int iter = 0;
  while (iter < options.max_iters) {
    ++iter;
    if (!log_domain) {
      u = a.cwiseQuotient(kernel * v);
      const Eigen::VectorXd ktu = kernel.transpose() * u;
      v = b.cwiseQuotient(ktu);
      if (!u.allFinite() || !v.allFinite()) numeric_failure(iter);
      // Row sums of diag(u) M diag(v) are u .* (M v); column sums are
      // v .* (M^T u) = b up to rounding.
      const Eigen::VectorXd rows = u.cwiseProduct(kernel * v);
      const Eigen::VectorXd cols = v.cwiseProduct(ktu);
      error = std::max((rows - a).lpNorm<1>(), (cols - b).lpNorm<1>());
      u_change = relative_u_change(rows, a);
      if (!scalings_in_range(u) || !scalings_in_range(v)) {
        log_domain = true;
        log_u = u.array().log();
        log_v = v.array().log();
      }
    } else {
      for (Eigen::Index i = 0; i < m; ++i) {
        log_u(i) = log_a(i) - log_sum_exp(log_v - k_exp.row(i).transpose());
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        log_v(j) = log_b(j) - log_sum_exp(log_u - k_exp.col(j));
      }
      if (!log_u.allFinite() || !log_v.allFinite()) numeric_failure(iter);
      plan = ((-k_exp).colwise() + log_u).rowwise() + log_v.transpose();
      plan = plan.array().exp().matrix();
      error = marginal_error(plan, a, b);
      u_change = relative_u_change(plan.rowwise().sum(), a);
    }
    if (!std::isfinite(error)) numeric_failure(iter);
    result.errors.push_back(error);
    if (error <= options.tol && u_change <= options.tol) break;
  }

  if (!log_domain) {
    plan = u.asDiagonal() * kernel * v.asDiagonal();
    log_u = u.array().log();
    log_v = v.array().log();
  }
  if (!plan.allFinite()) numeric_failure(iter);

  result.log_domain = log_domain;
  result.log_u = log_u.matrix();
  result.log_v = log_v.matrix();
  result.plan.entries = std::move(plan);
  result.plan.row_marginal = a;
  result.plan.col_marginal = b;
  result.plan.iterations = iter;
  result.plan.marginal_error = marginal_error(result.plan.entries, a, b);
  result.plan.converged = error <= options.tol && u_change <= options.tol;
  return result;
}

TransportPlan sinkhorn(const CostMatrix& cost, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const SinkhornOptions& options) {
  return sinkhorn_detailed(cost, a, b, options).plan;
}

void write_plan_csv(const TransportPlan& plan, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot open plan CSV for writing: " + path.string());
  out << std::setprecision(17);
  const Eigen::Index m = plan.entries.rows();
  const Eigen::Index n = plan.entries.cols();
  out << "i\\j";
  for (Eigen::Index j = 0; j < n; ++j) out << ',' << j;
  out << ",row_marginal\n";
  for (Eigen::Index i = 0; i < m; ++i) {
    out << i;
    for (Eigen::Index j = 0; j < n; ++j) out << ',' << plan.entries(i, j);
    out << ',' << (plan.row_marginal.size() == m ? plan.row_marginal(i) : plan.entries.row(i).sum()) << '\n';
  }
  out << "col_marginal";
  for (Eigen::Index j = 0; j < n; ++j) {
    out << ',' << (plan.col_marginal.size() == n ? plan.col_marginal(j) : plan.entries.col(j).sum());
  }
  out << ',' << plan.entries.sum() << '\n';
  if (!out) throw Error(ErrorCode::io_error, "failed writing plan CSV: " + path.string());
}

}  // namespace sot
