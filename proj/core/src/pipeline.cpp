#include "sot/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>
#include <thread>

#include "sot/error.hpp"
#include "sot/parallel.hpp"
#include "sot/patches.hpp"
#include "sot/random.hpp"

namespace sot {
namespace {

struct SideState {
  PatchSet patches;
  Dictionary dictionary;
  SparseCode code;
  AtomDistribution dist;
};

void code_side(SideState& side, const FitConfig& config, int iteration, bool warm) {
  SparseCode code = warm ? encode_all_warm(side.dictionary, side.patches, config.omp_max_atoms, config.omp_tol,
                                           side.code)
                         : encode_all(side.dictionary, side.patches, config.omp_max_atoms, config.omp_tol);
  auto [fixed_dict, fixed_code] = sign_fix(side.dictionary, code);
  side.dictionary = std::move(fixed_dict);
  side.code = std::move(fixed_code);
  try {
    side.dist = distribution(side.code);
  } catch (const Error& e) {
    throw Error(e.code(), "outer iteration " + std::to_string(iteration) + ": " + e.what());
  }
}

// Runs both closures, concurrently when more than one worker is allowed.
template <typename F, typename G>
void both(F&& f, G&& g) {
  if (max_threads() > 1) {
    std::exception_ptr error;
    std::thread worker([&] {
      try {
        f();
      } catch (...) {
        error = std::current_exception();
      }
    });
    g();
    worker.join();
    if (error) std::rethrow_exception(error);
  } else {
    f();
    g();
  }
}

TransportPlan solve_plan(const CostMatrix& cost, const AtomDistribution& a, const AtomDistribution& b,
                         const FitConfig& config, int iteration) {
  try {
    const auto cells = static_cast<std::uint64_t>(cost.rows()) * static_cast<std::uint64_t>(cost.cols());
    if (config.exact_ot && cells <= config.exact_ot_max_cells) {
      return exact_ot(cost, a.prob, b.prob, static_cast<std::size_t>(config.exact_ot_max_cells));
    }
    SinkhornOptions options;
    options.eta = config.eta;
    options.max_iters = config.sinkhorn_iters;
    options.tol = config.sinkhorn_tol;
    return sinkhorn(cost, a.prob, b.prob, options);
  } catch (const Error& e) {
    throw Error(e.code(), "outer iteration " + std::to_string(iteration) + ": " + e.what());
  }
}

double sparse_error(const SideState& side) {
  return (side.code.reconstruct(side.dictionary) - side.patches.matrix).squaredNorm();
}

double row_sum_error(const SideState& side) {
  return (side.dictionary.atoms() * side.dist.raw - side.patches.matrix.rowwise().sum()).squaredNorm();
}

bool settled(double previous, double current, double rel) {
  return std::abs(current - previous) <= rel * std::max(std::abs(previous), 1e-12);
}

}  // namespace

void FitConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw_invalid(std::string("invalid fit configuration: ") + what);
  };
  require(patch_size >= 1, "patch_size must be >= 1");
  require(sample_count >= 1, "sample_count must be >= 1");
  require(dict_size >= 1, "dict_size must be >= 1");
  require(reference_dict_size >= 0, "reference_dict_size must be >= 0");
  require(content_atoms() <= sample_count && reference_atoms() <= sample_count,
          "dictionary size must not exceed sample_count");
  require(omp_tol > 0.0, "omp_tol must be positive");
  require(omp_max_atoms >= 1, "omp_max_atoms must be >= 1");
  require(lambda > 0.0, "lambda must be positive");
  require(tau > 0.0, "tau must be positive");
  require(gamma > 0.0, "gamma must be positive");
  require(eta > 0.0, "eta must be positive");
  require(sinkhorn_iters >= 1, "sinkhorn_iters must be >= 1");
  require(sinkhorn_tol > 0.0, "sinkhorn_tol must be positive");
  require(outer_iters >= 1, "outer_iters must be >= 1");
  require(rel_loss_stop > 0.0, "rel_loss_stop must be positive");
}

TransferModel fit(const Image& content, const Image& reference, const FitConfig& config,
                  const FitMonitor& monitor) {
  config.validate();
  if (content.empty() || reference.empty()) throw_invalid("fit requires non-empty images");
  if (content.channels() != reference.channels()) {
    throw_invalid("content and reference images must have the same channel count");
  }

  // Both sides draw from the same streams so that identical inputs evolve
  // identically.
  const std::uint64_t sample_seed = split_seed(config.seed, "sample");
  const std::uint64_t init_seed = split_seed(config.seed, "init");

  SideState x;
  SideState y;
  x.patches = sample_random(content, config.patch_size, config.sample_count, sample_seed);
  y.patches = sample_random(reference, config.patch_size, config.sample_count, sample_seed);
  x.dictionary = init_from_samples(x.patches, config.content_atoms(), init_seed);
  y.dictionary = init_from_samples(y.patches, config.reference_atoms(), init_seed);

  both([&] { code_side(x, config, 0, false); }, [&] { code_side(y, config, 0, false); });
  CostMatrix cost = cost_matrix(x.dictionary, y.dictionary);
  TransportPlan plan = solve_plan(cost, x.dist, y.dist, config, 0);

  std::vector<LossRecord> history;
  for (int iter = 0; iter < config.outer_iters; ++iter) {
    SweepOptions options;
    options.lambda = config.lambda;
    options.gamma = config.gamma;
    options.seed = split_seed(config.seed, "sweep", static_cast<std::uint64_t>(iter));

    SweepResult sx;
    SweepResult sy;
    const Eigen::MatrixXd plan_t = plan.entries.transpose();
    both([&] { sx = sweep(x.dictionary, x.patches, x.code, x.dist.raw, plan.entries, y.dictionary, options); },
         [&] { sy = sweep(y.dictionary, y.patches, y.code, y.dist.raw, plan_t, x.dictionary, options); });
    if (monitor.on_sweep) {
      monitor.on_sweep(iter, Side::content, sx);
      monitor.on_sweep(iter, Side::reference, sy);
    }
    x.dictionary = std::move(sx.dictionary);
    y.dictionary = std::move(sy.dictionary);

    both([&] { code_side(x, config, iter, true); }, [&] { code_side(y, config, iter, true); });
    cost = cost_matrix(x.dictionary, y.dictionary);
    plan = solve_plan(cost, x.dist, y.dist, config, iter);

    LossRecord record;
    record.iteration = iter;
    record.e_sp_x = sparse_error(x);
    record.e_sp_y = sparse_error(y);
    record.e_ot_a = row_sum_error(x);
    record.e_ot_b = row_sum_error(y);
    record.e_c = transport_cost(cost, plan);
    if (!std::isfinite(record.e_sp_x) || !std::isfinite(record.e_sp_y) || !std::isfinite(record.e_ot_a) ||
        !std::isfinite(record.e_ot_b) || !std::isfinite(record.e_c)) {
      throw Error(ErrorCode::numeric_failure, "non-finite loss at outer iteration " + std::to_string(iter));
    }
    if (monitor.on_iteration) monitor.on_iteration(record);

    const bool stop = !history.empty() && [&] {
      const LossRecord& prev = history.back();
      const double rel = config.rel_loss_stop;
      return settled(prev.e_sp_x, record.e_sp_x, rel) && settled(prev.e_sp_y, record.e_sp_y, rel) &&
             settled(prev.e_ot_a, record.e_ot_a, rel) && settled(prev.e_ot_b, record.e_ot_b, rel) &&
             settled(prev.e_c, record.e_c, rel);
    }();
    history.push_back(record);
    if (stop) break;
  }

  TransferModel model;
  model.config = config;
  model.channels = content.channels();
  model.dx = std::move(x.dictionary);
  model.dy = std::move(y.dictionary);
  model.code_x = std::move(x.code);
  model.code_y = std::move(y.code);
  model.dist_x = std::move(x.dist);
  model.dist_y = std::move(y.dist);
  model.cost = std::move(cost);
  model.plan = std::move(plan);
  model.history = std::move(history);
  return model;
}

void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io_error, "cannot open loss CSV for writing: " + path.string());
  out << "iter,E_sp_x,E_sp_y,E_ot_a,E_ot_b,E_c\n" << std::setprecision(17);
  for (const auto& r : history) {
    out << r.iteration << ',' << r.e_sp_x << ',' << r.e_sp_y << ',' << r.e_ot_a << ',' << r.e_ot_b << ','
        << r.e_c << '\n';
  }
  if (!out) throw Error(ErrorCode::io_error, "failed writing loss CSV: " + path.string());
}

}  // namespace sot
