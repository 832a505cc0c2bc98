#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "sot/coding.hpp"
#include "sot/dictionary.hpp"
#include "sot/image.hpp"
#include "sot/transport.hpp"

namespace sot {

struct FitConfig {
  int patch_size = 16;
  int sample_count = 20000;
  /// Atom count m of the content dictionary.
  int dict_size = 256;
  /// Atom count n of the reference dictionary; 0 means same as dict_size.
  int reference_dict_size = 0;
  double omp_tol = 1e-5;
  int omp_max_atoms = 8;
  double lambda = 1.0;
  /// Marginal-penalty weight. Kept for the record only: the transport step
  /// enforces the marginals exactly.
  double tau = 10.0;
  double gamma = 0.05;
  double eta = 0.05;
  int sinkhorn_iters = 200;
  double sinkhorn_tol = 1e-9;
  int outer_iters = 50;
  double rel_loss_stop = 1e-3;
  std::uint64_t seed = 0;
  bool exact_ot = false;
  std::uint64_t exact_ot_max_cells = kDefaultExactOtMaxCells;

  int content_atoms() const noexcept { return dict_size; }
  int reference_atoms() const noexcept { return reference_dict_size > 0 ? reference_dict_size : dict_size; }

  /// Throws invalid-argument on out-of-range fields.
  void validate() const;

  bool operator==(const FitConfig&) const = default;
};

struct LossRecord {
  int iteration = 0;
  double e_sp_x = 0.0;  // ||D^x A - X||_F^2
  double e_sp_y = 0.0;  // ||D^y B - Y||_F^2
  double e_ot_a = 0.0;  // ||D^x a - X 1||^2
  double e_ot_b = 0.0;  // ||D^y b - Y 1||^2
  double e_c = 0.0;     // <C, T>

  bool operator==(const LossRecord&) const = default;
};

/// Everything produced by fit: both dictionaries with their codes and atom
/// distributions, the plan between them, and the loss history.
struct TransferModel {
  FitConfig config;
  int channels = 0;
  Dictionary dx;
  Dictionary dy;
  SparseCode code_x;
  SparseCode code_y;
  AtomDistribution dist_x;
  AtomDistribution dist_y;
  CostMatrix cost;
  TransportPlan plan;
  std::vector<LossRecord> history;
};

enum class Side { content, reference };

/// Optional hooks into the alternating loop.
struct FitMonitor {
  std::function<void(const LossRecord&)> on_iteration;
  /// Called after each dictionary sweep with the sweep statistics.
  std::function<void(int iteration, Side side, const SweepResult& sweep)> on_sweep;
};

/// Alternating minimization over both dictionaries, both codes and the plan.
///
/// Bootstrap: sample patches, initialize both dictionaries from samples,
/// code both sides and solve an initial plan. Each outer iteration then
/// sweeps both dictionaries against the current codes and plan (each sweep
/// reads the other side's pre-sweep dictionary), re-codes both sides
/// (OMP, sign fix, distributions) and re-solves the plan, and appends one
/// LossRecord. Stops after `outer_iters` or once every loss component
/// changes by less than `rel_loss_stop` relative to the previous record.
TransferModel fit(const Image& content, const Image& reference, const FitConfig& config,
                  const FitMonitor& monitor = {});

/// `iter,E_sp_x,E_sp_y,E_ot_a,E_ot_b,E_c` with one row per record.
void write_loss_csv(const std::vector<LossRecord>& history, const std::filesystem::path& path);

}  // namespace sot
