#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sot/coding.hpp"
#include "sot/dictionary_type.hpp"
#include "sot/image.hpp"
#include "sot/patches.hpp"

namespace sot {

/// Picks m distinct nonzero patch columns (sampling without replacement).
Dictionary init_from_samples(const PatchSet& patches, int m, std::uint64_t seed);

/// Residuals of the two data terms with atom k removed.
struct AtomResiduals {
  /// Patch columns whose support contains k, increasing.
  std::vector<Eigen::Index> columns;
  /// E_k restricted to `columns`: x_i - sum_{j != k} d_j alpha_{j,i}.
  Eigen::MatrixXd error;
  /// Coefficients of atom k on `columns`.
  Eigen::VectorXd alpha;
  /// F_k = X 1 - sum_{j != k} d_j a_j with raw row sums a.
  Eigen::VectorXd row_sum_residual;
};

AtomResiduals residuals(int k, const Dictionary& dictionary, const PatchSet& patches,
                        const SparseCode& code, const Eigen::VectorXd& dist_raw);

/// Minimizer of
///   ||E - d alpha^T||_F^2 + lambda ||F - d a_k||^2 + gamma sum_j T_kj ||d - y_j||^2
/// which is
///   d = (E alpha + lambda a_k F + gamma sum_j T_kj y_j)
///       / (||alpha||^2 + lambda a_k^2 + gamma sum_j T_kj).
/// Throws ErrorCode::atom_unused when the denominator vanishes.
Eigen::VectorXd update_atom(const Eigen::MatrixXd& error, const Eigen::VectorXd& alpha,
                            const Eigen::VectorXd& row_sum_residual, double a_k,
                            const Eigen::VectorXd& plan_row, const Dictionary& other, double lambda,
                            double gamma);

/// The per-atom objective minimized by update_atom, evaluated at `atom`.
double atom_objective(const Eigen::VectorXd& atom, const Eigen::MatrixXd& error,
                      const Eigen::VectorXd& alpha, const Eigen::VectorXd& row_sum_residual, double a_k,
                      const Eigen::VectorXd& plan_row, const Dictionary& other, double lambda,
                      double gamma);

/// Regularized dictionary objective for one side:
///   ||D A - X||_F^2 + lambda ||D a - X 1||^2 + gamma sum_ij T_ij ||d_i - y_j||^2.
/// `plan` is m x n with rows indexed by this dictionary's atoms.
double dictionary_objective(const Dictionary& dictionary, const PatchSet& patches,
                            const SparseCode& code, const Eigen::VectorXd& dist_raw,
                            const Eigen::MatrixXd& plan, const Dictionary& other, double lambda,
                            double gamma);

struct SweepOptions {
  double lambda = 1.0;
  double gamma = 0.05;
  /// Atoms whose normalized correlation with a lower-indexed atom exceeds
  /// this are replaced.
  double correlation_threshold = 0.99;
  std::uint64_t seed = 0;
};

struct SweepResult {
  Dictionary dictionary;
  /// Indices of atoms replaced by random patch columns, increasing.
  std::vector<int> replaced;
  /// dictionary_objective before the sweep and after the atom updates (but
  /// before replacement).
  double objective_before = 0.0;
  double objective_after_updates = 0.0;
};

/// One extended K-SVD pass: updates atoms 0..m-1 in order with
/// update_atom, then replaces unused, zero, or near-duplicate atoms with
/// seeded random patch columns. Coefficients are not refit.
SweepResult sweep(const Dictionary& dictionary, const PatchSet& patches, const SparseCode& code,
                  const Eigen::VectorXd& dist_raw, const Eigen::MatrixXd& plan,
                  const Dictionary& other, const SweepOptions& options);

/// Mosaic of all atoms on a ceil(sqrt(m)) grid with one-pixel white gutters.
/// Each atom is rescaled to [0,1] independently; constant atoms render grey.
Image render_atlas(const Dictionary& dictionary, int patch_size, int channels);

}  // namespace sot
