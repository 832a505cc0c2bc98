#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "sot/dictionary_type.hpp"
#include "sot/patches.hpp"

namespace sot {

/// Sparse coefficients of one signal: strictly increasing atom indices and
/// their values.
struct SparseColumn {
  std::vector<int> support;
  std::vector<double> values;

  std::size_t size() const noexcept { return support.size(); }
  bool operator==(const SparseColumn&) const = default;
};

/// An m x P coefficient matrix stored column-sparse.
class SparseCode {
 public:
  struct RowEntry {
    Eigen::Index column;
    double value;
  };

  SparseCode() = default;
  /// Validates index ranges, ordering and finiteness of every column.
  SparseCode(Eigen::Index atom_count, std::vector<SparseColumn> columns);

  Eigen::Index atom_count() const noexcept { return atoms_; }
  Eigen::Index column_count() const noexcept { return static_cast<Eigen::Index>(columns_.size()); }
  const SparseColumn& column(Eigen::Index i) const { return columns_[static_cast<std::size_t>(i)]; }
  const std::vector<SparseColumn>& columns() const noexcept { return columns_; }
  std::size_t max_support() const noexcept;

  /// a = A * 1.
  Eigen::VectorXd row_sums() const;
  /// Row-major view: for each atom, the (column, value) pairs using it,
  /// in increasing column order.
  std::vector<std::vector<RowEntry>> rows() const;
  Eigen::MatrixXd to_dense() const;
  /// D * A.
  Eigen::MatrixXd reconstruct(const Dictionary& dictionary) const;

  bool operator==(const SparseCode&) const = default;

 private:
  Eigen::Index atoms_ = 0;
  std::vector<SparseColumn> columns_;
};

enum class OmpStop {
  zero_signal,         // signal already within tolerance, empty support
  tolerance,           // residual norm^2 <= tol
  max_atoms,           // support reached max_atoms
  degenerate_support,  // next atom was linearly dependent on the support
  exhausted,           // residual orthogonal to every remaining atom
};

struct OmpResult {
  SparseColumn column;
  double residual_sq = 0.0;
  OmpStop stop = OmpStop::zero_signal;
};

/// Orthogonal matching pursuit against a fixed dictionary. The Gram matrix
/// and atom norms are computed once, so one coder can encode many signals.
///
/// Atoms are compared by normalized correlation |<d_j, r>| / ||d_j||;
/// coefficients refer to the unnormalized atoms. Ties go to the lowest index.
class OmpCoder {
 public:
  OmpCoder(const Dictionary& dictionary, int max_atoms, double tol);

  OmpResult encode(const Eigen::Ref<const Eigen::VectorXd>& signal) const;

 private:
  const Dictionary* dictionary_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd norms_;
  int max_atoms_;
  double tol_;
};

OmpResult omp(const Dictionary& dictionary, const Eigen::Ref<const Eigen::VectorXd>& signal,
              int max_atoms, double tol);

/// OMP on every column of `patches`; column order is preserved. Columns
/// holding non-finite values are recorded with empty support.
SparseCode encode_all(const Dictionary& dictionary, const PatchSet& patches, int max_atoms,
                      double tol);
SparseCode encode_all(const Dictionary& dictionary, const Eigen::MatrixXd& signals, int max_atoms,
                      double tol);

/// Re-codes `patches`, keeping per column whichever of the fresh OMP code and
/// the `previous` code leaves the smaller residual on `dictionary`. Greedy
/// OMP alone can land above a stale code, so this keeps re-coding monotone.
SparseCode encode_all_warm(const Dictionary& dictionary, const PatchSet& patches, int max_atoms, double tol,
                           const SparseCode& previous);

/// Negates atom i and coefficient row i whenever row sum i is strictly
/// negative. D * A is unchanged.
std::pair<Dictionary, SparseCode> sign_fix(const Dictionary& dictionary, const SparseCode& code);

struct AtomDistribution {
  Eigen::VectorXd raw;   // row sums of the coefficient matrix
  Eigen::VectorXd prob;  // (raw + floor) / sum(raw + floor)
};

constexpr double kDefaultDistributionFloor = 1e-12;

/// Turns nonnegative row sums into a probability vector over atoms.
AtomDistribution distribution(const SparseCode& code, double floor = kDefaultDistributionFloor);

}  // namespace sot
