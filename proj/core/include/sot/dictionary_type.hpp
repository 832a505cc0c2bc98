#pragma once

#include <Eigen/Dense>

namespace sot {

/// A d x m matrix of atoms, one atom per column. Atoms live in vectorized
/// patch space and are not normalized: their positions carry the transport
/// ground cost.
class Dictionary {
 public:
  Dictionary() = default;
  /// Throws if any entry is non-finite.
  explicit Dictionary(Eigen::MatrixXd atoms);

  const Eigen::MatrixXd& atoms() const noexcept { return atoms_; }
  Eigen::Index dim() const noexcept { return atoms_.rows(); }
  Eigen::Index size() const noexcept { return atoms_.cols(); }
  auto atom(Eigen::Index k) const { return atoms_.col(k); }

  bool operator==(const Dictionary& other) const {
    return atoms_.rows() == other.atoms_.rows() && atoms_.cols() == other.atoms_.cols() &&
           atoms_ == other.atoms_;
  }

 private:
  Eigen::MatrixXd atoms_;
};

}  // namespace sot
