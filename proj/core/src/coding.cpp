#include "sot/coding.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sot/error.hpp"
#include "sot/parallel.hpp"

namespace sot {

SparseCode::SparseCode(Eigen::Index atom_count, std::vector<SparseColumn> columns)
    : atoms_(atom_count), columns_(std::move(columns)) {
  if (atom_count < 0) throw_invalid("negative atom count");
  for (const auto& col : columns_) {
    if (col.support.size() != col.values.size()) {
      throw_invalid("sparse column support and values differ in length");
    }
    for (std::size_t s = 0; s < col.support.size(); ++s) {
      if (col.support[s] < 0 || col.support[s] >= atom_count) {
        throw_invalid("sparse column index out of range");
      }
      if (s > 0 && col.support[s] <= col.support[s - 1]) {
        throw_invalid("sparse column support must be strictly increasing");
      }
      if (!std::isfinite(col.values[s])) throw_invalid("sparse column holds a non-finite value");
    }
  }
}

std::size_t SparseCode::max_support() const noexcept {
  std::size_t k = 0;
  for (const auto& col : columns_) k = std::max(k, col.size());
  return k;
}

Eigen::VectorXd SparseCode::row_sums() const {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(atoms_);
  for (const auto& col : columns_) {
    for (std::size_t s = 0; s < col.size(); ++s) sums(col.support[s]) += col.values[s];
  }
  return sums;
}

std::vector<std::vector<SparseCode::RowEntry>> SparseCode::rows() const {
  std::vector<std::vector<RowEntry>> out(static_cast<std::size_t>(atoms_));
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& col = columns_[i];
    for (std::size_t s = 0; s < col.size(); ++s) {
      out[static_cast<std::size_t>(col.support[s])].push_back(
          {static_cast<Eigen::Index>(i), col.values[s]});
    }
  }
  return out;
}

Eigen::MatrixXd SparseCode::to_dense() const {
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(atoms_, column_count());
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& col = columns_[i];
    for (std::size_t s = 0; s < col.size(); ++s) {
      dense(col.support[s], static_cast<Eigen::Index>(i)) = col.values[s];
    }
  }
  return dense;
}

Eigen::MatrixXd SparseCode::reconstruct(const Dictionary& dictionary) const {
  if (dictionary.size() != atoms_) throw_invalid("dictionary size does not match code");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dictionary.dim(), column_count());
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& col = columns_[i];
    auto dst = out.col(static_cast<Eigen::Index>(i));
    for (std::size_t s = 0; s < col.size(); ++s) dst += col.values[s] * dictionary.atom(col.support[s]);
  }
  return out;
}

OmpCoder::OmpCoder(const Dictionary& dictionary, int max_atoms, double tol)
    : dictionary_(&dictionary), max_atoms_(max_atoms), tol_(tol) {
  if (max_atoms < 1) throw_invalid("OMP max_atoms must be at least 1");
  if (!(tol >= 0.0)) throw_invalid("OMP tolerance must be nonnegative");
  if (dictionary.size() == 0) throw_invalid("OMP requires a non-empty dictionary");
  gram_ = dictionary.atoms().transpose() * dictionary.atoms();
  norms_ = gram_.diagonal().cwiseSqrt();
  for (Eigen::Index j = 0; j < norms_.size(); ++j) {
    if (!(norms_(j) > 0.0)) throw_invalid("dictionary atom " + std::to_string(j) + " has zero norm");
  }
}

OmpResult OmpCoder::encode(const Eigen::Ref<const Eigen::VectorXd>& signal) const {
  const Eigen::MatrixXd& atoms = dictionary_->atoms();
  if (signal.size() != atoms.rows()) throw_invalid("signal length does not match atom dimension");

  OmpResult result;
  result.residual_sq = signal.squaredNorm();
  if (result.residual_sq == 0.0 || result.residual_sq <= tol_) return result;

  const Eigen::Index m = atoms.cols();
  const Eigen::Index kmax = std::min<Eigen::Index>(max_atoms_, m);
  const Eigen::VectorXd corr0 = atoms.transpose() * signal;

  std::vector<Eigen::Index> support;
  support.reserve(static_cast<std::size_t>(kmax));
  std::vector<char> used(static_cast<std::size_t>(m), 0);
  // Lower Cholesky factor of the support Gram matrix, grown one row per step.
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(kmax, kmax);
  Eigen::VectorXd coef;
  Eigen::VectorXd corr = corr0;
  Eigen::VectorXd residual;

  result.stop = OmpStop::max_atoms;
  while (static_cast<Eigen::Index>(support.size()) < kmax) {
    Eigen::Index best = -1;
    double best_score = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double score = std::abs(corr(j)) / norms_(j);
      if (score > best_score) {
        best_score = score;
        best = j;
      }
    }
    if (best < 0) {
      result.stop = OmpStop::exhausted;
      break;
    }

    const auto k = static_cast<Eigen::Index>(support.size());
    Eigen::VectorXd w(k);
    for (Eigen::Index s = 0; s < k; ++s) w(s) = gram_(support[static_cast<std::size_t>(s)], best);
    if (k > 0) chol.topLeftCorner(k, k).triangularView<Eigen::Lower>().solveInPlace(w);
    const double pivot = gram_(best, best) - w.squaredNorm();
    if (!(pivot > 1e-10 * gram_(best, best))) {
      result.stop = OmpStop::degenerate_support;
      break;
    }
    chol.row(k).head(k) = w.transpose();
    chol(k, k) = std::sqrt(pivot);
    support.push_back(best);
    used[static_cast<std::size_t>(best)] = 1;

    const Eigen::Index n = k + 1;
    Eigen::VectorXd rhs(n);
    for (Eigen::Index s = 0; s < n; ++s) rhs(s) = corr0(support[static_cast<std::size_t>(s)]);
    const auto lower = chol.topLeftCorner(n, n).triangularView<Eigen::Lower>();
    lower.solveInPlace(rhs);
    lower.transpose().solveInPlace(rhs);
    coef = std::move(rhs);

    residual = signal;
    for (Eigen::Index s = 0; s < n; ++s) residual -= coef(s) * atoms.col(support[static_cast<std::size_t>(s)]);
    result.residual_sq = residual.squaredNorm();
    if (result.residual_sq <= tol_) {
      result.stop = OmpStop::tolerance;
      break;
    }
    // D^T r = D^T x - G_S * coef
    corr = corr0;
    for (Eigen::Index s = 0; s < n; ++s) corr -= coef(s) * gram_.col(support[static_cast<std::size_t>(s)]);
  }

  // Report the support in increasing atom order.
  std::vector<std::size_t> order(support.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return support[l] < support[r]; });
  result.column.support.reserve(support.size());
  result.column.values.reserve(support.size());
  for (std::size_t o : order) {
    result.column.support.push_back(static_cast<int>(support[o]));
    result.column.values.push_back(coef(static_cast<Eigen::Index>(o)));
  }
  return result;
}

OmpResult omp(const Dictionary& dictionary, const Eigen::Ref<const Eigen::VectorXd>& signal,
              int max_atoms, double tol) {
  return OmpCoder(dictionary, max_atoms, tol).encode(signal);
}

SparseCode encode_all(const Dictionary& dictionary, const Eigen::MatrixXd& signals, int max_atoms,
                      double tol) {
  if (signals.rows() != dictionary.dim()) throw_invalid("signal dimension does not match dictionary");
  const OmpCoder coder(dictionary, max_atoms, tol);
  std::vector<SparseColumn> columns(static_cast<std::size_t>(signals.cols()));
  parallel_for(columns.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = signals.col(static_cast<Eigen::Index>(i));
      if (!x.allFinite()) continue;
      OmpResult r = coder.encode(x);
      columns[i] = std::move(r.column);
    }
  });
  return SparseCode(dictionary.size(), std::move(columns));
}

SparseCode encode_all(const Dictionary& dictionary, const PatchSet& patches, int max_atoms, double tol) {
  return encode_all(dictionary, patches.matrix, max_atoms, tol);
}

SparseCode encode_all_warm(const Dictionary& dictionary, const PatchSet& patches, int max_atoms, double tol,
                           const SparseCode& previous) {
  const Eigen::MatrixXd& signals = patches.matrix;
  if (signals.rows() != dictionary.dim()) throw_invalid("signal dimension does not match dictionary");
  if (previous.atom_count() != dictionary.size() || previous.column_count() != signals.cols()) {
    throw_invalid("previous code does not match dictionary and patches");
  }
  if (previous.max_support() > static_cast<std::size_t>(max_atoms)) {
    throw_invalid("previous code exceeds max_atoms");
  }
  const OmpCoder coder(dictionary, max_atoms, tol);
  std::vector<SparseColumn> columns(static_cast<std::size_t>(signals.cols()));
  parallel_for(columns.size(), [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd residual(signals.rows());
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = signals.col(static_cast<Eigen::Index>(i));
      if (!x.allFinite()) continue;
      OmpResult fresh = coder.encode(x);
      const SparseColumn& old = previous.column(static_cast<Eigen::Index>(i));
      residual = x;
      for (std::size_t s = 0; s < old.size(); ++s) residual -= old.values[s] * dictionary.atom(old.support[s]);
      columns[i] = residual.squaredNorm() < fresh.residual_sq ? old : std::move(fresh.column);
    }
  });
  return SparseCode(dictionary.size(), std::move(columns));
}

std::pair<Dictionary, SparseCode> sign_fix(const Dictionary& dictionary, const SparseCode& code) {
  if (dictionary.size() != code.atom_count()) throw_invalid("dictionary size does not match code");
  const Eigen::VectorXd sums = code.row_sums();
  Eigen::MatrixXd atoms = dictionary.atoms();
  std::vector<char> flip(static_cast<std::size_t>(sums.size()), 0);
  for (Eigen::Index i = 0; i < sums.size(); ++i) {
    if (sums(i) < 0.0) {
      flip[static_cast<std::size_t>(i)] = 1;
      atoms.col(i) = -atoms.col(i);
    }
  }
  std::vector<SparseColumn> columns = code.columns();
  for (auto& col : columns) {
    for (std::size_t s = 0; s < col.size(); ++s) {
      if (flip[static_cast<std::size_t>(col.support[s])]) col.values[s] = -col.values[s];
    }
  }
  return {Dictionary(std::move(atoms)), SparseCode(code.atom_count(), std::move(columns))};
}

AtomDistribution distribution(const SparseCode& code, double floor) {
  if (!(floor >= 0.0)) throw_invalid("distribution floor must be nonnegative");
  AtomDistribution dist;
  dist.raw = code.row_sums();
  if (dist.raw.size() == 0) throw Error(ErrorCode::degenerate_distribution, "code has no atoms");
  if ((dist.raw.array() < 0.0).any()) {
    throw_invalid("negative row sum; apply sign_fix before computing the distribution");
  }
  dist.prob = dist.raw.array() + floor;
  const double total = dist.prob.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(ErrorCode::degenerate_distribution,
                "all coefficient row sums are zero; atom usage carries no mass");
  }
  dist.prob /= total;
  return dist;
}

}  // namespace sot
