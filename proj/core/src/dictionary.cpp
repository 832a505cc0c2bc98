#include "sot/dictionary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sot/error.hpp"
#include "sot/random.hpp"

namespace sot {
namespace {

void check_plan_rows(const Eigen::MatrixXd& plan, Eigen::Index rows, const Dictionary& other) {
  if (plan.rows() != rows || plan.cols() != other.size()) {
    throw_invalid("transport plan shape does not match the dictionaries");
  }
}

std::vector<Eigen::Index> nonzero_columns(const Eigen::MatrixXd& m) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if ((m.col(j).array() != 0.0).any()) out.push_back(j);
  }
  return out;
}

}  // namespace

Dictionary::Dictionary(Eigen::MatrixXd atoms) : atoms_(std::move(atoms)) {
  if (!atoms_.allFinite()) throw_invalid("dictionary contains non-finite entries");
}

Dictionary init_from_samples(const PatchSet& patches, int m, std::uint64_t seed) {
  const Eigen::Index p = patches.count();
  if (m < 1) throw_invalid("dictionary size must be at least 1");
  if (m > p) {
    throw_invalid("dictionary size " + std::to_string(m) + " exceeds patch count " + std::to_string(p));
  }
  // Zero patches would become zero atoms, which no coder can select.
  std::vector<Eigen::Index> index = nonzero_columns(patches.matrix);
  const auto usable = static_cast<Eigen::Index>(index.size());
  if (m > usable) {
    throw Error(ErrorCode::degenerate_distribution,
                "only " + std::to_string(usable) + " of " + std::to_string(p) +
                    " sampled patches are nonzero; cannot initialize " + std::to_string(m) + " atoms");
  }
  // Partial Fisher-Yates shuffle.
  Rng rng(seed);
  Eigen::MatrixXd atoms(patches.dim(), m);
  for (int k = 0; k < m; ++k) {
    const auto j = k + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(usable - k)));
    std::swap(index[static_cast<std::size_t>(k)], index[j]);
    atoms.col(k) = patches.matrix.col(index[static_cast<std::size_t>(k)]);
  }
  return Dictionary(std::move(atoms));
}

AtomResiduals residuals(int k, const Dictionary& dictionary, const PatchSet& patches,
                        const SparseCode& code, const Eigen::VectorXd& dist_raw) {
  if (k < 0 || k >= dictionary.size()) throw_invalid("atom index out of range");
  if (code.atom_count() != dictionary.size() || code.column_count() != patches.count()) {
    throw_invalid("code shape does not match dictionary and patches");
  }
  if (dist_raw.size() != dictionary.size()) throw_invalid("row-sum vector length mismatch");
  if (patches.dim() != dictionary.dim()) throw_invalid("patch dimension does not match dictionary");

  AtomResiduals out;
  std::vector<double> alpha;
  for (Eigen::Index i = 0; i < code.column_count(); ++i) {
    const auto& col = code.column(i);
    const auto it = std::lower_bound(col.support.begin(), col.support.end(), k);
    if (it != col.support.end() && *it == k) {
      out.columns.push_back(i);
      alpha.push_back(col.values[static_cast<std::size_t>(it - col.support.begin())]);
    }
  }
  out.alpha = Eigen::Map<Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
  out.error.resize(dictionary.dim(), static_cast<Eigen::Index>(out.columns.size()));
  for (std::size_t c = 0; c < out.columns.size(); ++c) {
    const Eigen::Index i = out.columns[c];
    auto e = out.error.col(static_cast<Eigen::Index>(c));
    e = patches.matrix.col(i);
    const auto& col = code.column(i);
    for (std::size_t s = 0; s < col.size(); ++s) {
      if (col.support[s] != k) e -= col.values[s] * dictionary.atom(col.support[s]);
    }
  }
  out.row_sum_residual = patches.matrix.rowwise().sum();
  for (Eigen::Index j = 0; j < dictionary.size(); ++j) {
    if (j != k) out.row_sum_residual -= dist_raw(j) * dictionary.atom(j);
  }
  return out;
}

Eigen::VectorXd update_atom(const Eigen::MatrixXd& error, const Eigen::VectorXd& alpha,
                            const Eigen::VectorXd& row_sum_residual, double a_k,
                            const Eigen::VectorXd& plan_row, const Dictionary& other, double lambda,
                            double gamma) {
  if (error.cols() != alpha.size()) throw_invalid("E_k and alpha_k disagree in length");
  if (error.rows() != row_sum_residual.size()) throw_invalid("F_k length does not match E_k");
  if (plan_row.size() != other.size()) throw_invalid("plan row length does not match other dictionary");

  const double mass = plan_row.sum();
  const double denom = alpha.squaredNorm() + lambda * a_k * a_k + gamma * mass;
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::atom_unused, "atom has no coefficients, row-sum weight or plan mass");
  }
  Eigen::VectorXd numer = lambda * a_k * row_sum_residual;
  if (error.cols() > 0) numer.noalias() += error * alpha;
  if (gamma != 0.0) numer.noalias() += gamma * (other.atoms() * plan_row);
  return numer / denom;
}

double atom_objective(const Eigen::VectorXd& atom, const Eigen::MatrixXd& error,
                      const Eigen::VectorXd& alpha, const Eigen::VectorXd& row_sum_residual, double a_k,
                      const Eigen::VectorXd& plan_row, const Dictionary& other, double lambda,
                      double gamma) {
  double value = (error - atom * alpha.transpose()).squaredNorm();
  value += lambda * (row_sum_residual - atom * a_k).squaredNorm();
  for (Eigen::Index j = 0; j < other.size(); ++j) {
    value += gamma * plan_row(j) * (atom - other.atom(j)).squaredNorm();
  }
  return value;
}

double dictionary_objective(const Dictionary& dictionary, const PatchSet& patches,
                            const SparseCode& code, const Eigen::VectorXd& dist_raw,
                            const Eigen::MatrixXd& plan, const Dictionary& other, double lambda,
                            double gamma) {
  check_plan_rows(plan, dictionary.size(), other);
  double value = (code.reconstruct(dictionary) - patches.matrix).squaredNorm();
  value += lambda * (dictionary.atoms() * dist_raw - patches.matrix.rowwise().sum()).squaredNorm();
  if (gamma != 0.0) {
    for (Eigen::Index i = 0; i < dictionary.size(); ++i) {
      for (Eigen::Index j = 0; j < other.size(); ++j) {
        if (plan(i, j) != 0.0) value += gamma * plan(i, j) * (dictionary.atom(i) - other.atom(j)).squaredNorm();
      }
    }
  }
  return value;
}

SweepResult sweep(const Dictionary& dictionary, const PatchSet& patches, const SparseCode& code,
                  const Eigen::VectorXd& dist_raw, const Eigen::MatrixXd& plan,
                  const Dictionary& other, const SweepOptions& options) {
  const Eigen::Index m = dictionary.size();
  if (code.atom_count() != m || code.column_count() != patches.count()) {
    throw_invalid("code shape does not match dictionary and patches");
  }
  if (patches.dim() != dictionary.dim() || other.dim() != dictionary.dim()) {
    throw_invalid("patch dimension does not match dictionaries");
  }
  if (dist_raw.size() != m) throw_invalid("row-sum vector length mismatch");
  check_plan_rows(plan, m, other);

  SweepResult result;
  result.objective_before = dictionary_objective(dictionary, patches, code, dist_raw, plan, other,
                                                 options.lambda, options.gamma);

  Eigen::MatrixXd atoms = dictionary.atoms();
  // Running residuals R = X - D A and g = X 1 - D a, updated after each atom
  // so E_k and F_k cost only the columns that use atom k.
  Eigen::MatrixXd residual = patches.matrix - code.reconstruct(dictionary);
  Eigen::VectorXd row_residual = patches.matrix.rowwise().sum() - atoms * dist_raw;
  const auto rows = code.rows();

  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& entries = rows[static_cast<std::size_t>(k)];
    const Eigen::VectorXd old_atom = atoms.col(k);
    Eigen::VectorXd alpha(static_cast<Eigen::Index>(entries.size()));
    Eigen::MatrixXd error(atoms.rows(), alpha.size());
    for (std::size_t c = 0; c < entries.size(); ++c) {
      alpha(static_cast<Eigen::Index>(c)) = entries[c].value;
      error.col(static_cast<Eigen::Index>(c)) = residual.col(entries[c].column) + entries[c].value * old_atom;
    }
    const double a_k = dist_raw(k);
    const Eigen::VectorXd f_k = row_residual + a_k * old_atom;
    const Eigen::VectorXd plan_row = plan.row(k).transpose();

    Eigen::VectorXd new_atom;
    try {
      new_atom = update_atom(error, alpha, f_k, a_k, plan_row, other, options.lambda, options.gamma);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::atom_unused) throw;
      continue;  // left for replacement below
    }
    const Eigen::VectorXd delta = new_atom - old_atom;
    for (const auto& entry : entries) residual.col(entry.column) -= entry.value * delta;
    row_residual -= a_k * delta;
    atoms.col(k) = new_atom;
  }

  Dictionary updated(atoms);
  result.objective_after_updates = dictionary_objective(updated, patches, code, dist_raw, plan, other,
                                                        options.lambda, options.gamma);

  Rng rng(options.seed);
  const std::vector<Eigen::Index> candidates = nonzero_columns(patches.matrix);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double norm = atoms.col(k).norm();
    bool replace = rows[static_cast<std::size_t>(k)].empty() || !(norm > 0.0);
    for (Eigen::Index j = 0; j < k && !replace; ++j) {
      const double nj = atoms.col(j).norm();
      if (nj > 0.0 && std::abs(atoms.col(k).dot(atoms.col(j))) / (norm * nj) > options.correlation_threshold) {
        replace = true;
      }
    }
    if (replace && !candidates.empty()) {
      atoms.col(k) = patches.matrix.col(candidates[rng.below(candidates.size())]);
      result.replaced.push_back(static_cast<int>(k));
    }
  }
  result.dictionary = Dictionary(std::move(atoms));
  return result;
}

Image render_atlas(const Dictionary& dictionary, int patch_size, int channels) {
  if (channels != 1 && channels != 3) throw_invalid("atlas channels must be 1 or 3");
  if (dictionary.dim() != static_cast<Eigen::Index>(patch_size) * patch_size * channels) {
    throw_invalid("atom dimension does not match patch_size^2 * channels");
  }
  const auto m = static_cast<int>(dictionary.size());
  if (m == 0) throw_invalid("cannot render an empty dictionary");
  const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m))));
  const int cell = patch_size + 1;
  const int side = grid * cell + 1;
  std::vector<double> data(static_cast<std::size_t>(side) * side * channels, 1.0);
  for (int k = 0; k < m; ++k) {
    const auto atom = dictionary.atom(k);
    const double lo = atom.minCoeff();
    const double hi = atom.maxCoeff();
    const int ox = (k % grid) * cell + 1;
    const int oy = (k / grid) * cell + 1;
    for (int c = 0; c < channels; ++c) {
      for (int r = 0; r < patch_size; ++r) {
        for (int q = 0; q < patch_size; ++q) {
          const double v = atom(patch_offset(patch_size, r, q, c));
          const double shown = hi > lo ? (v - lo) / (hi - lo) : 0.5;
          data[(static_cast<std::size_t>(oy + r) * side + (ox + q)) * channels + c] = std::clamp(shown, 0.0, 1.0);
        }
      }
    }
  }
  return Image(side, side, channels, std::move(data));
}

}  // namespace sot
