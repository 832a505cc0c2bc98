#include "sot/synthesis.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "sot/coding.hpp"
#include "sot/error.hpp"
#include "sot/patches.hpp"

namespace sot {
namespace {

void check_same_shape(const Canvas& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
    throw_invalid("raw and content images differ in shape");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

SwappedDictionary barycentric_map(const Eigen::MatrixXd& plan, const Dictionary& target,
                                  const Dictionary& source) {
  if (plan.cols() != target.size()) throw_invalid("plan columns do not match the target dictionary");
  if (plan.rows() != source.size()) throw_invalid("plan rows do not match the source dictionary");
  if (target.dim() != source.dim()) throw_invalid("dictionaries differ in atom dimension");
  if (!plan.allFinite() || (plan.array() < 0.0).any()) throw_invalid("plan must be finite and nonnegative");
  if (!(plan.sum() > 0.0)) throw_invalid("plan carries no mass");

  SwappedDictionary out;
  out.row_mass = plan.rowwise().sum();
  // Normalizing the weights before the product keeps single-entry rows exact.
  Eigen::MatrixXd weights = plan;
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    if (out.row_mass(i) > 0.0) weights.row(i) /= out.row_mass(i);
  }
  out.atoms = target.atoms() * weights.transpose();
  for (Eigen::Index i = 0; i < plan.rows(); ++i) {
    if (!(out.row_mass(i) > 0.0)) out.atoms.col(i) = source.atom(i);
  }
  return out;
}

Canvas reconstruct_unclamped(const SwappedDictionary& swapped, const Image& content,
                             const Dictionary& coding_dictionary, const ReconstructionOptions& options) {
  if (swapped.atoms.cols() != coding_dictionary.size() || swapped.atoms.rows() != coding_dictionary.dim()) {
    throw_invalid("swapped dictionary does not match the coding dictionary");
  }
  PatchSet grid = dense_grid(content, options.patch_size, options.stride);
  if (grid.dim() != coding_dictionary.dim()) {
    throw_invalid("content patches have dimension " + std::to_string(grid.dim()) + " but the dictionary expects " +
                  std::to_string(coding_dictionary.dim()));
  }
  const SparseCode code = encode_all(coding_dictionary, grid, options.omp_max_atoms, options.omp_tol);
  Eigen::MatrixXd decoded = Eigen::MatrixXd::Zero(grid.dim(), grid.count());
  for (Eigen::Index i = 0; i < grid.count(); ++i) {
    const auto& col = code.column(i);
    for (std::size_t s = 0; s < col.size(); ++s) decoded.col(i) += col.values[s] * swapped.atoms.col(col.support[s]);
  }
  grid.matrix = std::move(decoded);
  return reassemble_unclamped(grid, content.width(), content.height());
}

Image reconstruct_raw(const SwappedDictionary& swapped, const Image& content,
                      const Dictionary& coding_dictionary, const ReconstructionOptions& options) {
  return reconstruct_unclamped(swapped, content, coding_dictionary, options).clamped();
}

Canvas sparse_approximation(const Image& content, const Dictionary& dictionary,
                            const ReconstructionOptions& options) {
  SwappedDictionary identity{dictionary.atoms(), Eigen::VectorXd::Ones(dictionary.size())};
  return reconstruct_unclamped(identity, content, dictionary, options);
}

Canvas apply_laplacian(const Canvas& image) {
  const int w = image.width();
  const int h = image.height();
  const int channels = image.channels();
  Canvas out(w, h, channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        const double v = image.at(x, y, c);
        double acc = 0.0;
        if (x > 0) acc += v - image.at(x - 1, y, c);
        if (x + 1 < w) acc += v - image.at(x + 1, y, c);
        if (y > 0) acc += v - image.at(x, y - 1, c);
        if (y + 1 < h) acc += v - image.at(x, y + 1, c);
        out.at(x, y, c) = acc;
      }
    }
  }
  return out;
}

double refinement_energy(const Canvas& y, const Canvas& raw, const Image& content, double rho) {
  check_same_shape(y, content);
  check_same_shape(raw, content);
  double fidelity = 0.0;
  for (std::size_t i = 0; i < y.data().size(); ++i) {
    const double d = y.data()[i] - raw.data()[i];
    fidelity += d * d;
  }
  double gradient = 0.0;
  const int w = y.width();
  const int h = y.height();
  for (int yy = 0; yy < h; ++yy) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < y.channels(); ++c) {
        if (x + 1 < w) {
          const double d = (y.at(x + 1, yy, c) - y.at(x, yy, c)) - (content.at(x + 1, yy, c) - content.at(x, yy, c));
          gradient += d * d;
        }
        if (yy + 1 < h) {
          const double d = (y.at(x, yy + 1, c) - y.at(x, yy, c)) - (content.at(x, yy + 1, c) - content.at(x, yy, c));
          gradient += d * d;
        }
      }
    }
  }
  return fidelity + rho * gradient;
}

RefineResult gradient_refine(const Canvas& raw, const Image& content, const RefineOptions& options) {
  check_same_shape(raw, content);
  if (!(options.rho >= 0.0)) throw_invalid("rho must be nonnegative");
  RefineResult result;
  if (options.rho == 0.0) {
    result.solution = raw;
    result.image = raw.clamped();
    return result;
  }
  if (!(options.cg_tol > 0.0)) throw_invalid("cg_tol must be positive");
  if (options.cg_max_iters < 1) throw_invalid("cg_max_iters must be at least 1");

  const double rho = options.rho;
  const Canvas lap_content = apply_laplacian(content.to_canvas());
  Canvas rhs = raw;
  for (std::size_t i = 0; i < rhs.data().size(); ++i) rhs.data()[i] += rho * lap_content.data()[i];

  auto apply = [&](const Canvas& v) {
    Canvas out = apply_laplacian(v);
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = v.data()[i] + rho * out.data()[i];
    return out;
  };

  // The channels decouple, so one CG over the stacked vector solves each
  // channel system exactly as separate solves would in exact arithmetic;
  // the stopping test uses the combined residual.
  const double rhs_norm = std::sqrt(dot(rhs.data(), rhs.data()));
  Canvas x = raw;
  Canvas r = rhs;
  {
    const Canvas ax = apply(x);
    for (std::size_t i = 0; i < r.data().size(); ++i) r.data()[i] -= ax.data()[i];
  }
  if (rhs_norm == 0.0) {
    result.solution = Canvas(raw.width(), raw.height(), raw.channels());
    result.image = result.solution.clamped();
    return result;
  }
  Canvas p = r;
  double rr = dot(r.data(), r.data());
  Canvas best = x;
  double best_rel = std::sqrt(rr) / rhs_norm;
  int iter = 0;
  while (best_rel > options.cg_tol && iter < options.cg_max_iters) {
    ++iter;
    const Canvas ap = apply(p);
    const double pap = dot(p.data(), ap.data());
    if (!(pap > 0.0)) break;
    const double step = rr / pap;
    for (std::size_t i = 0; i < x.data().size(); ++i) {
      x.data()[i] += step * p.data()[i];
      r.data()[i] -= step * ap.data()[i];
    }
    const double rr_next = dot(r.data(), r.data());
    const double rel = std::sqrt(rr_next) / rhs_norm;
    if (rel < best_rel) {
      best_rel = rel;
      best = x;
    }
    const double beta = rr_next / rr;
    rr = rr_next;
    for (std::size_t i = 0; i < p.data().size(); ++i) p.data()[i] = r.data()[i] + beta * p.data()[i];
  }

  // Report the true residual of the returned iterate, not the recursive one.
  const Canvas ab = apply(best);
  double res = 0.0;
  for (std::size_t i = 0; i < ab.data().size(); ++i) {
    const double d = rhs.data()[i] - ab.data()[i];
    res += d * d;
  }
  result.relative_residual = std::sqrt(res) / rhs_norm;
  result.iterations = iter;
  result.converged = result.relative_residual <= options.cg_tol;
  result.solution = std::move(best);
  result.image = result.solution.clamped();
  return result;
}

RefineResult gradient_refine(const Image& raw, const Image& content, const RefineOptions& options) {
  return gradient_refine(raw.to_canvas(), content, options);
}

TransferResult transfer(const TransferModel& model, const Image& content, const TransferOptions& options) {
  if (content.channels() != model.channels) {
    throw_invalid("input has " + std::to_string(content.channels()) + " channels but the model was trained on " +
                  std::to_string(model.channels));
  }
  const bool forward = options.direction == Direction::forward;
  const Dictionary& coding = forward ? model.dx : model.dy;
  const Dictionary& target = forward ? model.dy : model.dx;
  const SwappedDictionary swapped =
      forward ? barycentric_map(model.plan.entries, target, coding)
              : barycentric_map(model.plan.entries.transpose(), target, coding);

  ReconstructionOptions recon;
  recon.patch_size = model.config.patch_size;
  recon.stride = options.stride;
  recon.omp_tol = model.config.omp_tol;
  recon.omp_max_atoms = model.config.omp_max_atoms;
  const Canvas raw = reconstruct_unclamped(swapped, content, coding, recon);

  TransferResult result;
  result.raw = raw.clamped();
  RefineOptions refine;
  refine.rho = options.rho;
  refine.cg_tol = options.cg_tol;
  refine.cg_max_iters = options.cg_max_iters;
  const RefineResult refined = gradient_refine(result.raw, content, refine);
  result.image = refined.image;
  result.refine_converged = refined.converged;
  return result;
}

}  // namespace sot
