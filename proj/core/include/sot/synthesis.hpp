#pragma once

#include <Eigen/Dense>

#include "sot/dictionary_type.hpp"
#include "sot/image.hpp"
#include "sot/pipeline.hpp"

namespace sot {

/// Source dictionary with every atom replaced by its plan-weighted
/// barycenter of target atoms.
struct SwappedDictionary {
  Eigen::MatrixXd atoms;
  /// sum_j T(i, j) per source atom.
  Eigen::VectorXd row_mass;
};

/// atom_i = sum_j T(i,j) target_j / sum_j T(i,j). Rows with zero mass keep
/// the corresponding source atom.
SwappedDictionary barycentric_map(const Eigen::MatrixXd& plan, const Dictionary& target,
                                  const Dictionary& source);

struct ReconstructionOptions {
  int patch_size = 16;
  int stride = 4;
  double omp_tol = 1e-5;
  int omp_max_atoms = 8;
};

/// Codes the dense patch grid of `content` against `coding_dictionary`,
/// decodes the same coefficients with the swapped atoms and overlap-averages
/// the result. No clamping.
Canvas reconstruct_unclamped(const SwappedDictionary& swapped, const Image& content,
                             const Dictionary& coding_dictionary, const ReconstructionOptions& options);

/// reconstruct_unclamped, clamped to [0,1].
Image reconstruct_raw(const SwappedDictionary& swapped, const Image& content,
                      const Dictionary& coding_dictionary, const ReconstructionOptions& options);

/// Sparse approximation of `content` on `dictionary` alone (the swap is the
/// identity).
Canvas sparse_approximation(const Image& content, const Dictionary& dictionary,
                            const ReconstructionOptions& options);

struct RefineOptions {
  double rho = 0.01;
  double cg_tol = 1e-8;
  int cg_max_iters = 1000;
};

struct RefineResult {
  Image image;        // solution clamped to [0,1]
  Canvas solution;    // solution before clamping
  bool converged = true;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Applies L = grad^T grad (forward differences, replicate boundary) to each
/// channel independently.
Canvas apply_laplacian(const Canvas& image);

/// Solves (I + rho L) y = raw + rho L content per channel by conjugate
/// gradients, i.e. minimizes ||y - raw||^2 + rho ||grad y - grad content||^2.
/// rho == 0 returns raw unchanged. On non-convergence the lowest-residual
/// iterate is returned with converged == false.
RefineResult gradient_refine(const Canvas& raw, const Image& content, const RefineOptions& options);
RefineResult gradient_refine(const Image& raw, const Image& content, const RefineOptions& options);

/// ||y - raw||^2 + rho ||grad y - grad content||^2.
double refinement_energy(const Canvas& y, const Canvas& raw, const Image& content, double rho);

enum class Direction { forward, reverse };

struct TransferOptions {
  Direction direction = Direction::forward;
  int stride = 4;
  double rho = 0.01;
  double cg_tol = 1e-8;
  int cg_max_iters = 1000;
};

struct TransferResult {
  Image image;
  Image raw;  // before gradient refinement
  bool refine_converged = true;
};

/// forward: content coded on D^x, decoded on the barycentric map of T onto
/// D^y. reverse: coded on D^y, decoded on the map of T^T onto D^x.
/// The raw reconstruction is then refined with gradient_refine (skipped
/// when rho == 0).
TransferResult transfer(const TransferModel& model, const Image& content, const TransferOptions& options = {});

}  // namespace sot
