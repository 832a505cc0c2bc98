#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "sot/image.hpp"

namespace sot {

struct PatchPosition {
  int x = 0;  // column of the top-left corner
  int y = 0;  // row of the top-left corner

  bool operator==(const PatchPosition&) const = default;
};

/// Vectorized patches, one per column of `matrix`.
///
/// A patch is vectorized channel-blockwise: all of channel 0 in row-major
/// order, then channel 1, then channel 2, so that
/// `matrix(c * p * p + r * p + q, k)` is pixel (x + q, y + r, c) of the
/// patch at positions[k] = (x, y), where p is `patch_size`.
struct PatchSet {
  Eigen::MatrixXd matrix;
  std::vector<PatchPosition> positions;
  int patch_size = 0;
  int channels = 0;

  Eigen::Index dim() const noexcept { return matrix.rows(); }
  Eigen::Index count() const noexcept { return matrix.cols(); }
};

/// Index of pixel (row, col, channel) inside a vectorized patch.
inline Eigen::Index patch_offset(int patch_size, int row, int col, int channel) noexcept {
  return static_cast<Eigen::Index>(channel) * patch_size * patch_size +
         static_cast<Eigen::Index>(row) * patch_size + col;
}

/// Copies the block at `pos` into `out` (length patch_size^2 * channels).
void extract_patch(const Image& image, PatchPosition pos, int patch_size,
                   Eigen::Ref<Eigen::VectorXd> out);

/// `count` patches with top-left corners drawn uniformly, with replacement,
/// from every corner that keeps the patch inside the image.
PatchSet sample_random(const Image& image, int patch_size, int count, std::uint64_t seed);

/// Patches on a regular grid with the given stride. The last row and column
/// of corners are clamped to (dim - patch_size) so every pixel is covered.
PatchSet dense_grid(const Image& image, int patch_size, int stride);

/// Grid corners along one axis used by dense_grid.
std::vector<int> grid_corners(int extent, int patch_size, int stride);

/// Overlap-averaged reconstruction without clamping. Throws if a pixel is
/// not covered by any patch.
Canvas reassemble_unclamped(const PatchSet& patches, int width, int height);

/// Overlap-averaged reconstruction, clamped to [0,1].
Image reassemble(const PatchSet& patches, int width, int height);

}  // namespace sot
