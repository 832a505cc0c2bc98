#include "sot/patches.hpp"

#include <algorithm>
#include <string>

#include "sot/error.hpp"
#include "sot/random.hpp"

namespace sot {
namespace {

void check_patch_fits(const Image& image, int patch_size) {
  if (image.empty()) throw_invalid("image is empty");
  if (patch_size < 1) throw_invalid("patch size must be at least 1");
  if (patch_size > std::min(image.width(), image.height())) {
    throw_invalid("patch size " + std::to_string(patch_size) + " exceeds image dimensions " +
                  std::to_string(image.width()) + "x" + std::to_string(image.height()));
  }
}

PatchSet make_patch_set(const Image& image, int patch_size, std::vector<PatchPosition> positions) {
  PatchSet set;
  set.patch_size = patch_size;
  set.channels = image.channels();
  const Eigen::Index d = static_cast<Eigen::Index>(patch_size) * patch_size * image.channels();
  set.matrix.resize(d, static_cast<Eigen::Index>(positions.size()));
  for (std::size_t k = 0; k < positions.size(); ++k) {
    extract_patch(image, positions[k], patch_size, set.matrix.col(static_cast<Eigen::Index>(k)));
  }
  set.positions = std::move(positions);
  return set;
}

}  // namespace

void extract_patch(const Image& image, PatchPosition pos, int patch_size,
                   Eigen::Ref<Eigen::VectorXd> out) {
  const int channels = image.channels();
  for (int c = 0; c < channels; ++c) {
    for (int r = 0; r < patch_size; ++r) {
      for (int q = 0; q < patch_size; ++q) {
        out(patch_offset(patch_size, r, q, c)) = image.at(pos.x + q, pos.y + r, c);
      }
    }
  }
}

PatchSet sample_random(const Image& image, int patch_size, int count, std::uint64_t seed) {
  check_patch_fits(image, patch_size);
  if (count < 1) throw_invalid("patch count must be at least 1");

  const auto nx = static_cast<std::uint64_t>(image.width() - patch_size + 1);
  const auto ny = static_cast<std::uint64_t>(image.height() - patch_size + 1);
  Rng rng(seed);
  std::vector<PatchPosition> positions(static_cast<std::size_t>(count));
  for (auto& p : positions) {
    const std::uint64_t corner = rng.below(nx * ny);
    p.x = static_cast<int>(corner % nx);
    p.y = static_cast<int>(corner / nx);
  }
  return make_patch_set(image, patch_size, std::move(positions));
}

std::vector<int> grid_corners(int extent, int patch_size, int stride) {
  if (stride < 1) throw_invalid("stride must be at least 1");
  if (stride > patch_size) throw_invalid("stride must not exceed the patch size");
  if (patch_size > extent) throw_invalid("patch size exceeds image extent");
  std::vector<int> corners;
  const int last = extent - patch_size;
  for (int v = 0; v <= last; v += stride) corners.push_back(v);
  if (corners.back() != last) corners.push_back(last);
  return corners;
}

PatchSet dense_grid(const Image& image, int patch_size, int stride) {
  if (stride < 1) throw_invalid("stride must be at least 1");
  check_patch_fits(image, patch_size);
  const auto xs = grid_corners(image.width(), patch_size, stride);
  const auto ys = grid_corners(image.height(), patch_size, stride);
  std::vector<PatchPosition> positions;
  positions.reserve(xs.size() * ys.size());
  for (int y : ys) {
    for (int x : xs) positions.push_back({x, y});
  }
  return make_patch_set(image, patch_size, std::move(positions));
}

Canvas reassemble_unclamped(const PatchSet& patches, int width, int height) {
  const int p = patches.patch_size;
  const int channels = patches.channels;
  if (p < 1 || (channels != 1 && channels != 3)) throw_invalid("malformed patch set");
  if (patches.dim() != static_cast<Eigen::Index>(p) * p * channels) {
    throw_invalid("patch dimension does not match patch_size^2 * channels");
  }
  if (static_cast<std::size_t>(patches.count()) != patches.positions.size()) {
    throw_invalid("patch matrix and positions disagree in count");
  }

  // Running mean per pixel: averaging identical values reproduces them exactly.
  Canvas mean(width, height, channels);
  std::vector<int> hits(static_cast<std::size_t>(width) * height, 0);
  for (std::size_t k = 0; k < patches.positions.size(); ++k) {
    const PatchPosition pos = patches.positions[k];
    if (pos.x < 0 || pos.y < 0 || pos.x + p > width || pos.y + p > height) {
      throw_invalid("patch position lies outside the target image");
    }
    const auto col = patches.matrix.col(static_cast<Eigen::Index>(k));
    for (int r = 0; r < p; ++r) {
      for (int q = 0; q < p; ++q) {
        const int x = pos.x + q;
        const int y = pos.y + r;
        const int n = ++hits[static_cast<std::size_t>(y) * width + x];
        for (int c = 0; c < channels; ++c) {
          double& m = mean.at(x, y, c);
          m += (col(patch_offset(p, r, q, c)) - m) / n;
        }
      }
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (hits[static_cast<std::size_t>(y) * width + x] == 0) {
        throw_invalid("pixel (" + std::to_string(x) + "," + std::to_string(y) +
                      ") is not covered by any patch");
      }
    }
  }
  return mean;
}

Image reassemble(const PatchSet& patches, int width, int height) {
  return reassemble_unclamped(patches, width, height).clamped();
}

}  // namespace sot
