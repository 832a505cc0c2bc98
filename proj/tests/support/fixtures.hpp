#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>

#include "sot/image.hpp"

namespace sot::testing {

/// Smooth multi-octave value noise with a few soft-edged shapes on top:
/// enough texture and edges to behave like a photo crop.
Image natural_image(int width, int height, int channels, std::uint64_t seed);

/// Per-channel affine recoloring, clamped to [0,1].
Image tint(const Image& image, std::array<double, 3> gain, std::array<double, 3> offset);

/// The same scene recolored toward blue / toward red.
Image blue_tinted(const Image& image);
Image red_tinted(const Image& image);

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                               double lo = 0.0, double hi = 1.0);
Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

/// Strictly positive probability vector.
Eigen::VectorXd random_simplex(Eigen::Index n, std::mt19937_64& rng);

/// Random orthonormal d×d matrix (QR of a Gaussian matrix).
Eigen::MatrixXd random_orthonormal(Eigen::Index d, std::mt19937_64& rng);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace sot::testing
