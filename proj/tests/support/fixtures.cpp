#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <vector>

#include <unistd.h>

namespace sot::testing {
namespace {

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Bilinear-interpolated lattice noise with smoothstep weights.
class ValueNoise {
 public:
  ValueNoise(int cells, std::mt19937_64& rng) : cells_(cells), lattice_((cells + 1) * (cells + 1)) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : lattice_) v = u(rng);
  }
  double operator()(double x, double y) const {  // x, y in [0,1]
    const double gx = x * cells_;
    const double gy = y * cells_;
    const int ix = std::min(static_cast<int>(gx), cells_ - 1);
    const int iy = std::min(static_cast<int>(gy), cells_ - 1);
    const double tx = smoothstep(gx - ix);
    const double ty = smoothstep(gy - iy);
    auto at = [&](int i, int j) { return lattice_[j * (cells_ + 1) + i]; };
    const double top = at(ix, iy) * (1 - tx) + at(ix + 1, iy) * tx;
    const double bottom = at(ix, iy + 1) * (1 - tx) + at(ix + 1, iy + 1) * tx;
    return top * (1 - ty) + bottom * ty;
  }

 private:
  int cells_;
  std::vector<double> lattice_;
};

}  // namespace

Image natural_image(int width, int height, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // Luminance from three octaves; chroma from one coarse octave per channel.
  std::vector<ValueNoise> octaves;
  for (int cells : {3, 7, 17}) octaves.emplace_back(cells, rng);
  std::vector<ValueNoise> chroma;
  for (int c = 0; c < channels; ++c) chroma.emplace_back(2, rng);

  struct Disc {
    double cx, cy, r, shade;
    std::array<double, 3> color;
  };
  std::vector<Disc> discs(4);
  for (Disc& d : discs) {
    d = {u(rng), u(rng), 0.08 + 0.15 * u(rng), u(rng) < 0.5 ? -0.3 : 0.3, {u(rng), u(rng), u(rng)}};
  }

  std::vector<double> data(static_cast<std::size_t>(width) * height * channels);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double fx = (x + 0.5) / width;
      const double fy = (y + 0.5) / height;
      const double lum = 0.55 * octaves[0](fx, fy) + 0.3 * octaves[1](fx, fy) + 0.15 * octaves[2](fx, fy);
      for (int c = 0; c < channels; ++c) {
        double v = 0.75 * lum + 0.25 * chroma[c](fx, fy);
        for (const Disc& d : discs) {
          const double dist = std::hypot(fx - d.cx, fy - d.cy);
          const double edge = 1.0 / (1.0 + std::exp((dist - d.r) * 120.0));
          v += edge * (d.shade + 0.2 * (d.color[c % 3] - 0.5));
        }
        data[(static_cast<std::size_t>(y) * width + x) * channels + c] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return Image(width, height, channels, std::move(data));
}

Image tint(const Image& image, std::array<double, 3> gain, std::array<double, 3> offset) {
  std::vector<double> data(image.data().begin(), image.data().end());
  const int ch = image.channels();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int c = static_cast<int>(i % ch);
    data[i] = std::clamp(data[i] * gain[c % 3] + offset[c % 3], 0.0, 1.0);
  }
  return Image(image.width(), image.height(), ch, std::move(data));
}

Image blue_tinted(const Image& image) { return tint(image, {0.6, 0.8, 1.0}, {0.0, 0.05, 0.2}); }
Image red_tinted(const Image& image) { return tint(image, {1.0, 0.75, 0.6}, {0.2, 0.03, 0.0}); }

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo,
                               double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
  return m;
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  return m;
}

Eigen::VectorXd random_simplex(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v / v.sum();
}

Eigen::MatrixXd random_orthonormal(Eigen::Index d, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(d, d, rng));
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("sot-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace sot::testing
