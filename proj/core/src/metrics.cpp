#include "sot/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "sot/error.hpp"

namespace sot {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_same_dims(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
    throw_invalid("images differ in dimensions");
  }
}

Eigen::ArrayXd gaussian_kernel() {
  Eigen::ArrayXd k(kWindow);
  const int half = kWindow / 2;
  for (int i = 0; i < kWindow; ++i) {
    const double t = i - half;
    k(i) = std::exp(-t * t / (2.0 * kSigma * kSigma));
  }
  return k / k.sum();
}

// Separable 'valid' filtering: output is (rows - 10) x (cols - 10).
Eigen::ArrayXXd filter_valid(const Eigen::ArrayXXd& in, const Eigen::ArrayXd& k) {
  const Eigen::Index rows = in.rows() - kWindow + 1;
  const Eigen::Index cols = in.cols() - kWindow + 1;
  Eigen::ArrayXXd horiz(in.rows(), cols);
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int t = 0; t < kWindow; ++t) s += k(t) * in(r, c + t);
      horiz(r, c) = s;
    }
  }
  Eigen::ArrayXXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      double s = 0.0;
      for (int t = 0; t < kWindow; ++t) s += k(t) * horiz(r + t, c);
      out(r, c) = s;
    }
  }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  check_same_dims(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.data().size());
  if (mse == 0.0) return kPsnrIdentical;
  return std::min(kPsnrIdentical, 10.0 * std::log10(1.0 / mse));
}

Eigen::ArrayXXd grayscale(const Image& image) {
  Eigen::ArrayXXd gray(image.height(), image.width());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double s = 0.0;
      for (int c = 0; c < image.channels(); ++c) s += image.at(x, y, c);
      gray(y, x) = s / image.channels();
    }
  }
  return gray;
}

double ssim(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw_invalid("images differ in dimensions");
  if (a.rows() < kWindow || a.cols() < kWindow) throw_invalid("image is smaller than the 11x11 SSIM window");
  const Eigen::ArrayXd k = gaussian_kernel();
  const Eigen::ArrayXXd mu_a = filter_valid(a, k);
  const Eigen::ArrayXXd mu_b = filter_valid(b, k);
  const Eigen::ArrayXXd var_a = filter_valid(a * a, k) - mu_a * mu_a;
  const Eigen::ArrayXXd var_b = filter_valid(b * b, k) - mu_b * mu_b;
  const Eigen::ArrayXXd cov = filter_valid(a * b, k) - mu_a * mu_b;
  const Eigen::ArrayXXd num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
  const Eigen::ArrayXXd den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
  return (num / den).mean();
}

double ssim(const Image& a, const Image& b) {
  check_same_dims(a, b);
  return ssim(grayscale(a), grayscale(b));
}

Eigen::ArrayXXd edge_map(const Image& image) {
  const Eigen::ArrayXXd g = grayscale(image);
  const Eigen::Index h = g.rows();
  const Eigen::Index w = g.cols();
  auto px = [&](Eigen::Index y, Eigen::Index x) {
    return g(std::clamp<Eigen::Index>(y, 0, h - 1), std::clamp<Eigen::Index>(x, 0, w - 1));
  };
  Eigen::ArrayXXd mag(h, w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      const double gx = (px(y - 1, x + 1) + 2.0 * px(y, x + 1) + px(y + 1, x + 1)) -
                        (px(y - 1, x - 1) + 2.0 * px(y, x - 1) + px(y + 1, x - 1));
      const double gy = (px(y + 1, x - 1) + 2.0 * px(y + 1, x) + px(y + 1, x + 1)) -
                        (px(y - 1, x - 1) + 2.0 * px(y - 1, x) + px(y - 1, x + 1));
      mag(y, x) = std::sqrt(gx * gx + gy * gy);
    }
  }
  const double peak = mag.maxCoeff();
  if (peak > 0.0) mag /= peak;
  return mag;
}

double edge_ssim(const Image& a, const Image& b) {
  check_same_dims(a, b);
  return ssim(edge_map(a), edge_map(b));
}

}  // namespace sot
