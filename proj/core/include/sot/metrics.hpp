#pragma once

#include <Eigen/Dense>

#include "sot/image.hpp"

namespace sot {

/// Value reported by psnr for identical images.
constexpr double kPsnrIdentical = 99.0;

/// 10 log10(1 / MSE) over all channels, capped at kPsnrIdentical.
double psnr(const Image& a, const Image& b);

/// Channel mean as a height x width array.
Eigen::ArrayXXd grayscale(const Image& image);

/// Mean SSIM over all positions of an 11x11 Gaussian window (sigma 1.5)
/// that fit inside the image, with c1 = 0.01^2 and c2 = 0.03^2. Color
/// images are compared on their channel means.
double ssim(const Image& a, const Image& b);
double ssim(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b);

/// Sobel gradient magnitude, replicate borders, scaled so the maximum is 1
/// (an all-zero map stays zero).
Eigen::ArrayXXd edge_map(const Image& image);

/// SSIM between the edge maps of two images.
double edge_ssim(const Image& a, const Image& b);

}  // namespace sot
