#include "sot/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sot/error.hpp"

namespace sot {
namespace {

void check_shape(int width, int height, int channels, std::size_t size) {
  if (width <= 0 || height <= 0) throw_invalid("image dimensions must be positive");
  if (channels != 1 && channels != 3) {
    throw_invalid("image must have 1 or 3 channels, got " + std::to_string(channels));
  }
  if (static_cast<std::size_t>(width) * height * channels != size) {
    throw_invalid("pixel buffer size does not match width*height*channels");
  }
}

}  // namespace

Canvas::Canvas(int width, int height, int channels)
    : Canvas(width, height, channels,
             std::vector<double>(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0) *
                                 std::max(channels, 0))) {}

Canvas::Canvas(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_shape(width, height, channels, data_.size());
}

Image Canvas::clamped() const {
  std::vector<double> out(data_.size());
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error(ErrorCode::numeric_failure, "non-finite pixel value in canvas");
    }
    out[i] = std::clamp(data_[i], 0.0, 1.0);
  }
  return Image(width_, height_, channels_, std::move(out));
}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_shape(width, height, channels, data_.size());
  for (double v : data_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw_invalid("image values must be finite and within [0,1]");
    }
  }
}

Image Image::filled(int width, int height, int channels, double value) {
  const std::size_t n = static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0) *
                        std::max(channels, 0);
  return Image(width, height, channels, std::vector<double>(n, value));
}

Canvas Image::to_canvas() const { return Canvas(width_, height_, channels_, data_); }

std::vector<double> Image::channel_means() const {
  std::vector<double> means(static_cast<std::size_t>(channels_), 0.0);
  for (std::size_t i = 0; i < data_.size(); ++i) means[i % channels_] += data_[i];
  for (double& m : means) m /= static_cast<double>(pixel_count());
  return means;
}

}  // namespace sot
