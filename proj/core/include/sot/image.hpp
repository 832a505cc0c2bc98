#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sot {

class Image;

/// Pixel buffer without range constraints, used for intermediate results
/// (overlap sums, unclamped reconstructions, solver iterates).
/// Layout: row-major, channel-interleaved.
class Canvas {
 public:
  Canvas() = default;
  Canvas(int width, int height, int channels);
  Canvas(int width, int height, int channels, std::vector<double> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }

  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  double& at(int x, int y, int c) noexcept { return data_[index(x, y, c)]; }
  double at(int x, int y, int c) const noexcept { return data_[index(x, y, c)]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Clamps every value to [0,1]. Throws if any value is non-finite.
  Image clamped() const;

  bool operator==(const Canvas&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// An image with 1 or 3 channels and every value finite in [0,1].
/// Layout: row-major, channel-interleaved.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, std::vector<double> data);

  static Image filled(int width, int height, int channels, double value);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }
  double at(int x, int y, int c) const noexcept { return data_[index(x, y, c)]; }
  std::span<const double> data() const noexcept { return data_; }

  Canvas to_canvas() const;

  /// Per-channel arithmetic mean.
  std::vector<double> channel_means() const;

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

}  // namespace sot
