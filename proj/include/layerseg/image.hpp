#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace layerseg {

/// Row-major grid of finite real values. Rows index depth, columns index
/// lateral position (A-lines).
class Image {
 public:
  Image() = default;
  Image(std::size_t width, std::size_t height, double fill = 0.0);
  Image(std::size_t width, std::size_t height, std::vector<double> pixels);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  double at(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  double& at(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }

  std::span<const double> row(std::size_t r) const {
    return {pixels_.data() + r * width_, width_};
  }
  std::span<double> row(std::size_t r) { return {pixels_.data() + r * width_, width_}; }

  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  double min_value() const;
  double max_value() const;
  double mean() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> pixels_;
};

/// A single acquired cross-sectional frame: linear amplitude, finite and
/// non-negative, at least 3x3.
class BScan : public Image {
 public:
  BScan() = default;
  BScan(std::size_t width, std::size_t height, std::vector<double> pixels);
  explicit BScan(Image img);

  static constexpr std::size_t kMinExtent = 3;
};

/// Consecutive B-scans of identical dimensions acquired at `a_scan_rate_hz`.
struct Volume {
  std::vector<BScan> frames;
  double a_scan_rate_hz = 100'000.0;

  std::size_t width() const { return frames.empty() ? 0 : frames.front().width(); }
  std::size_t height() const { return frames.empty() ? 0 : frames.front().height(); }
  std::size_t size() const { return frames.size(); }

  // Seconds to acquire one B-scan.
  double frame_period() const { return static_cast<double>(width()) / a_scan_rate_hz; }

  /// Throws std::invalid_argument on an empty volume or mixed frame sizes.
  void validate() const;
};

}  // namespace layerseg
