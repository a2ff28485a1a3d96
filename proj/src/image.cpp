#include "layerseg/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace layerseg {

Image::Image(std::size_t width, std::size_t height, double fill)
    : Image(width, height, std::vector<double>(width * height, fill)) {}

Image::Image(std::size_t width, std::size_t height, std::vector<double> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width == 0 || height == 0) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  if (pixels_.size() != width * height) {
    throw std::invalid_argument("pixel count " + std::to_string(pixels_.size()) +
                                " does not match " + std::to_string(width) + "x" +
                                std::to_string(height));
  }
  for (double v : pixels_) {
    if (!std::isfinite(v)) throw std::invalid_argument("image contains a non-finite pixel");
  }
}

double Image::min_value() const { return *std::min_element(pixels_.begin(), pixels_.end()); }

double Image::max_value() const { return *std::max_element(pixels_.begin(), pixels_.end()); }

double Image::mean() const {
  // Accumulating offsets from the minimum keeps a constant image's mean
  // exactly equal to its value.
  const double base = min_value();
  double sum = 0.0;
  for (double v : pixels_) sum += v - base;
  return base + sum / static_cast<double>(size());
}

BScan::BScan(std::size_t width, std::size_t height, std::vector<double> pixels)
    : BScan(Image(width, height, std::move(pixels))) {}

BScan::BScan(Image img) : Image(std::move(img)) {
  if (width() < kMinExtent || height() < kMinExtent) {
    throw std::invalid_argument("B-scan must be at least 3x3");
  }
  for (double v : pixels()) {
    if (v < 0.0) throw std::invalid_argument("B-scan pixels must be non-negative");
  }
}

void Volume::validate() const {
  if (frames.empty()) throw std::invalid_argument("volume has no frames");
  for (const auto& f : frames) {
    if (f.width() != width() || f.height() != height()) {
      throw std::invalid_argument("volume frames differ in size");
    }
  }
}

}  // namespace layerseg
