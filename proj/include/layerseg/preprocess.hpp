#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "layerseg/image.hpp"

namespace layerseg {

struct CropWindow {
  std::size_t begin_row = 0;
  std::size_t end_row = 0;  // exclusive
  bool applied = false;

  std::size_t rows() const { return end_row - begin_row; }
  friend bool operator==(const CropWindow&, const CropWindow&) = default;
};

struct PreprocessConfig {
  bool crop_enabled = true;
  double crop_offset = 0.1;          // fraction of the source height added above and below
  std::size_t crop_min_height = 200;  // frames this tall or shorter are never cropped
  double blur_sigma = 1.0;
  std::size_t blur_radius = 2;
};

/// Output of the preprocessing chain. `resized` is the cropped, log-scaled,
/// half-resolution, blurred image; `rough` halves it once more. A depth `d`
/// on the resized grid maps to `row_offset + resized_scale * d` in the
/// original frame.
struct PreprocessedScan {
  CropWindow crop;
  Image resized;
  Image rough;
  std::size_t source_width = 0;
  std::size_t source_height = 0;
  std::size_t row_offset = 0;
  double resized_scale = 2.0;
  double rough_scale = 4.0;
};

std::vector<double> row_average(const Image& scan);

/// Upper edge of the fullest bin of a ten-bin histogram of `row_avgs`.
double crop_threshold(std::span<const double> row_avgs);

std::pair<CropWindow, Image> crop(const BScan& scan, const PreprocessConfig& config = {});

/// Applies log(1 + v) to every pixel.
Image log_scale(const Image& img);

/// 2x2 block mean; a ragged last row/column averages over the pixels present.
Image downsample2(const Image& img);

Image gaussian_blur(const Image& img, double sigma, std::size_t radius);

PreprocessedScan preprocess(const BScan& scan, const PreprocessConfig& config = {});

}  // namespace layerseg
