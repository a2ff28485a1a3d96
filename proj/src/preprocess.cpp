#include "layerseg/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace layerseg {

namespace {

constexpr std::size_t kHistogramBins = 10;

std::vector<double> gaussian_kernel(double sigma, std::size_t radius) {
  if (!(sigma > 0.0)) throw std::invalid_argument("blur sigma must be positive");
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double x = static_cast<double>(i) - static_cast<double>(radius);
    k[i] = std::exp(-0.5 * x * x / (sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (static_cast<std::size_t>(i) >= n) return n - 1;
  return static_cast<std::size_t>(i);
}

}  // namespace

std::vector<double> row_average(const Image& scan) {
  std::vector<double> out(scan.height());
  const double n = static_cast<double>(scan.width());
  for (std::size_t r = 0; r < scan.height(); ++r) {
    double sum = 0.0;
    for (double v : scan.row(r)) sum += v;
    out[r] = sum / n;
  }
  return out;
}

double crop_threshold(std::span<const double> row_avgs) {
  if (row_avgs.empty()) throw std::invalid_argument("crop_threshold needs at least one row");
  const auto [lo_it, hi_it] = std::minmax_element(row_avgs.begin(), row_avgs.end());
  const double lo = *lo_it;
  const double bin_size = (*hi_it - lo + 1.0) / static_cast<double>(kHistogramBins);

  std::array<std::size_t, kHistogramBins> counts{};
  for (double v : row_avgs) {
    auto bin = static_cast<std::size_t>(std::floor((v - lo) / bin_size));
    ++counts[std::min(bin, kHistogramBins - 1)];
  }
  // max_element returns the first maximum, so ties go to the lowest bin.
  const auto modal = static_cast<std::size_t>(
      std::distance(counts.begin(), std::max_element(counts.begin(), counts.end())));
  return lo + static_cast<double>(modal + 1) * bin_size;
}

std::pair<CropWindow, Image> crop(const BScan& scan, const PreprocessConfig& config) {
  const std::size_t h = scan.height();
  const CropWindow full{0, h, false};
  if (!config.crop_enabled || h <= config.crop_min_height) return {full, scan};

  const auto avgs = row_average(scan);
  const double threshold = crop_threshold(avgs);
  const auto above = [threshold](double v) { return v > threshold; };
  const auto first = std::find_if(avgs.begin(), avgs.end(), above);
  if (first == avgs.end()) return {full, scan};
  const auto last = std::find_if(avgs.rbegin(), avgs.rend(), above);

  const double i = static_cast<double>(std::distance(avgs.begin(), first));
  const double j = static_cast<double>(std::distance(last, avgs.rend()) - 1);
  const double margin = config.crop_offset * static_cast<double>(h);

  CropWindow win;
  win.begin_row = static_cast<std::size_t>(std::max(0.0, std::floor(i - margin)));
  win.end_row = static_cast<std::size_t>(
      std::min(static_cast<double>(h), std::ceil(j + margin) + 1.0));
  win.applied = true;

  std::vector<double> px(scan.pixels().begin() + static_cast<std::ptrdiff_t>(win.begin_row * scan.width()),
                         scan.pixels().begin() + static_cast<std::ptrdiff_t>(win.end_row * scan.width()));
  return {win, Image(scan.width(), win.rows(), std::move(px))};
}

Image log_scale(const Image& img) {
  Image out = img;
  for (double& v : out.pixels()) v = std::log1p(v);
  return out;
}

Image downsample2(const Image& img) {
  const std::size_t w = (img.width() + 1) / 2;
  const std::size_t h = (img.height() + 1) / 2;
  Image out(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t r1 = std::min(2 * r + 1, img.height() - 1);
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t c1 = std::min(2 * c + 1, img.width() - 1);
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t y = 2 * r; y <= r1; ++y) {
        for (std::size_t x = 2 * c; x <= c1; ++x) {
          sum += img.at(y, x);
          ++n;
        }
      }
      out.at(r, c) = sum / static_cast<double>(n);
    }
  }
  return out;
}

Image gaussian_blur(const Image& img, double sigma, std::size_t radius) {
  const auto kernel = gaussian_kernel(sigma, radius);
  const auto rad = static_cast<std::ptrdiff_t>(radius);
  const std::size_t w = img.width();
  const std::size_t h = img.height();

  // Each tap contributes k * (v - centre) so a constant neighbourhood is
  // reproduced exactly regardless of kernel rounding.
  Image tmp(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    const auto src = img.row(r);
    auto dst = tmp.row(r);
    for (std::size_t c = 0; c < w; ++c) {
      const double centre = src[c];
      double acc = 0.0;
      for (std::ptrdiff_t k = -rad; k <= rad; ++k) {
        acc += kernel[static_cast<std::size_t>(k + rad)] *
               (src[clamp_index(static_cast<std::ptrdiff_t>(c) + k, w)] - centre);
      }
      dst[c] = centre + acc;
    }
  }

  const double lo = img.min_value();
  const double hi = img.max_value();
  Image out(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    auto dst = out.row(r);
    const auto centre_row = tmp.row(r);
    for (std::ptrdiff_t k = -rad; k <= rad; ++k) {
      const double wk = kernel[static_cast<std::size_t>(k + rad)];
      const auto src = tmp.row(clamp_index(static_cast<std::ptrdiff_t>(r) + k, h));
      for (std::size_t c = 0; c < w; ++c) dst[c] += wk * (src[c] - centre_row[c]);
    }
    for (std::size_t c = 0; c < w; ++c) dst[c] = std::clamp(centre_row[c] + dst[c], lo, hi);
  }
  return out;
}

PreprocessedScan preprocess(const BScan& scan, const PreprocessConfig& config) {
  auto [window, cropped] = crop(scan, config);
  PreprocessedScan out;
  out.crop = window;
  out.resized = gaussian_blur(downsample2(log_scale(cropped)), config.blur_sigma, config.blur_radius);
  out.rough = downsample2(out.resized);
  out.source_width = scan.width();
  out.source_height = scan.height();
  out.row_offset = window.begin_row;
  return out;
}

}  // namespace layerseg
