#include "layerseg/enface.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "layerseg/errors.hpp"

namespace layerseg {

namespace {

long round_half_up(double x) { return static_cast<long>(std::floor(x + 0.5)); }

const std::vector<double>& boundary_of(const SegmentationResult& r, BoundaryName name, std::size_t frame) {
  if (!r.has(name)) {
    throw MissingBoundary("frame " + std::to_string(frame) + " has no " + std::string(to_string(name)));
  }
  return r.at(name).depths;
}

}  // namespace

std::vector<double> project_between(const Image& scan, std::span<const double> top,
                                    std::span<const double> bottom, Projection mode) {
  const std::size_t w = scan.width();
  if (top.size() != w || bottom.size() != w) {
    throw DimensionMismatch("band curves must have one value per column");
  }
  const auto h = static_cast<long>(scan.height());
  std::vector<double> out(w);
  for (std::size_t c = 0; c < w; ++c) {
    const long r0 = round_half_up(top[c]);
    const long r1 = round_half_up(bottom[c]);
    if (r0 > r1) throw InvalidBand("band inverted at column " + std::to_string(c));
    if (r0 < 0 || r1 >= h) throw InvalidBand("band leaves the image at column " + std::to_string(c));
    double acc = mode == Projection::Max ? scan.at(static_cast<std::size_t>(r0), c) : 0.0;
    for (long r = r0; r <= r1; ++r) {
      const double v = scan.at(static_cast<std::size_t>(r), c);
      acc = mode == Projection::Max ? std::max(acc, v) : acc + v;
    }
    out[c] = mode == Projection::Max ? acc : acc / static_cast<double>(r1 - r0 + 1);
  }
  return out;
}

Image enface_volume(const Volume& vol, std::span<const SegmentationResult> results, BoundaryName top,
                    BoundaryName bottom, Projection mode) {
  vol.validate();
  if (results.size() != vol.size()) {
    throw DimensionMismatch("need one segmentation result per frame");
  }
  Image out(vol.width(), vol.size());
  for (std::size_t f = 0; f < vol.size(); ++f) {
    const auto row = project_between(vol.frames[f], boundary_of(results[f], top, f),
                                     boundary_of(results[f], bottom, f), mode);
    std::copy(row.begin(), row.end(), out.row(f).begin());
  }
  return out;
}

Image enface_static(const Volume& vol, double top_row, double bottom_row, Projection mode) {
  vol.validate();
  const std::vector<double> top(vol.width(), top_row);
  const std::vector<double> bottom(vol.width(), bottom_row);
  Image out(vol.width(), vol.size());
  for (std::size_t f = 0; f < vol.size(); ++f) {
    const auto row = project_between(vol.frames[f], top, bottom, mode);
    std::copy(row.begin(), row.end(), out.row(f).begin());
  }
  return out;
}

Image speckle_variance(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionMismatch("speckle variance needs frames of equal size");
  }
  Image out(a.width(), a.height());
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  auto po = out.pixels();
  for (std::size_t i = 0; i < po.size(); ++i) {
    const double d = pa[i] - pb[i];
    po[i] = 0.25 * d * d;
  }
  return out;
}

Volume octa_volume(const Volume& vol) {
  vol.validate();
  if (vol.size() < 2) throw DimensionMismatch("OCTA needs at least one frame pair");
  Volume out;
  out.a_scan_rate_hz = vol.a_scan_rate_hz;
  for (std::size_t f = 0; f + 1 < vol.size(); f += 2) {
    out.frames.emplace_back(speckle_variance(vol.frames[f], vol.frames[f + 1]));
  }
  return out;
}

Image enface_octa(const Volume& vol, std::span<const SegmentationResult> results, BoundaryName top,
                  BoundaryName bottom, Projection mode) {
  if (results.size() != vol.size()) {
    throw DimensionMismatch("need one segmentation result per frame");
  }
  const Volume variance = octa_volume(vol);
  std::vector<SegmentationResult> pair_results;
  pair_results.reserve(variance.size());
  for (std::size_t p = 0; p < variance.size(); ++p) pair_results.push_back(results[2 * p]);
  return enface_volume(variance, pair_results, top, bottom, mode);
}

double merit(const Image& img) {
  double sum = 0.0;
  for (double v : img.pixels()) sum += v * v;
  return sum;
}

}  // namespace layerseg
