#include "layerseg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace layerseg {

namespace {

// Fractions of the frame height for the default layout.
constexpr double kIlmFraction = 0.363;
constexpr std::array<double, 5> kThicknessFractions = {0.028, 0.077, 0.040, 0.028, 0.069};
constexpr double kRpeFraction = 0.024;
constexpr double kChoroidFraction = 0.028;
constexpr double kCurvatureFraction = 0.016;

double curvature(const PhantomSpec& spec, std::size_t col) {
  if (spec.curvature_amplitude == 0.0) return 0.0;
  return spec.curvature_amplitude *
         std::sin(2.0 * std::numbers::pi * static_cast<double>(col) / spec.curvature_period);
}

// The eight edges separating the nine intensity bands in one column.
std::array<double, 8> column_edges(const PhantomSpec& spec, std::size_t col, double shift) {
  const double offset = curvature(spec, col) + shift;
  std::array<double, 8> e{};
  for (std::size_t i = 0; i < 6; ++i) e[i] = spec.depths[i] + offset;
  e[6] = e[5] + spec.rpe_thickness;
  e[7] = e[6] + spec.choroid_thickness;
  return e;
}

}  // namespace

void PhantomSpec::validate() const {
  if (width < BScan::kMinExtent || height < BScan::kMinExtent) {
    throw std::invalid_argument("phantom must be at least 3x3");
  }
  if (frames == 0) throw std::invalid_argument("phantom needs at least one frame");
  for (std::size_t i = 1; i < depths.size(); ++i) {
    if (!(depths[i] > depths[i - 1])) {
      throw std::invalid_argument("phantom boundaries must be strictly increasing in depth");
    }
  }
  if (!(rpe_thickness > 0.0) || !(choroid_thickness > 0.0)) {
    throw std::invalid_argument("phantom band thickness must be positive");
  }
  for (double v : levels) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("phantom levels must be finite and >= 0");
  }
  if (!(speckle >= 0.0 && speckle <= 1.0)) throw std::invalid_argument("speckle amplitude must be in [0, 1]");
  if (curvature_amplitude != 0.0 && !(curvature_period > 0.0)) {
    throw std::invalid_argument("curvature period must be positive");
  }
  if (motion_amplitude != 0.0 && !(motion_period > 0.0)) {
    throw std::invalid_argument("motion period must be positive");
  }
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t f = 0; f < frames; ++f) {
    lo = std::min(lo, phantom_shift(*this, f));
    hi = std::max(hi, phantom_shift(*this, f));
  }
  const double reach = std::abs(curvature_amplitude);
  if (depths.front() - reach + lo < 0.0 || depths.back() + reach + hi >= static_cast<double>(height)) {
    throw std::invalid_argument("phantom boundaries leave the frame");
  }
}

PhantomSpec default_phantom_spec(std::size_t height, std::size_t width, std::size_t frames) {
  PhantomSpec spec;
  spec.width = width;
  spec.height = height;
  spec.frames = frames;
  const auto h = static_cast<double>(height);
  spec.depths[0] = kIlmFraction * h;
  for (std::size_t i = 0; i < kThicknessFractions.size(); ++i) {
    spec.depths[i + 1] = spec.depths[i] + kThicknessFractions[i] * h;
  }
  spec.rpe_thickness = kRpeFraction * h;
  spec.choroid_thickness = kChoroidFraction * h;
  spec.curvature_amplitude = kCurvatureFraction * h;
  spec.curvature_period = static_cast<double>(width);
  return spec;
}

double phantom_shift(const PhantomSpec& spec, std::size_t frame) {
  const auto f = static_cast<double>(frame);
  double s = f * spec.drift_per_frame;
  if (spec.motion_amplitude != 0.0) {
    s += spec.motion_amplitude * std::sin(2.0 * std::numbers::pi * f / spec.motion_period);
  }
  return s;
}

BoundarySet phantom_truth(const PhantomSpec& spec, std::size_t frame) {
  BoundarySet truth;
  const double shift = phantom_shift(spec, frame);
  for (std::size_t i = 0; i < kAnatomicalOrder.size(); ++i) {
    auto& curve = truth[kAnatomicalOrder[i]];
    curve.resize(spec.width);
    for (std::size_t c = 0; c < spec.width; ++c) curve[c] = spec.depths[i] + curvature(spec, c) + shift;
  }
  return truth;
}

Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> speckle(1.0 - spec.speckle, 1.0 + spec.speckle);

  Phantom out;
  out.volume.frames.reserve(spec.frames);
  out.truth.reserve(spec.frames);
  std::vector<double> px(spec.width * spec.height);

  for (std::size_t f = 0; f < spec.frames; ++f) {
    const double shift = phantom_shift(spec, f);
    for (std::size_t c = 0; c < spec.width; ++c) {
      const auto edges = column_edges(spec, c, shift);
      for (std::size_t r = 0; r < spec.height; ++r) {
        const double top = static_cast<double>(r) - 0.5;
        const double bottom = top + 1.0;
        double value = 0.0;
        double upper = -std::numeric_limits<double>::infinity();
        for (std::size_t band = 0; band < spec.levels.size(); ++band) {
          const double lower = band < edges.size() ? edges[band] : std::numeric_limits<double>::infinity();
          const double overlap = std::min(bottom, lower) - std::max(top, upper);
          if (overlap > 0.0) value += overlap * spec.levels[band];
          upper = lower;
        }
        px[r * spec.width + c] = value;
      }
    }
    if (spec.speckle > 0.0) {
      for (double& v : px) v *= speckle(rng);
    }
    out.volume.frames.emplace_back(spec.width, spec.height, px);
    out.truth.push_back(phantom_truth(spec, f));
  }
  return out;
}

}  // namespace layerseg
