#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "layerseg/image.hpp"
#include "layerseg/segmentation.hpp"

namespace layerseg {

/// Synthetic layered retina. Boundaries are continuous depths in row units
/// (pixel r spans [r - 0.5, r + 0.5)); pixels straddling a boundary mix the
/// two band levels by area.
struct PhantomSpec {
  std::size_t width = 400;
  std::size_t height = 496;
  std::size_t frames = 1;

  // Frame-0 depth of each boundary at the curvature baseline, in
  // kAnatomicalOrder (ILM, NFL/GCL, IPL/INL, INL/OPL, OPL/ONL, RPE).
  std::array<double, 6> depths{};
  double rpe_thickness = 12.0;
  double choroid_thickness = 14.0;

  // Lateral shape shared by all boundaries: amplitude * sin(2 pi x / period).
  double curvature_amplitude = 8.0;
  double curvature_period = 400.0;

  // Linear intensity of each band from the vitreous down to the background
  // below the choroid: vitreous, NFL, GCL+IPL, INL, OPL, ONL, RPE, choroid,
  // deep background.
  std::array<double, 9> levels{5.0, 300.0, 80.0, 30.0, 90.0, 20.0, 400.0, 40.0, 5.0};

  double speckle = 0.0;          // multiplicative noise, uniform in [1 - a, 1 + a]
  double drift_per_frame = 0.0;  // axial shift added per frame, px
  double motion_amplitude = 0.0; // periodic axial motion, px
  double motion_period = 10.0;   // frames per motion cycle

  /// Throws std::invalid_argument when the spec is unusable.
  void validate() const;
};

/// Layout scaled to `height`, resembling a cropped mouse retina B-scan.
PhantomSpec default_phantom_spec(std::size_t height, std::size_t width, std::size_t frames = 1);

using BoundarySet = std::map<BoundaryName, std::vector<double>>;

struct Phantom {
  Volume volume;
  std::vector<BoundarySet> truth;  // per frame, original coordinates
};

/// Axial displacement of frame `f` relative to frame 0.
double phantom_shift(const PhantomSpec& spec, std::size_t frame);

/// Ground-truth depth of every boundary at `frame`.
BoundarySet phantom_truth(const PhantomSpec& spec, std::size_t frame);

Phantom generate_phantom(const PhantomSpec& spec, std::uint64_t seed);

}  // namespace layerseg
