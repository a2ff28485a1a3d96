#pragma once

#include <span>
#include <vector>

#include "layerseg/image.hpp"
#include "layerseg/segmentation.hpp"

namespace layerseg {

enum class Projection { Max, Mean };

/// Per-column projection of rows [round(top[c]), round(bottom[c])],
/// inclusive, rounding half up. Throws InvalidBand when a column's band is
/// inverted or leaves the image.
std::vector<double> project_between(const Image& scan, std::span<const double> top,
                                    std::span<const double> bottom, Projection mode = Projection::Max);

inline std::vector<double> mip_between(const Image& scan, std::span<const double> top,
                                       std::span<const double> bottom) {
  return project_between(scan, top, bottom, Projection::Max);
}

/// Row f is the projection of frame f between its own two boundaries.
/// Throws MissingBoundary if any frame lacks either boundary.
Image enface_volume(const Volume& vol, std::span<const SegmentationResult> results, BoundaryName top,
                    BoundaryName bottom, Projection mode = Projection::Max);

/// Projection between two fixed rows in every frame.
Image enface_static(const Volume& vol, double top_row, double bottom_row, Projection mode = Projection::Max);

/// Population variance of two repeated acquisitions, (a - b)^2 / 4.
Image speckle_variance(const Image& a, const Image& b);

/// Variance frame for each consecutive pair (0,1), (2,3), ...; a trailing
/// odd frame is dropped.
Volume octa_volume(const Volume& vol);

/// OCTA en face image. Pair p uses the boundaries segmented on frame 2p.
Image enface_octa(const Volume& vol, std::span<const SegmentationResult> results, BoundaryName top,
                  BoundaryName bottom, Projection mode = Projection::Max);

/// Sum of squared pixel intensities.
double merit(const Image& img);

}  // namespace layerseg
