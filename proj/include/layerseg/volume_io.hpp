#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "layerseg/image.hpp"
#include "layerseg/phantom.hpp"
#include "layerseg/segmentation.hpp"

namespace layerseg::io {

/// Sidecar metadata: one `key=value` per line; width, height and frames are
/// required. Blank lines and lines starting with '#' are ignored.
struct VolumeMeta {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t frames = 0;

  std::size_t payload_bytes() const { return width * height * frames * sizeof(float); }
};

VolumeMeta read_meta(const std::filesystem::path& path);
void write_meta(const std::filesystem::path& path, const VolumeMeta& meta);

/// Reads a raw little-endian float32 payload (row-major, frame-major).
/// Throws FormatError when the byte count differs from the metadata or a
/// sample is negative or non-finite.
Volume read_volume(const std::filesystem::path& payload, const std::filesystem::path& meta);
void write_volume(const std::filesystem::path& payload, const std::filesystem::path& meta, const Volume& vol);

/// Per-frame boundary curves, `frame,column,boundary,depth_px`.
using FrameBoundaries = std::vector<std::map<BoundaryName, std::vector<double>>>;

void write_boundary_csv(std::ostream& os, const FrameBoundaries& frames);
FrameBoundaries read_boundary_csv(std::istream& is);

FrameBoundaries boundaries_of(std::span<const SegmentationResult> results);

/// 8-bit binary PGM, linearly scaled from the image's min..max (a constant
/// image writes zeros).
void write_pgm(const std::filesystem::path& path, const Image& img);

/// Like write_pgm, with the given curves drawn at full white.
void write_annotated_pgm(const std::filesystem::path& path, const Image& img,
                         const std::map<BoundaryName, std::vector<double>>& curves);

}  // namespace layerseg::io
