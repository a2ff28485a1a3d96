#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "layerseg/segmentation.hpp"

namespace layerseg::cli {

enum ExitCode : int {
  kOk = 0,
  kSegmentationFailure = 1,
  kIoError = 2,
  kUsage = 64,
};

/// Everything a subcommand can be configured with.
struct RunConfig {
  SegmentationConfig segmentation;
  std::size_t batch_size = 1;
  std::set<BoundaryName> layers{BoundaryName::ILM, BoundaryName::RPE};
  std::string output_dir = ".";
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument naming the first out-of-range parameter.
  void validate() const;
};

/// "all" or a comma-separated list of boundary names.
std::optional<std::set<BoundaryName>> parse_layers(std::string_view text);

struct Dims {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t frames = 1;
};

/// "HxW", or "HxWxF" when `with_frames`.
std::optional<Dims> parse_dims(std::string_view text, bool with_frames);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace layerseg::cli
