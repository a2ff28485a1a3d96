#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "layerseg/image.hpp"

namespace layerseg {

enum class Polarity { DarkToLight, LightToDark };

enum class WeightForm {
  Sum,         // 2 - (g_a + g_b) + w_min
  Difference,  // 2 - (g_a - g_b) + w_min, directed
};

/// Vertical gradient normalised to [0, 1]. For DarkToLight the value is high
/// where intensity increases with depth; LightToDark is its complement.
struct GradientField {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;
  Polarity polarity = Polarity::DarkToLight;

  double at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
};

GradientField vertical_gradient(const Image& img, Polarity polarity);

/// Pointwise 1 - g with the polarity flipped.
GradientField flip_polarity(const GradientField& field);

using NodeId = std::uint32_t;

struct Edge {
  NodeId to;
  double weight;
};

/// Directed 8-neighbour graph over a height x (width + 2) node grid. Grid
/// column 0 and width + 1 are the synthetic endpoint columns; node ids are
/// row-major over the grid. Start is the top-left node, end the bottom-right.
class WeightGraph {
 public:
  static constexpr double kMinWeight = 1e-5;

  WeightGraph() = default;
  WeightGraph(std::size_t image_width, std::size_t height, std::vector<std::uint32_t> offsets,
              std::vector<Edge> edges);

  std::size_t image_width() const { return image_width_; }
  std::size_t grid_width() const { return image_width_ + 2; }
  std::size_t height() const { return height_; }
  std::size_t node_count() const { return grid_width() * height_; }
  std::size_t edge_count() const { return edges_.size(); }

  NodeId node(std::size_t row, std::size_t grid_col) const {
    return static_cast<NodeId>(row * grid_width() + grid_col);
  }
  std::size_t row_of(NodeId n) const { return n / grid_width(); }
  std::size_t col_of(NodeId n) const { return n % grid_width(); }
  bool is_synthetic(NodeId n) const {
    const auto c = col_of(n);
    return c == 0 || c == image_width_ + 1;
  }

  NodeId start() const { return 0; }
  NodeId end() const { return static_cast<NodeId>(node_count() - 1); }

  std::span<const Edge> out_edges(NodeId n) const {
    return {edges_.data() + offsets_[n], edges_.data() + offsets_[n + 1]};
  }

  // Weight of the edge a -> b, or 0 when the nodes are unconnected.
  double weight(NodeId a, NodeId b) const;

 private:
  std::size_t image_width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint32_t> offsets_;
  std::vector<Edge> edges_;
};

WeightGraph build_weights(const GradientField& grad, WeightForm form = WeightForm::Sum);

/// Per-node search permission over the graph grid. Synthetic columns are
/// always permitted.
class RoiMask {
 public:
  RoiMask(std::size_t image_width, std::size_t height, bool initial);

  std::size_t image_width() const { return image_width_; }
  std::size_t grid_width() const { return image_width_ + 2; }
  std::size_t height() const { return height_; }

  bool at(std::size_t row, std::size_t grid_col) const { return cells_[row * grid_width() + grid_col] != 0; }
  // Writes to synthetic columns are ignored.
  void set(std::size_t row, std::size_t grid_col, bool value);
  // Image-column addressing (column 0 is the first real column).
  void set_pixel(std::size_t row, std::size_t image_col, bool value) { set(row, image_col + 1, value); }
  bool node_allowed(NodeId n) const { return cells_[n] != 0; }

 private:
  std::size_t image_width_;
  std::size_t height_;
  std::vector<std::uint8_t> cells_;
};

/// Copy of `graph` without any edge touching a masked-out node. Throws
/// SearchRegionDisconnected when the end node becomes unreachable.
WeightGraph apply_roi(const WeightGraph& graph, const RoiMask& roi);

struct LayerPath {
  std::vector<NodeId> nodes;
  double cost = 0.0;
  std::size_t grid_width = 0;
  std::size_t height = 0;
};

/// Minimum-cost start-to-end path. Among equally cheap predecessors the one
/// with the smaller node id (smaller row, then column) wins.
LayerPath shortest_path(const WeightGraph& graph);

/// Mean row of the path nodes in each real image column.
std::vector<double> extract_boundary(const LayerPath& path, std::size_t width);

}  // namespace layerseg
