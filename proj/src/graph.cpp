#include "layerseg/graph.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>
#include <utility>

#include "layerseg/errors.hpp"

namespace layerseg {

namespace {

// Gradient assigned to synthetic nodes when weighting their edges to real
// nodes: the maximum, so entering or leaving the image is never penalised
// more than following the strongest edge.
constexpr double kSyntheticGradient = 1.0;

}  // namespace

GradientField vertical_gradient(const Image& img, Polarity polarity) {
  const std::size_t w = img.width();
  const std::size_t h = img.height();
  GradientField field{w, h, std::vector<double>(w * h), polarity};

  for (std::size_t r = 0; r < h; ++r) {
    const auto above = img.row(r == 0 ? 0 : r - 1);
    const auto below = img.row(r + 1 == h ? r : r + 1);
    for (std::size_t c = 0; c < w; ++c) field.values[r * w + c] = 0.5 * (below[c] - above[c]);
  }

  const auto [lo_it, hi_it] = std::minmax_element(field.values.begin(), field.values.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (range > 0.0) {
    for (double& v : field.values) v = (v - lo) / range;
  } else {
    std::fill(field.values.begin(), field.values.end(), 0.5);
  }

  if (polarity == Polarity::LightToDark) {
    for (double& v : field.values) v = 1.0 - v;
  }
  return field;
}

GradientField flip_polarity(const GradientField& field) {
  GradientField out = field;
  for (double& v : out.values) v = 1.0 - v;
  out.polarity = field.polarity == Polarity::DarkToLight ? Polarity::LightToDark : Polarity::DarkToLight;
  return out;
}

WeightGraph::WeightGraph(std::size_t image_width, std::size_t height, std::vector<std::uint32_t> offsets,
                         std::vector<Edge> edges)
    : image_width_(image_width), height_(height), offsets_(std::move(offsets)), edges_(std::move(edges)) {
  if (offsets_.size() != node_count() + 1 || offsets_.back() != edges_.size()) {
    throw std::invalid_argument("inconsistent adjacency offsets");
  }
}

double WeightGraph::weight(NodeId a, NodeId b) const {
  for (const Edge& e : out_edges(a)) {
    if (e.to == b) return e.weight;
  }
  return 0.0;
}

WeightGraph build_weights(const GradientField& grad, WeightForm form) {
  const std::size_t w = grad.width;
  const std::size_t h = grad.height;
  const std::size_t gw = w + 2;
  const double w_min = WeightGraph::kMinWeight;

  const auto g = [&](std::size_t r, std::size_t gc) {
    return (gc == 0 || gc == w + 1) ? kSyntheticGradient : grad.at(r, gc - 1);
  };

  std::vector<std::uint32_t> offsets;
  offsets.reserve(gw * h + 1);
  std::vector<Edge> edges;
  edges.reserve(gw * h * 8);
  offsets.push_back(0);

  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < gw; ++c) {
      const bool a_synth = c == 0 || c == w + 1;
      const double ga = g(r, c);
      for (int dr = -1; dr <= 1; ++dr) {
        const auto nr = static_cast<std::ptrdiff_t>(r) + dr;
        if (nr < 0 || nr >= static_cast<std::ptrdiff_t>(h)) continue;
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const auto nc = static_cast<std::ptrdiff_t>(c) + dc;
          if (nc < 0 || nc >= static_cast<std::ptrdiff_t>(gw)) continue;
          const auto ur = static_cast<std::size_t>(nr);
          const auto uc = static_cast<std::size_t>(nc);
          const bool b_synth = uc == 0 || uc == w + 1;
          double weight;
          if (a_synth && b_synth) {
            weight = w_min;
          } else if (form == WeightForm::Sum) {
            weight = 2.0 - (ga + g(ur, uc)) + w_min;
          } else {
            weight = 2.0 - (ga - g(ur, uc)) + w_min;
          }
          edges.push_back({static_cast<NodeId>(ur * gw + uc), weight});
        }
      }
      offsets.push_back(static_cast<std::uint32_t>(edges.size()));
    }
  }
  return WeightGraph(w, h, std::move(offsets), std::move(edges));
}

RoiMask::RoiMask(std::size_t image_width, std::size_t height, bool initial)
    : image_width_(image_width), height_(height), cells_((image_width + 2) * height, initial ? 1 : 0) {
  for (std::size_t r = 0; r < height_; ++r) {
    cells_[r * grid_width()] = 1;
    cells_[r * grid_width() + image_width_ + 1] = 1;
  }
}

void RoiMask::set(std::size_t row, std::size_t grid_col, bool value) {
  if (grid_col == 0 || grid_col == image_width_ + 1) return;
  cells_[row * grid_width() + grid_col] = value ? 1 : 0;
}

WeightGraph apply_roi(const WeightGraph& graph, const RoiMask& roi) {
  if (roi.image_width() != graph.image_width() || roi.height() != graph.height()) {
    throw std::invalid_argument("ROI mask does not match the graph grid");
  }
  const std::size_t n = graph.node_count();
  std::vector<std::uint32_t> offsets;
  offsets.reserve(n + 1);
  offsets.push_back(0);
  std::vector<Edge> edges;
  for (NodeId v = 0; v < n; ++v) {
    if (roi.node_allowed(v)) {
      for (const Edge& e : graph.out_edges(v)) {
        if (roi.node_allowed(e.to)) edges.push_back(e);
      }
    }
    offsets.push_back(static_cast<std::uint32_t>(edges.size()));
  }
  WeightGraph masked(graph.image_width(), graph.height(), std::move(offsets), std::move(edges));

  std::vector<std::uint8_t> seen(n, 0);
  std::vector<NodeId> stack{masked.start()};
  seen[masked.start()] = 1;
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    for (const Edge& e : masked.out_edges(v)) {
      if (!seen[e.to]) {
        seen[e.to] = 1;
        stack.push_back(e.to);
      }
    }
  }
  if (!seen[masked.end()]) throw SearchRegionDisconnected("");
  return masked;
}

LayerPath shortest_path(const WeightGraph& graph) {
  const std::size_t n = graph.node_count();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr NodeId kNone = std::numeric_limits<NodeId>::max();

  std::vector<double> dist(n, kInf);
  std::vector<NodeId> pred(n, kNone);
  std::vector<std::uint8_t> settled(n, 0);

  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  dist[graph.start()] = 0.0;
  queue.emplace(0.0, graph.start());

  const NodeId target = graph.end();
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (settled[v] || d > dist[v]) continue;  // stale entry
    settled[v] = 1;
    if (v == target) break;
    for (const Edge& e : graph.out_edges(v)) {
      if (settled[e.to]) continue;
      const double alt = d + e.weight;
      if (alt < dist[e.to]) {
        dist[e.to] = alt;
        pred[e.to] = v;
        queue.emplace(alt, e.to);
      } else if (alt == dist[e.to] && v < pred[e.to]) {
        pred[e.to] = v;
      }
    }
  }
  if (!settled[target]) throw SearchRegionDisconnected("");

  LayerPath path;
  path.cost = dist[target];
  path.grid_width = graph.grid_width();
  path.height = graph.height();
  for (NodeId v = target; v != kNone; v = pred[v]) path.nodes.push_back(v);
  std::reverse(path.nodes.begin(), path.nodes.end());
  return path;
}

std::vector<double> extract_boundary(const LayerPath& path, std::size_t width) {
  if (path.grid_width != width + 2) throw std::invalid_argument("path grid does not match width");
  std::vector<double> sum(width, 0.0);
  std::vector<std::size_t> count(width, 0);
  for (NodeId v : path.nodes) {
    const std::size_t c = v % path.grid_width;
    if (c == 0 || c == width + 1) continue;
    sum[c - 1] += static_cast<double>(v / path.grid_width);
    ++count[c - 1];
  }
  std::vector<double> depth(width);
  for (std::size_t c = 0; c < width; ++c) {
    if (count[c] == 0) throw std::logic_error("path skips an image column");
    depth[c] = sum[c] / static_cast<double>(count[c]);
  }
  return depth;
}

}  // namespace layerseg
