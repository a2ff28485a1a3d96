#include "layerseg/segmentation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "layerseg/errors.hpp"

namespace layerseg {

namespace {

using Clock = std::chrono::steady_clock;
using Millis = std::chrono::duration<double, std::milli>;

double round_half_up(double x) { return std::floor(x + 0.5); }

double curve_mean(const Curve& c) {
  return std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
}

std::string stage_name(Stage s) { return std::string(to_string(s)); }

// Rows [round(centre) - band, round(centre) + band] of every column.
Curve search_band(const WeightGraph& graph, const Curve& centre, std::size_t band) {
  const auto h = static_cast<double>(graph.height());
  RoiMask roi(graph.image_width(), graph.height(), false);
  for (std::size_t c = 0; c < centre.size(); ++c) {
    const double mid = round_half_up(centre[c]);
    const double lo = std::max(0.0, mid - static_cast<double>(band));
    const double hi = std::min(h - 1.0, mid + static_cast<double>(band));
    for (double r = lo; r <= hi; r += 1.0) roi.set_pixel(static_cast<std::size_t>(r), c, true);
  }
  return extract_boundary(shortest_path(apply_roi(graph, roi)), graph.image_width());
}

// Maps a boundary from a previous frame's original coordinates onto this
// frame's resized grid.
std::optional<Curve> carried_curve(const SegmentationResult* previous, BoundaryName name,
                                   const PreprocessedScan& pre) {
  if (previous == nullptr || !previous->has(name)) return std::nullopt;
  const auto& depths = previous->at(name).depths;
  if (depths.size() != pre.source_width) return std::nullopt;
  Curve out = resample_curve(depths, pre.resized.width(), 1.0);
  const double max_row = static_cast<double>(pre.resized.height() - 1);
  for (double& v : out) {
    v = std::clamp((v - static_cast<double>(pre.row_offset)) / pre.resized_scale, 0.0, max_row);
  }
  return out;
}

}  // namespace

std::string_view to_string(BoundaryName name) {
  switch (name) {
    case BoundaryName::ILM: return "ILM";
    case BoundaryName::RPE: return "RPE";
    case BoundaryName::INL_OPL: return "INL_OPL";
    case BoundaryName::NFL_GCL: return "NFL_GCL";
    case BoundaryName::IPL_INL: return "IPL_INL";
    case BoundaryName::OPL_ONL: return "OPL_ONL";
  }
  return "?";
}

std::optional<BoundaryName> parse_boundary(std::string_view text) {
  std::string key;
  for (char ch : text) {
    if (ch == '/' || ch == '-') ch = '_';
    key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  }
  for (BoundaryName b : kAllBoundaries) {
    if (to_string(b) == key) return b;
  }
  return std::nullopt;
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Rough: return "Rough";
    case Stage::ILM: return "ILM";
    case Stage::RPE: return "RPE";
    case Stage::INL_OPL: return "INL/OPL";
    case Stage::NFL_GCL: return "NFL/GCL";
    case Stage::IPL_INL: return "IPL/INL";
    case Stage::OPL_ONL: return "OPL/ONL";
  }
  return "?";
}

Stage stage_of(BoundaryName name) {
  switch (name) {
    case BoundaryName::ILM: return Stage::ILM;
    case BoundaryName::RPE: return Stage::RPE;
    case BoundaryName::INL_OPL: return Stage::INL_OPL;
    case BoundaryName::NFL_GCL: return Stage::NFL_GCL;
    case BoundaryName::IPL_INL: return Stage::IPL_INL;
    case BoundaryName::OPL_ONL: return Stage::OPL_ONL;
  }
  return Stage::Rough;
}

const InnerRule* inner_rule(BoundaryName target) {
  for (const auto& rule : kInnerRules) {
    if (rule.target == target) return &rule;
  }
  return nullptr;
}

std::set<BoundaryName> dependency_closure(const std::set<BoundaryName>& requested) {
  std::set<BoundaryName> out;
  std::vector<BoundaryName> todo(requested.begin(), requested.end());
  while (!todo.empty()) {
    const BoundaryName b = todo.back();
    todo.pop_back();
    if (!out.insert(b).second) continue;
    if (const auto* rule = inner_rule(b)) {
      todo.push_back(rule->upper);
      todo.push_back(rule->lower);
    }
  }
  return out;
}

const LayerBoundary& SegmentationResult::at(BoundaryName name) const {
  const auto it = boundaries.find(name);
  if (it == boundaries.end()) {
    throw MissingBoundary("boundary " + std::string(to_string(name)) + " was not segmented");
  }
  return it->second;
}

std::chrono::duration<double, std::milli> SegmentationResult::total_time() const {
  Millis total{0};
  for (const auto& [stage, t] : stage_times) total += t;
  return total;
}

std::pair<Curve, Curve> segment_rough(const PreprocessedScan& pre, const SegmentationConfig& config) {
  const Image& rough = pre.rough;
  const WeightGraph graph = build_weights(vertical_gradient(rough, Polarity::DarkToLight), config.weight_form);

  const double mean = rough.mean();
  RoiMask roi(rough.width(), rough.height(), false);
  for (std::size_t r = 0; r < rough.height(); ++r) {
    for (std::size_t c = 0; c < rough.width(); ++c) roi.set_pixel(r, c, rough.at(r, c) > mean);
  }

  try {
    const LayerPath first = shortest_path(apply_roi(graph, roi));
    for (NodeId v : first.nodes) roi.set(graph.row_of(v), graph.col_of(v), false);
    const LayerPath second = shortest_path(apply_roi(graph, roi));
    return {extract_boundary(first, rough.width()), extract_boundary(second, rough.width())};
  } catch (const SearchRegionDisconnected&) {
    throw SearchRegionDisconnected(stage_name(Stage::Rough));
  }
}

IlmRpe assign_ilm_rpe(Curve a, Curve b) {
  if (a.size() != b.size()) throw std::invalid_argument("rough curves differ in width");
  if (curve_mean(b) < curve_mean(a)) return {std::move(b), std::move(a)};
  return {std::move(a), std::move(b)};
}

Curve resample_curve(const Curve& curve, std::size_t width, double depth_scale) {
  if (curve.empty()) throw std::invalid_argument("cannot resample an empty curve");
  const std::size_t n = curve.size();
  const double ratio = static_cast<double>(n) / static_cast<double>(width);
  Curve out(width);
  for (std::size_t x = 0; x < width; ++x) {
    const double t = std::clamp((static_cast<double>(x) + 0.5) * ratio - 0.5, 0.0, static_cast<double>(n - 1));
    const auto i0 = static_cast<std::size_t>(t);
    const std::size_t i1 = std::min(i0 + 1, n - 1);
    const double frac = t - static_cast<double>(i0);
    out[x] = depth_scale * (curve[i0] + frac * (curve[i1] - curve[i0]));
  }
  return out;
}

Curve segment_precise(const PreprocessedScan& pre, const Curve& rough_curve, BoundaryName which,
                      const SegmentationConfig& config) {
  if (which != BoundaryName::ILM && which != BoundaryName::RPE) {
    throw PreconditionViolation("precise search is defined for ILM and RPE only");
  }
  if (rough_curve.size() != pre.resized.width()) {
    throw std::invalid_argument("rough curve must be interpolated to the resized width");
  }
  const WeightGraph graph =
      build_weights(vertical_gradient(pre.resized, Polarity::DarkToLight), config.weight_form);
  try {
    return search_band(graph, rough_curve, config.precise_band);
  } catch (const SearchRegionDisconnected&) {
    throw SearchRegionDisconnected(stage_name(stage_of(which)));
  }
}

Curve segment_inner(const WeightGraph& graph, const Curve& upper, const Curve& lower, std::size_t margin) {
  const std::size_t w = graph.image_width();
  if (upper.size() != w || lower.size() != w) throw std::invalid_argument("bound curves differ in width");
  const auto m = static_cast<double>(margin);
  RoiMask roi(w, graph.height(), false);
  for (std::size_t c = 0; c < w; ++c) {
    const double lo = std::max(0.0, std::ceil(upper[c] + m));
    const double hi = std::min(static_cast<double>(graph.height() - 1), std::floor(lower[c] - m));
    for (double r = lo; r <= hi; r += 1.0) roi.set_pixel(static_cast<std::size_t>(r), c, true);
  }
  return extract_boundary(shortest_path(apply_roi(graph, roi)), w);
}

Curve segment_inner(const PreprocessedScan& pre, const std::map<BoundaryName, Curve>& done,
                    BoundaryName target, const SegmentationConfig& config) {
  const InnerRule* rule = inner_rule(target);
  if (rule == nullptr) {
    throw PreconditionViolation(std::string(to_string(target)) + " is not bounded by other boundaries");
  }
  const auto upper = done.find(rule->upper);
  const auto lower = done.find(rule->lower);
  if (upper == done.end() || lower == done.end()) {
    throw PreconditionViolation(std::string(to_string(target)) + " needs " +
                                std::string(to_string(rule->upper)) + " and " +
                                std::string(to_string(rule->lower)) + " first");
  }
  const WeightGraph graph = build_weights(vertical_gradient(pre.resized, rule->polarity), config.weight_form);
  try {
    return segment_inner(graph, upper->second, lower->second, config.inner_margin);
  } catch (const SearchRegionDisconnected&) {
    throw SearchRegionDisconnected(stage_name(stage_of(target)));
  }
}

Curve moving_average(const Curve& curve, std::size_t window) {
  if (window <= 1 || curve.empty()) return curve;
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  const auto n = static_cast<std::ptrdiff_t>(curve.size());
  const auto span = static_cast<double>(2 * half + 1);
  Curve out(curve.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::ptrdiff_t k = i - half; k <= i + half; ++k) sum += curve[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, n - 1))];
    out[static_cast<std::size_t>(i)] = sum / span;
  }
  return out;
}

SegmentationResult finalize(const std::map<BoundaryName, Curve>& resized, const CropWindow& crop,
                            std::size_t original_width, std::size_t original_height,
                            const SegmentationConfig& config) {
  SegmentationResult result;
  result.crop = crop;
  result.resized = resized;
  const double offset = static_cast<double>(crop.begin_row);
  const double max_row = static_cast<double>(original_height - 1);
  for (const auto& [name, curve] : resized) {
    Curve depths = moving_average(resample_curve(curve, original_width, 1.0), config.smoothing_window);
    for (double& d : depths) d = std::clamp(2.0 * d + offset, 0.0, max_row);
    result.boundaries.emplace(name, LayerBoundary{name, std::move(depths)});
  }
  return result;
}

SegmentationResult segment_preprocessed(const PreprocessedScan& pre, const std::set<BoundaryName>& layers,
                                        const SegmentationConfig& config, const SegmentationResult* previous) {
  if (layers.empty()) throw PreconditionViolation("no boundaries requested");
  const auto wanted = dependency_closure(layers);
  const std::size_t zw = pre.resized.width();

  StageTimes times;
  std::map<BoundaryName, Curve> found;
  std::set<BoundaryName> carried;

  // Runs one stage; on a disconnected search falls back to the previous
  // frame's curve when there is one.
  const auto run_stage = [&](Stage stage, BoundaryName name, auto&& search) {
    const auto t0 = Clock::now();
    try {
      found[name] = search();
    } catch (const SearchRegionDisconnected&) {
      auto fallback = carried_curve(previous, name, pre);
      if (!fallback) throw SearchRegionDisconnected(stage_name(stage));
      found[name] = std::move(*fallback);
      carried.insert(name);
    }
    times[stage] += Millis(Clock::now() - t0);
  };

  // Rough pass on the quarter-resolution image.
  IlmRpe rough;
  {
    const auto t0 = Clock::now();
    try {
      auto [a, b] = segment_rough(pre, config);
      rough = assign_ilm_rpe(resample_curve(a, zw, 2.0), resample_curve(b, zw, 2.0));
    } catch (const SearchRegionDisconnected&) {
      auto ilm = carried_curve(previous, BoundaryName::ILM, pre);
      auto rpe = carried_curve(previous, BoundaryName::RPE, pre);
      if (!ilm || !rpe) throw SearchRegionDisconnected(stage_name(Stage::Rough));
      rough = {std::move(*ilm), std::move(*rpe)};
      // The precise searches below are anchored on history, so flag them.
      carried.insert(BoundaryName::ILM);
      carried.insert(BoundaryName::RPE);
    }
    times[Stage::Rough] = Millis(Clock::now() - t0);
  }

  std::optional<WeightGraph> dark_to_light;
  std::optional<WeightGraph> light_to_dark;
  const auto graph_for = [&](Polarity p) -> const WeightGraph& {
    auto& slot = p == Polarity::DarkToLight ? dark_to_light : light_to_dark;
    if (!slot) slot = build_weights(vertical_gradient(pre.resized, p), config.weight_form);
    return *slot;
  };

  if (wanted.count(BoundaryName::ILM)) {
    run_stage(Stage::ILM, BoundaryName::ILM, [&] {
      return search_band(graph_for(Polarity::DarkToLight), rough.ilm, config.precise_band);
    });
  }
  if (wanted.count(BoundaryName::RPE)) {
    run_stage(Stage::RPE, BoundaryName::RPE, [&] {
      return search_band(graph_for(Polarity::DarkToLight), rough.rpe, config.precise_band);
    });
  }
  for (const auto& rule : kInnerRules) {
    if (!wanted.count(rule.target)) continue;
    run_stage(stage_of(rule.target), rule.target, [&] {
      return segment_inner(graph_for(rule.polarity), found.at(rule.upper), found.at(rule.lower),
                           config.inner_margin);
    });
  }

  SegmentationResult result =
      finalize(found, pre.crop, pre.source_width, pre.source_height, config);
  for (auto& [name, boundary] : result.boundaries) {
    boundary.implicit = layers.count(name) == 0;
    boundary.carried_over = carried.count(name) != 0;
  }
  result.stage_times = std::move(times);
  return result;
}

SegmentationResult segment(const BScan& scan, const std::set<BoundaryName>& layers,
                           const SegmentationConfig& config, const SegmentationResult* previous) {
  const auto t0 = Clock::now();
  const PreprocessedScan pre = preprocess(scan, config.preprocess);
  const Millis prep = Clock::now() - t0;
  SegmentationResult result = segment_preprocessed(pre, layers, config, previous);
  result.stage_times[Stage::Rough] += prep;
  return result;
}

}  // namespace layerseg
