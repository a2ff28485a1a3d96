#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "layerseg/graph.hpp"
#include "layerseg/image.hpp"
#include "layerseg/preprocess.hpp"

namespace layerseg {

enum class BoundaryName { ILM, RPE, INL_OPL, NFL_GCL, IPL_INL, OPL_ONL };

inline constexpr std::array<BoundaryName, 6> kAllBoundaries = {
    BoundaryName::ILM,     BoundaryName::RPE,     BoundaryName::INL_OPL,
    BoundaryName::NFL_GCL, BoundaryName::IPL_INL, BoundaryName::OPL_ONL};

/// Top-to-bottom anatomical order.
inline constexpr std::array<BoundaryName, 6> kAnatomicalOrder = {
    BoundaryName::ILM,     BoundaryName::NFL_GCL, BoundaryName::IPL_INL,
    BoundaryName::INL_OPL, BoundaryName::OPL_ONL, BoundaryName::RPE};

std::string_view to_string(BoundaryName name);
/// Accepts "ILM", "inl_opl", "INL/OPL", "inl-opl" and similar spellings.
std::optional<BoundaryName> parse_boundary(std::string_view text);

/// Search-region bounds and graph polarity for a boundary segmented
/// inside two previously found curves.
struct InnerRule {
  BoundaryName target;
  BoundaryName upper;
  BoundaryName lower;
  Polarity polarity;
};

/// Inner boundaries in the order they are segmented.
inline constexpr std::array<InnerRule, 4> kInnerRules = {{
    {BoundaryName::INL_OPL, BoundaryName::ILM, BoundaryName::RPE, Polarity::DarkToLight},
    {BoundaryName::NFL_GCL, BoundaryName::ILM, BoundaryName::INL_OPL, Polarity::LightToDark},
    {BoundaryName::IPL_INL, BoundaryName::NFL_GCL, BoundaryName::INL_OPL, Polarity::LightToDark},
    {BoundaryName::OPL_ONL, BoundaryName::INL_OPL, BoundaryName::RPE, Polarity::LightToDark},
}};

const InnerRule* inner_rule(BoundaryName target);

/// `requested` plus every boundary it needs as a search bound.
std::set<BoundaryName> dependency_closure(const std::set<BoundaryName>& requested);

enum class Stage { Rough, ILM, RPE, INL_OPL, NFL_GCL, IPL_INL, OPL_ONL };

inline constexpr std::array<Stage, 7> kStageOrder = {Stage::Rough,   Stage::ILM,     Stage::RPE,
                                                     Stage::INL_OPL, Stage::NFL_GCL, Stage::IPL_INL,
                                                     Stage::OPL_ONL};

std::string_view to_string(Stage stage);
Stage stage_of(BoundaryName name);

struct SegmentationConfig {
  PreprocessConfig preprocess;
  WeightForm weight_form = WeightForm::Sum;
  std::size_t precise_band = 5;   // half-width, resized rows
  std::size_t inner_margin = 2;   // rows excluded inside each bound
  std::size_t smoothing_window = 5;
};

using Curve = std::vector<double>;

struct LayerBoundary {
  BoundaryName name;
  std::vector<double> depths;  // original image rows, one per column
  bool implicit = false;       // segmented only because another boundary needed it
  bool carried_over = false;   // copied from the previous frame after a failed search
};

using StageTimes = std::map<Stage, std::chrono::duration<double, std::milli>>;

struct SegmentationResult {
  std::map<BoundaryName, LayerBoundary> boundaries;
  // Unsmoothed curves on the resized grid, as found by the searches.
  std::map<BoundaryName, Curve> resized;
  StageTimes stage_times;
  CropWindow crop;

  bool has(BoundaryName name) const { return boundaries.count(name) != 0; }
  const LayerBoundary& at(BoundaryName name) const;
  std::chrono::duration<double, std::milli> total_time() const;
};

/// Two unordered curves found on the rough image, in rough-grid rows.
std::pair<Curve, Curve> segment_rough(const PreprocessedScan& pre, const SegmentationConfig& config = {});

struct IlmRpe {
  Curve ilm;
  Curve rpe;
};
IlmRpe assign_ilm_rpe(Curve a, Curve b);

/// Resamples a curve to `width` columns by linear interpolation on column
/// centres and multiplies depths by `depth_scale`.
Curve resample_curve(const Curve& curve, std::size_t width, double depth_scale);

/// Refines a rough ILM or RPE curve on the resized image.
Curve segment_precise(const PreprocessedScan& pre, const Curve& rough_curve, BoundaryName which,
                      const SegmentationConfig& config = {});

/// Finds `target` between its two bound curves on the resized image. `done`
/// holds resized-grid curves of boundaries already found.
Curve segment_inner(const PreprocessedScan& pre, const std::map<BoundaryName, Curve>& done,
                    BoundaryName target, const SegmentationConfig& config = {});

/// Same search on a prebuilt weight graph of the right polarity, for callers
/// that keep the per-polarity graphs between stages.
Curve segment_inner(const WeightGraph& graph, const Curve& upper, const Curve& lower,
                    std::size_t margin);

Curve moving_average(const Curve& curve, std::size_t window);

/// Maps resized-grid curves to original coordinates: width interpolation,
/// smoothing, depth scaling, crop offset and clamping.
SegmentationResult finalize(const std::map<BoundaryName, Curve>& resized, const CropWindow& crop,
                            std::size_t original_width, std::size_t original_height,
                            const SegmentationConfig& config = {});

SegmentationResult segment(const BScan& scan, const std::set<BoundaryName>& layers,
                           const SegmentationConfig& config = {},
                           const SegmentationResult* previous = nullptr);

SegmentationResult segment_preprocessed(const PreprocessedScan& pre, const std::set<BoundaryName>& layers,
                                        const SegmentationConfig& config = {},
                                        const SegmentationResult* previous = nullptr);

}  // namespace layerseg
