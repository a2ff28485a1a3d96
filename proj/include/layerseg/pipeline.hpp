#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "layerseg/image.hpp"
#include "layerseg/segmentation.hpp"

namespace layerseg {

inline constexpr double kDefaultAScanRateHz = 100'000.0;

/// Time to acquire one B-scan of `width` A-lines, rounded to the nanosecond.
std::chrono::nanoseconds frame_budget(std::size_t width, double a_scan_rate_hz = kDefaultAScanRateHz);

/// Only the first frame of each batch is segmented; its boundaries are
/// reused for the rest of the batch, and the segmentation must finish
/// within the time the batch takes to acquire.
struct BatchPlan {
  std::size_t batch_size = 6;
  std::set<BoundaryName> layers{BoundaryName::ILM, BoundaryName::RPE};
  std::chrono::nanoseconds frame_budget{};

  std::chrono::nanoseconds batch_deadline() const {
    return frame_budget * static_cast<std::int64_t>(batch_size);
  }

  static BatchPlan for_width(std::size_t width, std::size_t batch_size, std::set<BoundaryName> layers,
                             double a_scan_rate_hz = kDefaultAScanRateHz);

  /// Throws std::invalid_argument unless batch_size >= 1, the budget is
  /// positive and at least one layer is requested.
  void validate() const;
};

struct BatchReport {
  std::size_t batch_index = 0;
  std::size_t first_frame = 0;
  std::size_t frame_count = 0;
  // Preprocessing plus segmentation of the batch's first frame, including any
  // part of the preprocessing that overlapped the previous batch. Covers
  // segmentation only, not acquisition or OCT signal processing.
  std::chrono::duration<double, std::milli> wall_time{};
  std::chrono::nanoseconds deadline{};
  bool met_deadline = false;
  StageTimes stage_times;
  std::set<BoundaryName> carried_over;
};

struct BatchRun {
  std::vector<SegmentationResult> frames;  // one per input frame
  std::vector<BatchReport> reports;
  std::size_t segmentations = 0;
};

struct PipelineOptions {
  SegmentationConfig config;
  // Worker threads; with two or more, the next batch's first frame is
  // preprocessed while the current one is segmented.
  unsigned threads = 1;
};

/// Worker cap from LAYERSEG_THREADS, falling back to `fallback`.
unsigned threads_from_env(unsigned fallback = 1);

BatchRun run_batched(const Volume& vol, const BatchPlan& plan, const PipelineOptions& options = {});

struct StageTiming {
  Stage stage;
  double mean_ms = 0.0;              // this stage alone
  double std_ms = 0.0;
  double accumulated_mean_ms = 0.0;  // all stages up to and including this one
  double accumulated_std_ms = 0.0;
};

struct BenchmarkTable {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t repetitions = 0;
  std::vector<StageTiming> rows;

  double final_accumulated_mean_ms() const { return rows.empty() ? 0.0 : rows.back().accumulated_mean_ms; }
  void write_csv(std::ostream& os) const;
};

inline constexpr std::size_t kMinBenchmarkRepetitions = 10;

/// Segments `repetitions` freshly generated phantoms of the given size and
/// tabulates per-stage timings in processing order.
BenchmarkTable benchmark(std::size_t height, std::size_t width, const std::set<BoundaryName>& layers,
                         std::size_t repetitions, const SegmentationConfig& config = {},
                         std::uint64_t seed = 1, double speckle = 0.3);

}  // namespace layerseg
