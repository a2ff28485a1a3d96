#include "layerseg/pipeline.hpp"

#include <cmath>
#include <cstdlib>
#include <future>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

#include "layerseg/errors.hpp"
#include "layerseg/phantom.hpp"

namespace layerseg {

namespace {

using Clock = std::chrono::steady_clock;
using Millis = std::chrono::duration<double, std::milli>;

struct Prepared {
  PreprocessedScan scan;
  Millis elapsed{};
};

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
};

Stats stats(const std::vector<double>& xs) {
  Stats s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

}  // namespace

std::chrono::nanoseconds frame_budget(std::size_t width, double a_scan_rate_hz) {
  if (!(a_scan_rate_hz > 0.0)) throw std::invalid_argument("A-scan rate must be positive");
  return std::chrono::nanoseconds(std::llround(static_cast<double>(width) * 1e9 / a_scan_rate_hz));
}

BatchPlan BatchPlan::for_width(std::size_t width, std::size_t batch_size, std::set<BoundaryName> layers,
                               double a_scan_rate_hz) {
  BatchPlan plan;
  plan.batch_size = batch_size;
  plan.layers = std::move(layers);
  plan.frame_budget = layerseg::frame_budget(width, a_scan_rate_hz);
  plan.validate();
  return plan;
}

void BatchPlan::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (frame_budget.count() <= 0) throw std::invalid_argument("frame budget must be positive");
  if (layers.empty()) throw std::invalid_argument("no boundaries requested");
}

unsigned threads_from_env(unsigned fallback) {
  const char* env = std::getenv("LAYERSEG_THREADS");
  if (env == nullptr) return fallback;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) return fallback;
  return static_cast<unsigned>(v);
}

BatchRun run_batched(const Volume& vol, const BatchPlan& plan, const PipelineOptions& options) {
  plan.validate();
  vol.validate();
  const std::size_t n_frames = vol.size();
  const std::size_t n_batches = (n_frames + plan.batch_size - 1) / plan.batch_size;
  const auto policy = options.threads >= 2 ? std::launch::async : std::launch::deferred;
  const auto& config = options.config;

  const auto prepare = [&](std::size_t batch) {
    return std::async(policy, [&vol, &config, frame = batch * plan.batch_size] {
      const auto t0 = Clock::now();
      Prepared p{preprocess(vol.frames[frame], config.preprocess), {}};
      p.elapsed = Clock::now() - t0;
      return p;
    });
  };

  BatchRun run;
  run.frames.reserve(n_frames);
  run.reports.reserve(n_batches);

  std::future<Prepared> next = prepare(0);
  for (std::size_t b = 0; b < n_batches; ++b) {
    Prepared prepared = next.get();
    if (b + 1 < n_batches) next = prepare(b + 1);

    const auto t0 = Clock::now();
    const SegmentationResult* previous = run.frames.empty() ? nullptr : &run.frames.back();
    SegmentationResult result;
    ++run.segmentations;
    try {
      result = segment_preprocessed(prepared.scan, plan.layers, config, previous);
      result.stage_times[Stage::Rough] += prepared.elapsed;
    } catch (const SearchRegionDisconnected&) {
      if (previous == nullptr) throw;
      result = *previous;
      result.stage_times.clear();
      for (auto& [name, boundary] : result.boundaries) boundary.carried_over = true;
    }

    BatchReport report;
    report.batch_index = b;
    report.first_frame = b * plan.batch_size;
    report.frame_count = std::min(plan.batch_size, n_frames - report.first_frame);
    report.stage_times = result.stage_times;
    for (const auto& [name, boundary] : result.boundaries) {
      if (boundary.carried_over) report.carried_over.insert(name);
    }
    for (std::size_t i = 0; i < report.frame_count; ++i) run.frames.push_back(result);

    report.wall_time = prepared.elapsed + Millis(Clock::now() - t0);
    report.deadline = plan.batch_deadline();
    report.met_deadline = report.wall_time <= report.deadline;
    run.reports.push_back(std::move(report));
  }
  return run;
}

void BenchmarkTable::write_csv(std::ostream& os) const {
  os << "stage,mean_ms,std_ms,accumulated_mean_ms\n";
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::fixed << std::setprecision(4);
  for (const auto& row : rows) {
    os << to_string(row.stage) << ',' << row.mean_ms << ',' << row.std_ms << ',' << row.accumulated_mean_ms
       << '\n';
  }
  os.flags(flags);
  os.precision(precision);
}

BenchmarkTable benchmark(std::size_t height, std::size_t width, const std::set<BoundaryName>& layers,
                         std::size_t repetitions, const SegmentationConfig& config, std::uint64_t seed,
                         double speckle) {
  if (repetitions < kMinBenchmarkRepetitions) {
    throw std::invalid_argument("benchmark needs at least " + std::to_string(kMinBenchmarkRepetitions) +
                                " repetitions");
  }
  PhantomSpec spec = default_phantom_spec(height, width);
  spec.speckle = speckle;

  std::vector<Stage> stages;
  std::map<Stage, std::vector<double>> per_stage;
  std::map<Stage, std::vector<double>> accumulated;

  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    const Phantom phantom = generate_phantom(spec, seed + rep);
    const SegmentationResult result = segment(phantom.volume.frames.front(), layers, config);
    if (stages.empty()) {
      for (Stage s : kStageOrder) {
        if (result.stage_times.count(s)) stages.push_back(s);
      }
    }
    double running = 0.0;
    for (Stage s : stages) {
      const double ms = result.stage_times.at(s).count();
      running += ms;
      per_stage[s].push_back(ms);
      accumulated[s].push_back(running);
    }
  }

  BenchmarkTable table;
  table.height = height;
  table.width = width;
  table.repetitions = repetitions;
  for (Stage s : stages) {
    const Stats own = stats(per_stage[s]);
    const Stats acc = stats(accumulated[s]);
    table.rows.push_back({s, own.mean, own.stddev, acc.mean, acc.stddev});
  }
  return table;
}

}  // namespace layerseg
