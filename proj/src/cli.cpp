#include "layerseg/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "layerseg/enface.hpp"
#include "layerseg/errors.hpp"
#include "layerseg/phantom.hpp"
#include "layerseg/pipeline.hpp"
#include "layerseg/volume_io.hpp"

namespace layerseg::cli {

namespace fs = std::filesystem;

namespace {

// Thrown for bad flag values detected after CLI11 has parsed the line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  RunConfig config;
  std::string layers = "ilm,rpe";
  std::string weights = "sum";
  bool no_crop = false;

  // segment / enface
  std::string input;
  std::string meta;
  bool annotate = false;
  std::string top;
  std::string bottom;
  std::string mode = "oct";
  std::string projection = "max";
  std::optional<double> static_top;
  std::optional<double> static_bottom;
  std::string out_file;

  // bench / phantom
  std::string dims;
  std::size_t reps = 50;
  double speckle = 0.3;
  double drift = 0.0;
  double noise = 0.0;
  double motion = 0.0;
  double motion_period = 10.0;
};

void add_config_flags(CLI::App& cmd, Options& o) {
  auto& seg = o.config.segmentation;
  cmd.add_flag("--no-crop", o.no_crop, "Disable retinal-band cropping");
  cmd.add_option("--crop-offset", seg.preprocess.crop_offset, "Crop margin as a fraction of height")->capture_default_str();
  cmd.add_option("--crop-min-height", seg.preprocess.crop_min_height, "Only crop frames taller than this")->capture_default_str();
  cmd.add_option("--sigma", seg.preprocess.blur_sigma, "Gaussian blur sigma")->capture_default_str();
  cmd.add_option("--radius", seg.preprocess.blur_radius, "Gaussian blur radius")->capture_default_str();
  cmd.add_option("--weights", o.weights, "Edge weight form: sum|difference")->capture_default_str();
  cmd.add_option("--band", seg.precise_band, "Precise ILM/RPE search half-width (resized rows)")->capture_default_str();
  cmd.add_option("--margin", seg.inner_margin, "Rows excluded inside each inner-search bound")->capture_default_str();
  cmd.add_option("--smooth", seg.smoothing_window, "Boundary moving-average window")->capture_default_str();
}

void finish_config(Options& o) {
  o.config.segmentation.preprocess.crop_enabled = !o.no_crop;
  if (o.weights == "sum") {
    o.config.segmentation.weight_form = WeightForm::Sum;
  } else if (o.weights == "difference") {
    o.config.segmentation.weight_form = WeightForm::Difference;
  } else {
    throw UsageError("--weights must be sum or difference");
  }
  const auto layers = parse_layers(o.layers);
  if (!layers) throw UsageError("unknown boundary in --layers " + o.layers);
  o.config.layers = *layers;
  try {
    o.config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string meta_path_for(const Options& o) {
  if (!o.meta.empty()) return o.meta;
  return fs::path(o.input).replace_extension(".meta").string();
}

PipelineOptions pipeline_options(const Options& o) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return {o.config.segmentation, std::min(threads_from_env(std::min(hw, 2u)), 2u)};
}

std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

int cmd_segment(const Options& o, std::ostream& out) {
  const Volume vol = io::read_volume(o.input, meta_path_for(o));
  const auto plan = BatchPlan::for_width(vol.width(), o.config.batch_size, o.config.layers, vol.a_scan_rate_hz);
  const BatchRun run = run_batched(vol, plan, pipeline_options(o));

  const fs::path dir = o.config.output_dir;
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "boundaries.csv");
    if (!csv) throw FormatError("cannot write " + (dir / "boundaries.csv").string());
    // Only the requested boundaries are exported; implicit ones stay internal.
    auto frames = io::boundaries_of(run.frames);
    for (auto& f : frames) std::erase_if(f, [&](const auto& kv) { return !o.config.layers.count(kv.first); });
    io::write_boundary_csv(csv, frames);
  }
  {
    std::ofstream report(dir / "batches.csv");
    report << "batch,first_frame,frames,wall_ms,deadline_ms,met,carried_over\n";
    for (const auto& r : run.reports) {
      std::string carried;
      for (BoundaryName b : r.carried_over) carried += (carried.empty() ? "" : ";") + std::string(to_string(b));
      report << r.batch_index << ',' << r.first_frame << ',' << r.frame_count << ',' << r.wall_time.count() << ','
             << std::chrono::duration<double, std::milli>(r.deadline).count() << ','
             << (r.met_deadline ? 1 : 0) << ',' << carried << '\n';
    }
  }
  if (o.annotate) {
    for (const auto& r : run.reports) {
      std::map<BoundaryName, std::vector<double>> curves;
      for (const auto& [name, b] : run.frames[r.first_frame].boundaries) curves[name] = b.depths;
      std::ostringstream name;
      name << "frame_" << std::setw(4) << std::setfill('0') << r.first_frame << ".pgm";
      io::write_annotated_pgm(dir / name.str(), log_scale(vol.frames[r.first_frame]), curves);
    }
  }

  std::size_t met = 0;
  for (const auto& r : run.reports) met += r.met_deadline ? 1 : 0;
  out << "segmented " << run.segmentations << " of " << vol.size() << " frames; " << met << '/'
      << run.reports.size() << " batches within deadline\n";
  return kOk;
}

int cmd_enface(const Options& o, std::ostream& out) {
  if (o.mode != "oct" && o.mode != "octa") throw UsageError("--mode must be oct or octa");
  if (o.projection != "max" && o.projection != "mean") throw UsageError("--projection must be max or mean");
  const Projection proj = o.projection == "max" ? Projection::Max : Projection::Mean;
  const bool is_static = o.static_top.has_value() || o.static_bottom.has_value();
  if (is_static && !(o.static_top && o.static_bottom)) {
    throw UsageError("--static-top and --static-bottom must be given together");
  }

  const Volume vol = io::read_volume(o.input, meta_path_for(o));
  Image projection;
  if (is_static) {
    const Volume source = o.mode == "octa" ? octa_volume(vol) : vol;
    projection = enface_static(source, *o.static_top, *o.static_bottom, proj);
  } else {
    const auto top = parse_boundary(o.top);
    const auto bottom = parse_boundary(o.bottom);
    if (!top || !bottom) throw UsageError("--top and --bottom must name boundaries");
    const auto plan =
        BatchPlan::for_width(vol.width(), o.config.batch_size, {*top, *bottom}, vol.a_scan_rate_hz);
    const BatchRun run = run_batched(vol, plan, pipeline_options(o));
    projection = o.mode == "octa" ? enface_octa(vol, run.frames, *top, *bottom, proj)
                                  : enface_volume(vol, run.frames, *top, *bottom, proj);
  }

  const fs::path path = o.out_file.empty() ? fs::path(o.config.output_dir) / "enface.pgm" : fs::path(o.out_file);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_pgm(path, projection);
  out << "merit=" << format_number(merit(projection)) << '\n';
  return kOk;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
  const auto dims = parse_dims(o.dims, false);
  if (!dims) throw UsageError("--dims must look like 496x400 (height x width)");
  if (o.reps < kMinBenchmarkRepetitions) {
    throw UsageError("--reps must be at least " + std::to_string(kMinBenchmarkRepetitions));
  }
  const BenchmarkTable table =
      benchmark(dims->height, dims->width, o.config.layers, o.reps, o.config.segmentation, o.config.seed, o.speckle);

  std::ostream* summary = &err;
  if (o.out_file.empty()) {
    table.write_csv(out);
  } else {
    std::ofstream csv(o.out_file);
    if (!csv) throw FormatError("cannot write " + o.out_file);
    table.write_csv(csv);
    summary = &out;
  }
  *summary << "accumulated mean " << std::fixed << std::setprecision(2) << table.final_accumulated_mean_ms()
           << " ms per B-scan (" << dims->height << 'x' << dims->width << ", " << o.reps << " reps, "
           << table.rows.size() << " stages)\n";
  return kOk;
}

int cmd_phantom(const Options& o, std::ostream& out) {
  const auto dims = parse_dims(o.dims, true);
  if (!dims) throw UsageError("--dims must look like 496x400x10 (height x width x frames)");
  PhantomSpec spec = default_phantom_spec(dims->height, dims->width, dims->frames);
  spec.drift_per_frame = o.drift;
  spec.speckle = o.noise;
  spec.motion_amplitude = o.motion;
  spec.motion_period = o.motion_period;
  Phantom phantom;
  try {
    phantom = generate_phantom(spec, o.config.seed);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("invalid phantom: ") + e.what());
  }

  const fs::path prefix = o.out_file.empty() ? fs::path(o.config.output_dir) / "phantom" : fs::path(o.out_file);
  if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
  const fs::path raw = prefix.string() + ".raw";
  const fs::path meta = prefix.string() + ".meta";
  const fs::path truth = prefix.string() + "_truth.csv";
  io::write_volume(raw, meta, phantom.volume);
  std::ofstream csv(truth);
  if (!csv) throw FormatError("cannot write " + truth.string());
  io::write_boundary_csv(csv, phantom.truth);
  out << "wrote " << raw.string() << ", " << meta.string() << ", " << truth.string() << '\n';
  return kOk;
}

}  // namespace

void RunConfig::validate() const {
  const auto& seg = segmentation;
  const auto& pre = seg.preprocess;
  if (!(pre.crop_offset >= 0.0 && pre.crop_offset < 1.0)) throw std::invalid_argument("crop offset must be in [0, 1)");
  if (!(pre.blur_sigma > 0.0)) throw std::invalid_argument("blur sigma must be positive");
  if (pre.blur_radius < 1) throw std::invalid_argument("blur radius must be at least 1");
  if (seg.inner_margin < 1) throw std::invalid_argument("inner margin must be at least 1");
  if (seg.smoothing_window < 1) throw std::invalid_argument("smoothing window must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (layers.empty()) throw std::invalid_argument("at least one boundary must be requested");
}

std::optional<std::set<BoundaryName>> parse_layers(std::string_view text) {
  if (text == "all") return std::set<BoundaryName>(kAllBoundaries.begin(), kAllBoundaries.end());
  std::set<BoundaryName> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    const auto name = parse_boundary(item);
    if (!name) return std::nullopt;
    out.insert(*name);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::optional<Dims> parse_dims(std::string_view text, bool with_frames) {
  std::vector<std::size_t> parts;
  std::size_t pos = 0;
  while (true) {
    const auto x = text.find('x', pos);
    const auto item = text.substr(pos, x == std::string_view::npos ? std::string_view::npos : x - pos);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size() || v == 0) return std::nullopt;
    parts.push_back(v);
    if (x == std::string_view::npos) break;
    pos = x + 1;
  }
  if (parts.size() != (with_frames ? 3u : 2u)) return std::nullopt;
  if (parts[0] < BScan::kMinExtent || parts[1] < BScan::kMinExtent) return std::nullopt;
  return Dims{parts[0], parts[1], with_frames ? parts[2] : 1};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph-search retinal layer segmentation for OCT B-scans", "layerseg"};
  app.require_subcommand(1);
  Options o;

  auto* segment = app.add_subcommand("segment", "Segment a raw float32 volume and export boundary CSV");
  segment->add_option("--input", o.input, "Raw float32 payload")->required();
  segment->add_option("--meta", o.meta, "Metadata sidecar (default: input with .meta)");
  segment->add_option("--layers", o.layers, "Boundaries to export: all or a comma list")->capture_default_str();
  segment->add_option("--batch", o.config.batch_size, "Frames per batch")->capture_default_str();
  segment->add_option("--out", o.config.output_dir, "Output directory")->required();
  segment->add_flag("--annotate", o.annotate, "Write each batch's segmented frame as an annotated PGM");
  add_config_flags(*segment, o);

  auto* enface = app.add_subcommand("enface", "Project an en face image between two boundaries");
  enface->add_option("--input", o.input, "Raw float32 payload")->required();
  enface->add_option("--meta", o.meta, "Metadata sidecar (default: input with .meta)");
  enface->add_option("--top", o.top, "Upper boundary name");
  enface->add_option("--bottom", o.bottom, "Lower boundary name");
  enface->add_option("--mode", o.mode, "oct or octa")->capture_default_str();
  enface->add_option("--projection", o.projection, "max or mean")->capture_default_str();
  enface->add_option("--static-top", o.static_top, "Fixed upper row (disables segmentation)");
  enface->add_option("--static-bottom", o.static_bottom, "Fixed lower row (disables segmentation)");
  enface->add_option("--batch", o.config.batch_size, "Frames per batch")->capture_default_str();
  enface->add_option("--out", o.out_file, "Output PGM path (default: enface.pgm)");
  add_config_flags(*enface, o);

  auto* bench = app.add_subcommand("bench", "Time each segmentation stage on synthetic phantoms");
  bench->add_option("--dims", o.dims, "HEIGHTxWIDTH, e.g. 496x400")->required();
  bench->add_option("--layers", o.layers, "all or a comma list")->capture_default_str();
  bench->add_option("--reps", o.reps, "Repetitions (>= 10)")->capture_default_str();
  bench->add_option("--seed", o.config.seed, "Phantom seed")->capture_default_str();
  bench->add_option("--speckle", o.speckle, "Phantom speckle amplitude")->capture_default_str();
  bench->add_option("--out", o.out_file, "CSV path (default: stdout)");
  add_config_flags(*bench, o);

  auto* phantom = app.add_subcommand("phantom", "Write a synthetic layered volume with ground truth");
  o.dims = "";
  phantom->add_option("--dims", o.dims, "HEIGHTxWIDTHxFRAMES, e.g. 496x400x10")->default_str("496x400x1");
  phantom->add_option("--drift", o.drift, "Axial drift per frame, px")->capture_default_str();
  phantom->add_option("--noise", o.noise, "Multiplicative speckle amplitude")->capture_default_str();
  phantom->add_option("--motion", o.motion, "Periodic axial motion amplitude, px")->capture_default_str();
  phantom->add_option("--motion-period", o.motion_period, "Frames per motion cycle")->capture_default_str();
  phantom->add_option("--seed", o.config.seed, "Random seed")->capture_default_str();
  phantom->add_option("--out", o.out_file, "Output prefix (default: ./phantom)");

  std::vector<std::string> argv_store{"layerseg"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (phantom->parsed() && o.dims.empty()) o.dims = "496x400x1";
    if (bench->parsed() && !bench->count("--layers")) o.layers = "all";
    finish_config(o);
    if (segment->parsed()) return cmd_segment(o, out);
    if (enface->parsed()) return cmd_enface(o, out);
    if (bench->parsed()) return cmd_bench(o, out, err);
    return cmd_phantom(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const Error& e) {
    err << "segmentation failed: " << e.what() << '\n';
    return kSegmentationFailure;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace layerseg::cli
