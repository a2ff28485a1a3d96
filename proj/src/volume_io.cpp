#include "layerseg/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "layerseg/errors.hpp"

namespace layerseg::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw FormatError("metadata key '" + key + "' is not an integer: " + value);
  return out;
}

float to_little_endian(float v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) | ((bits >> 8) & 0xff00u) | (bits >> 24);
    std::memcpy(&v, &bits, sizeof bits);
    return v;
  }
}

std::string format_depth(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::vector<std::uint8_t> to_gray(const Image& img) {
  const double lo = img.min_value();
  const double hi = img.max_value();
  std::vector<std::uint8_t> out(img.size(), 0);
  if (hi > lo) {
    const auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
      out[i] = static_cast<std::uint8_t>(std::lround(255.0 * (px[i] - lo) / (hi - lo)));
    }
  }
  return out;
}

void write_gray(const std::filesystem::path& path, std::size_t w, std::size_t h,
                const std::vector<std::uint8_t>& gray) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << "P5\n" << w << ' ' << h << "\n255\n";
  os.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
  if (!os) throw FormatError("failed writing " + path.string());
}

}  // namespace

VolumeMeta read_meta(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open metadata file " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    kv[trim(std::string_view(t).substr(0, eq))] = trim(std::string_view(t).substr(eq + 1));
  }
  VolumeMeta meta;
  for (const auto& [key, slot] : {std::pair{"width", &meta.width}, std::pair{"height", &meta.height},
                                  std::pair{"frames", &meta.frames}}) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("metadata is missing '" + std::string(key) + "'");
    *slot = parse_count(key, it->second);
  }
  if (meta.width == 0 || meta.height == 0 || meta.frames == 0) {
    throw FormatError("metadata dimensions must be positive");
  }
  return meta;
}

void write_meta(const std::filesystem::path& path, const VolumeMeta& meta) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  os << "width=" << meta.width << "\nheight=" << meta.height << "\nframes=" << meta.frames << '\n';
}

Volume read_volume(const std::filesystem::path& payload, const std::filesystem::path& meta_path) {
  const VolumeMeta meta = read_meta(meta_path);
  std::error_code ec;
  const auto actual = std::filesystem::file_size(payload, ec);
  if (ec) throw FormatError("cannot read payload " + payload.string() + ": " + ec.message());
  if (actual != meta.payload_bytes()) {
    throw FormatError("payload size mismatch: expected " + std::to_string(meta.payload_bytes()) +
                      " bytes, found " + std::to_string(actual) + " bytes");
  }

  std::ifstream is(payload, std::ios::binary);
  if (!is) throw FormatError("cannot open payload " + payload.string());
  const std::size_t per_frame = meta.width * meta.height;
  std::vector<float> raw(per_frame);
  Volume vol;
  vol.frames.reserve(meta.frames);
  for (std::size_t f = 0; f < meta.frames; ++f) {
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(per_frame * sizeof(float)));
    if (!is) throw FormatError("short read in frame " + std::to_string(f));
    std::vector<double> px(per_frame);
    std::transform(raw.begin(), raw.end(), px.begin(), [](float v) { return static_cast<double>(to_little_endian(v)); });
    try {
      vol.frames.emplace_back(meta.width, meta.height, std::move(px));
    } catch (const std::invalid_argument& e) {
      throw FormatError("frame " + std::to_string(f) + ": " + e.what());
    }
  }
  return vol;
}

void write_volume(const std::filesystem::path& payload, const std::filesystem::path& meta_path, const Volume& vol) {
  vol.validate();
  std::ofstream os(payload, std::ios::binary);
  if (!os) throw FormatError("cannot open " + payload.string() + " for writing");
  std::vector<float> raw;
  for (const auto& frame : vol.frames) {
    raw.resize(frame.size());
    const auto px = frame.pixels();
    std::transform(px.begin(), px.end(), raw.begin(), [](double v) { return to_little_endian(static_cast<float>(v)); });
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
  }
  if (!os) throw FormatError("failed writing " + payload.string());
  write_meta(meta_path, {vol.width(), vol.height(), vol.size()});
}

void write_boundary_csv(std::ostream& os, const FrameBoundaries& frames) {
  os << "frame,column,boundary,depth_px\n";
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (BoundaryName name : kAnatomicalOrder) {
      const auto it = frames[f].find(name);
      if (it == frames[f].end()) continue;
      const auto label = to_string(name);
      for (std::size_t c = 0; c < it->second.size(); ++c) {
        os << f << ',' << c << ',' << label << ',' << format_depth(it->second[c]) << '\n';
      }
    }
  }
}

FrameBoundaries read_boundary_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || trim(line) != "frame,column,boundary,depth_px") {
    throw FormatError("boundary CSV header missing");
  }
  FrameBoundaries out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(t);
    for (std::string field; std::getline(ss, field, ',');) fields.push_back(field);
    const auto bad = [&] { return FormatError("boundary CSV line " + std::to_string(lineno) + " malformed"); };
    if (fields.size() != 4) throw bad();
    const std::size_t frame = parse_count("frame", fields[0]);
    const std::size_t column = parse_count("column", fields[1]);
    const auto name = parse_boundary(fields[2]);
    double depth = 0.0;
    const auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), depth);
    if (!name || ec != std::errc{} || ptr != fields[3].data() + fields[3].size()) throw bad();
    if (out.size() <= frame) out.resize(frame + 1);
    auto& curve = out[frame][*name];
    if (curve.size() <= column) curve.resize(column + 1, std::nan(""));
    curve[column] = depth;
  }
  return out;
}

FrameBoundaries boundaries_of(std::span<const SegmentationResult> results) {
  FrameBoundaries out;
  out.reserve(results.size());
  for (const auto& r : results) {
    auto& m = out.emplace_back();
    for (const auto& [name, b] : r.boundaries) m[name] = b.depths;
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Image& img) {
  write_gray(path, img.width(), img.height(), to_gray(img));
}

void write_annotated_pgm(const std::filesystem::path& path, const Image& img,
                         const std::map<BoundaryName, std::vector<double>>& curves) {
  auto gray = to_gray(img);
  const auto h = static_cast<long>(img.height());
  for (const auto& [name, depths] : curves) {
    for (std::size_t c = 0; c < std::min(depths.size(), img.width()); ++c) {
      const long r = std::lround(depths[c]);
      if (r >= 0 && r < h) gray[static_cast<std::size_t>(r) * img.width() + c] = 255;
    }
  }
  write_gray(path, img.width(), img.height(), gray);
}

}  // namespace layerseg::io
