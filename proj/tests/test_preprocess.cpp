#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "layerseg/preprocess.hpp"
#include "test_util.hpp"

using namespace layerseg;

namespace {

BScan band_scan(std::size_t w, std::size_t h, std::size_t first, std::size_t last, double level) {
  Image img(w, h, 1.0);
  for (std::size_t r = first; r <= last; ++r) {
    for (std::size_t c = 0; c < w; ++c) img.at(r, c) = level;
  }
  return BScan(img);
}

// Direct 2-D convolution with a (2r+1)^2 kernel and replicate borders.
Image naive_blur(const Image& img, double sigma, int radius) {
  Image out(img.width(), img.height());
  const auto H = static_cast<int>(img.height());
  const auto W = static_cast<int>(img.width());
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      double num = 0.0;
      double den = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          const double k = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
          const int y = std::clamp(r + dy, 0, H - 1);
          const int x = std::clamp(c + dx, 0, W - 1);
          num += k * img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
          den += k;
        }
      }
      out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = num / den;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("row_average of a 2x2 scan") {
  const Image scan(2, 2, std::vector<double>{1, 3, 5, 7});
  CHECK(row_average(scan) == std::vector<double>{2, 6});
}

TEST_CASE("row_average of a constant image is that constant") {
  const BScan scan(Image(7, 5, 4.25));
  for (double v : row_average(scan)) CHECK(v == 4.25);
}

TEST_CASE("row_average matches a naive double loop") {
  const auto scan = testutil::random_scan(16, 16, 11);
  const auto got = row_average(scan);
  for (std::size_t r = 0; r < 16; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 16; ++c) sum += scan.at(r, c);
    CHECK(got[r] == sum / 16.0);
  }
}

TEST_CASE("row_average is linear") {
  const auto x = testutil::random_image(9, 6, 1);
  const auto y = testutil::random_image(9, 6, 2);
  const double a = 2.5;
  const double b = 0.75;
  Image z(9, 6);
  for (std::size_t i = 0; i < z.size(); ++i) z.pixels()[i] = a * x.pixels()[i] + b * y.pixels()[i];
  const auto rx = row_average(x);
  const auto ry = row_average(y);
  const auto rz = row_average(z);
  for (std::size_t r = 0; r < rz.size(); ++r) CHECK(rz[r] == doctest::Approx(a * rx[r] + b * ry[r]).epsilon(1e-12));
}

TEST_CASE("crop_threshold is the upper edge of the modal bin") {
  const std::vector<double> skewed{0, 0, 0, 10, 10, 50};
  CHECK(crop_threshold(skewed) == doctest::Approx(5.1).epsilon(1e-12));

  const std::vector<double> flat(8, 3.0);
  CHECK(crop_threshold(flat) == doctest::Approx(3.1).epsilon(1e-12));

  // Every bin holds ten values; the tie goes to the lowest bin.
  std::vector<double> uniform;
  for (int v = 1; v <= 100; ++v) uniform.push_back(v);
  CHECK(crop_threshold(uniform) == doctest::Approx(11.0).epsilon(1e-12));
}

TEST_CASE("crop adds a tenth of the height around the bright band") {
  const auto scan = band_scan(400, 496, 180, 310, 200.0);
  const auto [win, img] = crop(scan);
  CHECK(win.applied);
  CHECK(win.begin_row == 130);  // floor(180 - 49.6)
  CHECK(win.end_row == 361);    // ceil(310 + 49.6) + 1, exclusive
  CHECK(img.height() == win.rows());
  CHECK(img.width() == 400);
  CHECK(img.at(0, 0) == scan.at(130, 0));
  CHECK(img.at(img.height() - 1, 3) == scan.at(360, 3));
}

TEST_CASE("crop window is clamped to the image") {
  const auto scan = band_scan(10, 300, 10, 60, 50.0);
  const auto [win, img] = crop(scan);
  CHECK(win.applied);
  CHECK(win.begin_row == 0);   // 10 - 30 clamps to the first row
  CHECK(win.end_row == 91);    // ceil(60 + 30) + 1
}

TEST_CASE("short scans are never cropped") {
  const auto scan = band_scan(50, 150, 40, 60, 500.0);
  const auto [win, img] = crop(scan);
  CHECK_FALSE(win.applied);
  CHECK(win.begin_row == 0);
  CHECK(win.end_row == 150);
  CHECK(img == static_cast<const Image&>(scan));
}

TEST_CASE("constant scans fall back to the full window") {
  const BScan scan(Image(300, 300, 7.0));
  const auto [win, img] = crop(scan);
  CHECK_FALSE(win.applied);
  CHECK(win.rows() == 300);
}

TEST_CASE("crop disabled by configuration") {
  PreprocessConfig cfg;
  cfg.crop_enabled = false;
  const auto [win, img] = crop(band_scan(40, 496, 200, 250, 90.0), cfg);
  CHECK_FALSE(win.applied);
  CHECK(img.height() == 496);
}

TEST_CASE("crop window contains every row above the threshold") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto scan = testutil::random_scan(12, 240, seed);
    const auto avgs = row_average(scan);
    const double t = crop_threshold(avgs);
    const auto [win, img] = crop(scan);
    for (std::size_t r = 0; r < avgs.size(); ++r) {
      if (avgs[r] > t) {
        CHECK(r >= win.begin_row);
        CHECK(r < win.end_row);
      }
    }
  }
}

TEST_CASE("log_scale is log(1 + v)") {
  const Image img(2, 1, std::vector<double>{0.0, std::exp(2.0) - 1.0});
  const auto out = log_scale(img);
  CHECK(out.at(0, 0) == 0.0);
  CHECK(out.at(0, 1) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("downsample2 averages 2x2 blocks, ragged edges over present pixels") {
  const Image img(3, 3, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto out = downsample2(img);
  REQUIRE(out.width() == 2);
  REQUIRE(out.height() == 2);
  CHECK(out.at(0, 0) == 3.0);         // (1+2+4+5)/4
  CHECK(out.at(0, 1) == 4.5);         // (3+6)/2
  CHECK(out.at(1, 0) == 7.5);         // (7+8)/2
  CHECK(out.at(1, 1) == 9.0);
}

TEST_CASE("downsample2 preserves the mean of even-sized images") {
  const auto img = testutil::random_image(32, 18, 5);
  CHECK(downsample2(img).mean() == doctest::Approx(img.mean()).epsilon(1e-6));
}

TEST_CASE("gaussian_blur preserves constants exactly and stays within range") {
  const Image flat(9, 7, 3.7);
  CHECK(gaussian_blur(flat, 1.0, 2) == flat);

  const auto img = testutil::random_image(20, 15, 9, -5.0, 5.0);
  const auto out = gaussian_blur(img, 1.0, 2);
  for (double v : out.pixels()) {
    CHECK(v >= img.min_value());
    CHECK(v <= img.max_value());
  }
}

TEST_CASE("gaussian_blur matches direct 2-D convolution") {
  const auto img = testutil::random_image(11, 13, 21);
  const auto got = gaussian_blur(img, 1.0, 2);
  const auto want = naive_blur(img, 1.0, 2);
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.pixels()[i] == doctest::Approx(want.pixels()[i]).epsilon(1e-12));
}

TEST_CASE("preprocess of a constant scan is log(1 + c) everywhere") {
  const double c = 42.0;
  const auto pre = preprocess(BScan(Image(64, 48, c)));
  CHECK_FALSE(pre.crop.applied);
  CHECK(pre.resized.width() == 32);
  CHECK(pre.resized.height() == 24);
  CHECK(pre.rough.width() == 16);
  CHECK(pre.rough.height() == 12);
  for (double v : pre.resized.pixels()) CHECK(v == std::log1p(c));
  for (double v : pre.rough.pixels()) CHECK(v == std::log1p(c));
}

TEST_CASE("preprocess of an 8x8 band matches a straight-line reference") {
  Image raw(8, 8, 0.0);
  for (std::size_t r = 2; r < 6; ++r) {
    for (std::size_t c = 0; c < 8; ++c) raw.at(r, c) = 100.0;
  }
  const auto pre = preprocess(BScan(raw));
  REQUIRE(pre.resized.width() == 4);
  REQUIRE(pre.resized.height() == 4);

  // Reference: log, then explicit 2x2 means, then direct convolution.
  Image small(4, 4);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      double s = 0.0;
      for (std::size_t y = 0; y < 2; ++y) {
        for (std::size_t x = 0; x < 2; ++x) s += std::log1p(raw.at(2 * r + y, 2 * c + x));
      }
      small.at(r, c) = s / 4.0;
    }
  }
  const auto want = naive_blur(small, 1.0, 2);
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(pre.resized.pixels()[i] == doctest::Approx(want.pixels()[i]).epsilon(1e-12));
  }
  // The band occupies resized rows 1-2, so the blurred profile peaks there symmetrically.
  CHECK(pre.resized.at(1, 0) == doctest::Approx(pre.resized.at(2, 0)).epsilon(1e-12));
  CHECK(pre.resized.at(1, 0) > pre.resized.at(0, 0));
}

TEST_CASE("preprocess is deterministic and records geometry") {
  const auto scan = band_scan(400, 496, 180, 310, 200.0);
  const auto a = preprocess(scan);
  const auto b = preprocess(scan);
  CHECK(a.resized == b.resized);
  CHECK(a.rough == b.rough);
  CHECK(a.row_offset == 130);
  CHECK(a.source_height == 496);
  CHECK(a.source_width == 400);
  CHECK(a.resized.height() == (231 + 1) / 2);
}
