#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "layerseg/errors.hpp"
#include "layerseg/phantom.hpp"
#include "layerseg/segmentation.hpp"
#include "test_util.hpp"

using namespace layerseg;

namespace {

const std::set<BoundaryName> kSix(kAllBoundaries.begin(), kAllBoundaries.end());

Phantom six_band(double speckle = 0.0, std::uint64_t seed = 1) {
  PhantomSpec spec = default_phantom_spec(496, 400);
  spec.speckle = speckle;
  return generate_phantom(spec, seed);
}

// Truth curve mapped onto the resized grid of `pre`.
Curve truth_on_resized(const std::vector<double>& truth, const PreprocessedScan& pre) {
  Curve out = resample_curve(truth, pre.resized.width(), 1.0);
  for (double& v : out) v = (v - static_cast<double>(pre.row_offset)) / pre.resized_scale;
  return out;
}

double max_abs_diff(const Curve& a, const Curve& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

PreprocessedScan with_rough(Image rough) {
  PreprocessedScan pre;
  pre.rough = std::move(rough);
  return pre;
}

Image two_band_rough(std::size_t w, std::size_t h, std::size_t a, std::size_t b) {
  Image img(w, h, 1.0);
  for (std::size_t c = 0; c < w; ++c) {
    img.at(a, c) = 50.0;
    img.at(b, c) = 80.0;
  }
  return img;
}

}  // namespace

TEST_CASE("boundary names round-trip through their spellings") {
  for (BoundaryName b : kAllBoundaries) CHECK(parse_boundary(to_string(b)) == b);
  CHECK(parse_boundary("inl_opl") == BoundaryName::INL_OPL);
  CHECK(parse_boundary("INL/OPL") == BoundaryName::INL_OPL);
  CHECK(parse_boundary("nfl-gcl") == BoundaryName::NFL_GCL);
  CHECK(parse_boundary("ilm") == BoundaryName::ILM);
  CHECK_FALSE(parse_boundary("choroid").has_value());
  CHECK(to_string(Stage::OPL_ONL) == "OPL/ONL");
}

TEST_CASE("inner rules follow the anatomical bounds and polarities") {
  const auto* inl = inner_rule(BoundaryName::INL_OPL);
  REQUIRE(inl != nullptr);
  CHECK(inl->upper == BoundaryName::ILM);
  CHECK(inl->lower == BoundaryName::RPE);
  CHECK(inl->polarity == Polarity::DarkToLight);
  CHECK(inner_rule(BoundaryName::NFL_GCL)->polarity == Polarity::LightToDark);
  CHECK(inner_rule(BoundaryName::IPL_INL)->upper == BoundaryName::NFL_GCL);
  CHECK(inner_rule(BoundaryName::OPL_ONL)->upper == BoundaryName::INL_OPL);
  CHECK(inner_rule(BoundaryName::ILM) == nullptr);
}

TEST_CASE("dependency closure pulls in search bounds") {
  using B = BoundaryName;
  CHECK(dependency_closure({B::OPL_ONL}) == std::set<B>{B::ILM, B::RPE, B::INL_OPL, B::OPL_ONL});
  CHECK(dependency_closure({B::IPL_INL}) == std::set<B>{B::ILM, B::RPE, B::INL_OPL, B::NFL_GCL, B::IPL_INL});
  CHECK(dependency_closure({B::ILM}) == std::set<B>{B::ILM});
  CHECK(dependency_closure(kSix) == kSix);
}

TEST_CASE("assign_ilm_rpe orders curves by mean depth") {
  const Curve shallow(4, 10.0);
  const Curve deep(4, 50.0);
  auto r = assign_ilm_rpe(shallow, deep);
  CHECK(r.ilm == shallow);
  CHECK(r.rpe == deep);
  r = assign_ilm_rpe(deep, shallow);
  CHECK(r.ilm == shallow);
  CHECK(r.rpe == deep);
  const Curve a{1, 3};
  const Curve b{2, 2};
  r = assign_ilm_rpe(a, b);
  CHECK(r.ilm == a);  // equal means: the first curve is the ILM
}

TEST_CASE("resample_curve interpolates on column centres") {
  const Curve c{0.0, 4.0};
  CHECK(resample_curve(c, 2, 1.0) == c);
  CHECK(resample_curve(c, 4, 2.0) == Curve{0.0, 2.0, 6.0, 8.0});
  CHECK(resample_curve(Curve(3, 5.0), 7, 2.0) == Curve(7, 10.0));
}

TEST_CASE("rough search finds both bright bands") {
  const auto pre = with_rough(two_band_rough(25, 32, 5, 20));
  const auto [a, b] = segment_rough(pre);
  const auto r = assign_ilm_rpe(a, b);
  CHECK(r.ilm == Curve(25, 5.0));
  CHECK(r.rpe == Curve(25, 20.0));
}

TEST_CASE("rough search on a vertically flipped image swaps the roles") {
  const auto pre = with_rough(two_band_rough(25, 32, 26, 11));
  const auto [a, b] = segment_rough(pre);
  const auto r = assign_ilm_rpe(a, b);
  CHECK(r.ilm == Curve(25, 11.0));
  CHECK(r.rpe == Curve(25, 26.0));
}

TEST_CASE("rough search with a single one-row band cannot find a second curve") {
  Image img(20, 30, 1.0);
  for (std::size_t c = 0; c < 20; ++c) img.at(12, c) = 90.0;
  CHECK_THROWS_AS(segment_rough(with_rough(img)), SearchRegionDisconnected);
}

TEST_CASE("precise search on the true ILM and RPE") {
  const auto ph = six_band();
  const auto pre = preprocess(ph.volume.frames[0]);
  for (BoundaryName which : {BoundaryName::ILM, BoundaryName::RPE}) {
    const Curve truth = truth_on_resized(ph.truth[0].at(which), pre);
    const Curve got = segment_precise(pre, truth, which);
    CHECK(testutil::mean_abs_error(got, truth) <= 1.0);

    // A 3-row displacement stays inside the band and is recovered.
    Curve shifted = truth;
    for (double& v : shifted) v += 3.0;
    CHECK(max_abs_diff(segment_precise(pre, shifted, which), got) <= 0.5);
  }
}

TEST_CASE("a zero-width precise band returns the rounded rough curve") {
  const auto ph = six_band();
  const auto pre = preprocess(ph.volume.frames[0]);
  SegmentationConfig cfg;
  cfg.precise_band = 0;
  const Curve rough = truth_on_resized(ph.truth[0].at(BoundaryName::ILM), pre);
  const Curve got = segment_precise(pre, rough, BoundaryName::ILM, cfg);
  for (std::size_t c = 0; c < got.size(); ++c) CHECK(got[c] == std::floor(rough[c] + 0.5));
}

TEST_CASE("precise search rejects inner boundaries and mis-sized curves") {
  const auto pre = preprocess(six_band().volume.frames[0]);
  CHECK_THROWS_AS(segment_precise(pre, Curve(pre.resized.width(), 10.0), BoundaryName::INL_OPL),
                  PreconditionViolation);
  CHECK_THROWS_AS(segment_precise(pre, Curve(3, 10.0), BoundaryName::ILM), std::invalid_argument);
}

TEST_CASE("inner searches find each band edge from the true bounds") {
  const auto ph = six_band();
  const auto pre = preprocess(ph.volume.frames[0]);
  std::map<BoundaryName, Curve> done;
  for (BoundaryName b : {BoundaryName::ILM, BoundaryName::RPE}) done[b] = truth_on_resized(ph.truth[0].at(b), pre);
  for (const auto& rule : kInnerRules) {
    const Curve got = segment_inner(pre, done, rule.target);
    const Curve truth = truth_on_resized(ph.truth[0].at(rule.target), pre);
    CAPTURE(to_string(rule.target));
    // One resized row is two original rows.
    CHECK(testutil::mean_abs_error(got, truth) * pre.resized_scale <= 2.0);
    done[rule.target] = got;
  }
}

TEST_CASE("inner search between touching bounds is disconnected") {
  const auto pre = preprocess(six_band().volume.frames[0]);
  const Curve same(pre.resized.width(), 60.0);
  const std::map<BoundaryName, Curve> done{{BoundaryName::ILM, same}, {BoundaryName::RPE, same}};
  CHECK_THROWS_AS(segment_inner(pre, done, BoundaryName::INL_OPL), SearchRegionDisconnected);
}

TEST_CASE("inner search requires its bounds") {
  const auto pre = preprocess(six_band().volume.frames[0]);
  const std::map<BoundaryName, Curve> done{{BoundaryName::ILM, Curve(pre.resized.width(), 20.0)},
                                           {BoundaryName::RPE, Curve(pre.resized.width(), 90.0)}};
  CHECK_THROWS_AS(segment_inner(pre, done, BoundaryName::IPL_INL), PreconditionViolation);
  CHECK_THROWS_AS(segment_inner(pre, done, BoundaryName::ILM), PreconditionViolation);
}

TEST_CASE("moving average matches a direct convolution with replicated ends") {
  Curve saw;
  for (int i = 0; i < 23; ++i) saw.push_back(static_cast<double>(i % 4));
  const Curve got = moving_average(saw, 5);
  for (int i = 0; i < 23; ++i) {
    double s = 0.0;
    for (int k = -2; k <= 2; ++k) s += saw[static_cast<std::size_t>(std::clamp(i + k, 0, 22))];
    CHECK(got[static_cast<std::size_t>(i)] == doctest::Approx(s / 5.0).epsilon(1e-12));
  }
  CHECK(moving_average(saw, 1) == saw);
}

TEST_CASE("finalize scales, offsets, smooths and clamps") {
  const std::map<BoundaryName, Curve> flat{{BoundaryName::ILM, Curve(100, 10.0)}};
  const auto r = finalize(flat, CropWindow{40, 300, true}, 200, 496);
  CHECK(r.at(BoundaryName::ILM).depths == std::vector<double>(200, 60.0));
  CHECK(r.crop.begin_row == 40);

  const auto uncropped = finalize(flat, CropWindow{0, 496, false}, 200, 496);
  CHECK(uncropped.at(BoundaryName::ILM).depths == std::vector<double>(200, 20.0));

  const std::map<BoundaryName, Curve> deep{{BoundaryName::RPE, Curve(10, 400.0)}};
  CHECK(finalize(deep, CropWindow{0, 496, false}, 10, 496).at(BoundaryName::RPE).depths ==
        std::vector<double>(10, 495.0));

  Curve saw;
  for (int i = 0; i < 30; ++i) saw.push_back(static_cast<double>((i * 7) % 5));
  const auto smoothed = finalize({{BoundaryName::ILM, saw}}, CropWindow{12, 200, true}, 30, 496);
  const Curve oracle = moving_average(saw, 5);
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(smoothed.at(BoundaryName::ILM).depths[i] == doctest::Approx(2.0 * oracle[i] + 12.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(smoothed.at(BoundaryName::RPE), MissingBoundary);
}

TEST_CASE("segment returns exactly the requested scope plus implicit bounds") {
  const auto ph = six_band();
  const auto& scan = ph.volume.frames[0];

  const auto two = segment(scan, {BoundaryName::ILM, BoundaryName::RPE});
  CHECK(two.boundaries.size() == 2);
  CHECK(two.stage_times.size() == 3);
  CHECK_FALSE(two.stage_times.count(Stage::INL_OPL));

  const auto deep = segment(scan, {BoundaryName::OPL_ONL});
  CHECK(deep.boundaries.size() == 4);
  CHECK(deep.at(BoundaryName::INL_OPL).implicit);
  CHECK(deep.at(BoundaryName::ILM).implicit);
  CHECK_FALSE(deep.at(BoundaryName::OPL_ONL).implicit);

  const auto all = segment(scan, kSix);
  CHECK(all.boundaries.size() == 6);
  CHECK(all.stage_times.size() == 7);
  for (const auto& [name, b] : all.boundaries) {
    CHECK_FALSE(b.implicit);
    CHECK_FALSE(b.carried_over);
    CHECK(b.depths.size() == scan.width());
  }
}

TEST_CASE("segment is deterministic") {
  const auto scan = six_band(0.3, 4).volume.frames[0];
  const auto a = segment(scan, kSix);
  const auto b = segment(scan, kSix);
  for (BoundaryName n : kAllBoundaries) CHECK(a.at(n).depths == b.at(n).depths);
  CHECK(a.resized == b.resized);
}

TEST_CASE("segment is accurate on clean and speckled phantoms") {
  for (double speckle : {0.0, 0.5}) {
    const auto ph = six_band(speckle, 7);
    const auto r = segment(ph.volume.frames[0], kSix);
    for (BoundaryName n : kAllBoundaries) {
      CAPTURE(to_string(n));
      CAPTURE(speckle);
      CHECK(testutil::mean_abs_error(r.at(n).depths, ph.truth[0].at(n)) <= (speckle == 0.0 ? 1.0 : 2.0));
    }
  }
}

TEST_CASE("inner boundaries lie strictly inside their bounds and the output is ordered") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = segment(six_band(0.4, seed).volume.frames[0], kSix);
    for (const auto& rule : kInnerRules) {
      const auto& t = r.resized.at(rule.target);
      const auto& up = r.resized.at(rule.upper);
      const auto& lo = r.resized.at(rule.lower);
      for (std::size_t c = 0; c < t.size(); ++c) {
        CHECK(t[c] > up[c]);
        CHECK(t[c] < lo[c]);
      }
    }
    for (std::size_t i = 1; i < kAnatomicalOrder.size(); ++i) {
      const auto& above = r.at(kAnatomicalOrder[i - 1]).depths;
      const auto& below = r.at(kAnatomicalOrder[i]).depths;
      for (std::size_t c = 0; c < above.size(); ++c) CHECK(above[c] <= below[c] + 0.5);
    }
  }
}

TEST_CASE("a failed stage carries the previous frame's curve") {
  const auto scan = six_band().volume.frames[0];
  const auto previous = segment(scan, kSix);

  SegmentationConfig starved;
  starved.inner_margin = 1000;  // leaves no rows to search between bounds
  CHECK_THROWS_AS(segment(scan, kSix, starved), SearchRegionDisconnected);

  const auto r = segment(scan, kSix, starved, &previous);
  CHECK_FALSE(r.at(BoundaryName::ILM).carried_over);
  for (const auto& rule : kInnerRules) {
    CAPTURE(to_string(rule.target));
    CHECK(r.at(rule.target).carried_over);
    CHECK(testutil::mean_abs_error(r.at(rule.target).depths, previous.at(rule.target).depths) <= 1.0);
  }
}

TEST_CASE("a dark frame fails without history and recovers with it") {
  const auto ph = six_band();
  const auto previous = segment(ph.volume.frames[0], {BoundaryName::ILM, BoundaryName::RPE});
  const BScan dark(Image(400, 496, 2.0));
  CHECK_THROWS_AS(segment(dark, {BoundaryName::ILM, BoundaryName::RPE}), SearchRegionDisconnected);
  const auto r = segment(dark, {BoundaryName::ILM, BoundaryName::RPE}, {}, &previous);
  CHECK(r.has(BoundaryName::ILM));
  CHECK(r.has(BoundaryName::RPE));
}
