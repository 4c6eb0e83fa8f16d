#include <doctest.h>

#include <map>

#include "tinyssd/synth.hpp"

using namespace tinyssd;

namespace {

// object intensities live in [0, 0.2] or [0.8, 1]; the textured background
// stays within [0.32, 0.68]
bool object_valued(float v) { return v < 0.3f || v > 0.7f; }

}  // namespace

TEST_CASE("fixed seed reproduces the dataset bit-exactly") {
  const auto a = synth_dataset(42, 10);
  const auto b = synth_dataset(42, 10);
  REQUIRE(a.size() == b.size());
  for (size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].image.data == b[k].image.data);
    REQUIRE(a[k].gts.size() == b[k].gts.size());
    for (size_t j = 0; j < a[k].gts.size(); ++j) {
      CHECK(a[k].gts[j].label == b[k].gts[j].label);
      CHECK(a[k].gts[j].box.xmin == b[k].gts[j].box.xmin);
    }
  }
  // a different seed diverges
  const auto c = synth_dataset(43, 10);
  bool any_diff = false;
  for (size_t k = 0; k < a.size() && !any_diff; ++k)
    any_diff = a[k].image.data != c[k].image.data;
  CHECK(any_diff);
}

TEST_CASE("boxes are valid, labeled and tight around shape pixels") {
  const SynthConfig cfg;
  for (uint64_t index = 0; index < 200; ++index) {
    const ImageSample s = synth_image(7, index, cfg);
    CHECK(s.gts.size() >= 1);
    CHECK(s.gts.size() <= 3);
    const int W = s.image.width, H = s.image.height;
    for (const GroundTruth& gt : s.gts) {
      CHECK(gt.label >= 1);
      CHECK(gt.label <= 3);
      CHECK(gt.box.xmin >= 0.0);
      CHECK(gt.box.ymin >= 0.0);
      CHECK(gt.box.xmax <= 1.0);
      CHECK(gt.box.ymax <= 1.0);
      CHECK(gt.box.width() > 0.0);
      CHECK(gt.box.height() > 0.0);

      // tightness: object-valued pixels on all four edges of the box
      const int x0 = int(std::lround(gt.box.xmin * W));
      const int x1 = int(std::lround(gt.box.xmax * W)) - 1;
      const int y0 = int(std::lround(gt.box.ymin * H));
      const int y1 = int(std::lround(gt.box.ymax * H)) - 1;
      bool left = false, right = false, top = false, bottom = false;
      for (int y = y0; y <= y1; ++y) {
        left = left || object_valued(s.image.at(y, x0, 0));
        right = right || object_valued(s.image.at(y, x1, 0));
      }
      for (int x = x0; x <= x1; ++x) {
        top = top || object_valued(s.image.at(y0, x, 0));
        bottom = bottom || object_valued(s.image.at(y1, x, 0));
      }
      CHECK(left);
      CHECK(right);
      CHECK(top);
      CHECK(bottom);
    }
    // placement keeps pairwise overlap moderate; occluded-pixel boxes can
    // shrink but never overlap heavily
    for (size_t i = 0; i < s.gts.size(); ++i)
      for (size_t j = i + 1; j < s.gts.size(); ++j)
        CHECK(iou(s.gts[i].box, s.gts[j].box) <= 0.5);
  }
}

TEST_CASE("class frequencies are approximately uniform") {
  std::map<int, int> counts;
  int total = 0;
  for (uint64_t index = 0; total < 10000; ++index) {
    const ImageSample s = synth_image(99, index);
    for (const GroundTruth& gt : s.gts) {
      ++counts[gt.label];
      ++total;
    }
  }
  // chi-squared against the uniform draw, 2 degrees of freedom
  const double expected = total / 3.0;
  double chi2 = 0.0;
  for (int label = 1; label <= 3; ++label) {
    const double diff = counts[label] - expected;
    chi2 += diff * diff / expected;
  }
  CHECK(chi2 < 13.8);  // p ~ 0.001
}
