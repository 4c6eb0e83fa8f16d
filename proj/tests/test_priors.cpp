#include <doctest.h>

#include <cmath>

#include "tinyssd/priors.hpp"

using namespace tinyssd;

TEST_CASE("layer_scales evenly spaced") {
  const auto six = layer_scales(6, 0.2, 0.9);
  const double expected[6] = {0.2, 0.34, 0.48, 0.62, 0.76, 0.9};
  REQUIRE(six.size() == 6);
  for (int k = 0; k < 6; ++k)
    CHECK(six[k] == doctest::Approx(expected[k]).epsilon(1e-12));

  const auto two = layer_scales(2, 0.2, 0.9);
  CHECK(two[0] == 0.2);
  CHECK(two[1] == doctest::Approx(0.9).epsilon(1e-12));

  const auto five = layer_scales(5, 0.2, 0.9);
  const double expected5[5] = {0.2, 0.375, 0.55, 0.725, 0.9};
  for (int k = 0; k < 5; ++k)
    CHECK(five[k] == doctest::Approx(expected5[k]).epsilon(1e-12));

  CHECK_THROWS_AS(layer_scales(1, 0.2, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(layer_scales(4, 0.9, 0.2), std::invalid_argument);
}

TEST_CASE("layer_priors single cell") {
  LayerSpec spec{1, 0.9, 1.0, {1.0}, true};
  const auto boxes = layer_priors(spec);
  REQUIRE(boxes.size() == 2);
  CHECK(boxes[0].cx == doctest::Approx(0.5));
  CHECK(boxes[0].cy == doctest::Approx(0.5));
  CHECK(boxes[0].w == doctest::Approx(0.9));
  CHECK(boxes[0].h == doctest::Approx(0.9));
  CHECK(boxes[1].w == doctest::Approx(std::sqrt(0.9)));
  CHECK(boxes[1].h == doctest::Approx(std::sqrt(0.9)));
}

TEST_CASE("layer_priors aspect ratios and counts") {
  LayerSpec spec{2, 0.2, 0.3, {1.0, 2.0, 0.5}, true};
  const auto boxes = layer_priors(spec);
  REQUIRE(boxes.size() == 16);  // 4 cells x 4 boxes

  // within-cell order: ratio 1, extra, 2, 1/2
  CHECK(boxes[0].w == doctest::Approx(0.2));
  CHECK(boxes[1].w == doctest::Approx(std::sqrt(0.2 * 0.3)));
  CHECK(boxes[2].w == doctest::Approx(0.2 * std::sqrt(2.0)));
  CHECK(boxes[2].h == doctest::Approx(0.2 / std::sqrt(2.0)));
  CHECK(boxes[3].w == doctest::Approx(boxes[2].h));
  CHECK(boxes[3].h == doctest::Approx(boxes[2].w));

  // all boxes of a cell share its center; centers strictly inside the image
  for (size_t n = 0; n < boxes.size(); ++n) {
    CHECK(boxes[n].cx == boxes[n - n % 4].cx);
    CHECK(boxes[n].cy == boxes[n - n % 4].cy);
    CHECK(boxes[n].cx > 0.0);
    CHECK(boxes[n].cx < 1.0);
  }

  // cells are row-major: first cell (0,0) centered at (0.25, 0.25), second
  // cell is column 1 of row 0
  CHECK(boxes[0].cx == doctest::Approx(0.25));
  CHECK(boxes[0].cy == doctest::Approx(0.25));
  CHECK(boxes[4].cx == doctest::Approx(0.75));
  CHECK(boxes[4].cy == doctest::Approx(0.25));
}

TEST_CASE("canonical box-count goldens") {
  const PriorSet ssd300 = build_priors(ssd300_layers());
  CHECK(ssd300.size() == 8732);
  const PriorSet ssd512 = build_priors(ssd512_layers());
  CHECK(ssd512.size() == 24564);

  std::vector<LayerSpec> single{{1, 0.5, 1.0, {1.0, 2.0, 0.5}, true}};
  CHECK(build_priors(single).size() == 4);

  CHECK_THROWS_AS(build_priors(std::span<const LayerSpec>{}),
                  std::invalid_argument);
}

TEST_CASE("per-layer split of the 300-input configuration") {
  const auto layers = ssd300_layers();
  const size_t expected[6] = {5776, 2166, 600, 150, 36, 4};
  for (size_t k = 0; k < layers.size(); ++k)
    CHECK(layer_priors(layers[k]).size() == expected[k]);
  // first-layer scale is pinned below the spacing rule
  CHECK(layers[0].scale == doctest::Approx(0.1));
  CHECK(layers[1].scale == doctest::Approx(0.2));
  CHECK(layers.back().next_scale == doctest::Approx(1.0));
}

TEST_CASE("prior generation is deterministic") {
  const PriorSet a = build_priors(ssd300_layers());
  const PriorSet b = build_priors(ssd300_layers());
  REQUIRE(a.size() == b.size());
  for (size_t n = 0; n < a.size(); ++n) {
    CHECK(a.boxes[n].cx == b.boxes[n].cx);
    CHECK(a.boxes[n].cy == b.boxes[n].cy);
    CHECK(a.boxes[n].w == b.boxes[n].w);
    CHECK(a.boxes[n].h == b.boxes[n].h);
  }
}

TEST_CASE("boundary filter") {
  std::vector<LayerSpec> layers{{4, 0.3, 0.5, {1.0, 2.0, 0.5}, true}};
  const PriorSet set = build_priors(layers);
  const BoundaryFilter filtered = boundary_filter(set);
  CHECK(filtered.priors.size() < set.size());
  CHECK(filtered.priors.size() == filtered.original_index.size());
  for (size_t k = 0; k < filtered.priors.size(); ++k) {
    const BoxCenter& b = filtered.priors.boxes[k];
    CHECK(b.cx - b.w / 2 >= 0.0);
    CHECK(b.cy - b.h / 2 >= 0.0);
    CHECK(b.cx + b.w / 2 <= 1.0);
    CHECK(b.cy + b.h / 2 <= 1.0);
    const size_t src = filtered.original_index[k];
    CHECK(set.boxes[src].cx == b.cx);
  }
  // corner cell with a wide box sticks out and must be dropped
  const BoxCenter corner = set.boxes[0];  // cell (0,0), ratio 1, scale 0.3
  CHECK(corner.cx - corner.w / 2 < 0.0);
  for (size_t src : filtered.original_index) CHECK(src != 0);

  const PriorSet ssd300 = build_priors(ssd300_layers());
  const BoundaryFilter f300 = boundary_filter(ssd300);
  CHECK(f300.priors.size() < 8732);
  CHECK(f300.priors.size() > 0);
}
