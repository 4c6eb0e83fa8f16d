#include <doctest.h>

#include <cmath>

#include "tinyssd/box.hpp"
#include "tinyssd/rng.hpp"

using namespace tinyssd;

TEST_CASE("iou basics") {
  CHECK(iou({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0));
  CHECK(iou({0, 0, 0.5, 0.5}, {0.5, 0.5, 1, 1}) == 0.0);
  CHECK(iou({0, 0, 1, 1}, {0.5, 0, 1.5, 1}) == doctest::Approx(1.0 / 3.0));
  // degenerate boxes
  CHECK(iou({0.5, 0.5, 0.5, 0.5}, {0.5, 0.5, 0.5, 0.5}) == 0.0);
}

TEST_CASE("iou symmetry and bounds over random pairs") {
  Rng rng(7);
  for (int k = 0; k < 1000; ++k) {
    auto random_box = [&]() {
      const double x0 = rng.uniform(0.0, 0.8), y0 = rng.uniform(0.0, 0.8);
      return BoxCorner{x0, y0, x0 + rng.uniform(0.01, 0.2),
                       y0 + rng.uniform(0.01, 0.2)};
    };
    const BoxCorner a = random_box(), b = random_box();
    const double ab = iou(a, b);
    CHECK(ab == iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= doctest::Approx(std::min(a.area(), b.area()) /
                                std::max(a.area(), b.area())));
    CHECK(iou(a, a) == doctest::Approx(1.0));
  }
}

TEST_CASE("corner/center conversion") {
  const BoxCenter c = corner_to_center({0, 0, 1, 1});
  CHECK(c.cx == 0.5);
  CHECK(c.cy == 0.5);
  CHECK(c.w == 1.0);
  CHECK(c.h == 1.0);

  const BoxCenter mid = corner_to_center({0.25, 0.25, 0.75, 0.75});
  CHECK(mid.cx == doctest::Approx(0.5));
  CHECK(mid.w == doctest::Approx(0.5));

  const BoxCorner original{0.1, 0.2, 0.3, 0.6};
  const BoxCorner back = center_to_corner(corner_to_center(original));
  CHECK(back.xmin == doctest::Approx(original.xmin).epsilon(1e-12));
  CHECK(back.ymax == doctest::Approx(original.ymax).epsilon(1e-12));

  CHECK_THROWS_AS(center_to_corner({0.5, 0.5, 0.0, 0.1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(center_to_corner({0.5, 0.5, 0.1, -0.2}),
                  std::invalid_argument);
}

TEST_CASE("encode matches hand-evaluated offsets") {
  SUBCASE("identity") {
    const BoxCenter d{0.4, 0.4, 0.2, 0.3};
    const OffsetVector t = encode(d, d);
    CHECK(t.tcx == 0.0);
    CHECK(t.tcy == 0.0);
    CHECK(t.tw == 0.0);
    CHECK(t.th == 0.0);
  }
  SUBCASE("shifted and doubled width") {
    const OffsetVector t =
        encode({0.55, 0.5, 0.4, 0.2}, {0.5, 0.5, 0.2, 0.2});
    CHECK(t.tcx == doctest::Approx(0.25));
    CHECK(t.tcy == doctest::Approx(0.0));
    CHECK(t.tw == doctest::Approx(std::log(2.0)));
    CHECK(t.th == doctest::Approx(0.0));
  }
  SUBCASE("negative offsets and halved height") {
    const OffsetVector t =
        encode({0.45, 0.6, 0.1, 0.2}, {0.5, 0.5, 0.1, 0.4});
    CHECK(t.tcx == doctest::Approx(-0.5));
    CHECK(t.tcy == doctest::Approx(0.25));
    CHECK(t.tw == doctest::Approx(0.0));
    CHECK(t.th == doctest::Approx(std::log(0.5)));
  }
  CHECK_THROWS_AS(encode({0.5, 0.5, 0.0, 0.1}, {0.5, 0.5, 0.1, 0.1}),
                  std::invalid_argument);
}

TEST_CASE("decode inverts encode") {
  const BoxCenter d{0.5, 0.5, 0.2, 0.2};
  const BoxCenter g = decode({0.25, 0.0, std::log(2.0), 0.0}, d);
  CHECK(g.cx == doctest::Approx(0.55));
  CHECK(g.cy == doctest::Approx(0.5));
  CHECK(g.w == doctest::Approx(0.4));
  CHECK(g.h == doctest::Approx(0.2));

  const BoxCenter same = decode({0, 0, 0, 0}, d);
  CHECK(same.cx == d.cx);
  CHECK(same.w == d.w);
}

TEST_CASE("encode/decode roundtrip over random pairs") {
  Rng rng(11);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    auto random_center = [&]() {
      return BoxCenter{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
                       rng.uniform(0.01, 1.0), rng.uniform(0.01, 1.0)};
    };
    const BoxCenter g = random_center(), d = random_center();
    const BoxCenter back = decode(encode(g, d), d);
    worst = std::max({worst, std::abs(back.cx - g.cx),
                      std::abs(back.cy - g.cy), std::abs(back.w - g.w),
                      std::abs(back.h - g.h)});
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("variance-style offset scaling hook") {
  const OffsetScaling scaling{0.1, 0.2};
  const BoxCenter d{0.5, 0.5, 0.2, 0.2};
  const BoxCenter g{0.55, 0.5, 0.4, 0.2};
  const OffsetVector raw = encode(g, d);
  const OffsetVector scaled = encode(g, d, scaling);
  CHECK(scaled.tcx == doctest::Approx(raw.tcx / 0.1));
  CHECK(scaled.tw == doctest::Approx(raw.tw / 0.2));
  const BoxCenter back = decode(scaled, d, scaling);
  CHECK(back.cx == doctest::Approx(g.cx));
  CHECK(back.w == doctest::Approx(g.w));
}
