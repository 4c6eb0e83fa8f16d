#include <doctest.h>

#include <filesystem>

#include "tinyssd/dataset.hpp"
#include "tinyssd/image.hpp"
#include "tinyssd/rng.hpp"
#include "tinyssd/synth.hpp"

using namespace tinyssd;
namespace fs = std::filesystem;

TEST_CASE("resize to the same size is an exact copy") {
  Rng rng(1);
  Image img(13, 9, 1);
  for (float& v : img.data) v = float(rng.uniform());
  const Image same = resize_bilinear(img, 13, 9);
  CHECK(same.data == img.data);
}

TEST_CASE("resize interpolates a constant image to itself") {
  Image img(8, 8, 3, 0.37f);
  const Image up = resize_bilinear(img, 19, 31);
  for (float v : up.data) CHECK(v == doctest::Approx(0.37f));
}

TEST_CASE("pgm and ppm round-trip through 8-bit quantization") {
  const fs::path dir = fs::temp_directory_path() / "tinyssd_image_test";
  fs::create_directories(dir);

  Image gray(6, 5, 1);
  for (size_t n = 0; n < gray.data.size(); ++n)
    gray.data[n] = float(n % 256) / 255.0f;
  write_image(gray, (dir / "g.pgm").string());
  const Image gback = read_image((dir / "g.pgm").string());
  REQUIRE(gback.height == 6);
  REQUIRE(gback.width == 5);
  REQUIRE(gback.channels == 1);
  for (size_t n = 0; n < gray.data.size(); ++n)
    CHECK(gback.data[n] == doctest::Approx(gray.data[n]).epsilon(1e-6));

  Image color(4, 4, 3);
  Rng rng(2);
  for (float& v : color.data) v = float(rng.uniform());
  write_image(color, (dir / "c.ppm").string());
  const Image cback = read_image((dir / "c.ppm").string());
  REQUIRE(cback.channels == 3);
  for (size_t n = 0; n < color.data.size(); ++n)
    CHECK(std::abs(cback.data[n] - color.data[n]) <= 0.5f / 255.0f + 1e-6f);

  fs::remove_all(dir);
}

TEST_CASE("dataset write/load round trip") {
  const fs::path dir = fs::temp_directory_path() / "tinyssd_dataset_test";
  fs::remove_all(dir);

  const auto samples = synth_dataset(21, 4);
  const std::string manifest = write_dataset(dir.string(), samples);
  const auto loaded = load_dataset(manifest);
  REQUIRE(loaded.size() == samples.size());
  for (size_t k = 0; k < samples.size(); ++k) {
    CHECK(loaded[k].image.height == samples[k].image.height);
    REQUIRE(loaded[k].gts.size() == samples[k].gts.size());
    for (size_t j = 0; j < samples[k].gts.size(); ++j) {
      CHECK(loaded[k].gts[j].label == samples[k].gts[j].label);
      // annotations are text with full precision
      CHECK(loaded[k].gts[j].box.xmin == samples[k].gts[j].box.xmin);
      CHECK(loaded[k].gts[j].box.ymax == samples[k].gts[j].box.ymax);
    }
    // pixels pass through 8-bit quantization
    for (size_t n = 0; n < samples[k].image.data.size(); ++n)
      CHECK(std::abs(loaded[k].image.data[n] - samples[k].image.data[n]) <=
            0.5f / 255.0f + 1e-6f);
  }

  // detections round trip
  const std::vector<Detection> dets{{1, 0.75, {0.1, 0.2, 0.3, 0.4}},
                                    {3, 0.25, {0.0, 0.0, 1.0, 1.0}}};
  const std::string det_path = (dir / "dets.txt").string();
  save_detections(det_path, dets);
  const auto dback = load_detections(det_path);
  REQUIRE(dback.size() == 2);
  CHECK(dback[0].label == 1);
  CHECK(dback[0].score == 0.75);
  CHECK(dback[1].box.xmax == 1.0);

  fs::remove_all(dir);
}
