#pragma once

#include <vector>

#include "tinyssd/image.hpp"
#include "tinyssd/matching.hpp"
#include "tinyssd/rng.hpp"

namespace tinyssd {

struct ImageSample {
  Image image;
  std::vector<GroundTruth> gts;
};

struct AugmentConfig {
  // patch sampling
  std::vector<double> min_jaccard_options = {0.1, 0.3, 0.5, 0.7, 0.9};
  double patch_area_min = 0.1;
  double patch_area_max = 1.0;
  double patch_aspect_min = 0.5;
  double patch_aspect_max = 2.0;
  int max_attempts = 50;
  // flip
  double flip_prob = 0.5;
  // zoom-out canvas expansion
  bool expand_enabled = false;
  double expand_prob = 0.5;
  double expand_max_area = 16.0;  // area factor; side factor is its sqrt
  std::vector<float> mean_fill = {0.5f};
  // photometric
  double brightness_delta = 0.12;
  double contrast_min = 0.5;
  double contrast_max = 1.5;
  // pipeline resize target (model input side)
  int output_size = 64;
};

// Outcome of one patch draw. `option` 0 is the whole image, 1..5 the
// min-jaccard constraints in menu order, 6 a free random patch. `fallback`
// marks a constrained draw that gave up and returned the whole image.
struct PatchResult {
  ImageSample sample;
  int option = 0;
  bool fallback = false;
  double min_jaccard = 0.0;
  BoxCorner patch{0.0, 0.0, 1.0, 1.0};
};

// Random-crop sampler. Picks uniformly among { whole image, one of the five
// minimum-jaccard constraints, free patch }; constrained options rejection-
// sample a patch with area and aspect inside the configured ranges whose
// IoU with EVERY ground truth meets the bound. A ground truth survives the
// crop iff its center lies inside the patch; surviving boxes are clipped to
// the patch and renormalized. Patches are snapped to the pixel grid before
// the constraints are checked, so the reported patch, the cropped pixels and
// the renormalized boxes agree exactly.
PatchResult sample_patch(const ImageSample& s, const AugmentConfig& cfg,
                         Rng& rng);

// Zoom-out: places the image on a mean-filled canvas whose side is a uniform
// [1, sqrt(expand_max_area)] multiple of the original, at a random offset.
ImageSample expand_canvas(const ImageSample& s, const AugmentConfig& cfg,
                          Rng& rng);

// Horizontal mirror with probability flip_prob.
ImageSample hflip(const ImageSample& s, double flip_prob, Rng& rng);

// Brightness shift and mid-gray-pivoted contrast scale, clamped to [0, 1].
ImageSample photometric(const ImageSample& s, const AugmentConfig& cfg,
                        Rng& rng);

// photometric -> (optional) expand -> sample_patch -> resize -> hflip
ImageSample augment_pipeline(const ImageSample& s, const AugmentConfig& cfg,
                             Rng& rng);

}  // namespace tinyssd
