#pragma once

#include <cstdint>
#include <vector>

#include "tinyssd/augment.hpp"

namespace tinyssd {

// Synthetic shapes-on-texture dataset: 1-3 rasterized shapes per image on a
// value-noise background. Classes: 1 = rectangle, 2 = disk, 3 = triangle.
struct SynthConfig {
  int image_size = 64;
  int channels = 1;
  int min_objects = 1;
  int max_objects = 3;
  double min_side = 0.15;   // object extents, as a fraction of the image side
  double max_side = 0.7;
  double max_pairwise_iou = 0.3;
  int num_classes = 3;
};

inline const char* synth_class_name(int label) {
  switch (label) {
    case 1: return "rectangle";
    case 2: return "disk";
    case 3: return "triangle";
    default: return "unknown";
  }
}

// Deterministic per (seed, index): the same pair always produces the same
// pixels and boxes. Boxes are tight around the visible pixels of each shape.
ImageSample synth_image(uint64_t seed, uint64_t index,
                        const SynthConfig& cfg = {});

std::vector<ImageSample> synth_dataset(uint64_t seed, int count,
                                       const SynthConfig& cfg = {});

}  // namespace tinyssd
