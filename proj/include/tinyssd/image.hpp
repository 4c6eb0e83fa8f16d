#pragma once

#include <span>
#include <string>
#include <vector>

#include "tinyssd/box.hpp"

namespace tinyssd {

// Dense H x W x C image, row-major with interleaved channels, intensities
// in [0, 1].
struct Image {
  int height = 0, width = 0, channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f)
      : height(h), width(w), channels(c),
        data(size_t(h) * w * c, fill) {}

  float& at(int y, int x, int c) {
    return data[(size_t(y) * width + x) * channels + c];
  }
  float at(int y, int x, int c) const {
    return data[(size_t(y) * width + x) * channels + c];
  }
};

// Half-pixel-centered bilinear resampling. Resizing to the source size is an
// exact copy.
Image resize_bilinear(const Image& src, int out_h, int out_w);

// PGM (P5) for single-channel, PPM (P6) for three-channel, 8-bit.
void write_image(const Image& img, const std::string& path);
Image read_image(const std::string& path);

// One-pixel box outline, for overlay output.
void draw_box(Image& img, const BoxCorner& box, std::span<const float> color);

}  // namespace tinyssd
