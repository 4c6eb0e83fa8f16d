#pragma once

#include <algorithm>

namespace tinyssd {

// Axis-aligned rectangle in normalized image coordinates (fractions of the
// image width/height). Ground truth and detections live in [0,1]; default
// boxes may stick out of the unit square.
struct BoxCorner {
  double xmin = 0, ymin = 0, xmax = 0, ymax = 0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const {
    return std::max(0.0, width()) * std::max(0.0, height());
  }
};

// Center/size parameterization of the same rectangle.
struct BoxCenter {
  double cx = 0, cy = 0, w = 0, h = 0;
};

// Regression offsets relative to a default box:
// (delta-cx / dw, delta-cy / dh, log width ratio, log height ratio).
struct OffsetVector {
  double tcx = 0, tcy = 0, tw = 0, th = 0;
};

// Optional divisors applied to raw offsets (some trained models bake in
// 0.1/0.2 "variance" factors). The default {1,1} leaves offsets untouched.
struct OffsetScaling {
  double center = 1.0;
  double size = 1.0;
};

// Jaccard overlap. Degenerate input (zero union) yields 0.
double iou(const BoxCorner& a, const BoxCorner& b);

BoxCenter corner_to_center(const BoxCorner& b);
// Throws std::invalid_argument for w <= 0 or h <= 0.
BoxCorner center_to_corner(const BoxCenter& b);

// Offsets that map default box d onto ground truth g. Both boxes must have
// positive extents (log singularity otherwise).
OffsetVector encode(const BoxCenter& g, const BoxCenter& d,
                    const OffsetScaling& s = {});
// Exact inverse of encode.
BoxCenter decode(const OffsetVector& t, const BoxCenter& d,
                 const OffsetScaling& s = {});

// Clamp a corner box to the unit square.
BoxCorner clip_unit(const BoxCorner& b);

}  // namespace tinyssd
