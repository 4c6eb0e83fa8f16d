#include "tinyssd/box.hpp"

#include <cmath>
#include <stdexcept>

namespace tinyssd {

double iou(const BoxCorner& a, const BoxCorner& b) {
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

BoxCenter corner_to_center(const BoxCorner& b) {
  return {0.5 * (b.xmin + b.xmax), 0.5 * (b.ymin + b.ymax), b.xmax - b.xmin,
          b.ymax - b.ymin};
}

BoxCorner center_to_corner(const BoxCenter& b) {
  if (b.w <= 0.0 || b.h <= 0.0)
    throw std::invalid_argument("center_to_corner: non-positive box extents");
  return {b.cx - 0.5 * b.w, b.cy - 0.5 * b.h, b.cx + 0.5 * b.w,
          b.cy + 0.5 * b.h};
}

OffsetVector encode(const BoxCenter& g, const BoxCenter& d,
                    const OffsetScaling& s) {
  if (d.w <= 0.0 || d.h <= 0.0 || g.w <= 0.0 || g.h <= 0.0)
    throw std::invalid_argument("encode: non-positive box extents");
  return {(g.cx - d.cx) / d.w / s.center, (g.cy - d.cy) / d.h / s.center,
          std::log(g.w / d.w) / s.size, std::log(g.h / d.h) / s.size};
}

BoxCenter decode(const OffsetVector& t, const BoxCenter& d,
                 const OffsetScaling& s) {
  return {t.tcx * s.center * d.w + d.cx, t.tcy * s.center * d.h + d.cy,
          d.w * std::exp(t.tw * s.size), d.h * std::exp(t.th * s.size)};
}

BoxCorner clip_unit(const BoxCorner& b) {
  return {std::clamp(b.xmin, 0.0, 1.0), std::clamp(b.ymin, 0.0, 1.0),
          std::clamp(b.xmax, 0.0, 1.0), std::clamp(b.ymax, 0.0, 1.0)};
}

}  // namespace tinyssd
