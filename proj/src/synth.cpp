#include "tinyssd/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "tinyssd/rng.hpp"

namespace tinyssd {

namespace {

struct Placed {
  BoxCorner rect;
  int label = 0;
  std::vector<float> intensity;  // per channel
  double apex_t = 0.5;           // triangle apex position along the top edge
};

// value noise: coarse random grid, bilinearly interpolated
void paint_background(Image& img, Rng& rng) {
  const int step = 8;
  const int gy = img.height / step + 2;
  const int gx = img.width / step + 2;
  std::vector<float> nodes(size_t(gy) * gx);
  for (float& n : nodes) n = float(rng.uniform(0.35, 0.65));
  for (int y = 0; y < img.height; ++y) {
    const float fy = float(y) / step;
    const int y0 = int(fy);
    const float wy = fy - y0;
    for (int x = 0; x < img.width; ++x) {
      const float fx = float(x) / step;
      const int x0 = int(fx);
      const float wx = fx - x0;
      const float top = nodes[size_t(y0) * gx + x0] * (1 - wx) +
                        nodes[size_t(y0) * gx + x0 + 1] * wx;
      const float bot = nodes[size_t(y0 + 1) * gx + x0] * (1 - wx) +
                        nodes[size_t(y0 + 1) * gx + x0 + 1] * wx;
      const float v = top * (1 - wy) + bot * wy;
      for (int c = 0; c < img.channels; ++c) img.at(y, x, c) = v;
    }
  }
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const float jitter = float(rng.uniform(-0.03, 0.03));
      for (int c = 0; c < img.channels; ++c) {
        float& v = img.at(y, x, c);
        v = std::clamp(v + jitter, 0.0f, 1.0f);
      }
    }
}

bool inside_shape(const Placed& obj, double cx, double cy, double X0,
                  double Y0, double X1, double Y1) {
  switch (obj.label) {
    case 1:  // rectangle
      return cx >= X0 && cx < X1 && cy >= Y0 && cy < Y1;
    case 2: {  // disk (ellipse inscribed in the box)
      const double mx = 0.5 * (X0 + X1), my = 0.5 * (Y0 + Y1);
      const double rx = 0.5 * (X1 - X0), ry = 0.5 * (Y1 - Y0);
      const double dx = (cx - mx) / rx, dy = (cy - my) / ry;
      return dx * dx + dy * dy <= 1.0;
    }
    case 3: {  // triangle: apex on the top edge, base along the bottom
      const double ax = X0 + obj.apex_t * (X1 - X0), ay = Y0;
      const double bx = X0, by = Y1;
      const double cx2 = X1, cy2 = Y1;
      auto cross = [](double ox, double oy, double px, double py, double qx,
                      double qy) {
        return (px - ox) * (qy - oy) - (py - oy) * (qx - ox);
      };
      const double d1 = cross(ax, ay, bx, by, cx, cy);
      const double d2 = cross(bx, by, cx2, cy2, cx, cy);
      const double d3 = cross(cx2, cy2, ax, ay, cx, cy);
      const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
      const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
      return !(has_neg && has_pos);
    }
    default:
      return false;
  }
}

}  // namespace

ImageSample synth_image(uint64_t seed, uint64_t index, const SynthConfig& cfg) {
  if (cfg.image_size < 8 || cfg.min_objects < 1 ||
      cfg.max_objects < cfg.min_objects)
    throw std::invalid_argument("synth_image: bad configuration");
  Rng rng(derive_seed(seed, index));

  ImageSample sample;
  sample.image = Image(cfg.image_size, cfg.image_size, cfg.channels);
  paint_background(sample.image, rng);

  const int target =
      cfg.min_objects + rng.uniform_int(cfg.max_objects - cfg.min_objects + 1);
  std::vector<Placed> objects;
  for (int n = 0; n < target; ++n) {
    Placed obj;
    obj.label = 1 + rng.uniform_int(cfg.num_classes);
    bool placed = false;
    for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
      const double w = rng.uniform(cfg.min_side, cfg.max_side);
      const double h = rng.uniform(cfg.min_side, cfg.max_side);
      const double x0 = rng.uniform(0.0, 1.0 - w);
      const double y0 = rng.uniform(0.0, 1.0 - h);
      const BoxCorner rect{x0, y0, x0 + w, y0 + h};
      bool ok = true;
      for (const Placed& other : objects)
        if (iou(rect, other.rect) > cfg.max_pairwise_iou) {
          ok = false;
          break;
        }
      if (ok) {
        obj.rect = rect;
        placed = true;
      }
    }
    if (!placed) continue;  // crowded image; place fewer objects
    const bool bright = rng.uniform_int(2) == 1;
    for (int c = 0; c < cfg.channels; ++c)
      obj.intensity.push_back(float(
          bright ? rng.uniform(0.8, 1.0) : rng.uniform(0.0, 0.2)));
    obj.apex_t = rng.uniform(0.2, 0.8);
    objects.push_back(obj);
  }

  // paint in order; later shapes occlude earlier ones
  const int W = cfg.image_size, H = cfg.image_size;
  std::vector<int> owner(size_t(H) * W, -1);
  for (size_t o = 0; o < objects.size(); ++o) {
    const Placed& obj = objects[o];
    const double X0 = obj.rect.xmin * W, X1 = obj.rect.xmax * W;
    const double Y0 = obj.rect.ymin * H, Y1 = obj.rect.ymax * H;
    const int py0 = std::max(0, int(std::floor(Y0)));
    const int py1 = std::min(H - 1, int(std::ceil(Y1)));
    const int px0 = std::max(0, int(std::floor(X0)));
    const int px1 = std::min(W - 1, int(std::ceil(X1)));
    for (int py = py0; py <= py1; ++py)
      for (int px = px0; px <= px1; ++px)
        if (inside_shape(obj, px + 0.5, py + 0.5, X0, Y0, X1, Y1)) {
          owner[size_t(py) * W + px] = int(o);
          for (int c = 0; c < cfg.channels; ++c)
            sample.image.at(py, px, c) = obj.intensity[c];
        }
  }

  // tight boxes around each object's visible pixels
  for (size_t o = 0; o < objects.size(); ++o) {
    int xmin = W, ymin = H, xmax = -1, ymax = -1;
    for (int py = 0; py < H; ++py)
      for (int px = 0; px < W; ++px)
        if (owner[size_t(py) * W + px] == int(o)) {
          xmin = std::min(xmin, px);
          xmax = std::max(xmax, px);
          ymin = std::min(ymin, py);
          ymax = std::max(ymax, py);
        }
    if (xmax < 0) continue;  // fully occluded
    sample.gts.push_back({{double(xmin) / W, double(ymin) / H,
                           double(xmax + 1) / W, double(ymax + 1) / H},
                          objects[o].label});
  }
  return sample;
}

std::vector<ImageSample> synth_dataset(uint64_t seed, int count,
                                       const SynthConfig& cfg) {
  if (count < 1) throw std::invalid_argument("synth_dataset: count must be >= 1");
  std::vector<ImageSample> out;
  out.reserve(size_t(count));
  for (int i = 0; i < count; ++i)
    out.push_back(synth_image(seed, uint64_t(i), cfg));
  return out;
}

}  // namespace tinyssd
