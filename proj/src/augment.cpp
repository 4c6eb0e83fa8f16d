#include "tinyssd/augment.hpp"

#include <cmath>
#include <stdexcept>

namespace tinyssd {

namespace {

float fill_value(const AugmentConfig& cfg, int channel) {
  if (cfg.mean_fill.empty()) return 0.5f;
  return cfg.mean_fill[size_t(channel) % cfg.mean_fill.size()];
}

// Crop pixels on an integer rect and remap ground truths into the patch
// frame. The center test uses the original (pre-clip) box.
ImageSample apply_patch(const ImageSample& s, const BoxCorner& patch, int px0,
                        int py0, int px1, int py1) {
  ImageSample out;
  out.image = Image(py1 - py0, px1 - px0, s.image.channels);
  for (int y = py0; y < py1; ++y)
    for (int x = px0; x < px1; ++x)
      for (int c = 0; c < s.image.channels; ++c)
        out.image.at(y - py0, x - px0, c) = s.image.at(y, x, c);

  const double pw = patch.width(), ph = patch.height();
  for (const GroundTruth& gt : s.gts) {
    const double cx = 0.5 * (gt.box.xmin + gt.box.xmax);
    const double cy = 0.5 * (gt.box.ymin + gt.box.ymax);
    if (cx < patch.xmin || cx > patch.xmax || cy < patch.ymin ||
        cy > patch.ymax)
      continue;
    BoxCorner b{std::max(gt.box.xmin, patch.xmin),
                std::max(gt.box.ymin, patch.ymin),
                std::min(gt.box.xmax, patch.xmax),
                std::min(gt.box.ymax, patch.ymax)};
    b = {(b.xmin - patch.xmin) / pw, (b.ymin - patch.ymin) / ph,
         (b.xmax - patch.xmin) / pw, (b.ymax - patch.ymin) / ph};
    if (b.width() <= 0.0 || b.height() <= 0.0) continue;
    out.gts.push_back({b, gt.label});
  }
  return out;
}

}  // namespace

PatchResult sample_patch(const ImageSample& s, const AugmentConfig& cfg,
                         Rng& rng) {
  PatchResult res;
  const int num_constraints = int(cfg.min_jaccard_options.size());
  if (s.gts.empty()) {
    res.sample = s;
    return res;
  }

  const int option = rng.uniform_int(num_constraints + 2);
  res.option = option;
  if (option == 0) {
    res.sample = s;
    return res;
  }
  const bool constrained = option <= num_constraints;
  if (constrained) res.min_jaccard = cfg.min_jaccard_options[option - 1];

  const int W = s.image.width, H = s.image.height;
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const double area = rng.uniform(cfg.patch_area_min, cfg.patch_area_max);
    const double aspect =
        rng.uniform(cfg.patch_aspect_min, cfg.patch_aspect_max);
    const double w = std::sqrt(area * aspect);
    const double h = std::sqrt(area / aspect);
    if (w > 1.0 || h > 1.0) continue;
    const double x0 = rng.uniform(0.0, 1.0 - w);
    const double y0 = rng.uniform(0.0, 1.0 - h);

    // snap to pixels, then re-validate the geometric constraints
    const int px0 = std::clamp(int(std::lround(x0 * W)), 0, W - 1);
    const int py0 = std::clamp(int(std::lround(y0 * H)), 0, H - 1);
    const int px1 = std::clamp(int(std::lround((x0 + w) * W)), px0 + 1, W);
    const int py1 = std::clamp(int(std::lround((y0 + h) * H)), py0 + 1, H);
    const BoxCorner patch{double(px0) / W, double(py0) / H, double(px1) / W,
                          double(py1) / H};
    const double snapped_area = patch.area();
    const double snapped_aspect = patch.width() / patch.height();
    if (snapped_area < cfg.patch_area_min ||
        snapped_area > cfg.patch_area_max ||
        snapped_aspect < cfg.patch_aspect_min ||
        snapped_aspect > cfg.patch_aspect_max)
      continue;

    if (constrained) {
      bool ok = true;
      for (const GroundTruth& gt : s.gts)
        if (iou(patch, gt.box) < res.min_jaccard) {
          ok = false;
          break;
        }
      if (!ok) continue;
    }

    res.patch = patch;
    res.sample = apply_patch(s, patch, px0, py0, px1, py1);
    return res;
  }

  res.fallback = true;
  res.sample = s;
  res.patch = {0.0, 0.0, 1.0, 1.0};
  return res;
}

ImageSample expand_canvas(const ImageSample& s, const AugmentConfig& cfg,
                          Rng& rng) {
  const double side_max = std::sqrt(cfg.expand_max_area);
  const double r = rng.uniform(1.0, side_max);
  const int H = s.image.height, W = s.image.width;
  const int nh = std::max(H, int(std::lround(r * H)));
  const int nw = std::max(W, int(std::lround(r * W)));
  const int off_x = rng.uniform_int(nw - W + 1);
  const int off_y = rng.uniform_int(nh - H + 1);

  ImageSample out;
  out.image = Image(nh, nw, s.image.channels);
  for (int c = 0; c < s.image.channels; ++c) {
    const float fill = fill_value(cfg, c);
    for (int y = 0; y < nh; ++y)
      for (int x = 0; x < nw; ++x) out.image.at(y, x, c) = fill;
  }
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < s.image.channels; ++c)
        out.image.at(y + off_y, x + off_x, c) = s.image.at(y, x, c);

  for (const GroundTruth& gt : s.gts) {
    BoxCorner b{(off_x + gt.box.xmin * W) / nw, (off_y + gt.box.ymin * H) / nh,
                (off_x + gt.box.xmax * W) / nw,
                (off_y + gt.box.ymax * H) / nh};
    out.gts.push_back({b, gt.label});
  }
  return out;
}

ImageSample hflip(const ImageSample& s, double flip_prob, Rng& rng) {
  if (rng.uniform() >= flip_prob) return s;
  ImageSample out;
  out.image = Image(s.image.height, s.image.width, s.image.channels);
  for (int y = 0; y < s.image.height; ++y)
    for (int x = 0; x < s.image.width; ++x)
      for (int c = 0; c < s.image.channels; ++c)
        out.image.at(y, x, c) = s.image.at(y, s.image.width - 1 - x, c);
  for (const GroundTruth& gt : s.gts)
    out.gts.push_back(
        {{1.0 - gt.box.xmax, gt.box.ymin, 1.0 - gt.box.xmin, gt.box.ymax},
         gt.label});
  return out;
}

ImageSample photometric(const ImageSample& s, const AugmentConfig& cfg,
                        Rng& rng) {
  const float shift =
      float(rng.uniform(-cfg.brightness_delta, cfg.brightness_delta));
  const float scale = float(rng.uniform(cfg.contrast_min, cfg.contrast_max));
  ImageSample out = s;
  for (float& v : out.image.data)
    v = std::clamp((v - 0.5f) * scale + 0.5f + shift, 0.0f, 1.0f);
  return out;
}

ImageSample augment_pipeline(const ImageSample& s, const AugmentConfig& cfg,
                             Rng& rng) {
  ImageSample cur = photometric(s, cfg, rng);
  if (cfg.expand_enabled && rng.uniform() < cfg.expand_prob)
    cur = expand_canvas(cur, cfg, rng);
  cur = sample_patch(cur, cfg, rng).sample;
  cur.image = resize_bilinear(cur.image, cfg.output_size, cfg.output_size);
  return hflip(cur, cfg.flip_prob, rng);
}

}  // namespace tinyssd
